"""Utility modules for sbp-freesurface."""

from .csv_io import format_float, read_csv_columns, write_csv
from .validation_helpers import parse_int_list, parse_number, sanitize_label

__all__ = [
    'format_float',
    'parse_int_list',
    'parse_number',
    'read_csv_columns',
    'sanitize_label',
    'write_csv',
]
