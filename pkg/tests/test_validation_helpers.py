"""Tests for validation helper functions."""

import pytest

from sbp_freesurface.utils.csv_io import format_float, read_csv_columns, write_csv
from sbp_freesurface.utils.validation_helpers import parse_int_list, parse_number, sanitize_label


class TestSanitizeLabel:
    """Test sanitize_label function."""

    def test_sanitize_label_valid_passes(self):
        """Test that safe labels are returned unchanged."""
        assert sanitize_label("R0") == "R0"
        assert sanitize_label("deep_receiver") == "deep_receiver"
        assert sanitize_label("Sxy-2") == "Sxy-2"
        assert sanitize_label("  R1  ") == "R1"  # Should strip

    def test_sanitize_label_replaces_unsafe_characters(self):
        """Test that commas, spaces and dots become underscores."""
        assert sanitize_label("R 1") == "R_1"
        assert sanitize_label("a,b") == "a_b"
        assert sanitize_label("x.5") == "x_5"

    def test_sanitize_label_empty_returns_none(self):
        """Test that empty/None inputs return None."""
        assert sanitize_label("") is None
        assert sanitize_label("   ") is None
        assert sanitize_label(None) is None


class TestParseNumber:
    """Test parse_number function."""

    def test_parse_number_float(self):
        assert parse_number("0.6355") == 0.6355
        assert parse_number(" 2.5e-4 ") == 2.5e-4

    def test_parse_number_fraction(self):
        """Test that exact fractions are accepted."""
        assert parse_number("6/7") == 6 / 7
        assert parse_number("-49/9") == -49 / 9

    def test_parse_number_invalid(self):
        with pytest.raises(ValueError):
            parse_number("six sevenths")
        with pytest.raises(ValueError):
            parse_number("1/0")


class TestParseIntList:
    """Test parse_int_list function."""

    def test_parse_int_list(self):
        assert parse_int_list("10, 20,40") == [10, 20, 40]
        assert parse_int_list("80") == [80]

    def test_parse_int_list_invalid(self):
        with pytest.raises(ValueError):
            parse_int_list("")
        with pytest.raises(ValueError):
            parse_int_list("10, x")


class TestCsv:
    """Test the CSV helpers."""

    def test_format_float_round_trips(self):
        """Shortest round-trip decimal for doubles."""
        value = 0.1 + 0.2
        assert float(format_float(value)) == value
        assert format_float(1.0) == "1.0"

    def test_write_and_read_columns(self, tmp_path):
        path = write_csv(tmp_path / "sub" / "out.csv", ["t", "R0"], [[0.0, 1.5], [0.25, -2.0]])
        assert path.read_text().splitlines()[0] == "t,R0"
        columns = read_csv_columns(path)
        assert columns["t"] == ["0.0", "0.25"]
        assert [float(v) for v in columns["R0"]] == [1.5, -2.0]
