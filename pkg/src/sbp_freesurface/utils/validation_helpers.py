"""Validation helper functions for configuration parsing and sanitization."""

import re
from fractions import Fraction
from typing import List, Optional

_LABEL_PATTERN = re.compile(r"[^A-Za-z0-9_\-]")


def sanitize_label(label: str) -> Optional[str]:
    """Sanitize a receiver/source label so it is safe as a CSV column name.

    Args:
        label: Label string to validate

    Returns:
        Label with surrounding whitespace removed and any character outside
        [A-Za-z0-9_-] replaced by '_', or None if nothing usable remains
    """
    if not isinstance(label, str):
        return None

    label = label.strip()
    if not label:
        return None

    return _LABEL_PATTERN.sub("_", label)


def parse_number(text: str) -> float:
    """Parse a float, also accepting exact fractions such as '6/7'.

    Raises:
        ValueError: If the text is neither a float nor a fraction.
    """
    text = text.strip()
    if "/" in text:
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a number: {text!r}") from e
    return float(text)


def parse_int_list(text: str) -> List[int]:
    """Parse '10, 20, 40' into [10, 20, 40].

    Raises:
        ValueError: If an item is not an integer or the list is empty.
    """
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ValueError("empty list")
    return [int(item) for item in items]
