"""
Formatting helpers shared by the text renderers.
"""

import math
from typing import Any, Optional, Sequence


def format_number(value: Optional[float], digits: int = 6) -> str:
    """
    Compact numeric formatting for report tables.

    Args:
        value: number to format; None and NaN render as "n/a"
        digits: significant digits

    Returns:
        formatted string
    """
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "n/a"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def format_vector(values: Optional[Sequence[Any]], digits: int = 4) -> str:
    if values is None:
        return "n/a"
    return "[" + ", ".join(format_number(v, digits) for v in values) + "]"


def short_path(path: str, length: int = 48) -> str:
    """Keep the tail of a long path so the file name stays visible."""
    if len(path) <= length:
        return path
    return f"...{path[-(length - 3):]}"
