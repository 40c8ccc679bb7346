"""Utility functions and helpers."""

from src.utils.helpers import (
    ensure_dir,
    format_duration,
    get_timestamp,
    parse_float_list,
    sanitize_filename,
)

__all__ = [
    "ensure_dir",
    "format_duration",
    "get_timestamp",
    "parse_float_list",
    "sanitize_filename",
]
