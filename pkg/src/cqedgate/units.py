"""Unit-suffixed quantities for config files.

Frequencies are written as linear frequencies (``5.0 GHz`` means
omega / 2 pi) and converted to angular frequency here, the single place the
factor 2 pi enters.
"""
from __future__ import annotations

import math
import re

TWO_PI = 2.0 * math.pi

FREQUENCY = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}
RATE = {"1/s": 1.0, "1/ms": 1e3, "1/us": 1e6, "1/ns": 1e9}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*([A-Za-z/0-9]*)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text: str, table: dict[str, float], kind: str) -> float:
    """Parse ``"<number> <unit>"`` against a unit table, returning SI units."""
    m = _QUANTITY.match(text)
    if not m:
        raise UnitError(f"cannot parse {text!r} as a {kind}")
    value, unit = m.groups()
    if not unit:
        raise UnitError(f"{text!r} needs a {kind} unit (one of {', '.join(table)})")
    if unit not in table:
        raise UnitError(f"unit {unit!r} in {text!r} is not a {kind} unit (one of {', '.join(table)})")
    return float(value) * table[unit]


def angular(text: str) -> float:
    """Linear-frequency string to angular frequency in rad/s."""
    return TWO_PI * parse_quantity(text, FREQUENCY, "frequency")


def seconds(text: str) -> float:
    return parse_quantity(text, TIME, "time")


def rate(text: str) -> float:
    return parse_quantity(text, RATE, "rate")


def to_linear(omega: float, unit: str = "MHz") -> float:
    return omega / TWO_PI / FREQUENCY[unit]
