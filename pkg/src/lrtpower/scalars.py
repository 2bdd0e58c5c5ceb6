"""Dual-mode exact arithmetic.

Every probability, likelihood ratio and size in the package is carried as
one of two number types:

* :class:`fractions.Fraction` (``Mode.RATIONAL``) -- exact, comparisons need
  no tolerance;
* :class:`mpmath.mpf` (``Mode.EXTENDED``) -- extended precision float used
  for null parameters the caller treats as irrational.

Extended mode operates at the current ``mpmath.mp.dps``; importing this
module raises it to :data:`DEFAULT_DIGITS` if it is lower.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Union

import mpmath

DEFAULT_DIGITS = 60
TIE_EPS = mpmath.mpf("1e-30")

if mpmath.mp.dps < DEFAULT_DIGITS:
    mpmath.mp.dps = DEFAULT_DIGITS

Scalar = Union[Fraction, mpmath.mpf]


class Mode(str, enum.Enum):
    RATIONAL = "rational"
    EXTENDED = "extended"


def mode_of(value: Scalar) -> Mode:
    if isinstance(value, (Fraction, int)):
        return Mode.RATIONAL
    return Mode.EXTENDED


def combined_mode(*values: Scalar) -> Mode:
    """Rational only if every value is rational."""
    if all(mode_of(v) is Mode.RATIONAL for v in values):
        return Mode.RATIONAL
    return Mode.EXTENDED


def parse_scalar(text: str, mode: Mode | None = None) -> Scalar:
    """Parse ``"p/q"`` or a decimal string.

    With ``mode=None`` the syntax decides: ``p/q`` gives a Fraction and a
    decimal gives an mpf. An explicit mode forces the result type; a decimal
    parsed in rational mode is taken as the exact decimal fraction.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty numeric literal")
    if mode is None:
        mode = Mode.RATIONAL if "/" in text else Mode.EXTENDED
    if mode is Mode.RATIONAL:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {text!r}") from exc
    if "/" in text:
        p, q = text.split("/", 1)
        return mpmath.mpf(p) / mpmath.mpf(q)
    try:
        return mpmath.mpf(text)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"not a decimal literal: {text!r}") from exc


def coerce(value, mode: Mode | None = None) -> Scalar:
    """Convert ints, floats, strings, Fractions and mpfs to a Scalar.

    Ints become Fractions. Floats become mpf unless rational mode is asked
    for, in which case the shortest decimal repr is used exactly.
    """
    if isinstance(value, str):
        return parse_scalar(value, mode)
    if isinstance(value, bool):
        raise TypeError("booleans are not numeric scalars")
    if isinstance(value, int):
        return Fraction(value) if mode is not Mode.EXTENDED else mpmath.mpf(value)
    if isinstance(value, Fraction):
        return value if mode is not Mode.EXTENDED else to_mpf(value)
    if isinstance(value, float):
        if mode is Mode.RATIONAL:
            return Fraction(repr(value))
        return mpmath.mpf(repr(value))
    if isinstance(value, mpmath.mpf):
        if mode is Mode.RATIONAL:
            raise ValueError("cannot convert an extended value to an exact rational")
        return value
    raise TypeError(f"unsupported scalar type: {type(value).__name__}")


def to_mpf(value) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def to_mode(value: Scalar, mode: Mode) -> Scalar:
    if mode is Mode.EXTENDED:
        return to_mpf(value)
    if mode_of(value) is not Mode.RATIONAL:
        raise ValueError("cannot convert an extended value to an exact rational")
    return Fraction(value)


def scalar_log(value: Scalar) -> mpmath.mpf:
    """Natural log at working precision; ``-inf`` for zero."""
    if value == 0:
        return mpmath.ninf
    if isinstance(value, Fraction):
        return mpmath.log(mpmath.mpf(value.numerator)) - mpmath.log(value.denominator)
    return mpmath.log(value)


def scalars_equal(a: Scalar, b: Scalar, tie_eps=TIE_EPS) -> bool:
    """Exact equality for two rationals, relative ``tie_eps`` otherwise."""
    if mode_of(a) is Mode.RATIONAL and mode_of(b) is Mode.RATIONAL:
        return a == b
    a, b = to_mpf(a), to_mpf(b)
    scale = max(abs(a), abs(b))
    if scale == 0:
        return True
    return abs(a - b) <= tie_eps * scale


def scalar_str(value: Scalar, digits: int | None = None) -> str:
    """``"p/q"`` for rationals, a decimal string for extended values."""
    if isinstance(value, (Fraction, int)):
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return mpmath.nstr(value, digits or mpmath.mp.dps, strip_zeros=True)


def decimal_str(value: Scalar, places: int) -> str:
    """Fixed-point rendering with ``places`` decimals, correctly rounded.

    Rationals are rounded exactly (half away from zero), so the output does
    not depend on binary float conversion.
    """
    if isinstance(value, float):
        value = Fraction(value)
    if isinstance(value, (Fraction, int)):
        scaled = Fraction(value) * 10**places
        q, r = divmod(abs(scaled.numerator), scaled.denominator)
        if 2 * r >= scaled.denominator:
            q += 1
        digits = str(q).rjust(places + 1, "0")
        out = f"{digits[:-places]}.{digits[-places:]}" if places else digits
        return "-" + out if scaled < 0 and q else out
    if mpmath.isinf(value):
        return "inf" if value > 0 else "-inf"
    return decimal_str(_mpf_to_fraction(value), places)


def _mpf_to_fraction(value: mpmath.mpf) -> Fraction:
    man, exp = mpmath.mpf(value).man_exp
    man = int(man)
    exp = int(exp)
    if exp >= 0:
        return Fraction(man * 2**exp)
    return Fraction(man, 2**-exp)


def to_json(value: Scalar) -> dict:
    return {"mode": mode_of(value).value, "value": scalar_str(value)}


def from_json(obj: dict) -> Scalar:
    mode = Mode(obj["mode"])
    return parse_scalar(obj["value"], mode)


def to_float(value: Scalar) -> float:
    return float(value)
