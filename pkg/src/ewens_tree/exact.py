"""Helpers for moving between exact rationals, strings and floats."""
from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational, Real
from typing import Union

from .errors import ConstraintError

Number = Union[Fraction, float]


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, an integer or a finite decimal literal into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConstraintError(f"not a rational number: {text!r}") from exc


def as_theta(value: str | int | Fraction) -> Fraction:
    """Coerce a mutation rate to an exact positive rational."""
    if isinstance(value, float):
        raise ConstraintError("theta must be exact; pass a Fraction or 'p/q' string")
    theta = parse_rational(value)
    if theta <= 0:
        raise ConstraintError(f"theta must be positive, got {theta}")
    return theta


def as_beta(value: str | int | float | Fraction) -> Number:
    """Coerce an inverse temperature; integer-valued inputs stay exact."""
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ConstraintError("beta must be finite")
        return Fraction(int(value)) if value.is_integer() else value
    if isinstance(value, str):
        try:
            beta = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            return as_beta(float(value))
        return beta if beta.denominator == 1 else float(beta)
    beta = Fraction(value)
    return beta if beta.denominator == 1 else float(beta)


def power(base: Fraction, exponent: Number) -> Number:
    """``base ** exponent``; exact when the exponent is an integer."""
    if isinstance(exponent, Rational) and Fraction(exponent).denominator == 1:
        return Fraction(base) ** int(exponent)
    return float(base) ** float(exponent)


def is_exact(value: Real) -> bool:
    return isinstance(value, Rational)


def to_decimal_string(value: Real, digits: int = 20) -> str:
    """Decimal rendering with ``digits`` significant digits."""
    if isinstance(value, Rational):
        frac = Fraction(value)
        with localcontext() as ctx:
            ctx.prec = digits
            return str(Decimal(frac.numerator) / Decimal(frac.denominator))
    return repr(float(value))


def to_exact_string(value: Real) -> str:
    """``"p/q"`` for rationals (``"p"`` when integral); ``repr`` for floats."""
    if isinstance(value, Rational):
        return str(Fraction(value))
    return repr(float(value))


def encode_number(value: Real) -> dict[str, str]:
    return {"exact": to_exact_string(value), "decimal": to_decimal_string(value)}
