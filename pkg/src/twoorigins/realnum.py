"""Exact-rational-first real arithmetic helpers.

Coefficients and exponents throughout the package are Fractions whenever the
input allows it and plain floats otherwise. Every float is a dyadic rational,
so Fraction(float) is lossless; decimal strings ("0.1", "1/3") go through
Fraction(str) and stay exact. Comparisons use exact equality when both sides
are Fractions and an absolute 1e-9 tolerance otherwise, which is the
package-wide policy for decimal CLI input.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Real = Union[Fraction, float]

#: Absolute tolerance for real comparisons that cannot be settled exactly.
REAL_TOL = 1e-9


def to_real(x) -> Real:
    """Coerce ints, floats, strings, and Fractions to the package Real type.

    ints and strings become exact Fractions; floats become the exact Fraction
    with the same value (floats are dyadic). Anything already a Fraction
    passes through.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a real number here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite real: {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a real number")


def as_float(x: Real) -> float:
    return float(x)


def real_eq(x: Real, y: Real, tol: float = REAL_TOL) -> bool:
    """Equality with exact fast-path for Fraction pairs, tolerance otherwise."""
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x == y
    return abs(float(x) - float(y)) <= tol


def is_integral(e: Real) -> bool:
    """True when e is an integer-valued Fraction or an integer-valued float."""
    if isinstance(e, Fraction):
        return e.denominator == 1
    return float(e).is_integer()


def real_pow(base: Real, exp: Real) -> Real:
    """base ** exp, staying exact when the result is rational-representable.

    Fraction ** integral Fraction is exact. A rational raised to p/q is exact
    exactly when numerator and denominator are perfect q-th powers; otherwise
    the result degrades to float. base must be positive unless exp is
    integral (odd-root conventions are not needed anywhere in the package).
    """
    if isinstance(base, Fraction) and isinstance(exp, Fraction):
        if exp.denominator == 1:
            return base ** exp.numerator
        if base <= 0:
            raise ValueError("fractional power of a non-positive base")
        root = _fraction_root(base, exp.denominator)
        if root is not None:
            return root ** exp.numerator
        return float(base) ** float(exp)
    b, e = float(base), float(exp)
    if b <= 0 and not float(e).is_integer():
        raise ValueError("fractional power of a non-positive base")
    return b ** e


def _fraction_root(f: Fraction, q: int) -> Fraction | None:
    """Exact q-th root of a positive Fraction, or None when irrational."""
    num = _int_root(f.numerator, q)
    den = _int_root(f.denominator, q)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(n: int, q: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** q == n:
            return cand
    return None


def real_sqrt(x: Real) -> Real:
    """Square root, exact for perfect-square rationals."""
    return real_pow(to_real(x), Fraction(1, 2))
