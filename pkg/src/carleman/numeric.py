"""Numeric kernel: exact rationals, exact radicals, extended-precision floats.

One convention runs through the whole package: ``bits=None`` selects exact
arithmetic over `fractions.Fraction`, an integer selects mpmath floating
point with that mantissa size.  Quantities that are algebraic but not
rational (geometric interpolants between rational sequence values) are kept
exact as `Radical` objects, which compare and divide without rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath as mp
from mpmath.libmp import from_rational, round_nearest

DEFAULT_PRECISION_BITS = 256
DEFAULT_TOLERANCE_EXP = 100

# Relative tolerance used for exactness-style comparisons in float mode.
EXACT_COMPARE_EXP = 200


class NumericError(ValueError):
    """Unparseable or out-of-domain numeric input."""


def parse_real(value) -> Fraction:
    """Parse a decimal string, fraction string, int, or Fraction exactly.

    Binary floats are rejected on purpose: every real entering the exact
    layer must have an exact rational meaning.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise NumericError(f"cannot parse {value!r} as a decimal or p/q string") from exc
    raise NumericError(f"cannot parse a {type(value).__name__} exactly; pass a string, int, or Fraction")


def to_mpf(value, bits: int = DEFAULT_PRECISION_BITS):
    """Convert to mpf, correctly rounded at the given mantissa size."""
    with mp.workprec(bits):
        if isinstance(value, Fraction):
            return mp.make_mpf(from_rational(value.numerator, value.denominator, mp.mp.prec, round_nearest))
        if isinstance(value, Radical):
            return value.to_mpf(bits)
        return mp.mpf(value)


def decimal_string(fr: Fraction) -> str | None:
    """Exact decimal representation, or None if it does not terminate."""
    den = fr.denominator
    shift2 = shift5 = 0
    while den % 2 == 0:
        den //= 2
        shift2 += 1
    while den % 5 == 0:
        den //= 5
        shift5 += 1
    if den != 1:
        return None
    shift = max(shift2, shift5)
    scaled = fr * 10**shift
    sign = "-" if scaled < 0 else ""
    digits = str(abs(int(scaled))).rjust(shift + 1, "0")
    if shift:
        head, tail = digits[:-shift], digits[-shift:]
        tail = tail.rstrip("0")
        return sign + head + ("." + tail if tail else "")
    return sign + digits


def format_real(value, bits: int = DEFAULT_PRECISION_BITS) -> str:
    """Deterministic decimal-string form for file output.

    Exact rationals print exactly (decimal when terminating, p/q otherwise);
    floats print at the full decimal precision of the mantissa.
    """
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        dec = decimal_string(value)
        return dec if dec is not None else f"{value.numerator}/{value.denominator}"
    if isinstance(value, Radical):
        return format_real(value.to_mpf(bits), bits)
    return mp.nstr(value, mp.libmp.prec_to_dps(bits), strip_zeros=True)


def bound_holds(actual, bound, tol_exp: int = DEFAULT_TOLERANCE_EXP, bits: int = DEFAULT_PRECISION_BITS) -> bool:
    """One-sided check: actual <= bound * (1 + 2^-tol_exp).

    The slack never turns a genuine violation into a pass at these
    magnitudes; it only absorbs final-rounding noise on the bound side.
    """
    with mp.workprec(bits):
        return to_mpf(actual, bits) <= to_mpf(bound, bits) * (1 + mp.mpf(2) ** (-tol_exp))


def rel_close(a, b, tol_exp: int = EXACT_COMPARE_EXP, bits: int = DEFAULT_PRECISION_BITS) -> bool:
    """Symmetric relative comparison: |a-b| <= 2^-tol_exp * max(|a|, |b|)."""
    with mp.workprec(bits):
        am, bm = to_mpf(a, bits), to_mpf(b, bits)
        return abs(am - bm) <= mp.mpf(2) ** (-tol_exp) * max(abs(am), abs(bm))


def geq_with_tol(a, b, tol_exp: int = EXACT_COMPARE_EXP, bits: int = DEFAULT_PRECISION_BITS) -> bool:
    """a >= b up to relative slack 2^-tol_exp (accepts borderline equality)."""
    with mp.workprec(bits):
        am, bm = to_mpf(a, bits), to_mpf(b, bits)
        return am >= bm - mp.mpf(2) ** (-tol_exp) * max(abs(am), abs(bm))


def iroot(n: int, d: int) -> tuple[int, bool]:
    """Floor d-th root of n >= 0 with an exactness flag."""
    if n < 0 or d < 1:
        raise NumericError(f"iroot needs n >= 0 and d >= 1, got n={n}, d={d}")
    if d == 1 or n in (0, 1):
        return n, True
    x = 1 << -(-n.bit_length() // d)
    while True:
        y = ((d - 1) * x + n // x ** (d - 1)) // d
        if y >= x:
            break
        x = y
    return x, x**d == n


def nth_root_fraction(fr: Fraction, d: int) -> Fraction | None:
    """Exact d-th root of a positive rational, or None if irrational."""
    if fr <= 0:
        raise NumericError(f"nth_root_fraction needs a positive radicand, got {fr}")
    num, exact_num = iroot(fr.numerator, d)
    if not exact_num:
        return None
    den, exact_den = iroot(fr.denominator, d)
    if not exact_den:
        return None
    return Fraction(num, den)


def _prime_factors(n: int):
    p, out = 2, []
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


class Radical:
    """Exact positive real r**(1/d) with rational r and integer d >= 2.

    Construct through :func:`radical`, which collapses perfect powers down
    to plain Fractions.  Comparisons cross-exponentiate to integer powers,
    so they are exact for any pair of radicals or rationals.
    """

    __slots__ = ("radicand", "index")

    def __init__(self, radicand: Fraction, index: int):
        self.radicand = radicand
        self.index = index

    def __repr__(self):
        return f"Radical({self.radicand}, 1/{self.index})"

    def to_mpf(self, bits: int = DEFAULT_PRECISION_BITS):
        with mp.workprec(bits):
            return mp.root(to_mpf(self.radicand, bits), self.index)

    def _cmp(self, other) -> int:
        ra, da = self.radicand, self.index
        rb, db = _as_radical_pair(other)
        lcm = da * db // math.gcd(da, db)
        pa, pb = ra ** (lcm // da), rb ** (lcm // db)
        return (pa > pb) - (pa < pb)

    def __eq__(self, other):
        if not isinstance(other, (Radical, Fraction, int)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    __hash__ = None


def _as_radical_pair(value) -> tuple[Fraction, int]:
    if isinstance(value, Radical):
        return value.radicand, value.index
    if isinstance(value, (Fraction, int)):
        return Fraction(value), 1
    raise NumericError(f"cannot compare a Radical with {type(value).__name__}")


def radical(radicand: Fraction, index: int = 1):
    """Normalized r**(1/d): a Fraction when the root is exact, else a Radical."""
    if radicand <= 0:
        raise NumericError(f"radical needs a positive radicand, got {radicand}")
    if index < 1:
        raise NumericError(f"radical needs index >= 1, got {index}")
    changed = True
    while changed and index > 1:
        changed = False
        for p in _prime_factors(index):
            root = nth_root_fraction(radicand, p)
            if root is not None:
                radicand, index = root, index // p
                changed = True
                break
    if index == 1:
        return Fraction(radicand)
    return Radical(radicand, index)


def radical_div(a, b):
    """Exact quotient of two radical-or-rational values."""
    ra, da = _as_radical_pair(a)
    rb, db = _as_radical_pair(b)
    lcm = da * db // math.gcd(da, db)
    return radical(ra ** (lcm // da) / rb ** (lcm // db), lcm)


def exact_le(a, b) -> bool:
    ra, da = _as_radical_pair(a)
    rb, db = _as_radical_pair(b)
    lcm = da * db // math.gcd(da, db)
    return ra ** (lcm // da) <= rb ** (lcm // db)


def exact_eq(a, b) -> bool:
    ra, da = _as_radical_pair(a)
    rb, db = _as_radical_pair(b)
    lcm = da * db // math.gcd(da, db)
    return ra ** (lcm // da) == rb ** (lcm // db)
