"""Truncated Taylor jets: arithmetic, composition, elementary functions.

A jet stores the series coefficients c_j = h^(j)(x0)/j! of a function at a
base point, up to a fixed order.  Jets are immutable; every operation is a
pure function, so independent evaluations are safe to run concurrently.

Mode rules: ``bits=None`` keeps every coefficient an exact Fraction and
rejects operations whose leading value is irrational (exp away from 0,
roots of non-powers, ...); an integer selects mpmath floats at that
mantissa size.  Coefficient magnitudes grow factorially with the order, so
orders above MAX_ORDER need an explicit override.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .numeric import DEFAULT_PRECISION_BITS, nth_root_fraction, parse_real, to_mpf

MAX_ORDER = 64


class JetError(ValueError):
    """Domain violation, mode mismatch, or malformed jet operation."""


@dataclass(frozen=True)
class Jet:
    base_point: object
    coeffs: tuple
    bits: int | None = None

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, j: int):
        return self.coeffs[j]

    def derivative(self, j: int):
        """j-th derivative at the base point: j! * c_j (exact in rational mode)."""
        if j > self.order:
            raise JetError(f"jet has order {self.order}; derivative {j} requested")
        if self.bits is None:
            return math.factorial(j) * self.coeffs[j]
        with mp.workprec(self.bits):
            return to_mpf(Fraction(math.factorial(j)), self.bits) * self.coeffs[j]

    def derivatives(self) -> tuple:
        return tuple(self.derivative(j) for j in range(self.order + 1))


def _check_order(order: int, allow_large_order: bool):
    if order < 0:
        raise JetError(f"jet order must be >= 0, got {order}")
    if order > MAX_ORDER and not allow_large_order:
        raise JetError(
            f"order {order} exceeds the default budget {MAX_ORDER}; "
            "pass allow_large_order=True to override"
        )


def _coerce(value, bits):
    if bits is None:
        v = parse_real(value)
        return v
    return to_mpf(value, bits)


def _zero(bits):
    return Fraction(0) if bits is None else mp.mpf(0)


def jet_constant(value, order: int, base_point=0, bits: int | None = None, allow_large_order: bool = False) -> Jet:
    _check_order(order, allow_large_order)
    return Jet(_coerce(base_point, bits), (_coerce(value, bits),) + (_zero(bits),) * order, bits)


def jet_variable(base_point, order: int, bits: int | None = None, allow_large_order: bool = False) -> Jet:
    """Jet of the identity function at the base point."""
    _check_order(order, allow_large_order)
    x0 = _coerce(base_point, bits)
    coeffs = [x0] + [_zero(bits)] * order
    if order >= 1:
        coeffs[1] = Fraction(1) if bits is None else mp.mpf(1)
    return Jet(x0, tuple(coeffs), bits)


def _require_compatible(a: Jet, b: Jet):
    if a.bits != b.bits:
        raise JetError(f"mixed numeric modes: {a.bits} vs {b.bits}")
    if a.base_point != b.base_point:
        raise JetError(f"base-point mismatch: {a.base_point} vs {b.base_point}")
    if a.order != b.order:
        raise JetError(f"order mismatch: {a.order} vs {b.order}")


def jet_add(a: Jet, b: Jet) -> Jet:
    _require_compatible(a, b)
    if a.bits is None:
        return Jet(a.base_point, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), None)
    with mp.workprec(a.bits):
        return Jet(a.base_point, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), a.bits)


def jet_scale(a: Jet, c) -> Jet:
    c = _coerce(c, a.bits)
    if a.bits is None:
        return Jet(a.base_point, tuple(c * x for x in a.coeffs), None)
    with mp.workprec(a.bits):
        return Jet(a.base_point, tuple(c * x for x in a.coeffs), a.bits)


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Cauchy product truncated at the common order."""
    _require_compatible(a, b)

    def convolve():
        out = []
        for n in range(a.order + 1):
            acc = _zero(a.bits)
            for i in range(n + 1):
                acc += a.coeffs[i] * b.coeffs[n - i]
            out.append(acc)
        return tuple(out)

    if a.bits is None:
        return Jet(a.base_point, convolve(), None)
    with mp.workprec(a.bits):
        return Jet(a.base_point, convolve(), a.bits)


def jet_compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of (outer o inner) at inner's base point, truncated at the order.

    Requires inner's value to equal outer's base point; evaluated by Horner
    in the shifted inner series.
    """
    if outer.bits != inner.bits:
        raise JetError(f"mixed numeric modes: {outer.bits} vs {inner.bits}")
    if outer.order != inner.order:
        raise JetError(f"order mismatch: {outer.order} vs {inner.order}")
    if inner.coeffs[0] != outer.base_point:
        raise JetError(
            f"base-point mismatch: inner value {inner.coeffs[0]} vs outer base point {outer.base_point}"
        )
    bits = outer.bits
    shifted = Jet(inner.base_point, (_zero(bits),) + inner.coeffs[1:], bits)
    acc = jet_constant(outer.coeffs[-1], inner.order, inner.base_point, bits, allow_large_order=True)
    for c in reversed(outer.coeffs[:-1]):
        acc = jet_mul(acc, shifted)
        acc = Jet(acc.base_point, (acc.coeffs[0] + _coerce(c, bits),) + acc.coeffs[1:], bits)
    return acc


# --------------------------------------------------------------------------
# Elementary functions via the standard convolution recurrences.
# --------------------------------------------------------------------------

def _head_exact(fn: str, c0: Fraction, param):
    """Exact value of fn at the leading coefficient, or None if irrational."""
    if fn == "exp":
        return Fraction(1) if c0 == 0 else None
    if fn == "log":
        return Fraction(0) if c0 == 1 else None
    if fn == "sin":
        return Fraction(0) if c0 == 0 else None
    if fn == "cos":
        return Fraction(1) if c0 == 0 else None
    if fn == "cosh":
        return Fraction(1) if c0 == 0 else None
    if fn == "sinh":
        return Fraction(0) if c0 == 0 else None
    if fn == "pow":
        base = c0 ** param.numerator
        if param.denominator == 1:
            return base
        return nth_root_fraction(base, param.denominator)
    return None


def _exp_core(u, head, bits):
    n_max = len(u) - 1
    v = [head] + [_zero(bits)] * n_max
    for n in range(1, n_max + 1):
        acc = _zero(bits)
        for k in range(1, n + 1):
            acc += k * u[k] * v[n - k]
        v[n] = acc / n
    return v


def _log_core(u, head, bits):
    n_max = len(u) - 1
    v = [head] + [_zero(bits)] * n_max
    for n in range(1, n_max + 1):
        acc = _zero(bits)
        for k in range(1, n):
            acc += k * v[k] * u[n - k]
        v[n] = (u[n] - acc / n) / u[0]
    return v


def _recip_core(u, bits):
    n_max = len(u) - 1
    v = [1 / u[0]] + [_zero(bits)] * n_max
    for n in range(1, n_max + 1):
        acc = _zero(bits)
        for k in range(1, n + 1):
            acc += u[k] * v[n - k]
        v[n] = -acc / u[0]
    return v


def _pow_core(u, head, p, bits):
    n_max = len(u) - 1
    pv = p if bits is None else to_mpf(p, bits)
    v = [head] + [_zero(bits)] * n_max
    for n in range(1, n_max + 1):
        acc = _zero(bits)
        for k in range(1, n + 1):
            acc += ((pv + 1) * k - n) * u[k] * v[n - k]
        v[n] = acc / (n * u[0])
    return v


def _trig_pair_core(u, s0, c0, bits, hyperbolic: bool):
    n_max = len(u) - 1
    s = [s0] + [_zero(bits)] * n_max
    c = [c0] + [_zero(bits)] * n_max
    sign = 1 if hyperbolic else -1
    for n in range(1, n_max + 1):
        sa = ca = _zero(bits)
        for k in range(1, n + 1):
            sa += k * u[k] * c[n - k]
            ca += k * u[k] * s[n - k]
        s[n] = sa / n
        c[n] = sign * ca / n
    return s, c


ELEMENTARY_FUNCTIONS = ("exp", "log", "sin", "cos", "cosh", "sinh", "reciprocal", "pow_rational")


def jet_elementary(fn: str, at: Jet, param=None) -> Jet:
    """Jet of an elementary function of the argument jet, same order.

    Domain rules: log and reciprocal need a nonzero leading value;
    pow_rational with a non-integer exponent needs a positive one.  In
    rational mode the leading function value must itself be rational.
    """
    u = list(at.coeffs)
    bits = at.bits
    if fn == "reciprocal":
        if u[0] == 0:
            raise JetError("reciprocal needs a nonzero leading coefficient")
        if bits is None:
            return Jet(at.base_point, tuple(_recip_core(u, None)), None)
        with mp.workprec(bits):
            return Jet(at.base_point, tuple(_recip_core(u, bits)), bits)
    if fn == "pow_rational":
        p = parse_real(param)
        if p.denominator > 1 and u[0] <= 0:
            raise JetError("pow_rational with a non-integer exponent needs a positive leading coefficient")
        if u[0] == 0:
            raise JetError("pow_rational needs a nonzero leading coefficient; use polynomial jets at zeros")
        fn = "pow"
    elif fn == "log":
        if u[0] <= 0:
            raise JetError("log needs a positive leading coefficient")
    elif fn not in ("exp", "sin", "cos", "cosh", "sinh"):
        raise JetError(f"unknown elementary function {fn!r}; known: {', '.join(ELEMENTARY_FUNCTIONS)}")

    if bits is None:
        head = _head_exact(fn, u[0], param if fn == "pow" else None)
        if head is None:
            raise JetError(
                f"{fn} of a jet with leading coefficient {u[0]} has an irrational value; "
                "use precision mode (bits=...)"
            )
        if fn in ("sin", "cos"):
            s, c = _trig_pair_core(u, Fraction(0), Fraction(1), None, hyperbolic=False)
            return Jet(at.base_point, tuple(s if fn == "sin" else c), None)
        if fn in ("sinh", "cosh"):
            s, c = _trig_pair_core(u, Fraction(0), Fraction(1), None, hyperbolic=True)
            return Jet(at.base_point, tuple(s if fn == "sinh" else c), None)
        if fn == "exp":
            return Jet(at.base_point, tuple(_exp_core(u, head, None)), None)
        if fn == "log":
            return Jet(at.base_point, tuple(_log_core(u, head, None)), None)
        return Jet(at.base_point, tuple(_pow_core(u, head, parse_real(param), None)), None)

    with mp.workprec(bits):
        x0 = u[0]
        if fn in ("sin", "cos"):
            s, c = _trig_pair_core(u, mp.sin(x0), mp.cos(x0), bits, hyperbolic=False)
            return Jet(at.base_point, tuple(s if fn == "sin" else c), bits)
        if fn in ("sinh", "cosh"):
            s, c = _trig_pair_core(u, mp.sinh(x0), mp.cosh(x0), bits, hyperbolic=True)
            return Jet(at.base_point, tuple(s if fn == "sinh" else c), bits)
        if fn == "exp":
            return Jet(at.base_point, tuple(_exp_core(u, mp.exp(x0), bits)), bits)
        if fn == "log":
            return Jet(at.base_point, tuple(_log_core(u, mp.log(x0), bits)), bits)
        p = parse_real(param)
        return Jet(at.base_point, tuple(_pow_core(u, mp.power(x0, to_mpf(p, bits)), p, bits)), bits)


# --------------------------------------------------------------------------
# Named-function registry.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSpec:
    """A registry function id plus canonicalized parameters (hashable)."""

    name: str
    params: tuple = ()

    def param(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


def _canonical_param(value):
    if isinstance(value, (list, tuple)):
        return tuple(parse_real(v) for v in value)
    if isinstance(value, mp.mpf):
        return value
    return parse_real(value)


def make_spec(name: str, **params) -> FunctionSpec:
    return FunctionSpec(name, tuple(sorted((k, _canonical_param(v)) for k, v in params.items())))


def _poly_jet(coeffs, x0, order, bits) -> Jet:
    var = jet_variable(x0, order, bits, allow_large_order=True)
    acc = jet_constant(coeffs[-1], order, x0, bits, allow_large_order=True)
    for c in reversed(coeffs[:-1]):
        acc = jet_mul(acc, var)
        acc = Jet(acc.base_point, (acc.coeffs[0] + _coerce(c, bits),) + acc.coeffs[1:], bits)
    return acc


def _build_polynomial(spec, x0, order, bits):
    coeffs = spec.param("coeffs")
    if not coeffs:
        raise JetError("polynomial needs a non-empty 'coeffs' parameter")
    return _poly_jet(coeffs, x0, order, bits)


def _build_rational(spec, x0, order, bits):
    num, den = spec.param("num"), spec.param("den")
    if not num or not den:
        raise JetError("rational needs non-empty 'num' and 'den' coefficient lists")
    den_jet = _poly_jet(den, x0, order, bits)
    if den_jet.coeffs[0] == 0:
        raise JetError(f"rational function denominator vanishes at {x0}")
    return jet_mul(_poly_jet(num, x0, order, bits), jet_elementary("reciprocal", den_jet))


def _build_exp(spec, x0, order, bits):
    return jet_elementary("exp", jet_variable(x0, order, bits, allow_large_order=True))


def _build_cosh(spec, x0, order, bits):
    return jet_elementary("cosh", jet_variable(x0, order, bits, allow_large_order=True))


def _build_exp_power(spec, x0, order, bits):
    p = spec.param("power")
    if p is None or p.denominator != 1 or p < 1:
        raise JetError("exp_power needs a positive integer 'power' parameter")
    p = int(p)
    mono = _poly_jet([Fraction(0)] * p + [Fraction(1)], x0, order, bits)
    return jet_elementary("exp", mono)


def _build_cosh_sqrt(spec, x0, order, bits):
    """Series sum_m y^m/(2m)! — the even part of exp transported to y = x^2.

    At positive base points computed as cosh of the square-root jet; at 0
    directly from the series coefficients, which keeps rational mode exact.
    """
    zero = x0 == 0
    if not zero and x0 < 0:
        raise JetError(f"cosh_sqrt is defined on [0, inf); base point {x0} rejected")
    if zero:
        coeffs = [Fraction(1, math.factorial(2 * m)) for m in range(order + 1)]
        if bits is None:
            return Jet(Fraction(0), tuple(coeffs), None)
        with mp.workprec(bits):
            return Jet(mp.mpf(0), tuple(to_mpf(c, bits) for c in coeffs), bits)
    root = jet_elementary("pow_rational", jet_variable(x0, order, bits, allow_large_order=True), Fraction(1, 2))
    return jet_elementary("cosh", root)


def exp_neg_inv_polynomials(upto: int) -> tuple:
    """Coefficient rows of the polynomials P_n with d^n/dx^n e^(-1/x) = e^(-1/x) P_n(1/x).

    Recurrence: P_0 = 1 and P_{n+1}(u) = u^2 (P_n(u) - P_n'(u)).
    """
    polys = [(Fraction(1),)]
    for _ in range(upto):
        p = polys[-1]
        reduced = [p[m] - (m + 1) * p[m + 1] if m + 1 < len(p) else p[m] for m in range(len(p))]
        polys.append((Fraction(0), Fraction(0)) + tuple(reduced))
    return tuple(polys)


def _build_exp_neg_inv(spec, x0, order, bits):
    if x0 <= 0:
        raise JetError(f"exp_neg_inv is defined for x > 0; base point {x0} rejected")
    if bits is None:
        raise JetError("exp_neg_inv coefficients carry the irrational factor exp(-1/x0); use precision mode")
    polys = exp_neg_inv_polynomials(order)
    exact_u = isinstance(x0, Fraction) or not isinstance(x0, mp.mpf)
    with mp.workprec(bits):
        u0 = 1 / parse_real(x0) if exact_u else 1 / x0
        scale = mp.exp(-to_mpf(u0, bits))
        coeffs = []
        for n, poly in enumerate(polys):
            value = _horner(poly, u0)
            if exact_u:
                coeffs.append(scale * to_mpf(value / math.factorial(n), bits))
            else:
                coeffs.append(scale * value / to_mpf(Fraction(math.factorial(n)), bits))
        return Jet(to_mpf(x0, bits), tuple(coeffs), bits)


def _horner(coeffs, x):
    acc = coeffs[-1] if not isinstance(x, mp.mpf) else to_mpf(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def _build_exp_decay_fourier(spec, x0, order, bits):
    """Finite sum over j of a_j * e^(-j x); derivatives alternate with (-j)^n."""
    coeffs = spec.param("coeffs")
    if not coeffs:
        raise JetError("exp_decay_fourier needs a non-empty 'coeffs' parameter (a_0..a_J)")
    if bits is None:
        if x0 != 0:
            raise JetError("exp_decay_fourier is rational only at base point 0; use precision mode")
        out = [
            sum(a * Fraction((-j) ** n, 1) for j, a in enumerate(coeffs)) / math.factorial(n)
            for n in range(order + 1)
        ]
        return Jet(Fraction(0), tuple(out), None)
    with mp.workprec(bits):
        x0m = to_mpf(x0, bits)
        weights = [to_mpf(a, bits) * mp.exp(-j * x0m) for j, a in enumerate(coeffs)]
        out = []
        for n in range(order + 1):
            acc = mp.mpf(0)
            for j, w in enumerate(weights):
                acc += w * (-j) ** n
            out.append(acc / to_mpf(Fraction(math.factorial(n)), bits))
        return Jet(x0m, tuple(out), bits)


_FUNCTION_BUILDERS = {
    "polynomial": _build_polynomial,
    "rational": _build_rational,
    "exp": _build_exp,
    "cosh": _build_cosh,
    "exp_power": _build_exp_power,
    "cosh_sqrt": _build_cosh_sqrt,
    "exp_neg_inv": _build_exp_neg_inv,
    "exp_decay_fourier": _build_exp_decay_fourier,
}


def registered_functions() -> tuple:
    return tuple(sorted(_FUNCTION_BUILDERS))


def function_jet(spec: FunctionSpec, x0, order: int, bits: int | None = None, allow_large_order: bool = False) -> Jet:
    """Jet of a registry function at x0 to the requested order."""
    _check_order(order, allow_large_order)
    if spec.name not in _FUNCTION_BUILDERS:
        raise JetError(f"unknown function {spec.name!r}; known: {', '.join(registered_functions())}")
    x0 = parse_real(x0) if bits is None else (x0 if isinstance(x0, mp.mpf) else parse_real(x0))
    return _FUNCTION_BUILDERS[spec.name](spec, x0, order, bits)


def function_value(spec: FunctionSpec, x, bits: int | None = None):
    return function_jet(spec, x, 0, bits).coeffs[0]
