"""Weight sequences: families, log-convex regularization, diagnostics, transforms.

All operations act on explicit finite prefixes; suprema and infima over
infinite index ranges become maxima and minima over the available indices,
and every operation states the prefix length it needs.  Values are exact
rationals whenever the inputs are rational; otherwise mpmath floats at the
working precision.  A third representation stores exact rational *logs*
(`from_log_values`), under which the whole hull computation stays exact.

Everything here is a pure function of immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath as mp

from .numeric import (
    DEFAULT_PRECISION_BITS,
    EXACT_COMPARE_EXP,
    NumericError,
    exact_eq,
    exact_le,
    format_real,
    geq_with_tol,
    parse_real,
    radical,
    radical_div,
    to_mpf,
)


class SequenceError(ValueError):
    """Malformed sequence input or insufficient prefix."""


# --------------------------------------------------------------------------
# Parametric families with closed-form behaviour.
#
# Each entry: value(params, n, bits), ratio(params, n) giving M_n / M_{n+1}
# in closed form (None when irrational), and a quasianalyticity verdict with
# a one-line justification.  Every registered family is log-convex, so its
# regularized sequence is itself and the ratio series is the diagnostic one.
# --------------------------------------------------------------------------

def _gevrey_validate(params):
    s = parse_real(params.get("s"))
    if s < 0:
        raise SequenceError(f"gevrey family needs s >= 0, got {s}")
    return {"s": s}


def _gevrey_value(params, n, bits):
    s = params["s"]
    if s.denominator == 1:
        return Fraction(math.factorial(n)) ** s.numerator
    with mp.workprec(bits):
        return mp.exp(to_mpf(s, bits) * mp.log(mp.factorial(n)))


def _gevrey_ratio(params, n):
    s = params["s"]
    if s.denominator == 1:
        return Fraction(1, (n + 1) ** s.numerator)
    return None


def _gevrey_verdict(params):
    s = params["s"]
    if s <= 1:
        return "quasianalytic", f"ratio series sum (n+1)^(-{s}) diverges for s <= 1"
    return "not-quasianalytic", f"ratio series sum (n+1)^(-{s}) converges for s > 1"


def _positive_param(key):
    def validate(params):
        v = parse_real(params.get(key))
        if v <= 0:
            raise SequenceError(f"family parameter {key} must be positive, got {v}")
        return {key: v}

    return validate


_FAMILIES = {
    "gevrey": {
        "validate": _gevrey_validate,
        "value": _gevrey_value,
        "ratio": _gevrey_ratio,
        "verdict": _gevrey_verdict,
    },
    "constant": {
        "validate": _positive_param("value"),
        "value": lambda p, n, bits: p["value"],
        "ratio": lambda p, n: Fraction(1),
        "verdict": lambda p: ("quasianalytic", "every ratio equals 1, so the ratio series diverges"),
    },
    "scaled_factorial": {
        "validate": _positive_param("scale"),
        "value": lambda p, n, bits: p["scale"] * math.factorial(n),
        "ratio": lambda p, n: Fraction(1, n + 1),
        "verdict": lambda p: ("quasianalytic", "ratio series is harmonic"),
    },
    "geometric": {
        "validate": _positive_param("base"),
        "value": lambda p, n, bits: p["base"] ** n,
        "ratio": lambda p, n: 1 / p["base"],
        "verdict": lambda p: ("quasianalytic", "constant positive ratios diverge"),
    },
}

_FAMILY_ALIASES = {"const": "constant"}


def parse_family_descriptor(text: str) -> tuple[str, dict]:
    """Parse compact descriptors like ``gevrey:1`` or ``constant:0.1``."""
    fid, _, raw = text.partition(":")
    fid = _FAMILY_ALIASES.get(fid.strip(), fid.strip())
    if fid not in _FAMILIES:
        raise SequenceError(f"unknown family {fid!r}; known: {', '.join(sorted(_FAMILIES))}")
    key = {"gevrey": "s", "constant": "value", "scaled_factorial": "scale", "geometric": "base"}[fid]
    if not raw:
        raise SequenceError(f"family {fid!r} needs a parameter, e.g. {fid}:1")
    return fid, {key: raw}


@dataclass(frozen=True)
class WeightSequence:
    """A positive sequence prefix, or a parametric family evaluated lazily.

    Explicit sequences carry either exact `values` or exact rational
    `log_values`; families materialize any prefix on demand.
    """

    name: str
    kind: str
    values: tuple | None = None
    log_values: tuple | None = None
    family: tuple | None = None

    @classmethod
    def from_values(cls, name, values, kind="explicit"):
        parsed = []
        for i, v in enumerate(values):
            v = v if isinstance(v, mp.mpf) else parse_real(v)
            if v <= 0:
                raise SequenceError(f"non-positive value at index {i}")
            parsed.append(v)
        if len(parsed) < 3:
            raise SequenceError(f"explicit sequences need at least 3 values (indices 0..N, N >= 2), got {len(parsed)}")
        return cls(name=name, kind=kind, values=tuple(parsed))

    @classmethod
    def from_log_values(cls, name, logs):
        parsed = tuple(parse_real(q) for q in logs)
        if len(parsed) < 3:
            raise SequenceError(f"explicit sequences need at least 3 values, got {len(parsed)}")
        return cls(name=name, kind="explicit", log_values=parsed)

    @classmethod
    def from_family(cls, name, family_id, params):
        family_id = _FAMILY_ALIASES.get(family_id, family_id)
        if family_id not in _FAMILIES:
            raise SequenceError(f"unknown family {family_id!r}; known: {', '.join(sorted(_FAMILIES))}")
        normalized = _FAMILIES[family_id]["validate"](params)
        return cls(name=name, kind="family", family=(family_id, normalized))

    @property
    def mode(self) -> str:
        if self.log_values is not None:
            return "log-rational"
        if self.values is not None and all(isinstance(v, Fraction) for v in self.values):
            return "rational"
        return "float"

    def available_length(self) -> int | None:
        if self.kind == "family":
            return None
        return len(self.values) if self.values is not None else len(self.log_values)

    def prefix(self, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> tuple:
        """Values M_0..M_upto; families materialize, logs exponentiate to mpf."""
        if upto < 0:
            raise SequenceError(f"prefix end must be >= 0, got {upto}")
        if self.kind == "family":
            fid, params = self.family
            return tuple(_FAMILIES[fid]["value"](params, n, bits) for n in range(upto + 1))
        length = self.available_length()
        if upto >= length:
            raise SequenceError(
                f"sequence {self.name!r} has {length} values (indices 0..{length - 1}); index {upto} requested"
            )
        if self.values is not None:
            return self.values[: upto + 1]
        with mp.workprec(bits):
            return tuple(mp.exp(to_mpf(q, bits)) for q in self.log_values[: upto + 1])

    def log_prefix(self, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> tuple:
        """log M_0..log M_upto; exact Fractions in log-rational mode."""
        if self.log_values is not None:
            if upto >= len(self.log_values):
                raise SequenceError(
                    f"sequence {self.name!r} has {len(self.log_values)} values; index {upto} requested"
                )
            return self.log_values[: upto + 1]
        vals = self.prefix(upto, bits)
        with mp.workprec(bits):
            return tuple(mp.log(to_mpf(v, bits)) for v in vals)

    def materialize(self, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> "WeightSequence":
        if self.kind != "family":
            return self
        return WeightSequence.from_values(self.name, self.prefix(upto, bits))


def load_sequence(source) -> WeightSequence:
    """Load the JSON sequence schema from a path, JSON text, or dict."""
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise SequenceError(f"cannot read sequence file: {exc}") from exc
        try:
            data = json.loads(text, parse_float=str, parse_int=str)
        except json.JSONDecodeError as exc:
            raise SequenceError(f"malformed JSON in {source}: {exc}") from exc
    elif isinstance(source, dict):
        data = source
    else:
        raise SequenceError(f"cannot load a sequence from {type(source).__name__}")

    name = data.get("name")
    kind = data.get("kind")
    if not isinstance(name, str) or not name:
        raise SequenceError("sequence schema needs a non-empty string 'name'")
    if kind == "explicit":
        values = data.get("values")
        if not isinstance(values, list):
            raise SequenceError("explicit sequences need a 'values' list")
        try:
            return WeightSequence.from_values(name, values)
        except NumericError as exc:
            raise SequenceError(str(exc)) from exc
    if kind == "family":
        fam = data.get("family")
        if not isinstance(fam, dict) or "id" not in fam:
            raise SequenceError("family sequences need a 'family' object with 'id' and 'params'")
        return WeightSequence.from_family(name, fam["id"], fam.get("params", {}))
    raise SequenceError(f"unknown sequence kind {kind!r}; expected 'explicit' or 'family'")


def dump_sequence(ws: WeightSequence, bits: int = DEFAULT_PRECISION_BITS) -> dict:
    if ws.kind == "family":
        fid, params = ws.family
        return {
            "name": ws.name,
            "kind": "family",
            "family": {"id": fid, "params": {k: format_real(v, bits) for k, v in params.items()}},
        }
    vals = ws.values if ws.values is not None else ws.prefix(ws.available_length() - 1, bits)
    exact = all(isinstance(v, (Fraction, int)) for v in vals)
    return {
        "name": ws.name,
        "kind": "explicit",
        "values": [format_real(v, bits) for v in vals],
        "precision_bits": None if exact else bits,
    }


# --------------------------------------------------------------------------
# Log-convex minorant: lower convex hull of (n, log M_n).
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularizedSequence:
    """Largest log-convex minorant of a prefix, with its hull support set.

    `minorant` entries are exact (Fraction/Radical) for rational inputs and
    mpf otherwise; `minorant_logs` holds exact rational logs when the source
    was given in log form.
    """

    source: WeightSequence
    upto: int
    minorant: tuple
    support: tuple
    minorant_logs: tuple | None = None


def _lower_hull(count: int, slope_ge) -> list[int]:
    """Monotone-chain lower hull over x = 0..count-1; pops collinear middles."""
    stack: list[int] = []
    for i in range(count):
        while len(stack) >= 2 and slope_ge(stack[-2], stack[-1], i):
            stack.pop()
        stack.append(i)
    return stack


def _interpolants(count, vertices, interpolate, at_vertex):
    out = [None] * count
    for v in vertices:
        out[v] = at_vertex(v)
    for left, right in zip(vertices, vertices[1:]):
        for n in range(left + 1, right):
            out[n] = interpolate(left, right, n)
    return out


def log_convex_minorant(M: WeightSequence, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> RegularizedSequence:
    """Largest log-convex minorant of M_0..M_upto.

    Computed as the lower convex hull of the points (n, log M_n); the value
    between hull vertices j < ell is the geometric interpolant
    M_j^((ell-n)/(ell-j)) * M_ell^((n-j)/(ell-j)).  Exact in both rational
    representations; support indices are exactly those where the minorant
    equals the input.
    """
    if upto < 2:
        raise SequenceError(f"minorant needs a prefix of length >= 3 (upto >= 2), got upto={upto}")
    mode = M.mode
    if M.kind == "family" or mode == "float":
        logs = M.log_prefix(upto, bits)
        with mp.workprec(bits):
            hull = _lower_hull(
                upto + 1,
                lambda a, b, c: (logs[b] - logs[a]) * (c - b) >= (logs[c] - logs[b]) * (b - a),
            )
            vals = M.prefix(upto, bits)
            minorant = _interpolants(
                upto + 1,
                hull,
                lambda j, l, n: mp.exp(logs[j] + (logs[l] - logs[j]) * Fraction(n - j, l - j)),
                lambda v: to_mpf(vals[v], bits),
            )
            slack = mp.mpf(2) ** (-(bits - 16))
            support = tuple(
                n for n in range(upto + 1)
                if abs(minorant[n] - to_mpf(vals[n], bits)) <= slack * abs(minorant[n])
            )
        return RegularizedSequence(M, upto, tuple(minorant), support)

    if mode == "log-rational":
        logs = M.log_prefix(upto)
        hull = _lower_hull(
            upto + 1,
            lambda a, b, c: (logs[b] - logs[a]) * (c - b) >= (logs[c] - logs[b]) * (b - a),
        )
        min_logs = _interpolants(
            upto + 1,
            hull,
            lambda j, l, n: logs[j] + (logs[l] - logs[j]) * Fraction(n - j, l - j),
            lambda v: logs[v],
        )
        support = tuple(n for n in range(upto + 1) if min_logs[n] == logs[n])
        with mp.workprec(bits):
            minorant = tuple(mp.exp(to_mpf(q, bits)) for q in min_logs)
        return RegularizedSequence(M, upto, minorant, support, tuple(min_logs))

    vals = M.prefix(upto)
    hull = _lower_hull(
        upto + 1,
        lambda a, b, c: vals[b] ** (c - a) >= vals[a] ** (c - b) * vals[c] ** (b - a),
    )
    minorant = _interpolants(
        upto + 1,
        hull,
        lambda j, l, n: radical(vals[j] ** (l - n) * vals[l] ** (n - j), l - j),
        lambda v: vals[v],
    )
    support = tuple(n for n in range(upto + 1) if exact_eq(minorant[n], vals[n]))
    return RegularizedSequence(M, upto, tuple(minorant), support)


def direct_formula_minorant(M: WeightSequence, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> tuple:
    """Minorant by brute force: min of M_n and all straddling-pair interpolants.

    Independent of the hull computation; used as its oracle.  The pair
    infimum exists only for 0 < n < upto; the endpoints keep M_n itself.
    """
    mode = M.mode
    if mode == "rational":
        vals = M.prefix(upto)
        out = []
        for n in range(upto + 1):
            best = radical(vals[n], 1)
            for j in range(n):
                for l in range(n + 1, upto + 1):
                    cand = radical(vals[j] ** (l - n) * vals[l] ** (n - j), l - j)
                    if _exact_lt(cand, best):
                        best = cand
            out.append(best)
        return tuple(out)
    if mode == "log-rational":
        logs = M.log_prefix(upto)
        out = []
        for n in range(upto + 1):
            best = logs[n]
            for j in range(n):
                for l in range(n + 1, upto + 1):
                    cand = (logs[j] * (l - n) + logs[l] * (n - j)) / (l - j)
                    if cand < best:
                        best = cand
            out.append(best)
        return tuple(out)
    logs = M.log_prefix(upto, bits)
    with mp.workprec(bits):
        out = []
        for n in range(upto + 1):
            best = logs[n]
            for j in range(n):
                for l in range(n + 1, upto + 1):
                    cand = (logs[j] * (l - n) + logs[l] * (n - j)) / (l - j)
                    best = min(best, cand)
            out.append(mp.exp(best))
    return tuple(out)


def _exact_lt(a, b) -> bool:
    return exact_le(a, b) and not exact_eq(a, b)


# --------------------------------------------------------------------------
# Denjoy-Carleman diagnostics.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DcDiagnostics:
    """Partial sums S_N = sum_{n<N} M^C_n / M^C_{n+1} and a verdict.

    Divergence of the ratio series is the quasianalyticity criterion; a
    finite prefix can never decide it, so explicit sequences always come
    back `inconclusive` and only registry families with closed-form ratio
    behaviour get definite verdicts.
    """

    partial_sums: tuple
    verdict: str
    basis: str


def quasianalytic_verdict(M: WeightSequence) -> tuple[str, str, str]:
    """(verdict, basis, justification) for a sequence."""
    if M.kind == "family":
        fid, params = M.family
        verdict, why = _FAMILIES[fid]["verdict"](params)
        return verdict, "closed-form", why
    return "inconclusive", "prefix-only", "divergence is not decidable from a finite prefix"


def classify_quasianalytic(M: WeightSequence) -> str:
    return quasianalytic_verdict(M)[0]


def dc_partial_sums(M: WeightSequence, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> DcDiagnostics:
    """S_1..S_upto of the regularized ratio series.

    Registry families are log-convex, so their minorant is themselves and
    the closed-form ratios are summed directly (exactly when rational).
    Explicit prefixes go through the hull; sums stay exact when every
    minorant ratio is rational and fall back to mpf otherwise.
    """
    if upto < 1:
        raise SequenceError(f"partial sums need upto >= 1, got {upto}")
    verdict, basis, _ = quasianalytic_verdict(M)
    if M.kind == "family":
        fid, params = M.family
        ratios = [_FAMILIES[fid]["ratio"](params, n) for n in range(upto)]
        if all(r is not None for r in ratios):
            sums, acc = [], Fraction(0)
            for r in ratios:
                acc += r
                sums.append(acc)
            return DcDiagnostics(tuple(sums), verdict, basis)
        logs = M.log_prefix(upto, bits)
        with mp.workprec(bits):
            sums, acc = [], mp.mpf(0)
            for n in range(upto):
                acc += mp.exp(logs[n] - logs[n + 1])
                sums.append(acc)
        return DcDiagnostics(tuple(sums), verdict, basis)

    reg = log_convex_minorant(M, max(upto, 2), bits)
    if reg.minorant_logs is not None:
        logs = reg.minorant_logs
        with mp.workprec(bits):
            ratios = [mp.exp(to_mpf(logs[n] - logs[n + 1], bits)) for n in range(upto)]
    elif M.mode == "rational":
        ratios = [radical_div(reg.minorant[n], reg.minorant[n + 1]) for n in range(upto)]
        if not all(isinstance(r, Fraction) for r in ratios):
            ratios = [to_mpf(r, bits) for r in ratios]
    else:
        with mp.workprec(bits):
            ratios = [reg.minorant[n] / reg.minorant[n + 1] for n in range(upto)]
    sums, acc = [], Fraction(0) if all(isinstance(r, Fraction) for r in ratios) else mp.mpf(0)
    for r in ratios:
        acc = acc + r
        sums.append(acc)
    return DcDiagnostics(tuple(sums), verdict, basis)


# --------------------------------------------------------------------------
# Sequence transforms.
# --------------------------------------------------------------------------

def power_transform_sequence(M: WeightSequence, k: int, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> WeightSequence:
    """Transformed sequence n! * max_{j <= n*k+1} M_j / j!, for n <= upto.

    Needs the prefix M_0..M_{upto*k+1}, i.e. upto*k + 2 values.
    """
    if not isinstance(k, int) or k < 2:
        raise SequenceError(f"power transform needs an integer k >= 2, got {k}")
    need = upto * k + 2
    if M.kind != "family":
        have = M.available_length()
        if have < need:
            raise SequenceError(
                f"power transform with k={k}, upto={upto} requires {need} values "
                f"(indices 0..{need - 1}); sequence {M.name!r} has {have}"
            )
    vals = M.prefix(need - 1, bits)
    exact = all(isinstance(v, Fraction) for v in vals)
    with mp.workprec(bits):
        quotients = [
            v / math.factorial(j) if exact else to_mpf(v, bits) / to_mpf(Fraction(math.factorial(j)), bits)
            for j, v in enumerate(vals)
        ]
        out = []
        running = quotients[0]
        top = 1
        for n in range(upto + 1):
            while top <= n * k + 1:
                if quotients[top] > running:
                    running = quotients[top]
                top += 1
            out.append(math.factorial(n) * running)
    return WeightSequence.from_values(f"{M.name}.power{k}", out)


def hat_regularize(M: WeightSequence, upto: int, bits: int = DEFAULT_PRECISION_BITS) -> WeightSequence:
    """Repair of M making ratios factorial-fast: successive ratios become
    max(M_n/M_{n-1}, n), anchored at M_0.

    Guarantees hat >= M, hat_{n+1}/hat_n >= n+1, and preserves log-convexity.
    """
    if upto < 2:
        raise SequenceError(f"hat transform needs upto >= 2, got {upto}")
    vals = M.prefix(upto, bits)
    exact = all(isinstance(v, Fraction) for v in vals)
    out = [vals[0] if exact else to_mpf(vals[0], bits)]
    with mp.workprec(bits):
        for n in range(1, upto + 1):
            prev_ratio = vals[n] / vals[n - 1] if exact else to_mpf(vals[n], bits) / to_mpf(vals[n - 1], bits)
            out.append(out[-1] * max(prev_ratio, n))
    return WeightSequence.from_values(f"{M.name}.hat", out)


def check_log_convex(M: WeightSequence, upto: int | None = None, bits: int = DEFAULT_PRECISION_BITS) -> bool:
    """Second differences of log M_n all >= 0 on the prefix."""
    upto = _default_upto(M, upto)
    if M.mode == "log-rational":
        q = M.log_prefix(upto)
        return all(q[n - 1] + q[n + 1] >= 2 * q[n] for n in range(1, upto))
    vals = M.prefix(upto, bits)
    if all(isinstance(v, Fraction) for v in vals):
        return all(vals[n - 1] * vals[n + 1] >= vals[n] ** 2 for n in range(1, upto))
    with mp.workprec(bits):
        q = [mp.log(to_mpf(v, bits)) for v in vals]
        slack = mp.mpf(2) ** (-EXACT_COMPARE_EXP)
        return all(q[n - 1] + q[n + 1] >= 2 * q[n] - slack for n in range(1, upto))


def check_factorial_monotone(M: WeightSequence, upto: int | None = None, bits: int = DEFAULT_PRECISION_BITS) -> bool:
    """Whether M_n / n! is nondecreasing, i.e. M_{n+1} >= (n+1) M_n."""
    upto = _default_upto(M, upto)
    vals = M.prefix(upto, bits)
    if all(isinstance(v, Fraction) for v in vals):
        return all(vals[n + 1] >= (n + 1) * vals[n] for n in range(upto))
    return all(geq_with_tol(vals[n + 1], (n + 1) * to_mpf(vals[n], bits), bits=bits) for n in range(upto))


def _default_upto(M: WeightSequence, upto: int | None) -> int:
    if upto is None:
        length = M.available_length()
        if length is None:
            raise SequenceError("family sequences need an explicit 'upto' for prefix checks")
        return length - 1
    if upto < 2:
        raise SequenceError(f"prefix checks need upto >= 2, got {upto}")
    return upto
