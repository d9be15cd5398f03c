"""Limits of coefficient families and the Supercyclicity Criterion harness.

A family ``(lambda^m)`` with ``T_{lambda^m} -> U`` is handled through its
coefficient columns: each ``lambda^m_k`` converges, the first index ``k0``
with a nonzero limit and the infimum ``delta = inf_m |lambda^m_{k0}|``
determine the tail operators ``R_m = sum_{k>=k0} lambda^m_k B_w^k`` and the
bound ``G_{k0,delta}``.  The criterion is then checked with ``n_k = k`` and
``S_k = S~_{m_k}^k``.

Finite data cannot certify a limit.  Limits are estimated with a Levin
u-transform, which is exact for ``1/m``-type and geometric tails, and a
column only counts as convergent when the estimate is stable and the raw
oscillation is contracting.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .rightinv import BoundEval, apply_s_lambda_pow, eval_f, eval_g, offset_sups
from .shiftops import OperatorSeries, apply_series
from .space import (
    LogMagnitude,
    SparseVec,
    WeightSeq,
    basis,
    get_mode,
    random_vector,
    to_scalar,
    EXACT,
)

__all__ = [
    "NullLimitError",
    "NonConvergentFamilyError",
    "InsufficientConvergenceDepth",
    "SeqFamily",
    "LimitEstimate",
    "K0Delta",
    "MkSchedule",
    "CriterionRow",
    "CriterionReport",
    "VerdictReport",
    "levin_u",
    "detect_limits",
    "detect_k0_delta",
    "tail_operator",
    "tail_gap_bound",
    "commutator_residual",
    "power_diff_bound",
    "select_mk",
    "criterion_check",
    "closure_supercyclic_verdict",
]

FLOAT_TOL = 1e-8


class NullLimitError(ValueError):
    def __init__(self, msg="limit operator is null; supercyclicity claim excludes U = 0"):
        super().__init__(msg)


class NonConvergentFamilyError(ValueError):
    pass


class InsufficientConvergenceDepth(ValueError):
    """No member of the family meets the ``m_k`` threshold at power ``k``."""

    def __init__(self, k: int, log_gap: float):
        self.k = k
        self.log_gap = log_gap
        super().__init__(f"insufficient convergence depth at k = {k} (log-gap {log_gap:.6g})")


@dataclass(frozen=True)
class SeqFamily:
    members: tuple[SparseVec, ...]
    limit: Optional[SparseVec] = None
    generator: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) < 2:
            raise ValueError("a family needs at least two members")

    def __len__(self) -> int:
        return len(self.members)

    def member(self, m: int) -> SparseVec:
        """1-based access, ``member(1)`` is ``lambda^1``."""
        return self.members[m - 1]

    def column(self, k: int) -> list:
        return [lam.coeff(k) for lam in self.members]

    def max_index(self) -> int:
        top = max((lam.max_support() for lam in self.members if lam), default=1)
        if self.limit:
            top = max(top, self.limit.max_support())
        return top

    @classmethod
    def constant(cls, lam: SparseVec, size: int = 8) -> "SeqFamily":
        return cls((lam,) * size, lam, "constant")

    @classmethod
    def eventually_constant(
        cls, lam: SparseVec, start: int, perturbation: SparseVec, size: int = 12
    ) -> "SeqFamily":
        """``lambda^m = lam + perturbation/m`` for ``m < start``, ``lam`` afterwards."""
        members = [lam + perturbation / m if m < start else lam for m in range(1, size + 1)]
        return cls(members, lam, f"eventually_constant(start={start})")

    @classmethod
    def harmonic(cls, lam: SparseVec, perturbation: SparseVec, size: int = 200) -> "SeqFamily":
        """``lambda^m = lam + perturbation/m``."""
        return cls([lam + perturbation / m for m in range(1, size + 1)], lam, "harmonic")

    @classmethod
    def geometric(
        cls, lam: SparseVec, perturbation: SparseVec, ratio=Fraction(1, 2), size: int = 200
    ) -> "SeqFamily":
        """``lambda^m = lam + ratio**m * perturbation``."""
        r = to_scalar(ratio)
        return cls([lam + perturbation * r**m for m in range(1, size + 1)], lam, "geometric")


@dataclass(frozen=True)
class LimitEstimate:
    k: int
    value: object
    convergent: bool
    error: object


@dataclass(frozen=True)
class K0Delta:
    k0: int
    delta: object
    m0: int
    limits: tuple[LimitEstimate, ...]


def levin_u(values: Sequence, start: int, order: int):
    """Levin u-transform of ``a_start .. a_{start+order}`` (1-based indices).

    Uses ``omega_m = m (a_m - a_{m-1})`` and is exact whenever
    ``a_m - a = omega_m P(1/m)`` with ``deg P < order``; that covers
    ``c/m`` and ``c r^m`` perturbations.  Returns ``None`` if a remainder
    estimate vanishes.
    """
    num = to_scalar(0)
    den = to_scalar(0)
    for j in range(order + 1):
        m = start + j
        t = values[m - 1] - values[m - 2]
        if t == 0:
            return None
        omega = m * t
        weight = math.comb(order, j) * to_scalar(m) ** (order - 1) / omega
        if j & 1:
            weight = -weight
        num = num + weight * values[m - 1]
        den = den + weight
    if den == 0:
        return None
    return num / den


def _oscillation(values: Sequence):
    if any(isinstance(v, complex) for v in values):
        return max(abs(a - b) for a in values for b in values)
    return max(values) - min(values)


def _estimate_column(col: Sequence, tol: float, order: int = 2) -> LimitEstimate:
    M = len(col)
    quarter = max(1, M // 4)
    last = col[M - quarter:]
    if all(v == last[-1] for v in last):
        return LimitEstimate(0, last[-1], True, to_scalar(0))
    prev = col[max(0, M - 2 * quarter): M - quarter]
    order = min(order, M - 3)
    first = levin_u(col, M - order, order) if order >= 1 else None
    second = levin_u(col, M - order - 1, order) if order >= 1 and M - order - 1 >= 2 else None
    contracting = bool(prev) and _oscillation(last) < _oscillation(prev)
    if first is None or second is None:
        return LimitEstimate(0, col[-1], False, _oscillation(last))
    err = abs(first - second)
    if get_mode() == EXACT:
        stable = err == 0 or err <= Fraction(tol).limit_denominator(10**12) * max(1, abs(first))
    else:
        stable = err <= tol * max(1.0, abs(first))
    return LimitEstimate(0, first, stable and contracting, err)


def detect_limits(fam: SeqFamily, kmax: int, tol: float = FLOAT_TOL) -> list[LimitEstimate]:
    """Per-coordinate limit estimates for ``k = 1..kmax``."""
    if len(fam) < 3:
        raise ValueError("limit detection needs at least three members")
    out = []
    for k in range(1, kmax + 1):
        est = _estimate_column(fam.column(k), tol)
        out.append(LimitEstimate(k, est.value, est.convergent, est.error))
    return out


def _is_null(value, tol: float) -> bool:
    if get_mode() == EXACT and isinstance(value, Fraction):
        return value == 0
    return abs(value) <= tol


def detect_k0_delta(fam: SeqFamily, kmax: Optional[int] = None, tol: float = FLOAT_TOL) -> K0Delta:
    """First index with a nonzero limit and the tail infimum of its column.

    ``m0`` is the first member index after which the ``k0`` column never
    vanishes; ``delta`` is the infimum over ``m >= m0``, which for an
    infinite convergent sequence also involves the limit itself.
    """
    if kmax is None:
        kmax = fam.max_index()
    limits = detect_limits(fam, kmax, tol)
    k0 = None
    for est in limits:
        if not est.convergent:
            raise NonConvergentFamilyError(f"coordinate {est.k} does not converge")
        if not _is_null(est.value, tol):
            k0 = est.k
            break
    if k0 is None:
        raise NullLimitError()
    col = fam.column(k0)
    m0 = len(col)
    while m0 > 1 and col[m0 - 2] != 0:
        m0 -= 1
    delta = min(abs(v) for v in col[m0 - 1:])
    delta = min(delta, abs(limits[k0 - 1].value))
    return K0Delta(k0, delta, m0, tuple(limits))


def tail_operator(lam: SparseVec, k0: int, w: WeightSeq) -> OperatorSeries:
    """``sum_{k>=k0} lambda_k B_w^k``: coordinates below ``k0`` zeroed."""
    return OperatorSeries(lam.truncate_below(k0), w)


def tail_gap_bound(lam: SparseVec, k0: int):
    """Upper bound ``sum_{k<k0} |lambda_k|`` on ``||T_lambda - R||``."""
    return sum((abs(c) for k, c in lam if k < k0), to_scalar(0))


def commutator_residual(R1: OperatorSeries, R2: OperatorSeries, probes: Sequence[SparseVec]):
    """``max_x ||R1(R2 x) - R2(R1 x)||_1`` over the probes."""
    if R1.weights != R2.weights:
        raise ValueError("series over mismatched weights")
    worst = to_scalar(0)
    for x in probes:
        r = (apply_series(R1, apply_series(R2, x)) - apply_series(R2, apply_series(R1, x))).norm1()
        if r > worst:
            worst = r
    return worst


def _coefficient_distance(A: OperatorSeries, B: OperatorSeries):
    dist = (A.lam - B.lam).norm1()
    if A.tail != B.tail:
        for t in (A.tail, B.tail):
            if t is not None:
                dist = dist + t.norm1()
    return dist


def power_diff_bound(Rm: OperatorSeries, U: OperatorSeries, k: int, norm_rm, norm_u):
    """``||R_m^k - U^k|| <= ||R_m - U|| sum_{i<k} ||R_m||^{k-1-i} ||U||^i``."""
    if k < 1:
        raise ValueError("k >= 1")
    dist = _coefficient_distance(Rm, U)
    if dist == 0:
        return dist
    geo = sum((norm_rm ** (k - 1 - i) * norm_u**i for i in range(k)), to_scalar(0))
    return dist * geo


@dataclass(frozen=True)
class MkSchedule:
    m: tuple[int, ...]
    log_bounds: tuple[float, ...]
    log_thresholds: tuple[float, ...]
    k0: int
    delta: object
    offset_sup: tuple


def _limit_of(fam: SeqFamily, limits: Sequence[LimitEstimate]) -> SparseVec:
    if fam.limit is not None:
        return fam.limit
    quarter = max(1, len(fam) // 4)
    tail = fam.members[-quarter:]
    if all(m == tail[-1] for m in tail):
        return tail[-1]
    raise ValueError("select_mk needs a closed-form limit or an eventually constant family")


def _g_factory(fam: SeqFamily, kd: K0Delta, w: WeightSeq, c_x):
    """``d -> G_{k0,delta}(d)`` over the members ``m >= m0``."""
    members = fam.members[kd.m0 - 1:]
    cache: dict[int, BoundEval] = {}

    def G(d: int) -> BoundEval:
        if d not in cache:
            cache[d] = eval_g(offset_sups(members, kd.k0, d), kd.k0, kd.delta, w, c_x, d)
        return cache[d]

    return G


def select_mk(
    fam: SeqFamily,
    w: WeightSeq,
    kmax: int,
    c_x=1,
    k0delta: Optional[K0Delta] = None,
) -> MkSchedule:
    """Smallest increasing ``m_1 < m_2 < ...`` meeting the power-difference threshold.

    The threshold at power ``k`` is ``2^-k G_{k0,delta}(k^2)^-k``, compared in
    log space.  A zero power-difference bound always qualifies.
    """
    kd = k0delta or detect_k0_delta(fam)
    limit = _limit_of(fam, kd.limits)
    U = tail_operator(limit, kd.k0, w)
    norm_u = U.lambda_norm1()
    G = _g_factory(fam, kd, w, c_x)
    sups = offset_sups(fam.members[kd.m0 - 1:], kd.k0, kmax * kmax)
    tails = {m: tail_operator(fam.member(m), kd.k0, w) for m in range(kd.m0, len(fam) + 1)}
    chosen: list[int] = []
    log_bounds: list[float] = []
    log_thresholds: list[float] = []
    prev = kd.m0 - 1
    for k in range(1, kmax + 1):
        threshold = -k * math.log(2) - k * G(k * k).log_value
        best_gap = math.inf
        pick = None
        for m in range(prev + 1, len(fam) + 1):
            Rm = tails[m]
            bound = power_diff_bound(Rm, U, k, Rm.lambda_norm1(), norm_u)
            log_bound = LogMagnitude.of(bound).log_abs
            if bound == 0 or log_bound <= threshold:
                pick = (m, log_bound)
                break
            best_gap = min(best_gap, log_bound - threshold)
        if pick is None:
            raise InsufficientConvergenceDepth(k, best_gap)
        prev = pick[0]
        chosen.append(pick[0])
        log_bounds.append(pick[1])
        log_thresholds.append(threshold)
    return MkSchedule(tuple(chosen), tuple(log_bounds), tuple(log_thresholds), kd.k0, kd.delta, tuple(sups))


@dataclass(frozen=True)
class CriterionRow:
    k: int
    n_k: int
    norm_uk: object
    norm_sk: object
    product: object
    residual: object
    log_bound: float
    bound_ok: bool


@dataclass
class CriterionReport:
    rows: list[CriterionRow]
    x0: SparseVec
    y0: SparseVec
    params: dict = field(default_factory=dict)
    cond1_ok: bool = False
    cond2_ok: bool = False

    @property
    def bounds_ok(self) -> bool:
        return all(r.bound_ok for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.cond1_ok and self.cond2_ok and self.bounds_ok

    def to_json(self) -> dict:
        return {
            "x0": self.x0.to_json(),
            "y0": self.y0.to_json(),
            "params": self.params,
            "cond1_ok": self.cond1_ok,
            "cond2_ok": self.cond2_ok,
            "bounds_ok": self.bounds_ok,
            "rows": [
                {
                    "k": r.k,
                    "n_k": r.n_k,
                    "normUk": _num(r.norm_uk),
                    "normSk": _num(r.norm_sk),
                    "product": _num(r.product),
                    "residual": _num(r.residual),
                    "log_bound": r.log_bound,
                    "bound_ok": r.bound_ok,
                }
                for r in self.rows
            ],
        }

    def csv_rows(self) -> list[list]:
        return [
            [r.k, r.n_k, _num(r.norm_uk), _num(r.norm_sk), _num(r.product), _num(r.residual)]
            for r in self.rows
        ]

    CSV_HEADER = ("k", "n_k", "normUk", "normSk", "product", "residual")


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return v


def _trend_to_zero(values: Sequence, tol) -> bool:
    if not values:
        return False
    if abs(values[-1]) <= tol:
        return True
    half = values[len(values) // 2:]
    nonincreasing = all(b <= a for a, b in zip(half, half[1:]))
    return nonincreasing and values[-1] < values[0]


def criterion_check(
    U: OperatorSeries,
    x0: SparseVec,
    y0: SparseVec,
    kmax: int,
    inverses: Optional[Sequence[OperatorSeries]] = None,
    g_bound: Optional[Callable[[int], BoundEval]] = None,
    c_x=1,
) -> CriterionReport:
    """Fill the criterion table for ``n_k = k``.

    ``S_k`` is ``S~^k`` of ``inverses[k-1]`` (the tail series ``R_{m_k}``);
    without ``inverses`` the right inverse of ``U`` itself is used.  The norm
    of ``S_k y0`` is checked against ``g_bound(d_k)^k`` (``F`` of the
    inverted series when ``g_bound`` is omitted), ``d_k = (k-1)k0 + q_{y0}``.
    """
    if U.is_zero():
        raise NullLimitError()
    if not x0 or not y0:
        raise ValueError("criterion probes must be nonzero")
    exact = get_mode() == EXACT
    tol = 0 if exact else 1e-9
    rows = []
    ux = x0
    q_y = y0.max_support()
    for k in range(1, kmax + 1):
        ux = apply_series(U, ux)
        inv = inverses[k - 1] if inverses is not None else U
        sk = apply_s_lambda_pow(inv.lam, inv.weights, y0, k)
        usk = sk
        for _ in range(k):
            usk = apply_series(U, usk)
        norm_uk = ux.norm1()
        norm_sk = sk.norm1()
        residual = (usk - y0).norm1()
        p = inv.p
        d_k = (k - 1) * p + q_y
        bound = g_bound(d_k) if g_bound is not None else eval_f(inv.lam, inv.weights, c_x, d_k)
        log_bound = k * bound.log_value + LogMagnitude.of(y0.norm1()).log_abs
        log_sk = LogMagnitude.of(norm_sk).log_abs
        # relative guard absorbs log rounding only
        bound_ok = log_sk <= log_bound + 1e-12 * max(1.0, abs(log_bound))
        rows.append(
            CriterionRow(k, k, norm_uk, norm_sk, norm_uk * norm_sk, residual, log_bound, bound_ok)
        )
    report = CriterionReport(rows, x0, y0, {"p": U.p, "kmax": kmax, "mode": get_mode()})
    scale = max(1.0, float(abs(y0.norm1())))
    report.cond1_ok = _trend_to_zero([r.product for r in rows], tol * scale)
    report.cond2_ok = _trend_to_zero([r.residual for r in rows], tol * scale)
    return report


@dataclass
class VerdictReport:
    verdict: str
    satisfied: bool
    k0delta: Optional[K0Delta] = None
    schedule: Optional[MkSchedule] = None
    failure: Optional[str] = None
    log_gap: Optional[float] = None
    commutator_max: object = None
    reports: list[CriterionReport] = field(default_factory=list)

    def to_json(self) -> dict:
        out: dict = {"verdict": self.verdict, "satisfied": self.satisfied}
        if self.k0delta is not None:
            out["k0"] = self.k0delta.k0
            out["delta"] = _num(self.k0delta.delta)
            out["m0"] = self.k0delta.m0
        if self.schedule is not None:
            out["m_k"] = list(self.schedule.m)
            out["log_bounds"] = list(self.schedule.log_bounds)
            out["log_thresholds"] = list(self.schedule.log_thresholds)
        if self.failure is not None:
            out["failure"] = self.failure
        if self.log_gap is not None:
            out["log_gap"] = self.log_gap
        if self.commutator_max is not None:
            out["commutator_max"] = _num(self.commutator_max)
        out["samples"] = [r.to_json() for r in self.reports]
        return out


def closure_supercyclic_verdict(
    fam: SeqFamily,
    w: WeightSeq,
    sample_count: int,
    kmax: int,
    rng: Optional[random.Random] = None,
    c_x=1,
    probe_support: int = 6,
) -> VerdictReport:
    """Run the whole pipeline on a family converging to ``U``.

    ``k0/delta`` detection, tail operators, commutation spot checks, the
    ``m_k`` schedule, then the criterion table for ``sample_count`` random
    pairs ``(x0, y0)`` drawn from ``X_inf``.  ``x0`` is drawn with
    ``q_x0 <= kmax * k0`` so cond1 can be decided within the table.
    """
    rng = rng or random.Random(0)
    try:
        kd = detect_k0_delta(fam)
    except NullLimitError:
        return VerdictReport("excluded: U = 0", False)
    tails = [tail_operator(fam.member(m), kd.k0, w) for m in range(kd.m0, len(fam) + 1)]
    probes = [basis(n) for n in range(1, 21)]
    pairs = list(zip(tails, tails[1:]))[:4] + [(tails[0], tails[-1])]
    comm = max(commutator_residual(a, b, probes) for a, b in pairs)
    try:
        schedule = select_mk(fam, w, kmax, c_x, kd)
    except InsufficientConvergenceDepth as exc:
        return VerdictReport(
            "insufficient convergence depth", False, kd, None, str(exc), exc.log_gap, comm
        )
    limit = _limit_of(fam, kd.limits)
    U = tail_operator(limit, kd.k0, w)
    inverses = [tail_operator(fam.member(m), kd.k0, w) for m in schedule.m]
    G = _g_factory(fam, kd, w, c_x)
    reports = []
    # U^k x0 vanishes once k >= q_x0 / k0; keep that inside the k <= kmax window
    x_support = max(1, min(probe_support, kmax * kd.k0))
    for _ in range(sample_count):
        x0 = random_vector(rng, x_support)
        y0 = random_vector(rng, probe_support)
        reports.append(criterion_check(U, x0, y0, kmax, inverses, G, c_x))
    exact = get_mode() == EXACT
    comm_ok = comm == 0 if exact else comm <= 1e-9
    ok = comm_ok and all(r.ok for r in reports)
    verdict = "criterion satisfied up to kmax" if ok else "criterion violated"
    return VerdictReport(verdict, ok, kd, schedule, None, None, comm, reports)
