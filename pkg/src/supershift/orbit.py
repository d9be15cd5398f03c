"""Projective orbits ``{t T^k x}``: distances, witness vectors and confinement.

The projective distance from ``x`` to ``y`` is

    min_t ||t x - y||_1 / ||y||_1,

which is 0 when ``y`` lies on the line through ``x`` and 1 when ``x = 0``.
For real scalars ``t -> ||t x - y||_1 = sum_i |x_i| |t - y_i/x_i|`` is convex
and piecewise linear, so its minimum sits at a breakpoint ``y_i/x_i`` (a
weighted median); complex scalars fall back to a nested ternary search over
the bounding box of those points.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from .shiftops import (
    OperatorSeries,
    apply_series,
    apply_shift,
    counterexample_a,
    counterexample_b,
)
from .space import ConstantOne, SparseVec, WeightSeq, basis, get_mode, to_scalar, FLOAT

__all__ = [
    "ModeRequirementError",
    "ternary_minimize",
    "proj_distance",
    "WitnessBlock",
    "WitnessPlan",
    "build_witness",
    "OrbitRow",
    "OrbitTrace",
    "orbit_trace",
    "ConfinementReport",
    "confinement_check",
]


class ModeRequirementError(RuntimeError):
    """The requested construction needs exact arithmetic."""


def _objective(x: SparseVec, y: SparseVec) -> Callable:
    xs, ys = x.as_dict(), y.as_dict()
    idx = sorted(set(xs) | set(ys))
    zero = to_scalar(0)
    pairs = [(xs.get(i, zero), ys.get(i, zero)) for i in idx]
    return lambda t: sum((abs(t * a - b) for a, b in pairs), zero)


def ternary_minimize(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Minimizer of a convex ``f`` on ``[lo, hi]`` to within ``tol`` in the argument."""
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return (lo + hi) / 2


def _weighted_median(x: SparseVec, y: SparseVec):
    ys = y.as_dict()
    zero = to_scalar(0)
    points = sorted(((ys.get(i, zero) / c, abs(c)) for i, c in x), key=lambda p: p[0])
    total = sum((w for _, w in points), zero)
    acc = zero
    for t, w in points:
        acc = acc + w
        if 2 * acc >= total:
            return t
    return points[-1][0]


def proj_distance(x: SparseVec, y: SparseVec, tol: float = 1e-9, method: str = "breakpoint"):
    """``(dist, best_scale)`` with ``dist = min_t ||t x - y||_1 / ||y||_1``.

    ``method="breakpoint"`` is exact for real scalars (rational in exact
    mode); ``method="ternary"`` brackets the breakpoints and refines by
    ternary search to additive ``tol``.  Complex data always goes through the
    nested ternary search.
    """
    if not y:
        raise ValueError("projective distance to the zero vector is undefined")
    if not tol > 0:
        raise ValueError("tol > 0")
    ny = y.norm1()
    if not x:
        return to_scalar(1), to_scalar(0)
    f = _objective(x, y)
    complex_data = any(isinstance(c, complex) for _, c in x) or any(
        isinstance(c, complex) for _, c in y
    )
    if complex_data:
        t = _complex_minimize(x, y, f, tol * float(ny) / float(x.norm1()))
        return f(t) / ny, t
    if method == "breakpoint":
        t = _weighted_median(x, y)
        return f(t) / ny, t
    if method == "ternary":
        ys = y.as_dict()
        bps = [float(ys.get(i, 0) / c) for i, c in x]
        # f is |x|_1-Lipschitz, so argument tolerance tol*|y|/|x| is enough
        step = tol * float(ny) / float(x.norm1())
        g = lambda t: float(f(t))
        t = ternary_minimize(g, min(bps), max(bps), step)
        return g(t) / float(ny), t
    raise ValueError(f"unknown method {method!r}")


def _complex_minimize(x: SparseVec, y: SparseVec, f: Callable, step: float) -> complex:
    ys = y.as_dict()
    bps = [complex(ys.get(i, 0)) / complex(c) for i, c in x]
    re_lo, re_hi = min(p.real for p in bps), max(p.real for p in bps)
    im_lo, im_hi = min(p.imag for p in bps), max(p.imag for p in bps)
    # Fermat-Weber point lies in the convex hull of the breakpoints
    def inner(re: float) -> tuple[float, float]:
        im = ternary_minimize(lambda v: f(complex(re, v)), im_lo, im_hi, step / 2)
        return f(complex(re, im)), im

    re = ternary_minimize(lambda r: inner(r)[0], re_lo, re_hi, step / 2)
    return complex(re, inner(re)[1])


@dataclass(frozen=True)
class WitnessBlock:
    target_id: int
    start: int
    power: int
    coefficient: object
    length: int


@dataclass
class WitnessPlan:
    blocks: list[WitnessBlock]
    epsilon: object
    weights: dict
    masses: dict = field(default_factory=dict)

    def check_budget(self) -> bool:
        """Residual budget: later blocks leave at most ``eps`` relative mass at every earlier block."""
        for j, bj in enumerate(self.blocks):
            spill = sum(
                (bi.coefficient * self.masses[(i, j)] for i, bi in enumerate(self.blocks) if i > j),
                to_scalar(0),
            )
            if spill > self.epsilon * bj.coefficient * self.masses[(j, j)]:
                return False
        starts = [b.start for b in self.blocks]
        disjoint = all(a.start + a.length <= b.start for a, b in zip(self.blocks, self.blocks[1:]))
        return starts == sorted(set(starts)) and disjoint and all(b.coefficient != 0 for b in self.blocks)

    def to_json(self) -> dict:
        return {
            "epsilon": _plain(self.epsilon),
            "weights": self.weights,
            "blocks": [
                {
                    "target_id": b.target_id,
                    "start_index": b.start,
                    "power": b.power,
                    "coefficient": _plain(b.coefficient),
                    "length": b.length,
                }
                for b in self.blocks
            ],
        }


def _plain(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    return v


def _pow2_floor(v):
    """Largest power of two ``<= v`` (keeps witness coefficients short)."""
    if not isinstance(v, Fraction):
        return 2.0 ** math.floor(math.log2(v))
    e = math.floor(math.log2(v.numerator) - math.log2(v.denominator))
    c = Fraction(2) ** e
    while c > v:
        c /= 2
    while 2 * c <= v:
        c *= 2
    return c


def build_witness(w: WeightSeq, targets: Sequence[SparseVec], eps) -> tuple[SparseVec, WitnessPlan]:
    """Vector whose scaled ``B_w``-orbit passes within ``eps`` of every target.

    Block ``j`` sits at indices ``s_j+1 .. s_j+L_j`` and stores
    ``c_j y_j[l] / (w_l ... w_{s_j+l-1})`` so that ``B_w^{s_j} x`` equals
    ``c_j y_j`` on ``1..L_j``.  Later blocks are scaled down until their
    leftovers cost at most ``eps * 2^-(i-j)`` relative mass at block ``j``.
    """
    if not eps > 0:
        raise ValueError("strictly positive tolerance required")
    if not targets:
        raise ValueError("at least one target required")
    if any(not y for y in targets):
        raise ValueError("targets must be nonzero")
    if get_mode() == FLOAT and not isinstance(w, ConstantOne):
        raise ModeRequirementError("exact mode required for weighted witnesses")
    eps = to_scalar(eps)
    if any(isinstance(c, complex) for y in targets for _, c in y):
        raise ValueError("witness construction supports real targets")

    starts, lengths = [], []
    s = 0
    for y in targets:
        starts.append(s)
        lengths.append(y.max_support())
        s += y.max_support()

    def mass(i: int, j: int):
        # ||B_w^{s_j} (block i)|| / c_i
        gap = starts[i] - starts[j]
        return sum((abs(c) / w.prod(l, gap + l - 1) for l, c in targets[i]), to_scalar(0))

    masses = {}
    coeffs = []
    for i, y in enumerate(targets):
        masses[(i, i)] = y.norm1()
        if i == 0:
            coeffs.append(to_scalar(1))
            continue
        limit = coeffs[-1]
        for j in range(i):
            masses[(i, j)] = mass(i, j)
            room = eps * coeffs[j] * masses[(j, j)] / (2 ** (i - j) * masses[(i, j)])
            limit = min(limit, room)
        coeffs.append(_pow2_floor(limit))

    entries = []
    blocks = []
    for i, y in enumerate(targets):
        s_i = starts[i]
        for l, c in y:
            entries.append((s_i + l, coeffs[i] * c / w.prod(l, s_i + l - 1)))
        blocks.append(WitnessBlock(i, s_i, s_i, coeffs[i], lengths[i]))
    plan = WitnessPlan(blocks, eps, w.to_json(), masses)
    return SparseVec(entries), plan


@dataclass(frozen=True)
class OrbitRow:
    k: int
    target_id: int
    best_scale: object
    proj_dist: object


@dataclass
class OrbitTrace:
    rows: list[OrbitRow]
    operator: str
    witness: str
    best: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "target_id", "best_scale", "proj_dist"])
        for r in self.rows:
            writer.writerow([r.k, r.target_id, _plain(r.best_scale), _plain(r.proj_dist)])
        return buf.getvalue()


def _stepper(op: Union[OperatorSeries, WeightSeq, Callable]) -> tuple[Callable, str]:
    if isinstance(op, OperatorSeries):
        return (lambda v: apply_series(op, v)), f"T_lambda{op.to_json()}"
    if isinstance(op, WeightSeq):
        return (lambda v: apply_shift(op, v)), f"B_w{op.to_json()}"
    return op, getattr(op, "__name__", "operator")


def orbit_trace(
    op: Union[OperatorSeries, WeightSeq, Callable],
    x: SparseVec,
    targets: Sequence[SparseVec],
    kmax: int,
) -> OrbitTrace:
    """Projective distances from ``T^k x`` to every target for ``k = 0..min(kmax, q_x)``."""
    if not x:
        raise ValueError("orbit of the zero vector")
    step, name = _stepper(op)
    top = min(kmax, x.max_support())
    points = [x]
    for _ in range(top):
        points.append(step(points[-1]))
    rows = []
    best: dict[int, tuple] = {}
    for tid, y in enumerate(targets):
        for k, v in enumerate(points):
            dist, scale = proj_distance(v, y)
            rows.append(OrbitRow(k, tid, scale, dist))
            if tid not in best or dist < best[tid][1]:
                best[tid] = (k, dist)
    return OrbitTrace(rows, name, repr(x), best)


@dataclass
class ConfinementReport:
    variant: str
    rows: list[dict]
    certified: bool


def confinement_check(variant: str, x: SparseVec, kmax: int) -> ConfinementReport:
    """Show that the orbit of one of the two non-supercyclic summands is confined.

    Variant ``A`` kills the first coordinate, so every ``t A^k x`` stays at
    relative distance >= 1 from ``e_1``.  Variant ``B`` maps into
    ``span{e_1}``, so every ``t B^k x`` stays at distance 1 from ``e_2``.
    """
    if not x:
        raise ValueError("x must be nonzero")
    if variant not in ("A", "B"):
        raise ValueError("variant is 'A' or 'B'")
    op = counterexample_a if variant == "A" else counterexample_b
    probe = basis(1) if variant == "A" else basis(2)
    rows = []
    ok = True
    v = x
    for k in range(1, kmax + 1):
        v = op(v)
        dist, _ = proj_distance(v, probe)
        if variant == "A":
            confined = v.coeff(1) == 0
        else:
            confined = all(n == 1 for n in v.support)
        ok = ok and confined and dist >= 1
        rows.append({"k": k, "confined": confined, "dist": dist})
    return ConfinementReport(variant, rows, ok)
