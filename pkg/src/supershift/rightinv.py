"""Right inverses of ``T_lambda`` on ``X_d`` and their growth bounds.

For ``p = min supp(lambda)`` the map ``S_{lambda,d}: X_d -> X_[p+1, p+d]``
solves the upper-triangular system ``M b = a`` with

    M[n, k] = lambda_{p+k-n} * prod_{i=n}^{p+k-1} w_i,   1 <= n <= k <= d,

so that ``T_lambda(S_{lambda,d} y) = y``.  Back-substitution is the
production path.  The cofactor/permutation-expansion inverse is kept only as
an independent oracle and is capped at ``d = 8``.

The bound functions ``F_lambda`` and ``G_{k0,delta}`` grow like
``(d+1)!`` times powers of ``1/w``, so they are evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .space import LogMagnitude, SparseVec, WeightSeq, to_scalar

__all__ = [
    "OracleSizeError",
    "TriMatrix",
    "BoundEval",
    "build_m",
    "solve_right_inverse",
    "permutation_det",
    "inv_matrix_oracle",
    "inverse_entry_log_bound",
    "right_inverse_dims",
    "apply_s_lambda",
    "apply_s_lambda_pow",
    "eval_f",
    "eval_g",
    "offset_sups",
]

ORACLE_MAX_D = 8


class OracleSizeError(ValueError):
    """The factorial-cost oracle was asked for ``d > 8``."""


@dataclass(frozen=True)
class TriMatrix:
    """Dense ``d x d`` upper-triangular matrix, addressed 1-based as ``M[n, k]``."""

    d: int
    rows: tuple[tuple[object, ...], ...]

    def __getitem__(self, nk: tuple[int, int]):
        n, k = nk
        return self.rows[n - 1][k - 1]

    def det(self):
        out = to_scalar(1)
        for i in range(self.d):
            out = out * self.rows[i][i]
        return out

    def as_lists(self) -> list[list[object]]:
        return [list(r) for r in self.rows]

    def to_json(self) -> list[list[str]]:
        return [[_rational_str(v) for v in row] for row in self.rows]


def _rational_str(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return repr(v)


@dataclass(frozen=True)
class BoundEval:
    """A bound function value held as its natural log."""

    kind: str
    d: int
    log_value: float
    params: dict = field(default_factory=dict)

    def value(self) -> float:
        return LogMagnitude.from_log(self.log_value).value()


def _p(lam: SparseVec) -> int:
    if not lam:
        raise ValueError("p_lambda undefined: lambda = 0")
    return lam.min_support()


def build_m(lam: SparseVec, w: WeightSeq, d: int) -> TriMatrix:
    if d < 1:
        raise ValueError("d >= 1")
    p = _p(lam)
    zero = to_scalar(0)
    rows = []
    for n in range(1, d + 1):
        row = [zero] * d
        for k in range(n, d + 1):
            lam_k = lam.coeff(p + k - n)
            if lam_k != 0:
                row[k - 1] = lam_k * w.prod(n, p + k - 1)
        rows.append(tuple(row))
    return TriMatrix(d, tuple(rows))


def _back_substitute(M: TriMatrix, a: Sequence) -> list:
    d = M.d
    b = [to_scalar(0)] * d
    for n in range(d, 0, -1):
        row = M.rows[n - 1]
        acc = a[n - 1]
        for k in range(n + 1, d + 1):
            if row[k - 1] != 0 and b[k - 1] != 0:
                acc = acc - row[k - 1] * b[k - 1]
        b[n - 1] = acc / row[n - 1]
    return b


def solve_right_inverse(lam: SparseVec, w: WeightSeq, d: int, y: SparseVec) -> SparseVec:
    """``S_{lambda,d}(y)``, supported in ``[p+1, p+d]``."""
    p = _p(lam)
    if y and y.max_support() > d:
        raise ValueError(f"y has max support {y.max_support()} > d = {d}")
    if not y:
        return y
    M = build_m(lam, w, d)
    b = _back_substitute(M, y.dense(d))
    return SparseVec._trusted((p + n, b[n - 1]) for n in range(1, d + 1))


def permutation_det(A: Sequence[Sequence]) -> object:
    """Leibniz expansion ``sum_sigma sgn(sigma) prod_l A[sigma(l)][l]``.

    Walks the symmetric group column by column; branches through a zero
    entry contribute nothing and are skipped.
    """
    n = len(A)
    if n == 0:
        return to_scalar(1)
    total = to_scalar(0)

    def walk(col: int, used: int, prod, sign: int):
        nonlocal total
        if col == n:
            total = total + prod if sign > 0 else total - prod
            return
        for row in range(n):
            if used >> row & 1:
                continue
            a = A[row][col]
            if a == 0:
                continue
            # earlier columns already mapped to a larger row index
            inversions = bin(used >> (row + 1)).count("1")
            walk(col + 1, used | (1 << row), prod * a, -sign if inversions & 1 else sign)

    walk(0, 0, to_scalar(1), 1)
    return total


def _minor(A: Sequence[Sequence], drop_row: int, drop_col: int) -> list[list]:
    return [
        [v for j, v in enumerate(row) if j != drop_col]
        for i, row in enumerate(A)
        if i != drop_row
    ]


def inv_matrix_oracle(M: TriMatrix) -> list[list]:
    """``M^{-1}[n][k] = (-1)^{n+k} det(M with row k, col n removed) / det M``.

    Every determinant goes through :func:`permutation_det`; nothing here uses
    triangularity.  Returned 0-based.
    """
    d = M.d
    if d > ORACLE_MAX_D:
        raise OracleSizeError(f"oracle size limit: d = {d} > {ORACLE_MAX_D}")
    A = M.as_lists()
    det = permutation_det(A)
    if det == 0:
        raise ZeroDivisionError("singular matrix")
    inv = []
    for n in range(d):
        row = []
        for k in range(d):
            cof = permutation_det(_minor(A, k, n))
            row.append(cof / det if (n + k) % 2 == 0 else -cof / det)
        inv.append(row)
    return inv


def inverse_entry_log_bound(lam: SparseVec, w: WeightSeq, d: int) -> float:
    """Log of ``(d-1)! max_{0<=i<d}|lambda_{p+i}|^{d-1} / (|lambda_p|^d w_{p+d}^{d p})``."""
    p = _p(lam)
    max_abs = max(LogMagnitude.of(lam.coeff(p + i)).log_abs for i in range(d))
    return (
        math.lgamma(d)
        + (d - 1) * max_abs
        - d * LogMagnitude.of(lam.coeff(p)).log_abs
        - d * p * w.log_w(p + d)
    )


def right_inverse_dims(p: int, q: int, k: int) -> list[int]:
    """``d_l = (l - 1) p + q`` for ``l = 1..k``."""
    return [(ell - 1) * p + q for ell in range(1, k + 1)]


def apply_s_lambda(lam: SparseVec, w: WeightSeq, y: SparseVec) -> SparseVec:
    """``S_lambda(y) = S_{lambda, q_y}(y)``; ``S_lambda(0) = 0``."""
    _p(lam)
    if not y:
        return y
    return solve_right_inverse(lam, w, y.max_support(), y)


def apply_s_lambda_pow(lam: SparseVec, w: WeightSeq, y: SparseVec, k: int) -> SparseVec:
    """``S_lambda^k(y)``: ``S_{lambda,d_k} o ... o S_{lambda,d_1}`` with ``d_l = (l-1)p + q_y``."""
    if k < 1:
        raise ValueError("k >= 1")
    p = _p(lam)
    if not y:
        return y
    dims = right_inverse_dims(p, y.max_support(), k)
    out = y
    for d in dims:
        # support law: each step raises the top index by exactly p
        assert out.max_support() == d
        out = solve_right_inverse(lam, w, d, out)
    return out


def eval_f(lam: SparseVec, w: WeightSeq, c_x, d: int) -> BoundEval:
    """``F_lambda(d) = C_X (d+1)! (max_{0<=i<d}|lambda_{p+i}|)^{d-1} / (|lambda_p|^d w_{p+d}^{d p})``."""
    if d < 1:
        raise ValueError("d >= 1")
    p = _p(lam)
    max_abs = max(LogMagnitude.of(lam.coeff(p + i)).log_abs for i in range(d))
    log_value = (
        math.log(c_x)
        + math.lgamma(d + 2)
        + (d - 1) * max_abs
        - d * LogMagnitude.of(lam.coeff(p)).log_abs
        - d * p * w.log_w(p + d)
    )
    return BoundEval("F", d, log_value, {"p": p, "c_x": float(c_x)})


def offset_sups(members: Sequence[SparseVec], k0: int, length: int) -> list:
    """``[sup_j |lambda^j_{k0+i}| for i in range(length)]``."""
    out = []
    for i in range(length):
        best = to_scalar(0)
        for lam in members:
            v = abs(lam.coeff(k0 + i))
            if v > best:
                best = v
        out.append(best)
    return out


def eval_g(max_abs_by_offset: Sequence, k0: int, delta, w: WeightSeq, c_x, d: int) -> BoundEval:
    """``G_{k0,delta}(d)``; ``max_abs_by_offset[i]`` is ``sup_j |lambda^j_{k0+i}|``.

    Offsets beyond the end of the list are treated as zero (finitely
    supported family).
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if d < 1:
        raise ValueError("d >= 1")
    window = [v for v in max_abs_by_offset[:d]]
    sup = max(window) if window else 0
    if sup < delta:
        raise ValueError("sup over the family must dominate delta")
    log_value = (
        math.log(c_x)
        + math.lgamma(d + 2)
        + (d - 1) * LogMagnitude.of(sup).log_abs
        - d * LogMagnitude.of(delta).log_abs
        - d * k0 * w.log_w(k0 + d)
    )
    return BoundEval("G", d, log_value, {"k0": k0, "delta": float(delta), "c_x": float(c_x)})
