"""Weighted backward shifts and the operator series ``T_lambda``.

``B_w e_1 = 0`` and ``B_w e_{n+1} = w_n e_n``; powers follow from
``B_w^k e_n = (w_{n-k} ... w_{n-1}) e_{n-k}`` for ``n > k``.  The series
``T_lambda = sum_k lambda_k B_w^k`` is evaluated exactly on finitely
supported vectors, since ``B_w^k x = 0`` once ``k >= max_support(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .space import (
    ConstantOne,
    SparseVec,
    WeightSeq,
    basis,
    get_mode,
    to_scalar,
    weights_from_json,
    EXACT,
)

__all__ = [
    "GeometricTail",
    "OperatorSeries",
    "apply_shift",
    "apply_shift_pow",
    "apply_series",
    "apply_to_basis_closed_form",
    "series_norm_bracket",
    "counterexample_a",
    "counterexample_b",
]


@dataclass(frozen=True)
class GeometricTail:
    """Coefficients ``lambda_k = scale * ratio**(k - start)`` for every ``k >= start``."""

    ratio: object
    start: int
    scale: object = 1

    def __post_init__(self):
        ratio, scale = to_scalar(self.ratio), to_scalar(self.scale)
        if not abs(ratio) < 1:
            raise ValueError("tail ratio must satisfy |ratio| < 1")
        if self.start < 1:
            raise ValueError("tail start index must be >= 1")
        object.__setattr__(self, "ratio", ratio)
        object.__setattr__(self, "scale", scale)

    def coeff(self, k: int):
        if k < self.start:
            return to_scalar(0)
        return self.scale * self.ratio ** (k - self.start)

    def norm1(self):
        return abs(self.scale) / (1 - abs(self.ratio))


@dataclass(frozen=True)
class OperatorSeries:
    """``T_lambda = sum_k lambda_k B_w^k`` for finitely supported ``lambda``.

    ``tail`` optionally extends ``lambda`` by a geometric tail beyond its
    finite part.
    """

    lam: SparseVec
    weights: WeightSeq = ConstantOne()
    tail: Optional[GeometricTail] = None

    def __post_init__(self):
        if self.tail is not None and self.lam and self.tail.start <= self.lam.max_support():
            raise ValueError("tail must start after the finite part of lambda")

    @property
    def p(self) -> int:
        """Smallest index in the support of ``lambda``."""
        if self.lam:
            return self.lam.min_support()
        if self.tail is not None and self.tail.scale != 0:
            return self.tail.start
        return self.lam.min_support()  # raises SupportError

    def is_zero(self) -> bool:
        return not self.lam and (self.tail is None or self.tail.scale == 0)

    def lambda_norm1(self):
        total = self.lam.norm1()
        if self.tail is not None:
            total = total + self.tail.norm1()
        return total

    def coefficients_below(self, bound: int) -> list[tuple[int, object]]:
        """All nonzero ``(k, lambda_k)`` with ``k < bound``, tail included."""
        out = [(k, c) for k, c in self.lam if k < bound]
        if self.tail is not None and self.tail.scale != 0:
            out.extend((k, self.tail.coeff(k)) for k in range(self.tail.start, bound))
        return out

    def __call__(self, x: SparseVec) -> SparseVec:
        return apply_series(self, x)

    def to_json(self) -> dict:
        out = {"lambda": self.lam.to_json(), "weights": self.weights.to_json()}
        if self.tail is not None:
            out["tail"] = {
                "ratio": _plain(self.tail.ratio),
                "start": self.tail.start,
                "scale": _plain(self.tail.scale),
            }
        return out

    @classmethod
    def from_json(cls, data: dict) -> "OperatorSeries":
        tail = data.get("tail")
        return cls(
            SparseVec.from_json(data["lambda"]),
            weights_from_json(data.get("weights")),
            GeometricTail(tail["ratio"], tail["start"], tail.get("scale", 1)) if tail else None,
        )


def _plain(value):
    if get_mode() == EXACT:
        return str(value)
    return value


def apply_shift(w: WeightSeq, x: SparseVec) -> SparseVec:
    """``B_w x = sum_n x_{n+1} w_n e_n``."""
    return SparseVec._trusted((n - 1, c * w.w(n - 1)) for n, c in x if n >= 2)


def apply_shift_pow(w: WeightSeq, x: SparseVec, k: int) -> SparseVec:
    if k < 0:
        raise ValueError("shift power must be >= 0")
    if k == 0:
        return x
    return SparseVec._trusted((n - k, c * w.prod(n - k, n - 1)) for n, c in x if n > k)


def apply_series(T: OperatorSeries, x: SparseVec) -> SparseVec:
    """Exact ``T_lambda(x)``; only powers ``k < max_support(x)`` contribute."""
    if not x:
        return x
    q = x.max_support()
    w = T.weights
    acc: dict[int, object] = {}
    for k, lam_k in T.coefficients_below(q):
        for n, c in x:
            if n > k:
                m = n - k
                term = lam_k * c * w.prod(m, n - 1)
                acc[m] = acc[m] + term if m in acc else term
    return SparseVec._trusted(acc.items())


def apply_to_basis_closed_form(T: OperatorSeries, N: int) -> SparseVec:
    """``T_lambda(e_{N+1}) = sum_{n=1}^{N} lambda_{N+1-n} (w_n ... w_N) e_n``.

    Written independently of :func:`apply_series` so the two can be
    cross-checked.
    """
    if N < 1:
        raise ValueError("N >= 1")
    lam = dict(T.coefficients_below(N + 1))
    entries = []
    for n in range(1, N + 1):
        lam_k = lam.get(N + 1 - n)
        if lam_k is not None:
            entries.append((n, lam_k * T.weights.prod(n, N)))
    return SparseVec._trusted(entries)


def series_norm_bracket(T: OperatorSeries, N: int):
    """Bracket ``lower <= ||T_lambda||_{L(l1)} <= upper``.

    The lower bound probes ``e_2 .. e_{N+1}`` (norm-one extreme points of the
    ``l1`` ball); the upper bound is ``||lambda||_1``, valid because
    ``||B_w|| <= 1`` for admissible weights.
    """
    if N < 1:
        raise ValueError("N >= 1")
    upper = T.lambda_norm1()
    lower = to_scalar(0)
    for n in range(1, N + 1):
        val = apply_series(T, basis(n + 1)).norm1()
        if val > lower:
            lower = val
    return lower, upper


def counterexample_a(x: SparseVec) -> SparseVec:
    """``(a_1, a_2, a_3, ...) -> (0, a_3, a_4, ...)``."""
    return SparseVec._trusted((n - 1, c) for n, c in x if n >= 3)


def counterexample_b(x: SparseVec) -> SparseVec:
    """``(a_1, a_2, a_3, ...) -> (a_2, 0, 0, ...)``."""
    return SparseVec._trusted((1, c) for n, c in x if n == 2)
