"""Scalars, finitely supported sequence-space vectors and weight sequences.

Everything here works over the canonical biorthogonal system of ``l1``:
``x_n = e_n`` and ``x_n^*`` the n-th coordinate functional, so that
``C_X = 1``.  Indices are 1-based throughout.

Arithmetic runs in one of two run-wide modes:

* ``"exact"``  -- ``fractions.Fraction`` scalars, no rounding anywhere;
* ``"float"``  -- IEEE doubles (``complex`` is accepted for complex scalars).

The mode is held in a context variable, so concurrent workers can each run
their own mode without interfering.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "EXACT",
    "FLOAT",
    "ModeError",
    "SupportError",
    "get_mode",
    "set_mode",
    "arithmetic",
    "to_scalar",
    "is_zero",
    "LogMagnitude",
    "SparseVec",
    "basis",
    "coeff",
    "min_support",
    "max_support",
    "norm1",
    "BiorthSystem",
    "WeightSeq",
    "ConstantOne",
    "Geometric",
    "weight_prod",
    "weights_from_json",
    "random_vector",
]

EXACT = "exact"
FLOAT = "float"

_mode: contextvars.ContextVar[str] = contextvars.ContextVar("supershift_mode", default=EXACT)

Scalar = Union[Fraction, float, complex]


class ModeError(TypeError):
    """A value or operation is not admissible in the current arithmetic mode."""


class SupportError(ValueError):
    """Raised for ``min_support``/``max_support`` of the zero vector."""


def get_mode() -> str:
    return _mode.get()


def set_mode(mode: str) -> None:
    if mode not in (EXACT, FLOAT):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    _mode.set(mode)


@contextlib.contextmanager
def arithmetic(mode: str):
    """Temporarily switch the arithmetic mode::

        with arithmetic("float"):
            ...
    """
    if mode not in (EXACT, FLOAT):
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    token = _mode.set(mode)
    try:
        yield
    finally:
        _mode.reset(token)


def to_scalar(value) -> Scalar:
    """Coerce ``value`` into the scalar type of the current mode.

    Exact mode accepts integers, ``Fraction`` and rational strings such as
    ``"3/7"``; binary floats are refused so that no rounded value can leak
    into an exact computation.
    """
    if get_mode() == EXACT:
        if isinstance(value, bool):
            raise ModeError("booleans are not scalars")
        if isinstance(value, (int, Rational)):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
        raise ModeError(
            f"{type(value).__name__} value {value!r} is not admissible in exact mode"
        )
    if isinstance(value, complex):
        return value if value.imag else value.real
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def is_zero(value) -> bool:
    return value == 0


@dataclass(frozen=True)
class LogMagnitude:
    """``sign * exp(log_abs)``; used wherever magnitudes over/underflow doubles."""

    sign: int
    log_abs: float

    @classmethod
    def of(cls, value) -> "LogMagnitude":
        if value == 0:
            return cls(0, -math.inf)
        if isinstance(value, Fraction):
            # math.log is exact enough on arbitrarily large ints
            log_abs = math.log(abs(value.numerator)) - math.log(value.denominator)
            return cls(1 if value > 0 else -1, log_abs)
        if isinstance(value, complex):
            return cls(1, math.log(abs(value)))
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def from_log(cls, log_abs: float, sign: int = 1) -> "LogMagnitude":
        return cls(sign, log_abs)

    def __mul__(self, other: "LogMagnitude") -> "LogMagnitude":
        if not self.sign or not other.sign:
            return LogMagnitude(0, -math.inf)
        return LogMagnitude(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogMagnitude") -> "LogMagnitude":
        if not other.sign:
            raise ZeroDivisionError("division by a zero LogMagnitude")
        if not self.sign:
            return self
        return LogMagnitude(self.sign * other.sign, self.log_abs - other.log_abs)

    def __pow__(self, k: int) -> "LogMagnitude":
        if k == 0:
            return LogMagnitude(1, 0.0)
        if not self.sign:
            return self
        return LogMagnitude(self.sign**k, k * self.log_abs)

    def __abs__(self) -> "LogMagnitude":
        return LogMagnitude(abs(self.sign), self.log_abs)

    def value(self) -> float:
        """Back to a double; may overflow to ``inf`` or underflow to ``0``."""
        if not self.sign:
            return 0.0
        try:
            return self.sign * math.exp(self.log_abs)
        except OverflowError:
            return self.sign * math.inf


def _index(entry):
    return entry[0]


def _canonical(entries: Iterable[tuple[int, object]]) -> tuple[tuple[int, Scalar], ...]:
    acc: dict[int, Scalar] = {}
    for n, c in entries:
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError(f"basis indices are integers >= 1, got {n!r}")
        c = to_scalar(c)
        acc[n] = acc[n] + c if n in acc else c
    return tuple(sorted(((n, c) for n, c in acc.items() if c != 0), key=_index))


@dataclass(frozen=True, init=False)
class SparseVec:
    """A finitely supported vector ``sum_n c_n e_n`` of ``X_inf``.

    Entries are kept sorted by index with zero coefficients dropped; the empty
    vector is zero.  Instances are immutable and hashable.
    """

    entries: tuple[tuple[int, Scalar], ...]

    def __init__(self, entries: Union[Mapping[int, object], Iterable[tuple[int, object]]] = ()):
        if isinstance(entries, SparseVec):
            entries = entries.entries
        elif isinstance(entries, Mapping):
            entries = entries.items()
        object.__setattr__(self, "entries", _canonical(entries))

    @classmethod
    def _trusted(cls, entries: Iterable[tuple[int, Scalar]]) -> "SparseVec":
        # caller guarantees scalar types of the current mode
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", tuple(sorted(((n, c) for n, c in entries if c != 0), key=_index)))
        return obj

    @classmethod
    def from_dense(cls, coeffs: Iterable[object], start: int = 1) -> "SparseVec":
        """``from_dense([a, b, c])`` is ``a e_1 + b e_2 + c e_3``."""
        return cls((start + i, c) for i, c in enumerate(coeffs))

    def __iter__(self) -> Iterator[tuple[int, Scalar]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __repr__(self) -> str:
        if not self.entries:
            return "SparseVec(0)"
        terms = " + ".join(f"({c})e{n}" for n, c in self.entries)
        return f"SparseVec({terms})"

    def as_dict(self) -> dict[int, Scalar]:
        return dict(self.entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.entries)

    def coeff(self, n: int) -> Scalar:
        if n < 1:
            raise ValueError("basis indices start at 1")
        for m, c in self.entries:
            if m == n:
                return c
            if m > n:
                break
        return to_scalar(0)

    def min_support(self) -> int:
        if not self.entries:
            raise SupportError("undefined support extremum: zero vector")
        return self.entries[0][0]

    def max_support(self) -> int:
        if not self.entries:
            raise SupportError("undefined support extremum: zero vector")
        return self.entries[-1][0]

    def norm1(self):
        return sum((abs(c) for _, c in self.entries), to_scalar(0))

    def dense(self, length: int | None = None) -> list[Scalar]:
        """Coefficients of ``e_1 .. e_length`` (default: up to the support max)."""
        if length is None:
            length = self.entries[-1][0] if self.entries else 0
        out = [to_scalar(0)] * length
        for n, c in self.entries:
            if n <= length:
                out[n - 1] = c
        return out

    def truncate_below(self, k: int) -> "SparseVec":
        """Drop every coordinate with index < k."""
        return SparseVec._trusted((n, c) for n, c in self.entries if n >= k)

    def __neg__(self) -> "SparseVec":
        return SparseVec._trusted((n, -c) for n, c in self.entries)

    def __add__(self, other: "SparseVec") -> "SparseVec":
        if not isinstance(other, SparseVec):
            return NotImplemented
        acc = dict(self.entries)
        for n, c in other.entries:
            acc[n] = acc[n] + c if n in acc else c
        return SparseVec._trusted(acc.items())

    def __sub__(self, other: "SparseVec") -> "SparseVec":
        if not isinstance(other, SparseVec):
            return NotImplemented
        return self + (-other)

    def __mul__(self, t) -> "SparseVec":
        if isinstance(t, SparseVec):
            return NotImplemented
        t = to_scalar(t)
        if t == 0:
            return SparseVec._trusted(())
        return SparseVec._trusted((n, t * c) for n, c in self.entries)

    __rmul__ = __mul__

    def __truediv__(self, t) -> "SparseVec":
        t = to_scalar(t)
        return SparseVec._trusted((n, c / t) for n, c in self.entries)

    def to_json(self) -> list:
        """``[[n, num, den], ...]`` in exact mode, ``[[n, value], ...]`` in float mode."""
        out = []
        for n, c in self.entries:
            if isinstance(c, Fraction):
                out.append([n, c.numerator, c.denominator])
            elif isinstance(c, complex):
                out.append([n, [c.real, c.imag]])
            else:
                out.append([n, c])
        return out

    @classmethod
    def from_json(cls, data: list) -> "SparseVec":
        entries = []
        last = 0
        for item in data:
            if len(item) == 3:
                n, num, den = item
                if not all(isinstance(v, int) and not isinstance(v, bool) for v in (num, den)):
                    raise ValueError(f"exact triple needs integer numerator/denominator: {item!r}")
                value = Fraction(num, den)
                if get_mode() == FLOAT:
                    value = float(value)
            elif len(item) == 2:
                n, raw = item
                if isinstance(raw, list):
                    value = complex(raw[0], raw[1])
                else:
                    value = raw
            else:
                raise ValueError(f"malformed SparseVec entry {item!r}")
            if not isinstance(n, int) or n <= last:
                raise ValueError("SparseVec indices must be ascending integers >= 1")
            last = n
            entries.append((n, value))
        return cls(entries)


def basis(n: int) -> SparseVec:
    """The basis vector ``e_n``."""
    return SparseVec(((n, 1),))


def coeff(x: SparseVec, n: int) -> Scalar:
    return x.coeff(n)


def min_support(x: SparseVec) -> int:
    return x.min_support()


def max_support(x: SparseVec) -> int:
    return x.max_support()


def norm1(x: SparseVec):
    return x.norm1()


@dataclass(frozen=True)
class BiorthSystem:
    """The canonical system ``(e_n, e_n^*)`` of ``l1``.

    ``c_x`` is the uniform bound on the functionals.  It is 1 for the
    canonical system; a larger value may be supplied when evaluating bound
    formulas for a general space, but no other space is instantiated.
    """

    space: str = "l1"
    c_x: float = 1.0

    def __post_init__(self):
        if self.c_x < 1:
            raise ValueError("C_X >= 1 for any normalized biorthogonal system")

    def vector(self, n: int) -> SparseVec:
        return basis(n)

    def functional(self, n: int, x: SparseVec) -> Scalar:
        return x.coeff(n)


class WeightSeq:
    """Positive weight sequence ``w_1, w_2, ...`` driving ``B_w``."""

    name = "abstract"

    def w(self, n: int) -> Scalar:
        raise NotImplementedError

    def log_w(self, n: int) -> float:
        raise NotImplementedError

    def prod(self, a: int, b: int) -> Scalar:
        """``prod_{i=a}^{b} w_i``; the empty product (a > b) is 1."""
        raise NotImplementedError

    def log_prod(self, a: int, b: int) -> float:
        raise NotImplementedError

    @property
    def total_sum(self):
        raise NotImplementedError

    def tail_sum(self, n: int):
        """``sum_{i>n} w_i``."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantOne(WeightSeq):
    """``w_n = 1``: the plain backward shift of ``l1``.

    Not summable, which is sanctioned only for the unweighted ``l1`` setting.
    """

    name = "constant_one"

    def w(self, n: int) -> Scalar:
        return to_scalar(1)

    def log_w(self, n: int) -> float:
        return 0.0

    def prod(self, a: int, b: int) -> Scalar:
        return to_scalar(1)

    def log_prod(self, a: int, b: int) -> float:
        return 0.0

    @property
    def total_sum(self):
        return math.inf

    def tail_sum(self, n: int):
        return math.inf

    def to_json(self) -> dict:
        return {"variant": "constant_one"}


@dataclass(frozen=True)
class Geometric(WeightSeq):
    """``w_n = c * r**n`` with ``0 < r < 1``.

    Construction enforces ``sum_n w_n = c r / (1 - r) <= 1 / c_x`` so that
    ``||B_w|| <= 1``.
    """

    c: Scalar
    r: Scalar
    c_x: Scalar = 1
    _log_c: float = field(init=False, repr=False, compare=False)
    _log_r: float = field(init=False, repr=False, compare=False)

    name = "geometric"

    def __post_init__(self):
        c, r, cx = to_scalar(self.c), to_scalar(self.r), to_scalar(self.c_x)
        if isinstance(c, complex) or isinstance(r, complex):
            raise ValueError("weights are positive reals")
        if not c > 0:
            raise ValueError("geometric weights need c > 0")
        if not 0 < r < 1:
            raise ValueError("geometric weights need 0 < r < 1")
        if cx < 1:
            raise ValueError("C_X >= 1")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c_x", cx)
        if self.total_sum > 1 / cx:
            raise ValueError(
                f"weights not admissible: sum w_n = {self.total_sum} exceeds 1/C_X = {1 / cx}"
            )
        object.__setattr__(self, "_log_c", LogMagnitude.of(c).log_abs)
        object.__setattr__(self, "_log_r", LogMagnitude.of(r).log_abs)

    def w(self, n: int) -> Scalar:
        return self.c * self.r**n

    def log_w(self, n: int) -> float:
        return self._log_c + n * self._log_r

    def prod(self, a: int, b: int) -> Scalar:
        if a > b:
            return to_scalar(1)
        count = b - a + 1
        return self.c**count * self.r ** ((a + b) * count // 2)

    def log_prod(self, a: int, b: int) -> float:
        if a > b:
            return 0.0
        count = b - a + 1
        return count * self._log_c + ((a + b) * count // 2) * self._log_r

    @property
    def total_sum(self):
        return self.c * self.r / (1 - self.r)

    def tail_sum(self, n: int):
        return self.c * self.r ** (n + 1) / (1 - self.r)

    def to_json(self) -> dict:
        return {"variant": "geometric", "c": _scalar_json(self.c), "r": _scalar_json(self.r)}


def _scalar_json(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    return value


def weights_from_json(data: Mapping | None) -> WeightSeq:
    if not data or data.get("variant", "constant_one") == "constant_one":
        return ConstantOne()
    if data["variant"] == "geometric":
        return Geometric(data["c"], data["r"])
    raise ValueError(f"unknown weight variant {data['variant']!r}")


def weight_prod(w: WeightSeq, a: int, b: int) -> Scalar:
    return w.prod(a, b)


def random_vector(
    rng: random.Random,
    max_index: int,
    height: int = 9,
    density: float = 0.6,
    min_index: int = 1,
) -> SparseVec:
    """Nonzero vector supported in ``[min_index, max_index]``.

    Coefficients are rationals ``p/q`` with ``|p|, q <= height`` (floats of
    the same values in float mode).
    """
    while True:
        entries = []
        for n in range(min_index, max_index + 1):
            if rng.random() < density:
                p = rng.randint(-height, height)
                q = rng.randint(1, height)
                if p:
                    entries.append((n, _mode_value(Fraction(p, q))))
        if entries:
            return SparseVec(entries)


def _mode_value(q: Fraction) -> Scalar:
    return q if get_mode() == EXACT else float(q)
