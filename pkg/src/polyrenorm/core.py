"""Finite-support vectors and functionals.

Everything in the package is built on two small immutable types: a
:class:`SparseVector` (a point of a sequence space with finitely many
non-zero coordinates) and a :class:`Functional` (a finitely supported
element of the dual, optionally tagged with the index of the piece it was
drawn from).  Coordinates are 1-based positive integers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class PolyrenormError(ValueError):
    """Base class for domain errors raised by the package."""


@dataclass(frozen=True)
class ToleranceConfig:
    eq_tol: float = 1e-8
    bisect_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not (self.eq_tol > 0 and self.bisect_tol > 0):
            raise PolyrenormError("tolerances must be strictly positive")
        if self.eq_tol < self.bisect_tol:
            raise PolyrenormError("eq_tol must be >= bisect_tol")


DEFAULT_TOL = ToleranceConfig()


def _clean(entries: Mapping[int, float] | Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    items = entries.items() if isinstance(entries, Mapping) else entries
    out: dict[int, float] = {}
    for k, v in items:
        k = int(k)
        if k < 1:
            raise PolyrenormError(f"coordinate index must be >= 1, got {k}")
        v = float(v)
        if not math.isfinite(v):
            raise PolyrenormError(f"non-finite value at coordinate {k}")
        if v != 0.0:
            out[k] = out.get(k, 0.0) + v
            if out[k] == 0.0:
                del out[k]
    return tuple(sorted(out.items()))


class SparseVector:
    """Immutable finitely supported real sequence.

    Zero values are never stored, so ``support`` is exactly the key set.
    Equality and hashing compare entries exactly.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        self._items = _clean(entries)
        self._hash = hash(self._items)

    @classmethod
    def basis(cls, k: int, value: float = 1.0):
        return cls({k: value})

    @classmethod
    def from_dense(cls, values: Iterable[float], start: int = 1):
        return cls((i, v) for i, v in enumerate(values, start=start))

    @property
    def items(self) -> tuple[tuple[int, float], ...]:
        return self._items

    @property
    def entries(self) -> dict[int, float]:
        return dict(self._items)

    def __getitem__(self, k: int) -> float:
        for i, v in self._items:
            if i == k:
                return v
        return 0.0

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def support(self) -> frozenset[int]:
        return frozenset(k for k, _ in self._items)

    def max_index(self) -> int:
        return self._items[-1][0] if self._items else 0

    def dense(self, dim: int):
        import numpy as np

        out = np.zeros(dim)
        for k, v in self._items:
            if k > dim:
                raise PolyrenormError(f"coordinate {k} outside window {dim}")
            out[k - 1] = v
        return out

    def _combine(self, other, sign: float):
        acc = dict(self._items)
        for k, v in other._items:
            acc[k] = acc.get(k, 0.0) + sign * v
        return type(self)(acc)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar: float):
        return type(self)((k, scalar * v) for k, v in self._items)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return type(self)((k, v / scalar) for k, v in self._items)

    def __neg__(self):
        return self * -1.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"{type(self).__name__}({dict(self._items)!r})"

    # serialization -----------------------------------------------------

    def to_text(self) -> str:
        return ",".join(f"{k}:{v!r}" for k, v in self._items)

    def to_json(self) -> dict[str, float]:
        return {str(k): v for k, v in self._items}

    @classmethod
    def from_text(cls, text: str):
        text = text.strip()
        if not text:
            return cls()
        pairs = []
        for chunk in text.split(","):
            try:
                k, v = chunk.split(":")
                pairs.append((int(k), float(v)))
            except ValueError as exc:
                raise PolyrenormError(f"malformed sparse entry {chunk!r}") from exc
        return cls(pairs)

    @classmethod
    def from_json(cls, obj: Mapping[str, float] | str):
        if isinstance(obj, str):
            return cls.from_text(obj)
        return cls((int(k), float(v)) for k, v in obj.items())


class Functional(SparseVector):
    """Finitely supported dual element with an optional piece tag.

    The tag does not take part in equality or hashing, so disjointness of
    pieces is decided on entries alone.
    """

    __slots__ = ("piece_tag",)

    def __init__(self, entries=(), piece_tag: int | None = None):
        super().__init__(entries)
        if piece_tag is not None and piece_tag < 0:
            raise PolyrenormError("piece_tag must be non-negative")
        self.piece_tag = piece_tag

    def tagged(self, piece_tag: int | None) -> "Functional":
        return Functional(self._items, piece_tag=piece_tag)

    def __mul__(self, scalar: float):
        return Functional(((k, scalar * v) for k, v in self._items), piece_tag=self.piece_tag)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        tag = "" if self.piece_tag is None else f", piece_tag={self.piece_tag}"
        return f"Functional({dict(self._items)!r}{tag})"

    def sort_key(self) -> str:
        return json.dumps(self._items)


def evaluate(f: SparseVector, x: SparseVector) -> float:
    """Pairing ``f(x)``: the sum over the common support."""
    if len(f) > len(x):
        f, x = x, f
    xe = dict(x.items)
    return math.fsum(v * xe[k] for k, v in f.items if k in xe)


def support(x: SparseVector) -> frozenset[int]:
    return x.support()


def rearrangement_map(x: SparseVector) -> list[int]:
    """Coordinates of ``supp(x)`` ordered by non-increasing ``|x_k|``.

    Ties go to the smaller coordinate index.
    """
    return [k for k, _ in sorted(x.items, key=lambda kv: (-abs(kv[1]), kv[0]))]


def head_set(x: SparseVector, n: int) -> frozenset[int]:
    if n < 0:
        raise PolyrenormError("n must be >= 0")
    return frozenset(rearrangement_map(x)[:n])


def project(x: SparseVector, coords: Iterable[int]) -> SparseVector:
    keep = set(coords)
    return type(x)((k, v) for k, v in x.items if k in keep)


def head(x: SparseVector, m: int) -> SparseVector:
    """Initial projection onto coordinates ``1..m``."""
    return type(x)((k, v) for k, v in x.items if k <= m)


def tail(x: SparseVector, m: int) -> SparseVector:
    """Tail ``x - head(x, m)``."""
    return type(x)((k, v) for k, v in x.items if k > m)


def linear_combination(coeffs: Iterable[float], vectors: Iterable[SparseVector]) -> SparseVector:
    acc: dict[int, float] = {}
    for c, v in zip(coeffs, vectors):
        for k, val in v.items:
            acc[k] = acc.get(k, 0.0) + c * val
    return SparseVector(acc)
