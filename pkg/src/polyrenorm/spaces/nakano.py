"""Nakano-type modular with block-dependent exponents over a covering family."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..core import PolyrenormError, SparseVector


@dataclass(frozen=True)
class NakanoDescriptor:
    """Covering family ``A_0..A_{N-1}`` with exponents ``p_0 <= p_1 <= ...``.

    The window is ``1..max(union A_n)`` and must be fully covered.
    """

    families: tuple[frozenset[int], ...]
    exponents: tuple[float, ...]
    _pmin: dict = field(init=False, repr=False, compare=False)
    _pmax: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fams = tuple(frozenset(int(k) for k in a) for a in self.families)
        ps = tuple(float(p) for p in self.exponents)
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "exponents", ps)
        if len(fams) != len(ps) or not fams:
            raise PolyrenormError("families and exponents must be non-empty and of equal length")
        if any(p < 1 for p in ps):
            raise PolyrenormError("exponents must be >= 1")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise PolyrenormError("exponents must be nondecreasing")
        cover = set().union(*fams)
        if not cover or min(cover) < 1:
            raise PolyrenormError("families must cover a window of positive coordinates")
        d = max(cover)
        missing = set(range(1, d + 1)) - cover
        if missing:
            raise PolyrenormError(f"uncovered coordinate(s) {sorted(missing)} inside the window")
        pmin: dict[int, float] = {}
        pmax: dict[int, float] = {}
        for a, p in zip(fams, ps):
            for k in a:
                pmin[k] = min(pmin.get(k, p), p)
                pmax[k] = max(pmax.get(k, p), p)
        object.__setattr__(self, "_pmin", pmin)
        object.__setattr__(self, "_pmax", pmax)

    @property
    def window(self) -> int:
        return max(self._pmin)

    def exponent_bounds(self, k: int) -> tuple[float, float]:
        if k not in self._pmin:
            raise PolyrenormError(f"uncovered coordinate {k}")
        return self._pmin[k], self._pmax[k]

    def active_exponent(self, k: int, t: float) -> float:
        lo, hi = self.exponent_bounds(k)
        return lo if abs(t) <= 1.0 else hi

    def arrays(self, x: SparseVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(|x_k|, pmin_k, pmax_k)`` over ``supp(x)``."""
        ks = [k for k, _ in x.items]
        bounds = [self.exponent_bounds(k) for k in ks]
        return (np.abs(np.array([v for _, v in x.items], dtype=float)),
                np.array([b[0] for b in bounds], dtype=float),
                np.array([b[1] for b in bounds], dtype=float))


def nakano_modular(desc: NakanoDescriptor, x: SparseVector) -> float:
    """Sup over pairwise-disjoint ``B_n ⊆ A_n`` of ``sum_n sum_{k in B_n} |x_k|^{p_n}``.

    Disjointness only stops a coordinate being counted twice, so every
    coordinate picks its best exponent independently: the smallest one
    covering it when ``|x_k| <= 1``, the largest otherwise.
    """
    terms = []
    for k, v in x.items:
        t = abs(v)
        terms.append(t ** desc.active_exponent(k, t))
    return math.fsum(terms)


def nakano_scaled_modular(desc: NakanoDescriptor, x: SparseVector):
    """Vectorised ``lam -> nakano_modular(desc, x / lam)`` for the norm solver."""
    a, pmin, pmax = desc.arrays(x)

    def phi(lam: float) -> float:
        t = a / lam
        return float(np.where(t <= 1.0, t ** pmin, t ** pmax).sum())

    return phi


def nakano_gradient(desc: NakanoDescriptor, y: SparseVector) -> SparseVector:
    """A subgradient of the modular at ``y`` (active exponent per coordinate)."""
    out = []
    for k, v in y.items:
        t = abs(v)
        p = desc.active_exponent(k, t)
        out.append((k, math.copysign(p * t ** (p - 1.0), v)))
    return SparseVector(out)


def nakano_modular_bruteforce(desc: NakanoDescriptor, x: SparseVector) -> float:
    """Reference value by enumerating every disjoint choice ``(B_0, ..., B_{N-1})``.

    A disjoint choice is the same thing as sending each support coordinate
    to one family containing it or to none.
    """
    options = []
    for k, v in x.items:
        owners = [n for n, a in enumerate(desc.families) if k in a]
        if not owners:
            raise PolyrenormError(f"uncovered coordinate {k}")
        options.append([abs(v) ** desc.exponents[n] for n in owners] + [0.0])
    best = 0.0
    for choice in itertools.product(*options):
        best = max(best, math.fsum(choice))
    return best
