"""Hereditary families of finite sets and the space ``h_K`` they define."""
from __future__ import annotations

import itertools
import math
from functools import cached_property
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ..core import Functional, PolyrenormError, SparseVector

MEMBER_CAP = 2 ** 16


@dataclass(frozen=True)
class HereditaryFamily:
    """Downward-closed family of subsets of ``{1..window}``.

    Members are stored in lexicographic order of their sorted tuples; every
    singleton of the window must be present, otherwise ``||.||_K`` is only a
    seminorm on the window.
    """

    window: int
    members: tuple[frozenset[int], ...]
    name: str = "explicit"
    _incidence: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.window < 1:
            raise PolyrenormError("window must be >= 1")
        mem = {frozenset(int(k) for k in a) for a in self.members}
        mem.add(frozenset())
        if len(mem) > MEMBER_CAP:
            raise PolyrenormError(f"family has more than {MEMBER_CAP} members")
        for a in mem:
            if a and (min(a) < 1 or max(a) > self.window):
                raise PolyrenormError(f"member {sorted(a)} leaves the window 1..{self.window}")
        for a in mem:
            for k in a:
                if a - {k} not in mem:
                    raise PolyrenormError(
                        f"family is not hereditary: {sorted(a)} is a member but {sorted(a - {k})} is not")
        missing = [k for k in range(1, self.window + 1) if frozenset({k}) not in mem]
        if missing:
            raise PolyrenormError(f"singletons {missing} missing: the family does not cover the window")
        ordered = tuple(sorted(mem, key=lambda a: tuple(sorted(a))))
        object.__setattr__(self, "members", ordered)
        inc = np.zeros((len(ordered), self.window))
        for i, a in enumerate(ordered):
            for k in a:
                inc[i, k - 1] = 1.0
        inc.setflags(write=False)
        object.__setattr__(self, "_incidence", inc)

    @classmethod
    def from_sets(cls, window: int, sets, name: str = "explicit") -> "HereditaryFamily":
        return cls(window=window, members=tuple(frozenset(s) for s in sets), name=name)

    @classmethod
    def downward_closure(cls, window: int, sets, name: str = "closure") -> "HereditaryFamily":
        mem = set()
        for s in sets:
            s = tuple(sorted(s))
            for r in range(len(s) + 1):
                mem.update(frozenset(c) for c in itertools.combinations(s, r))
        mem.update(frozenset({k}) for k in range(1, window + 1))
        return cls(window=window, members=tuple(mem), name=name)

    @property
    def incidence(self) -> np.ndarray:
        return self._incidence

    def maximal_members(self) -> tuple[frozenset[int], ...]:
        return self._maximal

    @cached_property
    def _maximal(self) -> tuple[frozenset[int], ...]:
        mem = set(self.members)
        return tuple(a for a in self.members
                     if not any(a | {k} in mem for k in range(1, self.window + 1) if k not in a))

    @cached_property
    def maximal_incidence(self) -> np.ndarray:
        out = np.zeros((len(self._maximal), self.window))
        for i, a in enumerate(self._maximal):
            for k in a:
                out[i, k - 1] = 1.0
        return out

    def __len__(self) -> int:
        return len(self.members)


def schreier_family(window: int) -> HereditaryFamily:
    """All ``A ⊆ {1..window}`` with ``|A| <= min A`` (plus the empty set)."""
    mem = [frozenset()]
    for m in range(1, window + 1):
        rest = range(m + 1, window + 1)
        for r in range(0, m):
            mem.extend(frozenset((m,) + c) for c in itertools.combinations(rest, r))
    return HereditaryFamily(window=window, members=tuple(mem), name="schreier")


def singletons_family(window: int) -> HereditaryFamily:
    return HereditaryFamily(window=window, members=tuple(frozenset({k}) for k in range(1, window + 1)),
                            name="singletons")


def _abs_dense(family: HereditaryFamily, x: SparseVector) -> np.ndarray:
    return np.abs(x.dense(family.window))


def hk_norm_with_member(family: HereditaryFamily, x: SparseVector) -> tuple[float, frozenset[int]]:
    """``max_A sum_{k in A} |x_k|`` and the lexicographically least maximiser."""
    sums = family.incidence @ _abs_dense(family, x)
    i = int(np.argmax(sums))
    a = family.members[i]
    # recompute the winner exactly so the value matches the pairing with its indicator
    return math.fsum(abs(x[k]) for k in a), a


def hk_norm(family: HereditaryFamily, x: SparseVector) -> float:
    return hk_norm_with_member(family, x)[0]


def signed_indicator(a, x: SparseVector | None = None, signs=None) -> Functional:
    if x is not None:
        return Functional((k, math.copysign(1.0, x[k])) for k in a if x[k] != 0.0)
    if signs is None:
        return Functional((k, 1.0) for k in a)
    return Functional(zip(sorted(a), signs))


def hk_norming_functional(family: HereditaryFamily, x: SparseVector) -> Functional:
    if not x:
        raise PolyrenormError("norming functional of the zero vector is undefined")
    _, a = hk_norm_with_member(family, x)
    return signed_indicator(a, x)


def hk_dual_norm(family: HereditaryFamily, f: SparseVector) -> float:
    """Exact dual norm ``max{f(x) : ||x||_K <= 1}`` as a linear programme.

    By 1-unconditionality the maximiser can be taken with ``sign(x) = sign(f)``,
    leaving ``max sum |f_k| y_k`` over ``y >= 0`` with ``sum_{k in A} y_k <= 1``
    for every maximal member ``A``.
    """
    if not f:
        return 0.0
    w = np.abs(f.dense(family.window))
    A = family.maximal_incidence
    res = linprog(-w, A_ub=A, b_ub=np.ones(A.shape[0]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise PolyrenormError(f"dual norm LP failed: {res.message}")
    return float(-res.fun)


def hk_dual_bounds(family: HereditaryFamily, f: SparseVector) -> tuple[float, float]:
    """Cheap bounds ``max|f_k| <= ||f||_* <= sum|f_k|`` (unit vectors have norm 1)."""
    vals = [abs(v) for _, v in f.items]
    if not vals:
        return 0.0, 0.0
    return max(vals), math.fsum(vals)


@dataclass(frozen=True)
class CKImage:
    values: dict[frozenset[int], float]
    sup: float
    distortion: float | None


def hk_to_ck(family: HereditaryFamily, x: SparseVector) -> CKImage:
    """The function ``A -> sum_{k in A} x_k`` on the family, its sup and ``||x||_K / sup``."""
    sums = family.incidence @ x.dense(family.window)
    values = {a: float(s) for a, s in zip(family.members, sums)}
    sup = float(np.max(np.abs(sums)))
    norm = hk_norm(family, x)
    return CKImage(values=values, sup=sup, distortion=None if sup == 0 else norm / sup)


@dataclass(frozen=True)
class Stratum:
    cardinality: int
    members: tuple[frozenset[int], ...]

    def witness(self, a: frozenset[int]) -> dict[int, bool]:
        """Membership pattern on ``a`` isolating ``a`` inside this stratum.

        A member ``B`` of the same cardinality with ``k in B`` for every
        ``k in a`` must equal ``a``, so the pointwise-open set it defines
        meets the stratum only in ``a``.
        """
        if a not in self.members:
            raise PolyrenormError("set is not in this stratum")
        return {k: True for k in sorted(a)}


def strata(family: HereditaryFamily) -> list[Stratum]:
    by_card: dict[int, list[frozenset[int]]] = {}
    for a in family.members:
        by_card.setdefault(len(a), []).append(a)
    return [Stratum(cardinality=c, members=tuple(by_card[c])) for c in sorted(by_card)]


def isolates(stratum: Stratum, a: frozenset[int]) -> bool:
    """Whether the witness pattern of ``a`` singles it out within the stratum."""
    pattern = stratum.witness(a)
    hits = [b for b in stratum.members if all((k in b) == want for k, want in pattern.items())]
    return hits == [a]


def extreme_signed_indicators(family: HereditaryFamily) -> list[Functional]:
    """All signed indicators of non-empty members: a finite boundary of ``h_K``."""
    out = []
    for a in family.members:
        if not a:
            continue
        for signs in itertools.product((1.0, -1.0), repeat=len(a)):
            out.append(signed_indicator(a, signs=signs))
    return out
