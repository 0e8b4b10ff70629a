"""Perturbed boundaries ``D = {psi(f) f : f in B}`` built from disjoint pieces and nets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import DEFAULT_TOL, Functional, PolyrenormError, SparseVector, ToleranceConfig, evaluate


def cantor_pair(i: int, j: int) -> int:
    return (i + j) * (i + j + 1) // 2 + j


@dataclass(frozen=True)
class PieceDecomposition:
    """Disjoint pieces ``L_0..L_{N-1}`` with declared closure memberships.

    ``annotations[f]`` lists extra piece indices whose closure contains
    ``f``; genuine w*-closures are trivial for finite sets, so these are
    only ever declared.  ``sources[n]`` is the ``(i, j)`` pair piece ``n``
    came from.
    """

    pieces: tuple[tuple[Functional, ...], ...]
    annotations: Mapping[Functional, frozenset[int]] = field(default_factory=dict)
    sources: tuple[tuple[int, int], ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[Functional, int] = {}
        for n, piece in enumerate(self.pieces):
            for f in piece:
                if f in index:
                    raise PolyrenormError(f"pieces {index[f]} and {n} are not disjoint")
                index[f] = n
        for f, ids in self.annotations.items():
            if any(i < 0 or i >= len(self.pieces) for i in ids):
                raise PolyrenormError("annotation refers to a missing piece")
        object.__setattr__(self, "annotations", {Functional(f): frozenset(v) for f, v in self.annotations.items()})
        object.__setattr__(self, "_index", index)

    def piece_of(self, f: Functional) -> int | None:
        return self._index.get(f)

    def annotate(self, extra: Mapping[Functional, Iterable[int]]) -> "PieceDecomposition":
        ann = {f: set(v) for f, v in self.annotations.items()}
        for f, ids in extra.items():
            ann.setdefault(Functional(f), set()).update(ids)
        return PieceDecomposition(self.pieces, {f: frozenset(v) for f, v in ann.items()}, self.sources)

    def members(self) -> Iterable[tuple[int, Functional]]:
        for n, piece in enumerate(self.pieces):
            for f in piece:
                yield n, f

    def check_dual_ball(self, dual_norm: Callable[[Functional], float],
                        tol: ToleranceConfig = DEFAULT_TOL) -> float:
        worst = max((dual_norm(f) for _, f in self.members()), default=0.0)
        if worst > 1 + tol.eq_tol:
            raise PolyrenormError(f"decomposition leaves the dual ball (dual norm {worst})")
        return worst


def _ordered(fs: Iterable[Functional]) -> tuple[Functional, ...]:
    return tuple(sorted({Functional(f) for f in fs}, key=Functional.sort_key))


def disjointify(E_list: Sequence) -> PieceDecomposition:
    """Turn covering sets into disjoint pieces.

    ``E_list`` is either a list of finite sets ``E_i`` or a list of
    filtrations ``[H_{i,0}, H_{i,1}, ...]`` (increasing lists of sets).
    Pieces are ``H_{i,j}`` minus everything already placed, taken in
    increasing Cantor order ``pi(i, j)`` and re-indexed consecutively;
    empty pieces are kept.  Members are sorted by serialised form.
    """
    pairs: dict[tuple[int, int], list[Functional]] = {}
    for i, e in enumerate(E_list):
        if e and all(isinstance(s, (list, tuple, set, frozenset)) for s in e):
            for j, h in enumerate(e):
                pairs[(i, j)] = list(h)
        else:
            pairs[(i, 0)] = list(e)
    placed: set[Functional] = set()
    pieces, sources = [], []
    for (i, j) in sorted(pairs, key=lambda p: cantor_pair(*p)):
        fresh = [f for f in _ordered(pairs[(i, j)]) if f not in placed]
        placed.update(fresh)
        pieces.append(tuple(fresh))
        sources.append((i, j))
    return PieceDecomposition(tuple(pieces), {}, tuple(sources))


# psi and eps ------------------------------------------------------------


def _frac(v: float) -> Fraction:
    return Fraction(v)


def epsilon_schedule_exact(eps: float, n: int) -> Fraction:
    if not eps > 0 or n < 0:
        raise PolyrenormError("need eps > 0 and n >= 0")
    return _frac(eps) / (160 * 4 ** n)


def epsilon_schedule(eps: float, n: int) -> float:
    """``eps * 4^-n / 160``, correctly rounded."""
    return float(epsilon_schedule_exact(eps, n))


def psi_exact(eps: float, I: Iterable[int], n: int) -> Fraction:
    I = frozenset(I)
    if not eps > 0:
        raise PolyrenormError("eps must be positive")
    if not I or n != min(I) or n < 0:
        raise PolyrenormError("n must equal min I")
    s = sum(Fraction(1, 2 ** i) for i in I)
    return 1 + Fraction(1, 2) * _frac(eps) * Fraction(1, 2 ** n) * (1 + s / 4)


def psi(eps: float, I: Iterable[int], n: int) -> float:
    """``1 + eps/2 * 2^-n (1 + 1/4 sum_{i in I} 2^-i)``, correctly rounded."""
    return float(psi_exact(eps, I, n))


@dataclass(frozen=True)
class PsiAssignment:
    I: frozenset[int]
    n: int
    psi: float


def membership_index(decomp: PieceDecomposition, f: Functional) -> tuple[frozenset[int], int]:
    f = Functional(f)
    own = decomp.piece_of(f)
    ann = decomp.annotations.get(f, frozenset())
    I = ann | ({own} if own is not None else set())
    if not I:
        raise PolyrenormError("functional outside decomposition")
    return frozenset(I), min(I)


def assign_psi(decomp: PieceDecomposition, eps: float, f: Functional) -> PsiAssignment:
    I, n = membership_index(decomp, f)
    return PsiAssignment(I, n, psi(eps, I, n))


# nets -------------------------------------------------------------------

DualNorm = Callable[[SparseVector], float]
DualBounds = Callable[[SparseVector], tuple[float, float]]


@dataclass(frozen=True)
class NetFamily:
    nets: tuple[tuple[Functional, ...], ...]
    eps: tuple[float, ...]
    epsilon: float

    def sizes(self) -> list[int]:
        return [len(g) for g in self.nets]


def psi_cell(eps: float, I, n: int, piece: int) -> int:
    """Index of the half-open cell ``[1 + k eps_n, 1 + (k+1) eps_n)`` holding ``psi``."""
    return math.floor((psi_exact(eps, I, n) - 1) / epsilon_schedule_exact(eps, piece))


def _far(f: Functional, h: Functional, r: float, dual_norm: DualNorm, dual_bounds: DualBounds | None) -> bool:
    d = f - h
    if dual_bounds is not None:
        lo, hi = dual_bounds(d)
        if lo >= r:
            return True
        if hi < r:
            return False
    return dual_norm(d) >= r


def build_nets(decomp: PieceDecomposition, eps: float, dual_norm: DualNorm,
               dual_bounds: DualBounds | None = None) -> NetFamily:
    """Greedy maximal ``eps_n``-separated subsets inside each ``psi``-cell.

    Members are processed in stored (serialised) order and kept when at
    dual distance ``>= eps_n`` from every kept member of the same cell, so
    every member has a kept point within ``eps_n`` in norm and ``psi``.
    ``dual_bounds`` (cheap lower/upper bounds) short-circuits the exact
    ``dual_norm`` where it decides the comparison.
    """
    nets, eps_list = [], []
    for n, piece in enumerate(decomp.pieces):
        en = epsilon_schedule(eps, n)
        cells: dict[int, list[Functional]] = {}
        kept = []
        for f in piece:
            I, m = membership_index(decomp, f)
            cell = cells.setdefault(psi_cell(eps, I, m, n), [])
            if all(_far(f, h, en, dual_norm, dual_bounds) for h in cell):
                cell.append(f)
                kept.append(f)
        nets.append(tuple(kept))
        eps_list.append(en)
    return NetFamily(tuple(nets), tuple(eps_list), eps)


def net_covering_report(nets: NetFamily, decomp: PieceDecomposition, dual_norm: DualNorm) -> list[dict]:
    """Per member: the nearest net point's psi gap and norm distance against ``eps_n``."""
    rows = []
    for n, piece in enumerate(decomp.pieces):
        en = nets.eps[n]
        kept = set(nets.nets[n])
        for f in piece:
            pf = assign_psi(decomp, nets.epsilon, f).psi
            best = (0.0, 0.0) if f in kept else None
            for h in () if best else nets.nets[n]:
                dpsi = abs(pf - assign_psi(decomp, nets.epsilon, h).psi)
                if dpsi > en:
                    continue
                dist = 0.0 if h == f else dual_norm(f - h)
                if dist <= en and (best is None or dist < best[1]):
                    best = (dpsi, dist)
            rows.append({"n": n, "functional": f.to_text(), "covered": best is not None,
                         "psi_gap": None if best is None else best[0],
                         "distance": None if best is None else best[1], "eps_n": en})
    return rows


def net_separation_margin(nets: NetFamily, decomp: PieceDecomposition, dual_norm: DualNorm) -> float:
    """``min (||f - h|| - eps_n)`` over distinct net points sharing a cell (``inf`` if none)."""
    worst = math.inf
    for n, net in enumerate(nets.nets):
        cells: dict[int, list[Functional]] = {}
        for f in net:
            I, m = membership_index(decomp, f)
            cells.setdefault(psi_cell(nets.epsilon, I, m, n), []).append(f)
        for cell in cells.values():
            for i in range(len(cell)):
                for j in range(i + 1, len(cell)):
                    worst = min(worst, dual_norm(cell[i] - cell[j]) - nets.eps[n])
    return worst


# the new norm -----------------------------------------------------------


@dataclass(frozen=True)
class StarBoundary:
    """The finite boundary ``D = {psi(f) f}`` with a dense evaluation matrix."""

    functionals: tuple[Functional, ...]
    scales: tuple[float, ...]
    dim: int
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.zeros((len(self.functionals), self.dim))
        for i, f in enumerate(self.functionals):
            for k, v in f.items:
                m[i, k - 1] = v
        object.__setattr__(self, "_matrix", m)

    def scaled(self) -> list[Functional]:
        return [Functional(f * s).tagged(f.piece_tag) for f, s in zip(self.functionals, self.scales)]

    def __call__(self, x: SparseVector) -> tuple[float, Functional]:
        if not x:
            return 0.0, Functional()
        vals = self._matrix @ x.dense(self.dim)
        i = int(np.argmax(np.asarray(self.scales) * vals))
        f = self.functionals[i]
        return self.scales[i] * evaluate(f, x), Functional(f * self.scales[i]).tagged(f.piece_tag)


def star_boundary(nets: NetFamily, decomp: PieceDecomposition, eps: float, dim: int) -> StarBoundary:
    fs, scales = [], []
    for n, net in enumerate(nets.nets):
        for f in net:
            fs.append(f.tagged(n))
            scales.append(assign_psi(decomp, eps, f).psi)
    if not fs:
        raise PolyrenormError("empty nets: no boundary to build a norm from")
    dim = max([dim] + [f.max_index() for f in fs])
    return StarBoundary(tuple(fs), tuple(scales), dim)


def star_norm(nets: NetFamily, decomp: PieceDecomposition, eps: float,
              x: SparseVector) -> tuple[float, Functional]:
    """``max psi(f) f(x)`` over net functionals, with the attaining ``psi(f) f``."""
    return star_boundary(nets, decomp, eps, x.max_index() or 1)(x)


# declared limits --------------------------------------------------------


@dataclass(frozen=True)
class DeclaredLimit:
    """``g = alpha f`` with ``alpha = psi(f')`` for an annotated neighbour ``f'``.

    ``f'`` lies in a piece ``i in I(f)``, ``i != n``, with ``n not in I(f')``
    and ``I(f') ⊆ I(f) ∪ {m >= n + 2}``; then ``psi(f) - alpha >= 10 eps_n``.
    """

    f: Functional
    n: int
    alpha: float
    neighbour: Functional
    psi_margin: float


def declared_limits(decomp: PieceDecomposition, eps: float) -> list[DeclaredLimit]:
    out = []
    for n, f in decomp.members():
        I, _ = membership_index(decomp, f)
        if I == {n}:
            continue
        pf = psi_exact(eps, *membership_index(decomp, f))
        for i in sorted(I - {n}):
            for h in decomp.pieces[i]:
                Ih, mh = membership_index(decomp, h)
                if n in Ih or not all(j in I or j >= n + 2 for j in Ih):
                    continue
                alpha = psi_exact(eps, Ih, mh)
                out.append(DeclaredLimit(f, n, float(alpha), h, float(pf - alpha)))
    return out


@dataclass(frozen=True)
class DefectResult:
    measured: float
    threshold: float
    passed: bool
    n: int
    alpha: float


def limit_defect_check(nets: NetFamily, decomp: PieceDecomposition, eps: float, f: Functional,
                       alpha: float, section=None, tol: ToleranceConfig = DEFAULT_TOL) -> DefectResult:
    """Dual norm of ``g = alpha f`` for the new norm restricted to ``section``.

    The section ball is the polytope cut out by the restricted boundary ``D``;
    its maximum of ``g`` over the vertex set is the exact restricted dual norm.
    """
    from .polytope import section_ball

    if not alpha > 1:
        raise PolyrenormError("declared limits need alpha > 1")
    if section is None:
        raise PolyrenormError("requires polytope certificate")
    n = decomp.piece_of(Functional(f))
    if n is None:
        raise PolyrenormError("functional outside decomposition")
    dim = max([f.max_index()] + [v.max_index() for v in section.basis])
    D = star_boundary(nets, decomp, eps, dim).scaled()
    poly = section_ball(D, section, tol)
    g = Functional(f * alpha)
    measured = max(float(np.dot(section.restrict(g), v)) for v in poly.vertices)
    threshold = 1.0 - epsilon_schedule(eps, n)
    return DefectResult(measured, threshold, measured <= threshold + tol.eq_tol, n, float(alpha))


def piece_report(nets: NetFamily, decomp: PieceDecomposition) -> list[dict]:
    return [{"n": n, "size": len(decomp.pieces[n]), "net_size": len(nets.nets[n]), "eps_n": nets.eps[n]}
            for n in range(len(decomp.pieces))]


def hk_cardinality_decomposition(family) -> PieceDecomposition:
    """``L_{k-1}`` = signed indicators of members of cardinality ``k``."""
    from .spaces.hereditary import extreme_signed_indicators

    by_card: dict[int, list[Functional]] = {}
    for f in extreme_signed_indicators(family):
        by_card.setdefault(len(f), []).append(f)
    top = max(by_card)
    return disjointify([by_card.get(k, []) for k in range(1, top + 1)])
