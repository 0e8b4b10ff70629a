"""Equivalent norms glued from increasing relative boundaries ``H_n``.

Given pieces ``G_n = H_n \\ H_{n-1}`` and lower bounds ``b_n``, the new norm is
``|||x||| = sup_n a_n sup{|g(x)| : g in G_n}`` with ``a_n = (1 + 2^-n)/c_n`` and
``c_n = inf_{m >= n} b_m``.  Its boundary is ``F = U a_n G_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import DEFAULT_TOL, Functional, PolyrenormError, SparseVector, ToleranceConfig, evaluate
from .spaces import SpaceDescriptor, piece_sup
from .spaces.hereditary import HereditaryFamily, signed_indicator


# parameters -----------------------------------------------------------


@dataclass(frozen=True)
class RenormParams:
    """``b``, ``c``, ``a`` on ``1..len(b)``; beyond the list ``b_m = 1`` (tail rule)."""

    b: tuple[float, ...]
    c: tuple[float, ...]
    a: tuple[float, ...]

    def b_at(self, n: int) -> float:
        return self.b[n - 1] if n <= len(self.b) else 1.0

    def c_at(self, n: int) -> float:
        return self.c[n - 1] if n <= len(self.c) else 1.0

    def a_at(self, n: int) -> float:
        if n < 1:
            raise PolyrenormError("indices start at 1")
        return self.a[n - 1] if n <= len(self.a) else 1.0 + 2.0 ** (-n)

    def table(self) -> list[tuple[int, float, float, float]]:
        return [(n, self.b[n - 1], self.c[n - 1], self.a[n - 1]) for n in range(1, len(self.b) + 1)]


def compute_params(b: Sequence[float], b_limit: float = 1.0,
                   a: Sequence[float] | None = None) -> RenormParams:
    """Build ``c_n`` and ``a_n`` from a finite ``b`` list with declared limit ``b_limit``.

    A user ``a`` sequence may replace the default; it must be strictly
    decreasing (including into the default tail) with ``a_n c_n > 1``.
    """
    b = tuple(float(v) for v in b)
    if any(not v > 0 for v in b):
        raise PolyrenormError("b must be strictly positive")
    if any(v > 1 for v in b):
        raise PolyrenormError("b must not exceed 1")
    if b_limit != 1.0:
        raise PolyrenormError("b sequence does not converge to 1")
    c = []
    running = 1.0
    for v in reversed(b):
        running = min(running, v)
        c.append(running)
    c = tuple(reversed(c))
    default = tuple((1.0 + 2.0 ** (-n)) / c[n - 1] for n in range(1, len(b) + 1))
    if a is None:
        return RenormParams(b, c, default)
    a = tuple(float(v) for v in a)
    if len(a) != len(b):
        raise PolyrenormError("a and b must have equal length")
    seq = a + (1.0 + 2.0 ** (-(len(b) + 1)),)
    if any(not y < x for x, y in zip(seq, seq[1:])):
        raise PolyrenormError("a sequence must be strictly decreasing")
    if any(not ai * ci > 1 for ai, ci in zip(a, c)):
        raise PolyrenormError("a sequence must satisfy a_n c_n > 1")
    return RenormParams(b, c, a)


# boundary systems -----------------------------------------------------


@dataclass(frozen=True)
class ExplicitPiece:
    functionals: tuple[Functional, ...]
    dim: int
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.zeros((len(self.functionals), self.dim))
        for i, f in enumerate(self.functionals):
            for k, v in f.items:
                if k > self.dim:
                    raise PolyrenormError(f"functional coordinate {k} outside the window")
                m[i, k - 1] = v
        object.__setattr__(self, "_matrix", m)

    def sup(self, x: SparseVector) -> tuple[float, Functional | None]:
        if not self.functionals:
            return 0.0, None
        vals = np.abs(self._matrix @ x.dense(self.dim))
        i = int(np.argmax(vals))
        g = self.functionals[i]
        v = evaluate(g, x)
        # signed so that the witness evaluates to +sup
        return abs(v), (g if v >= 0 else Functional(-g))


@dataclass(frozen=True)
class OraclePiece:
    """``H_n`` given only through ``piece_sup``; ``G_n = H_n \\ H_{n-1}`` implicitly."""

    space: SpaceDescriptor
    n: int
    mode: str

    def sup(self, x: SparseVector) -> tuple[float, Functional | None]:
        s, g = piece_sup(self.space, self.n, x, self.mode)
        return s, (g if g else None)


@dataclass(frozen=True)
class BoundarySystem:
    """Disjoint pieces ``G_1..G_N`` plus the base-space norm.

    For oracle pieces ``sup`` reports the sup over ``H_n`` rather than
    ``G_n``; because ``a_n`` is strictly decreasing the resulting maximum
    over ``n`` is the same.
    """

    pieces: tuple[ExplicitPiece | OraclePiece, ...]
    norm: Callable[[SparseVector], float]
    dim: int
    space: SpaceDescriptor | None = None

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def enumerable(self) -> bool:
        return all(isinstance(p, ExplicitPiece) for p in self.pieces)

    def piece_sup(self, n: int, x: SparseVector) -> tuple[float, Functional | None]:
        if n > len(self.pieces):
            return 0.0, None
        return self.pieces[n - 1].sup(x)

    @classmethod
    def explicit(cls, pieces: Sequence[Sequence[Functional]], norm, dim: int,
                 space: SpaceDescriptor | None = None) -> "BoundarySystem":
        seen: dict[Functional, int] = {}
        for n, piece in enumerate(pieces, start=1):
            for f in piece:
                if f in seen and seen[f] != n:
                    raise PolyrenormError(f"pieces {seen[f]} and {n} overlap")
                seen[f] = n
        return cls(tuple(ExplicitPiece(tuple(p), dim) for p in pieces), norm, dim, space)

    @classmethod
    def oracle(cls, space: SpaceDescriptor, mode: str) -> "BoundarySystem":
        d = space.truncation_dim
        return cls(tuple(OraclePiece(space, n, mode) for n in range(1, d + 1)), space.norm, d, space)

    def check_dual_ball(self, tol: ToleranceConfig = DEFAULT_TOL) -> float:
        """Largest measured dual norm over explicit functionals (needs ``space``)."""
        if self.space is None:
            raise PolyrenormError("dual-ball check needs the base space")
        worst = 0.0
        for p in self.pieces:
            if isinstance(p, ExplicitPiece):
                for f in p.functionals:
                    worst = max(worst, self.space.dual_norm(f))
        if worst > 1 + tol.eq_tol:
            raise PolyrenormError(f"functional outside the dual ball (dual norm {worst})")
        return worst


def hk_boundary_system(space: SpaceDescriptor) -> BoundarySystem:
    """``G_n`` = signed indicators of members with ``max A = n``.

    ``H_n`` then consists of the signed indicators of members inside
    ``1..n`` and norms every ``P_n x``.
    """
    fam: HereditaryFamily = space.payload
    pieces: list[list[Functional]] = [[] for _ in range(fam.window)]
    for a in fam.members:
        if not a:
            continue
        sa = sorted(a)
        for mask in range(2 ** len(sa)):
            signs = [(-1.0 if mask >> i & 1 else 1.0) for i in range(len(sa))]
            pieces[sa[-1] - 1].append(signed_indicator(sa, signs=signs))
    return BoundarySystem.explicit(pieces, space.norm, fam.window, space)


def system_for(space: SpaceDescriptor, mode: str | None = None) -> BoundarySystem:
    if space.kind == "hk" and mode is None:
        return hk_boundary_system(space)
    if mode is None:
        mode = "support_card" if space.kind == "orlicz" else "schauder"
    return BoundarySystem.oracle(space, mode)


# evaluation -----------------------------------------------------------


def seminorm(sys: BoundarySystem, params: RenormParams, x: SparseVector, n: int) -> float:
    """``||x||_n = max_{k <= n} a_k sup_{G_k} |g(x)|``."""
    if n > len(sys):
        raise PolyrenormError("n exceeds the piece count")
    return max((params.a_at(k) * sys.piece_sup(k, x)[0] for k in range(1, n + 1)), default=0.0)


@dataclass(frozen=True)
class TripleNormResult:
    """``value = a_{n_x} |g(x)|`` with ``witness = a_{n_x} g`` and ``base_witness = g``.

    ``terminating_index`` is the first ``N`` with ``a_N ||x|| < ||x||_{N-1}``.
    """

    value: float
    n_x: int
    witness: Functional
    base_witness: Functional
    terminating_index: int
    base_norm: float


def triple_norm(sys: BoundarySystem, params: RenormParams, x: SparseVector) -> TripleNormResult:
    if not x:
        raise PolyrenormError("x must be non-zero")
    nx = sys.norm(x)
    best, n_x, g_best = 0.0, 0, None
    n = 1
    while True:
        s, g = sys.piece_sup(n, x)
        cand = params.a_at(n) * s
        if cand > best:
            best, n_x, g_best = cand, n, g
        if params.a_at(n + 1) * nx < best:
            break
        if n >= len(sys) and best <= nx:
            raise PolyrenormError("b sequence does not converge to 1")
        n += 1
    an = params.a_at(n_x)
    return TripleNormResult(value=best, n_x=n_x, witness=Functional(g_best * an).tagged(n_x),
                            base_witness=g_best, terminating_index=n + 1, base_norm=nx)


def boundary_enumerate(sys: BoundarySystem, params: RenormParams, n_max: int) -> list[Functional]:
    """``+-a_n G_n`` for ``n <= n_max``, tagged by piece index."""
    out: list[Functional] = []
    seen: set[Functional] = set()
    for n in range(1, n_max + 1):
        if n > len(sys):
            break
        piece = sys.pieces[n - 1]
        if not isinstance(piece, ExplicitPiece):
            raise PolyrenormError(f"piece not enumerable: piece {n} is only available as an oracle")
        an = params.a_at(n)
        for g in piece.functionals:
            for h in (g * an, -g * an):
                h = Functional(h)
                if h not in seen:
                    seen.add(h)
                    out.append(h.tagged(n))
    return out


@dataclass(frozen=True)
class GapResult:
    margin: float
    threshold: float
    passed: bool


def star_gap_check(sys: BoundarySystem, params: RenormParams, x: SparseVector,
                   label: int | None = None, tol: ToleranceConfig = DEFAULT_TOL) -> GapResult:
    """``|||x||| - sup_H |h(x)|`` against its proven lower bound.

    With a partition label ``n*`` of ``x/||x||`` the bound is
    ``(a_{n*} c_{n*} - 1) ||x|| / a_{n*}``; otherwise just ``eq_tol``.
    """
    r = triple_norm(sys, params, x)
    h_sup = max(sys.piece_sup(n, x)[0] for n in range(1, len(sys) + 1))
    margin = r.value - h_sup
    if label is None:
        threshold = tol.eq_tol
        return GapResult(margin, threshold, margin > threshold)
    a, c = params.a_at(label), params.c_at(label)
    threshold = (a * c - 1.0) * r.base_norm / a
    return GapResult(margin, threshold, margin >= threshold - tol.eq_tol and margin > 0)


# claim verification ---------------------------------------------------


@dataclass(frozen=True)
class ClaimCheck:
    name: str
    passed: bool
    margin: float
    count: int = 0


def verify_claims(sys: BoundarySystem, params: RenormParams, samples: Sequence[SparseVector],
                  labels: Sequence[int] | None = None, tol: float = 1e-8,
                  attain_tol: float = 1e-9) -> list[ClaimCheck]:
    """Sandwich, attainment and quantitative lower bound over ``samples``.

    Margins are worst cases (negative means violated):
    ``sandwich``: ``min(|||x||| - ||x|| - 2^-N ||x||/a_N, a_1||x|| - |||x|||)``;
    ``finite_attainment``: ``n_x`` minimal (``||x||_{n_x - 1} < |||x|||``);
    ``witness``: ``attain_tol - | a_{n_x}|g(x)| - |||x||| |``;
    ``lower_bound``: ``|||x||| - (1 + 2^-n*)||x||`` with partition labels.
    """
    m_i = m_ii = m_iii = m_low = math.inf
    for idx, x in enumerate(samples):
        r = triple_norm(sys, params, x)
        nx, N = r.base_norm, r.terminating_index
        strict = r.value - nx - (2.0 ** (-N)) * nx / params.a_at(N)
        upper = params.a_at(1) * nx - r.value
        m_i = min(m_i, strict + tol, upper + tol)
        prev = seminorm(sys, params, x, r.n_x - 1) if r.n_x > 1 else 0.0
        m_ii = min(m_ii, r.value - prev)
        pair = params.a_at(r.n_x) * abs(evaluate(r.base_witness, x))
        m_iii = min(m_iii, attain_tol - abs(pair - r.value), attain_tol - abs(abs(evaluate(r.witness, x)) - r.value))
        if labels is not None:
            m_low = min(m_low, r.value - (1.0 + 2.0 ** (-labels[idx])) * nx + tol)
    out = [ClaimCheck("sandwich", m_i >= 0, m_i, len(samples)),
           ClaimCheck("finite_attainment", m_ii > 0, m_ii, len(samples)),
           ClaimCheck("witness", m_iii >= 0, m_iii, len(samples))]
    if labels is not None:
        out.append(ClaimCheck("lower_bound", m_low >= 0, m_low, len(samples)))
    return out
