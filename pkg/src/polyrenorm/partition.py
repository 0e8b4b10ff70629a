"""Sphere partitions ``S_n``, tail indices and the per-piece lower bounds ``b_n``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

from .core import DEFAULT_TOL, PolyrenormError, SparseVector, ToleranceConfig, head, head_set, project, tail
from .spaces import SpaceDescriptor, piece_sup
from .spaces.nakano import NakanoDescriptor, nakano_modular
from .spaces.orlicz import OrliczDescriptor, orlicz_dn

PartitionMode = Literal["tail", "head"]


@dataclass(frozen=True)
class NakanoIndexData:
    m: int
    alpha: int
    beta: float


def alpha_beta(desc: NakanoDescriptor, m: int) -> NakanoIndexData:
    """First family reaching past coordinate ``m`` and its exponent."""
    for n, a in enumerate(desc.families):
        if any(k > m for k in a):
            return NakanoIndexData(m=m, alpha=n, beta=desc.exponents[n])
    raise PolyrenormError(f"window exhausted: no family reaches beyond coordinate {m}")


def tail_decay(desc: NakanoDescriptor, m: int, q: float) -> float:
    """``q ** beta(m)``, taken as 0 once no coordinate lies beyond ``m``."""
    try:
        return q ** alpha_beta(desc, m).beta
    except PolyrenormError:
        return 0.0


def tail_index(space: SpaceDescriptor, x: SparseVector, q: float) -> int:
    """Least ``m >= 0`` with ``||x - P_m x|| < q``."""
    if not 0 < q < 1:
        raise PolyrenormError("q must lie in (0, 1)")
    for m in range(0, x.max_index() + 1):
        if space.norm(tail(x, m)) < q:
            return m
    return x.max_index()


# b-sequences ----------------------------------------------------------


def nakano_b_sequence(desc: NakanoDescriptor, q: float) -> list[float]:
    """Analytic lower bounds ``1 - q^{beta(m)}`` for ``m = 1..window``."""
    return [1.0 - tail_decay(desc, m, q) for m in range(1, desc.window + 1)]


def triangle_b_sequence(dim: int, q: float) -> list[float]:
    """``||P_m x|| >= 1 - ||R_m x|| > 1 - q`` on ``S_m``; equal to 1 at the window end."""
    return [1.0 - q] * (dim - 1) + [1.0]


def orlicz_b_sequence(desc: OrliczDescriptor, n_max: int, grid_size: int = 10_000) -> list[float]:
    return [orlicz_dn(desc, n, grid_size).b_n for n in range(1, n_max + 1)]


def derived_b_sequence(space: SpaceDescriptor, q: float, grid_size: int = 10_000) -> list[float]:
    if space.kind == "nakano":
        return nakano_b_sequence(space.payload, q)
    if space.kind == "orlicz":
        return orlicz_b_sequence(space.payload, space.truncation_dim, grid_size)
    return triangle_b_sequence(space.truncation_dim, q)


def default_partition_mode(space: SpaceDescriptor) -> PartitionMode:
    return "head" if space.kind == "orlicz" else "tail"


def piece_mode_for(mode: PartitionMode) -> str:
    return "support_card" if mode == "head" else "schauder"


def analytic_bound(space: SpaceDescriptor, m: int, q: float, b: Sequence[float] | None = None) -> float:
    """Provable lower bound for ``sup{h(x) : h in H_m}`` on ``S_m``."""
    if b is not None and m <= len(b):
        return b[m - 1]
    if space.kind == "nakano":
        return 1.0 - tail_decay(space.payload, m, q)
    return 1.0 - q if m < space.truncation_dim else 1.0


# partition assignment -------------------------------------------------


@dataclass(frozen=True)
class PartitionRow:
    n: int
    count: int
    b_hat: float | None
    analytic_lower_bound: float
    passed: bool

    def as_list(self) -> list:
        return [self.n, self.count, self.b_hat, self.analytic_lower_bound, self.passed]


@dataclass(frozen=True)
class PartitionAssignment:
    """Label (piece index) of every sphere sample.

    ``memberships`` lists every piece a sample qualifies for; with
    ``overlap=False`` it is just the minimal label.
    """

    mode: PartitionMode
    labels: tuple[int, ...]
    q: float | None = None
    b: tuple[float, ...] | None = None
    memberships: tuple[tuple[int, ...], ...] = field(default=())
    rows: tuple[PartitionRow, ...] = field(default=())

    @property
    def b_hat(self) -> dict[int, float]:
        return {r.n: r.b_hat for r in self.rows if r.b_hat is not None}

    @property
    def positive_and_increasing(self) -> bool:
        vals = [r.b_hat for r in self.rows if r.b_hat is not None]
        return all(v > 0 for v in vals) and all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def head_label(space: SpaceDescriptor, x: SparseVector, b: Sequence[float]) -> int:
    """Least ``n`` with ``||P_{A_n(x)} x|| >= b_n``."""
    for n in range(1, len(x) + 1):
        bn = b[n - 1] if n <= len(b) else 1.0
        if space.norm(project(x, head_set(x, n))) >= bn:
            return n
    raise PolyrenormError("partition incomplete: sample received no finite label")


def assign_partition(space: SpaceDescriptor, samples: Sequence[SparseVector], mode: PartitionMode,
                     q: float = 0.5, b: Sequence[float] | None = None, overlap: bool = False,
                     tol: ToleranceConfig = DEFAULT_TOL) -> PartitionAssignment:
    """Label each unit-sphere sample and collect empirical ``b_hat_n``.

    ``tail`` labels by :func:`tail_index` (pieces are initial projections);
    ``head`` labels by :func:`head_label` (pieces are supports of bounded
    cardinality) and needs ``b``.  ``b_hat_n`` is the minimum over samples
    labelled ``n`` of the piece sup, an upper estimate of the true infimum.
    """
    if mode == "head" and b is None:
        raise PolyrenormError("head partition needs a b sequence")
    pmode = piece_mode_for(mode)
    labels, members = [], []
    for x in samples:
        if abs(space.norm(x) - 1.0) > tol.eq_tol:
            raise PolyrenormError("samples must lie on the unit sphere")
        if mode == "tail":
            m = tail_index(space, x, q)
            if m < 1:
                raise PolyrenormError("partition incomplete: sample received no finite label")
            labels.append(m)
            hi = max(x.max_index(), m)
            members.append(tuple(range(m, hi + 1)) if overlap else (m,))
        else:
            n = head_label(space, x, b)
            labels.append(n)
            if overlap:
                ok = [k for k in range(1, len(x) + 1)
                      if space.norm(project(x, head_set(x, k))) >= (b[k - 1] if k <= len(b) else 1.0)]
                members.append(tuple(ok))
            else:
                members.append((n,))
    n_max = max([space.truncation_dim] + labels)
    rows = []
    for n in range(1, n_max + 1):
        idx = [i for i, ms in enumerate(members) if n in ms]
        bound = analytic_bound(space, n, q, b)
        if idx:
            b_hat = min(piece_sup(space, n, samples[i], pmode)[0] for i in idx)
            passed = b_hat > 0 and b_hat >= bound - tol.eq_tol
        else:
            b_hat, passed = None, True
        rows.append(PartitionRow(n=n, count=len(idx), b_hat=b_hat, analytic_lower_bound=bound,
                                 passed=passed))
    return PartitionAssignment(mode=mode, labels=tuple(labels), q=q,
                               b=None if b is None else tuple(b), memberships=tuple(members),
                               rows=tuple(rows))


# bound chains ---------------------------------------------------------


@dataclass(frozen=True)
class Link:
    name: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class ChainReport:
    links: tuple[Link, ...]
    meta: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(l.holds for l in self.links)

    @property
    def failed(self) -> list[str]:
        return [l.name for l in self.links if not l.holds]

    def link(self, name: str) -> Link:
        return next(l for l in self.links if l.name == name)


def _le(name: str, lhs: float, rhs: float, slack: float = 0.0) -> Link:
    return Link(name, lhs, rhs, lhs <= rhs + slack)


def nakano_bm_bound_check(space: SpaceDescriptor, x: SparseVector, q: float,
                          tol: ToleranceConfig = DEFAULT_TOL) -> ChainReport:
    """Check, for a unit ``x`` with ``m = m(x)``, the chain

    ``Phi(R_m x) <= q^beta``, ``Phi(P_m x) >= 1 - q^beta``,
    ``Phi(P_m x) <= ||P_m x||`` and ``||P_m x|| >= 1 - q^beta``.
    """
    if space.kind != "nakano":
        raise PolyrenormError("bound chain applies to Nakano spaces")
    desc = space.payload
    nx = space.norm(x)
    if not x or abs(nx - 1.0) > tol.eq_tol:
        raise PolyrenormError("x must lie on the unit sphere")
    m = tail_index(space, x, q)
    decay = tail_decay(desc, m, q)
    head_x, tail_x = head(x, m), tail(x, m)
    phi_tail = nakano_modular(desc, tail_x)
    phi_head = nakano_modular(desc, head_x)
    head_norm = space.norm(head_x)
    e = tol.eq_tol
    links = (
        _le("tail_modular", phi_tail, decay, e),
        _le("head_modular", 1.0 - decay, phi_head, e),
        _le("modular_below_norm", phi_head, head_norm, e),
        _le("head_norm", 1.0 - decay, head_norm, e),
    )
    return ChainReport(links, {"m": m, "q_beta": decay, "norm": nx})


def leung_chain_check(desc: OrliczDescriptor, x: SparseVector, n: int, b_n: float,
                      d_n: float) -> ChainReport:
    """Evaluate the three inequalities used to rule out points outside every ``S_n``.

    With ``A = A_n(x)``: ``sum_A M(x/b_n) <= 1``, ``sum_{not A} M(Kx) <= 1``,
    ``M(Kx_g) >= d_n M(x_g)`` off ``A``, and the closing ``b_n + 1/d_n < 1``.
    On a unit vector they cannot all hold, so at least one link fails.
    Comparisons are exact (no slack).
    """
    M, K = desc.M, desc.K
    a = head_set(x, n)
    inside = [v for k, v in x.items if k in a]
    outside = [v for k, v in x.items if k not in a]
    s1 = math.fsum(M(v / b_n) for v in inside)
    s2 = math.fsum(M(K * v) for v in outside)
    worst = min((M(K * v) - d_n * M(v) for v in outside), default=0.0)
    closing = b_n + 1.0 / d_n
    links = (
        _le("scaled_head", s1, 1.0),
        _le("scaled_tail", s2, 1.0),
        Link("growth_ratio", -worst, 0.0, worst >= 0.0),
        Link("closing", closing, 1.0, closing < 1.0),
    )
    return ChainReport(links, {"n": n, "b_n": b_n, "d_n": d_n})
