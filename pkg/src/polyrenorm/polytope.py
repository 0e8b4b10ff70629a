"""Low-dimensional sections of boundary-induced unit balls as explicit polytopes."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import DEFAULT_TOL, Functional, PolyrenormError, SparseVector, ToleranceConfig, evaluate

MAX_DIM = 4
MAX_HALFSPACES = 5000
_CHUNK = 20_000


@dataclass(frozen=True)
class SectionSpec:
    basis: tuple[SparseVector, ...]
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self) -> None:
        basis = tuple(SparseVector(v) for v in self.basis)
        object.__setattr__(self, "basis", basis)
        if not 2 <= len(basis) <= MAX_DIM:
            raise PolyrenormError(f"section dimension must be 2..{MAX_DIM}")
        top = max(v.max_index() for v in basis)
        if top == 0 or np.linalg.matrix_rank(np.array([v.dense(top) for v in basis]),
                                             tol=self.tol.eq_tol) < len(basis):
            raise PolyrenormError("section basis is linearly dependent")

    @classmethod
    def coordinates(cls, *ks: int) -> "SectionSpec":
        return cls(tuple(SparseVector.basis(k) for k in ks))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def restrict(self, f: SparseVector) -> np.ndarray:
        return np.array([evaluate(f, v) for v in self.basis])

    def point(self, coords) -> SparseVector:
        acc: dict[int, float] = {}
        for c, v in zip(coords, self.basis):
            for k, val in v.items:
                acc[k] = acc.get(k, 0.0) + float(c) * val
        return SparseVector(acc)

    def coordinate_indices(self) -> list[int] | None:
        ks = []
        for v in self.basis:
            if len(v) != 1 or v.items[0][1] != 1.0:
                return None
            ks.append(v.items[0][0])
        return ks

    def to_json(self) -> list[dict[str, float]]:
        return [v.to_json() for v in self.basis]


def _dedupe_rows(rows: np.ndarray, tol: float) -> list[int]:
    keep: list[int] = []
    for i, r in enumerate(rows):
        if not any(np.max(np.abs(rows[j] - r)) <= tol for j in keep):
            keep.append(i)
    return keep


def restrict_functionals(F: Sequence[SparseVector], section: SectionSpec,
                         tol: ToleranceConfig = DEFAULT_TOL) -> tuple[np.ndarray, list[int]]:
    """Coefficient rows ``(f(v_1), ..., f(v_d))`` without zeros or duplicates.

    Returns the rows and, per row, the index in ``F`` of its first source.
    """
    rows = np.array([section.restrict(f) for f in F]) if F else np.zeros((0, section.dim))
    nz = [i for i in range(len(rows)) if np.max(np.abs(rows[i])) > tol.eq_tol]
    keep = _dedupe_rows(rows[nz], tol.eq_tol) if nz else []
    src = [nz[i] for i in keep]
    return rows[src].reshape(len(src), section.dim), src


def check_bounded(A: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Largest coordinate extent of ``{y : A y <= 1}``; raises when unbounded."""
    d = A.shape[1]
    extent = 0.0
    for i in range(d):
        for s in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = -s
            res = linprog(c, A_ub=A, b_ub=np.ones(len(A)), bounds=[(None, None)] * d, method="highs")
            if res.status == 3:
                raise PolyrenormError("not a polytope: unbounded")
            if res.status != 0:
                raise PolyrenormError(f"boundedness LP failed: {res.message}")
            extent = max(extent, -res.fun)
    return float(extent)


def vertex_enumeration(halfspaces, dim: int, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Vertices of ``{y : a . y <= 1 for every row a}`` by brute force over ``dim``-subsets."""
    A = np.asarray(halfspaces, dtype=float).reshape(-1, dim)
    if dim not in (2, 3, 4):
        raise PolyrenormError("dimension must be 2, 3 or 4")
    if len(A) > MAX_HALFSPACES:
        raise PolyrenormError(f"more than {MAX_HALFSPACES} halfspaces")
    if len(A) < dim + 1:
        raise PolyrenormError("not a polytope: unbounded")
    check_bounded(A, tol)
    found = []
    combos = itertools.combinations(range(len(A)), dim)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk)
        mats = A[idx]
        det = np.linalg.det(mats)
        ok = np.abs(det) > 1e-12
        if not ok.any():
            continue
        sols = np.linalg.solve(mats[ok], np.ones((int(ok.sum()), dim, 1)))[..., 0]
        feas = np.all(sols @ A.T <= 1.0 + tol.eq_tol, axis=1)
        found.extend(sols[feas])
    if not found:
        raise PolyrenormError("no vertices found")
    pts = np.array(found)
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    keep = _dedupe_rows(pts, tol.eq_tol)
    return pts[keep]


@dataclass(frozen=True)
class Polytope:
    halfspaces: np.ndarray
    vertices: np.ndarray
    section: SectionSpec
    sources: tuple[Functional, ...] = ()

    @property
    def dim(self) -> int:
        return self.section.dim

    def saturating(self, i: int, tol: float) -> np.ndarray:
        return self.vertices[np.abs(self.vertices @ self.halfspaces[i] - 1.0) <= tol]

    def redundant_facets(self, tol: float = 1e-7) -> list[int]:
        """Halfspaces whose saturating vertices span less than a facet."""
        out = []
        for i in range(len(self.halfspaces)):
            sat = self.saturating(i, tol)
            if len(sat) < self.dim or np.linalg.matrix_rank(sat - sat[0]) < self.dim - 1:
                out.append(i)
        return out

    def vertex_points(self) -> list[SparseVector]:
        return [self.section.point(v) for v in self.vertices]

    def is_symmetric(self, tol: float) -> float:
        """Worst distance from ``-v`` to the vertex set."""
        return max(float(np.min(np.max(np.abs(self.vertices + v), axis=1))) for v in self.vertices)


def section_ball(F: Sequence[Functional], section: SectionSpec,
                 tol: ToleranceConfig = DEFAULT_TOL) -> Polytope:
    """``{y : |f(sum y_i v_i)| <= 1 for f in F}`` (symmetrised) as a polytope."""
    rows, src = restrict_functionals(list(F) + [Functional(-f) for f in F], section, tol)
    sources = tuple((list(F) + [Functional(-f) for f in F])[i] for i in src)
    verts = vertex_enumeration(rows, section.dim, tol)
    return Polytope(rows, verts, section, sources)


def polytope_from_halfspaces(halfspaces, section: SectionSpec,
                             tol: ToleranceConfig = DEFAULT_TOL) -> Polytope:
    """Polytope from raw section rows; sources exist only for coordinate sections."""
    A = np.asarray(halfspaces, dtype=float).reshape(-1, section.dim)
    verts = vertex_enumeration(A, section.dim, tol)
    ks = section.coordinate_indices()
    sources = () if ks is None else tuple(Functional(zip(ks, row)) for row in A)
    return Polytope(A, verts, section, sources)


# certification ----------------------------------------------------------


@dataclass(frozen=True)
class CheckRecord:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def as_list(self) -> list:
        return [self.name, self.passed, self.margin, self.detail]


@dataclass(frozen=True)
class CertReport:
    checks: tuple[CheckRecord, ...]
    facet_count: int
    vertex_count: int
    redundant: tuple[int, ...] = ()
    vertices: tuple[tuple[float, ...], ...] = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckRecord:
        return next(c for c in self.checks if c.name == name)

    def to_json(self, eta: float | None = None) -> dict:
        out = {"dim": len(self.vertices[0]) if self.vertices else None, "facets": self.facet_count,
               "vertices": self.vertex_count,
               "checks": [{"name": c.name, "pass": c.passed, "margin": c.margin, "detail": c.detail}
                          for c in self.checks]}
        if eta is not None:
            sand = [c for c in self.checks if c.name.startswith("sandwich")]
            out["sandwich"] = {"eta": eta, "pass": all(c.passed for c in sand)}
        return out


def certify_sandwich(norm: Callable[[SparseVector], float], polytope: Polytope, eta: float,
                     dual_norm: Callable[[Functional], float],
                     tol: ToleranceConfig = DEFAULT_TOL) -> CertReport:
    """``B ⊂ P`` via facet dual norms ``<= 1``; ``P ⊂ (1 + eta) B`` via vertex norms."""
    if not polytope.sources:
        raise PolyrenormError("facet functionals unknown: build the polytope from functionals "
                              "or on a coordinate section")
    duals = [dual_norm(f) for f in polytope.sources]
    worst_f = int(np.argmax(duals))
    m_in = 1.0 + tol.eq_tol - duals[worst_f]
    vnorms = [norm(p) for p in polytope.vertex_points()]
    worst_v = int(np.argmax(vnorms))
    m_out = 1.0 + eta + tol.eq_tol - vnorms[worst_v]
    checks = (
        CheckRecord("sandwich_inner", m_in >= 0, m_in,
                    f"facet {polytope.sources[worst_f].to_text()} dual norm {duals[worst_f]!r}"),
        CheckRecord("sandwich_outer", m_out >= 0, m_out,
                    f"vertex {_pts(polytope.vertices[worst_v:worst_v + 1])[0]!r} norm {vnorms[worst_v]!r}"),
    )
    return CertReport(checks, len(polytope.halfspaces), len(polytope.vertices),
                      tuple(polytope.redundant_facets()), _pts(polytope.vertices))


def certify_polyhedral_section(boundary: Sequence[Functional], section: SectionSpec,
                               sphere_sample: Sequence, norm: Callable[[SparseVector], float] | None = None,
                               tol: ToleranceConfig = DEFAULT_TOL, vertex_tol: float = 1e-7) -> CertReport:
    """Build the section ball cut out by ``boundary`` and check it against ``norm``.

    ``sphere_sample`` holds section coordinates; each point is scaled to the
    unit sphere of ``norm`` and must be attained by a restricted boundary
    functional.  Without ``norm`` the polytope gauge itself is used.
    """
    poly = section_ball(boundary, section, tol)
    A, V = poly.halfspaces, poly.vertices
    seminorm = norm if norm is not None else (lambda p: float(np.max(A @ _coords(section, p))))
    checks = [CheckRecord("bounded", True, 1.0 / check_bounded(A, tol))]
    asym = poly.is_symmetric(tol.eq_tol)
    checks.append(CheckRecord("symmetric", asym <= tol.eq_tol, tol.eq_tol - asym))
    vdev = max(abs(seminorm(p) - 1.0) for p in poly.vertex_points())
    checks.append(CheckRecord("vertex_norms", vdev <= vertex_tol, vertex_tol - vdev))
    redundant = set(poly.redundant_facets(vertex_tol))
    fdev = max((abs(float(np.max(V @ A[i])) - 1.0) for i in range(len(A)) if i not in redundant), default=0.0)
    checks.append(CheckRecord("facet_vertex_duality", fdev <= vertex_tol, vertex_tol - fdev))
    worst, worst_pt = math.inf, None
    for y in sphere_sample:
        y = np.asarray(y, dtype=float)
        p = section.point(y)
        if not p:
            continue
        s = seminorm(p)
        val = float(np.max(A @ (y / s)))
        dev = tol.eq_tol - abs(val - 1.0)
        if dev < worst:
            worst, worst_pt = dev, (tuple(y / s), val)
    if worst_pt is None:
        worst = tol.eq_tol
    detail = "" if worst >= 0 else (f"restricted set is not a boundary for this section: "
                                    f"max {worst_pt[1]!r} at {worst_pt[0]!r}")
    checks.append(CheckRecord("attainment", worst >= 0, worst, detail))
    return CertReport(tuple(checks), len(A), len(V), tuple(sorted(redundant)), _pts(V))


def _pts(V: np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(c) + 0.0 for c in v) for v in V)


def _coords(section: SectionSpec, p: SparseVector) -> np.ndarray:
    top = max(max(v.max_index() for v in section.basis), p.max_index())
    B = np.array([v.dense(top) for v in section.basis]).T
    return np.linalg.lstsq(B, p.dense(top), rcond=None)[0]


# finite boundary norms --------------------------------------------------


@dataclass(frozen=True)
class FiniteBoundaryNorm:
    """``x -> max |f(x)|`` over a finite functional set, with exact dual norm by LP."""

    functionals: tuple[Functional, ...]
    dim: int
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.functionals:
            raise PolyrenormError("empty boundary")
        m = np.zeros((len(self.functionals), self.dim))
        for i, f in enumerate(self.functionals):
            for k, v in f.items:
                m[i, k - 1] = v
        object.__setattr__(self, "_matrix", m)

    def __call__(self, x: SparseVector) -> float:
        return self.norm_with_witness(x)[0]

    def norm_with_witness(self, x: SparseVector) -> tuple[float, Functional]:
        vals = np.abs(self._matrix @ x.dense(self.dim))
        i = int(np.argmax(vals))
        f = self.functionals[i]
        v = evaluate(f, x)
        return abs(v), (f if v >= 0 else Functional(-f))

    def dual_norm(self, g: SparseVector) -> float:
        if not g:
            return 0.0
        A = np.vstack([self._matrix, -self._matrix])
        res = linprog(-g.dense(self.dim), A_ub=A, b_ub=np.ones(len(A)),
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            raise PolyrenormError("boundary does not define a norm on the window")
        if res.status != 0:
            raise PolyrenormError(f"dual norm LP failed: {res.message}")
        return float(-res.fun)

    def dual_bounds(self, g: SparseVector) -> tuple[float, float]:
        """Lower bound ``max |g_k| / |||e_k|||``; the upper bound is left open."""
        if not g:
            return 0.0, 0.0
        lo = max(abs(v) / self(SparseVector.basis(k)) for k, v in g.items)
        return lo, math.inf
