from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.optimize import minimize

from ..core import (DEFAULT_TOL, Functional, PolyrenormError, SparseVector, ToleranceConfig,
                    evaluate, head, head_set, project)
from .hereditary import (HereditaryFamily, hk_dual_bounds, hk_dual_norm, hk_norm,
                         hk_norming_functional, schreier_family, singletons_family)
from .luxemburg import luxemburg_scale
from .nakano import NakanoDescriptor, nakano_gradient, nakano_modular, nakano_scaled_modular
from .orlicz import (OrliczDescriptor, OrliczFunction, orlicz_modular, orlicz_scaled_modular)

Kind = Literal["nakano", "orlicz", "hk"]
PieceMode = Literal["support_card", "schauder"]

SUPPORT_CAP = 20


@dataclass(frozen=True)
class SpaceDescriptor:
    """A concrete sequence space truncated to coordinates ``1..truncation_dim``."""

    kind: Kind
    payload: NakanoDescriptor | OrliczDescriptor | HereditaryFamily
    truncation_dim: int
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.truncation_dim < 1:
            raise PolyrenormError("truncation_dim must be >= 1")
        expected = {"nakano": NakanoDescriptor, "orlicz": OrliczDescriptor, "hk": HereditaryFamily}
        if self.kind not in expected or not isinstance(self.payload, expected[self.kind]):
            raise PolyrenormError(f"payload does not match space kind {self.kind!r}")
        if self.kind == "nakano" and self.payload.window != self.truncation_dim:
            raise PolyrenormError("Nakano families must cover exactly 1..truncation_dim")
        if self.kind == "hk" and self.payload.window != self.truncation_dim:
            raise PolyrenormError("family window must equal truncation_dim")

    # construction ------------------------------------------------------

    @classmethod
    def nakano(cls, families, exponents, tol: ToleranceConfig = DEFAULT_TOL) -> "SpaceDescriptor":
        desc = NakanoDescriptor(tuple(frozenset(a) for a in families), tuple(exponents))
        return cls("nakano", desc, desc.window, tol)

    @classmethod
    def orlicz(cls, M: OrliczFunction, K: float, dim: int, tol: ToleranceConfig = DEFAULT_TOL):
        return cls("orlicz", OrliczDescriptor(M, K), dim, tol)

    @classmethod
    def hk(cls, family: HereditaryFamily, tol: ToleranceConfig = DEFAULT_TOL) -> "SpaceDescriptor":
        return cls("hk", family, family.window, tol)

    @classmethod
    def from_config(cls, cfg: dict[str, Any], tol: ToleranceConfig = DEFAULT_TOL) -> "SpaceDescriptor":
        kind = cfg.get("kind")
        if kind == "nakano":
            space = cls.nakano(cfg["families"], cfg["exponents"], tol)
            if "truncation_dim" in cfg and int(cfg["truncation_dim"]) != space.truncation_dim:
                raise PolyrenormError("truncation_dim disagrees with the families' window")
            return space
        if kind == "orlicz":
            m = cfg.get("M", {"name": "patched_exponential"})
            if isinstance(m, str):
                m = {"name": m}
            M = OrliczFunction(m["name"], float(m.get("p", 2.0)))
            return cls.orlicz(M, float(cfg["K"]), int(cfg["truncation_dim"]), tol)
        if kind == "hk":
            fam = cfg.get("family", "schreier")
            d = int(cfg.get("window", cfg.get("truncation_dim", 0)))
            if fam == "schreier":
                family = schreier_family(d)
            elif fam == "singletons":
                family = singletons_family(d)
            else:
                family = HereditaryFamily.from_sets(d, [frozenset(a) for a in fam])
            return cls.hk(family, tol)
        raise PolyrenormError(f"unknown space kind {kind!r}")

    def to_json(self) -> dict[str, Any]:
        if self.kind == "nakano":
            return {"kind": "nakano", "families": [sorted(a) for a in self.payload.families],
                    "exponents": list(self.payload.exponents), "truncation_dim": self.truncation_dim}
        if self.kind == "orlicz":
            return {"kind": "orlicz", "M": self.payload.M.to_json(), "K": self.payload.K,
                    "truncation_dim": self.truncation_dim}
        fam = self.payload
        if fam.name in ("schreier", "singletons"):
            return {"kind": "hk", "family": fam.name, "window": fam.window,
                    "truncation_dim": self.truncation_dim}
        return {"kind": "hk", "family": [sorted(a) for a in fam.members if a],
                "window": fam.window, "truncation_dim": self.truncation_dim}

    # evaluation --------------------------------------------------------

    def check(self, x: SparseVector) -> None:
        if x and x.max_index() > self.truncation_dim:
            raise PolyrenormError(
                f"coordinate {x.max_index()} outside the truncation window 1..{self.truncation_dim}")

    def modular(self, x: SparseVector) -> float:
        self.check(x)
        if self.kind == "nakano":
            return nakano_modular(self.payload, x)
        if self.kind == "orlicz":
            return orlicz_modular(self.payload.M, x)
        raise PolyrenormError("h_K carries no modular")

    def norm(self, x: SparseVector) -> float:
        self.check(x)
        if not x:
            return 0.0
        if self.kind == "hk":
            return hk_norm(self.payload, x)
        if self.kind == "nakano":
            phi = nakano_scaled_modular(self.payload, x)
        else:
            phi = orlicz_scaled_modular(self.payload.M, x)
        start = max(abs(v) for _, v in x.items)
        return luxemburg_scale(phi, self.tol, start=start)

    def unit_vector_norm(self, k: int) -> float:
        return self.norm(SparseVector.basis(k))

    def normalize(self, x: SparseVector) -> SparseVector:
        n = self.norm(x)
        if n == 0:
            raise PolyrenormError("cannot normalise the zero vector")
        return x / n

    def dual_bounds(self, f: SparseVector) -> tuple[float, float]:
        """``(lower, upper)`` bounds on the dual norm from the unit vectors alone."""
        if self.kind == "hk":
            return hk_dual_bounds(self.payload, f)
        if not f:
            return 0.0, 0.0
        # monotone unconditional basis: |x_k| * ||e_k|| <= ||x||
        scaled = [abs(v) / self.unit_vector_norm(k) for k, v in f.items]
        return max(scaled), math.fsum(scaled)

    def dual_norm(self, f: SparseVector, samples: int = 256, seed: int = 0) -> float:
        """Dual norm ``sup{f(x) : ||x|| <= 1}``.

        Exact (linear programme) for ``h_K``.  For modular spaces the value is a
        lower estimate: the best of ``samples`` random directions on the
        support of ``f`` (signs aligned with ``f``), polished by Nelder-Mead.
        """
        self.check(f)
        if not f:
            return 0.0
        if self.kind == "hk":
            return hk_dual_norm(self.payload, f)
        ks = [k for k, _ in f.items]
        w = np.abs(np.array([v for _, v in f.items]))

        def ratio(y: np.ndarray) -> float:
            y = np.abs(y)
            if not y.any():
                return 0.0
            vec = SparseVector(zip(ks, y))
            return float(w @ y) / self.norm(vec)

        rng = np.random.default_rng(seed)
        cands = [np.eye(len(ks))[i] for i in range(len(ks))]
        cands.append(w.copy())
        cands.extend(rng.exponential(size=(samples, len(ks))))
        vals = [ratio(c) for c in cands]
        best = cands[int(np.argmax(vals))]
        res = minimize(lambda y: -ratio(y), best, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400 * len(ks)})
        return max(max(vals), -float(res.fun))

    # subgradients and pieces -------------------------------------------

    def norming_functional(self, x: SparseVector) -> Functional:
        return norming_functional(self, x)

    def piece_sup(self, n: int, x: SparseVector, mode: PieceMode = "schauder"):
        return piece_sup(self, n, x, mode)


def norming_functional(space: SpaceDescriptor, x: SparseVector) -> Functional:
    """A functional ``f`` in the dual ball with ``f(x) = ||x||``.

    For ``h_K`` the signed indicator of the attaining member; for modular
    spaces the modular subgradient at ``x/||x||`` rescaled so that it pairs
    to 1 with ``x/||x||``.
    """
    space.check(x)
    if not x:
        raise PolyrenormError("norming functional of the zero vector is undefined")
    if space.kind == "hk":
        return hk_norming_functional(space.payload, x)
    nx = space.norm(x)
    y = x / nx
    if space.kind == "nakano":
        grad = nakano_gradient(space.payload, y)
    else:
        M = space.payload.M
        grad = SparseVector((k, M.derivative(v)) for k, v in y.items)
    scale = evaluate(grad, y)
    if not scale > 0:
        raise PolyrenormError("degenerate subgradient")
    return Functional(grad / scale)


def piece_sup(space: SpaceDescriptor, n: int, x: SparseVector,
              mode: PieceMode = "schauder") -> tuple[float, Functional]:
    """Sup of ``|h(x)|`` over the ``n``-th piece and a functional attaining it.

    ``support_card``: functionals of the dual ball supported on at most ``n``
    coordinates, i.e. ``max_{|sigma| <= n} ||P_sigma x||``.
    ``schauder``: functionals supported on ``1..n``, i.e. ``||P_n x||``.
    The witness is the norming functional of the projection, which is
    already supported inside the projection's coordinates.
    """
    if n < 1:
        raise PolyrenormError("n must be >= 1")
    space.check(x)
    if mode == "schauder":
        p = head(x, n)
        return _sup_of_projection(space, p)
    if mode != "support_card":
        raise PolyrenormError(f"unknown piece mode {mode!r}")
    supp = sorted(x.support())
    if len(supp) > SUPPORT_CAP:
        raise PolyrenormError("support too large")
    k = min(n, len(supp))
    if k == len(supp):
        return _sup_of_projection(space, x)
    if space.kind == "orlicz":
        # rearrangement invariance: the k largest coordinates are optimal
        return _sup_of_projection(space, project(x, head_set(x, k)))
    if space.kind == "hk":
        return _hk_top_k(space, x, k)
    # by monotonicity of the basis only |sigma| = k needs searching
    best_val, best_sigma = -1.0, None
    for sigma in itertools.combinations(supp, k):
        v = space.norm(project(x, sigma))
        if v > best_val:
            best_val, best_sigma = v, sigma
    return _sup_of_projection(space, project(x, best_sigma))


def _sup_of_projection(space: SpaceDescriptor, p: SparseVector) -> tuple[float, Functional]:
    if not p:
        return 0.0, Functional()
    f = norming_functional(space, p)
    return float(evaluate(f, p)), f


def _hk_top_k(space: SpaceDescriptor, x: SparseVector, k: int) -> tuple[float, Functional]:
    """``max_{|sigma| <= k} ||P_sigma x||_K``: per member, keep its ``k`` largest entries."""
    fam = space.payload
    a = np.abs(x.dense(fam.window))
    masked = fam.incidence * a
    top = -np.sort(-masked, axis=1)[:, :k].sum(axis=1)
    i = int(np.argmax(top))
    member = sorted(fam.members[i], key=lambda j: (-a[j - 1], j))[:k]
    sigma = [j for j in member if a[j - 1] > 0]
    return _sup_of_projection(space, project(x, sigma))
