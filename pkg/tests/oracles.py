"""Reference implementations sharing no code with the package.

Each oracle recomputes a quantity from its definition by brute force or by
closed form, working on plain dicts / numpy arrays.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq, linprog, minimize_scalar
from scipy.spatial import ConvexHull, HalfspaceIntersection


def nakano_modular(families, exponents, x: dict[int, float]) -> float:
    """Sup over pairwise-disjoint ``B_n ⊆ A_n`` of ``sum |x_k|^{p_n}``.

    Every labelling of the support (label ``n`` puts ``k`` in ``B_n``, the
    extra label leaves it out) is enumerated; labellings that put ``k``
    outside ``A_n`` are discarded.
    """
    supp = sorted(k for k, v in x.items() if v != 0)
    if not supp:
        return 0.0
    N = len(families)
    labels = np.array(list(itertools.product(range(N + 1), repeat=len(supp))))
    allowed = np.array([[k in fam for fam in families] + [True] for k in supp])
    contrib = np.array([[abs(x[k]) ** p for p in exponents] + [0.0] for k in supp])
    cols = np.arange(len(supp))
    valid = allowed[cols, labels].all(axis=1)
    vals = contrib[cols, labels].sum(axis=1)
    return float(vals[valid].max())


def luxemburg(modular, x: dict[int, float]) -> float:
    if not any(x.values()):
        return 0.0
    hi = 1.0
    while modular({k: v / hi for k, v in x.items()}) > 1:
        hi *= 2
    lo = hi / 2
    while modular({k: v / lo for k, v in x.items()}) <= 1:
        lo /= 2
    return brentq(lambda lam: modular({k: v / lam for k, v in x.items()}) - 1.0, lo, hi, xtol=1e-15,
                  rtol=1e-15)


def schreier_sets(window: int) -> list[frozenset[int]]:
    out = []
    for r in range(window + 1):
        for c in itertools.combinations(range(1, window + 1), r):
            if not c or len(c) <= min(c):
                out.append(frozenset(c))
    return out


def hk_norm(sets, x: dict[int, float]) -> float:
    return max(sum(abs(x.get(k, 0.0)) for k in a) for a in sets)


def hk_dual_norm(sets, window: int, f: dict[int, float]) -> float:
    """LP over all members (not only maximal ones) with free-sign variables split as ``u - v``."""
    w = np.array([f.get(k, 0.0) for k in range(1, window + 1)])
    rows = []
    for a in sets:
        if not a:
            continue
        r = np.zeros(window)
        r[[k - 1 for k in a]] = 1.0
        rows.append(r)
    A = np.array(rows)
    # max w.(u - v) with sum_{A}(u + v) <= 1, u, v >= 0
    res = linprog(np.concatenate([-w, w]), A_ub=np.hstack([A, A]), b_ub=np.ones(len(A)),
                  bounds=(0, None), method="highs")
    return -res.fun


def patched_exp(t: float) -> float:
    t = abs(t)
    if t == 0:
        return 0.0
    return math.exp(-1 / t) if t <= 0.5 else math.exp(-2) * (4 * t - 1)


def patched_exp_inverse(level: float) -> float:
    return -1 / math.log(level) if level <= math.exp(-2) else 0.5 + (level * math.exp(2) - 1) / 4


def log_patched_exp(t: float) -> float:
    t = abs(t)
    return -1 / t if t <= 0.5 else -2 + math.log(4 * t - 1)


def log_patched_ratio(t: float, K: float = 2.0) -> float:
    return log_patched_exp(K * t) - log_patched_exp(t)


def orlicz_dn(n: int, K: float = 2.0) -> float:
    """``inf M(Kt)/M(t)`` over ``(0, M^{-1}(1/n)]`` by bounded scalar minimisation with endpoints."""
    tn = patched_exp_inverse(1.0 / n)
    cands = [log_patched_ratio(tn, K)]
    # the ratio is smooth on each piece between the kinks 1/(2K) and 1/2
    knots = sorted({tn * 1e-3, tn} | {k for k in (0.5 / K, 0.5) if k < tn})
    for lo, hi in zip(knots, knots[1:]):
        res = minimize_scalar(lambda t: log_patched_ratio(t, K), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        cands += [res.fun, log_patched_ratio(lo, K), log_patched_ratio(hi, K)]
    return math.exp(min(cands))


def psi(eps: float, I, n: int) -> Fraction:
    return Fraction(1) + Fraction(eps) / 2 / 2 ** n * (1 + sum(Fraction(1, 4 * 2 ** i) for i in I))


def vertices(halfspaces: np.ndarray) -> np.ndarray:
    """Vertices of ``{y : A y <= 1}`` via scipy's halfspace intersection (origin is interior)."""
    A = np.asarray(halfspaces, dtype=float)
    hs = HalfspaceIntersection(np.hstack([A, -np.ones((len(A), 1))]), np.zeros(A.shape[1]))
    pts = hs.intersections
    hull = ConvexHull(pts)
    return pts[hull.vertices]


def triple_norm_explicit(pieces, x: np.ndarray, b) -> float:
    """``max_n a_n max_{g in G_n} |g.x|`` with ``a_n`` from its definition."""
    N = len(pieces)
    bb = list(b) + [1.0]
    c = [min(bb[n:]) for n in range(N)]
    a = [(1 + 2.0 ** -(n + 1)) / c[n] for n in range(N)]
    return max(a[n] * max((abs(float(np.dot(g, x))) for g in pieces[n]), default=0.0) for n in range(N))


def triple_norm_schauder(norm, x: dict[int, float], dim: int, b) -> float:
    """``max_n a_n ||P_n x||`` (``H_n`` = functionals supported on ``1..n``)."""
    bb = list(b[:dim]) + [1.0]
    c = [min(bb[n:]) for n in range(dim)]
    best = 0.0
    for n in range(1, dim + 1):
        a = (1 + 2.0 ** -n) / c[n - 1]
        best = max(best, a * norm({k: v for k, v in x.items() if k <= n}))
    return best
