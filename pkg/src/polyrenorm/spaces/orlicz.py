"""Orlicz functions, the Orlicz modular and the growth quantities ``d_n``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..core import PolyrenormError, SparseVector

_E2 = math.exp(-2.0)


@dataclass(frozen=True)
class OrliczFunction:
    """Named even Orlicz function.

    ``power``: ``|t|^p`` with ``p >= 1``.
    ``patched_exponential``: ``exp(-1/t)`` on ``(0, 1/2]``, continued affinely
    past ``1/2`` with matching value and slope (``exp(-1/t)`` stops being
    convex at ``t = 1/2``).
    """

    name: str
    p: float = 2.0

    def __post_init__(self) -> None:
        if self.name not in ("power", "patched_exponential"):
            raise PolyrenormError(f"unknown Orlicz function {self.name!r}")
        if self.name == "power" and self.p < 1:
            raise PolyrenormError("power Orlicz function needs p >= 1")

    def __call__(self, t: float) -> float:
        t = abs(t)
        if self.name == "power":
            return t ** self.p
        if t == 0.0:
            return 0.0
        if t <= 0.5:
            return math.exp(-1.0 / t)
        return _E2 * (4.0 * t - 1.0)

    def log(self, t: float) -> float:
        t = abs(t)
        if t == 0.0:
            return -math.inf
        if self.name == "power":
            return self.p * math.log(t)
        if t <= 0.5:
            return -1.0 / t
        return -2.0 + math.log(4.0 * t - 1.0)

    def derivative(self, t: float) -> float:
        s = math.copysign(1.0, t)
        t = abs(t)
        if self.name == "power":
            return s * self.p * t ** (self.p - 1.0) if t > 0 or self.p == 1 else 0.0
        if t == 0.0:
            return 0.0
        if t <= 0.5:
            return s * math.exp(-1.0 / t - 2.0 * math.log(t))
        return s * 4.0 * _E2

    def vectorized(self, t: np.ndarray) -> np.ndarray:
        t = np.abs(t)
        if self.name == "power":
            return t ** self.p
        with np.errstate(divide="ignore", over="ignore"):
            small = np.exp(-1.0 / np.where(t > 0, t, 1.0))
        return np.where(t == 0, 0.0, np.where(t <= 0.5, small, _E2 * (4.0 * t - 1.0)))

    def inverse(self, level: float) -> float:
        """``M^{-1}(level)`` for ``level > 0``."""
        if level <= 0:
            raise PolyrenormError("inverse needs a positive level")
        if self.name == "power":
            return level ** (1.0 / self.p)
        if level <= _E2:
            return -1.0 / math.log(level)
        return 0.5 + (level / _E2 - 1.0) / 4.0

    def to_json(self) -> dict:
        return {"name": self.name, "p": self.p} if self.name == "power" else {"name": self.name}


def validate_orlicz_function(M: OrliczFunction, grid: np.ndarray | None = None) -> None:
    """Check ``M(0) = 0``, positivity, monotonicity and midpoint convexity on a grid."""
    if grid is None:
        grid = np.linspace(0.0, 4.0, 801)[1:]
    if M(0.0) != 0.0:
        raise PolyrenormError("Orlicz function must vanish at 0")
    vals = np.array([M(t) for t in grid])
    if np.any(vals <= 0):
        raise PolyrenormError("degenerate Orlicz function: M(t) = 0 for some t > 0")
    if np.any(np.diff(vals) < -1e-15):
        raise PolyrenormError("Orlicz function must be nondecreasing")
    mids = np.array([M(0.5 * (a + b)) for a, b in zip(grid[:-2], grid[2:])])
    if np.any(mids > 0.5 * (vals[:-2] + vals[2:]) + 1e-12):
        raise PolyrenormError("Orlicz function must be convex")


@dataclass(frozen=True)
class OrliczDescriptor:
    M: OrliczFunction
    K: float

    def __post_init__(self) -> None:
        if not self.K > 1:
            raise PolyrenormError("K must exceed 1")
        validate_orlicz_function(self.M)


def orlicz_modular(M: OrliczFunction, x: SparseVector) -> float:
    return math.fsum(M(v) for _, v in x.items)


def orlicz_scaled_modular(M: OrliczFunction, x: SparseVector):
    a = np.abs(np.array([v for _, v in x.items], dtype=float))

    def phi(lam: float) -> float:
        return float(M.vectorized(a / lam).sum())

    return phi


def _log_ratio(M: OrliczFunction, K: float, t: float) -> float:
    lt = M.log(t)
    if lt == -math.inf:
        raise PolyrenormError("degenerate Orlicz function: M(t) = 0 for some t > 0")
    return M.log(K * t) - lt


def orlicz_limit_check(desc: OrliczDescriptor, t_grid, threshold: float = 100.0) -> tuple[bool, float]:
    """Test ``M(Kt)/M(t) -> infinity`` along a grid decreasing towards 0.

    Passes iff the ratio strictly increases along the grid and exceeds
    ``threshold`` at its last (smallest) point.  Returns the pass flag and
    the smallest ratio seen.
    """
    ts = [float(t) for t in t_grid]
    if not ts or any(t <= 0 or t > 0.5 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise PolyrenormError("grid must be strictly decreasing inside (0, 1/2]")
    ratios = [math.exp(_log_ratio(desc.M, desc.K, t)) for t in ts]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    return bool(increasing and ratios[-1] > threshold), min(ratios)


@dataclass(frozen=True)
class GrowthBound:
    n: int
    t_n: float
    d_n: float
    b_n: float


def orlicz_dn(desc: OrliczDescriptor, n: int, grid_size: int = 10_000) -> GrowthBound:
    """``d_n = inf{M(Kt)/M(t) : 0 < t <= M^{-1}(1/n)}`` by grid minimisation.

    The grid is ``t_n * k / grid_size`` for ``k = 1..grid_size``, so the
    right endpoint ``t_n = M^{-1}(1/n)`` is always sampled.  Also returns
    ``b_n = (1 - 1/d_n)(1 - 2^{-n-1})``, strictly below ``(d_n - 1)/d_n``
    in exact arithmetic (the factor rounds to 1 in floating point for n > 52).
    """
    if n < 1:
        raise PolyrenormError("n must be >= 1")
    level = 1.0 / n
    M = desc.M
    hi = 1.0
    while M(hi) < level:
        hi *= 2.0
    t_n = brentq(lambda t: M(t) - level, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    ks = np.arange(1, grid_size + 1, dtype=float)
    ts = t_n * ks / grid_size
    logs = np.array([_log_ratio(M, desc.K, t) if M.log(t) > -math.inf else math.inf for t in ts])
    if not np.isfinite(logs).any():
        raise PolyrenormError(f"1/{n} is outside the usable range of M on the grid")
    d_n = float(math.exp(np.min(logs)))
    if not d_n > 1:
        raise PolyrenormError(f"d_{n} = {d_n} does not exceed 1")
    b_n = (1.0 - 1.0 / d_n) * (1.0 - 2.0 ** (-n - 1))
    return GrowthBound(n=n, t_n=float(t_n), d_n=d_n, b_n=b_n)
