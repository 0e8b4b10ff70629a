from __future__ import annotations

from typing import Callable

from ..core import DEFAULT_TOL, PolyrenormError, SparseVector, ToleranceConfig

# 2^1100 overflows a double, so more steps can never be needed
_MAX_DOUBLINGS = 1100


def luxemburg_scale(phi: Callable[[float], float], tol: ToleranceConfig = DEFAULT_TOL,
                    start: float = 1.0) -> float:
    """Smallest ``lam > 0`` with ``phi(lam) <= 1`` for ``phi(lam) = modular(x / lam)``.

    ``phi`` must be non-increasing in ``lam``.  The bracket is found by
    doubling/halving from ``start``, then bisected until its relative width
    is below ``tol.bisect_tol``.  The upper end is returned, so
    ``phi(result) <= 1`` always holds.
    """
    lo = hi = float(start)
    v = phi(hi)
    prev = v
    steps = 0
    if v > 1.0:
        while v > 1.0:
            lo = hi
            hi *= 2.0
            v = phi(hi)
            if v > prev * (1 + 1e-12) + 1e-300:
                raise PolyrenormError("invalid modular: not non-increasing in the scale")
            prev = v
            steps += 1
            if steps > _MAX_DOUBLINGS:
                raise PolyrenormError("invalid modular: no finite scale reaches the unit level")
    else:
        while True:
            lo = hi / 2.0
            w = phi(lo)
            if w + 1e-12 * max(w, 1.0) < prev:
                raise PolyrenormError("invalid modular: not non-increasing in the scale")
            prev = w
            if w > 1.0:
                break
            hi = lo
            steps += 1
            if steps > _MAX_DOUBLINGS:
                raise PolyrenormError("invalid modular: scale collapsed to zero")
    while hi - lo > tol.bisect_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def luxemburg_norm(modular: Callable[[SparseVector], float], x: SparseVector,
                   tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``inf{lam > 0 : modular(x / lam) <= 1}`` by bisection; 0 for ``x = 0``."""
    if not x:
        return 0.0

    def phi(lam: float) -> float:
        try:
            y = x / lam
        except PolyrenormError as exc:
            raise PolyrenormError("invalid modular: scale collapsed to zero") from exc
        return modular(y)

    return luxemburg_scale(phi, tol)
