"""Deterministic unit-sphere samples: corner cases first, then seeded random directions."""
from __future__ import annotations

import itertools

import numpy as np

from .core import SparseVector
from .spaces import SpaceDescriptor


def corner_points(dim: int) -> list[SparseVector]:
    pts = [SparseVector.basis(k) for k in range(1, dim + 1)]
    for i, j in itertools.combinations(range(1, min(dim, 4) + 1), 2):
        pts.append(SparseVector({i: 1.0, j: 1.0}))
        pts.append(SparseVector({i: 1.0, j: -1.0}))
    pts.append(SparseVector.from_dense([1.0] * dim))
    return pts


def random_points(dim: int, count: int, rng: np.random.Generator) -> list[SparseVector]:
    out = []
    while len(out) < count:
        s = int(rng.integers(1, dim + 1))
        ks = np.sort(rng.choice(np.arange(1, dim + 1), size=s, replace=False))
        vals = rng.normal(size=s)
        # occasionally let one coordinate dominate
        if rng.random() < 0.25:
            vals[int(rng.integers(s))] *= 10.0
        x = SparseVector(zip(ks.tolist(), vals.tolist()))
        if x:
            out.append(x)
    return out


def sphere_samples(space: SpaceDescriptor, count: int, rng: np.random.Generator) -> list[SparseVector]:
    """``count`` unit vectors of ``space``: corners (as many as fit) then random ones."""
    d = space.truncation_dim
    raw = corner_points(d)[:count]
    raw += random_points(d, count - len(raw), rng)
    return [space.normalize(x) for x in raw]


def section_directions(dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Unit directions in section coordinates (axes first, then Gaussian)."""
    axes = [np.eye(dim)[i] * s for i in range(dim) for s in (1.0, -1.0)]
    rand = rng.normal(size=(max(count - len(axes), 0), dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return (axes + list(rand))[:count]
