"""
Numerical helpers shared by the core package: finite differences,
domain samplers and nearest-neighbour distances.
"""

from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

FD_STEP_SCALE = 1e-6


def central_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray,
                     step_scale: float = FD_STEP_SCALE) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar function.

    The step along axis i is ``step_scale * (1 + |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = step_scale * (1.0 + abs(x[i]))
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        grad[i] = (fn(forward) - fn(backward)) / (2.0 * step)
    return grad


def grid_points(lo: np.ndarray, hi: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Tensor grid with ``counts[i]`` points on [lo_i, hi_i], as an (N, n) array."""
    axes = [np.linspace(l, h, int(k)) for l, h, k in zip(lo, hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def grid_half_diagonal(lo: np.ndarray, hi: np.ndarray, counts: Sequence[int]) -> float:
    """Half the diagonal of one grid cell: the exact Euclidean covering radius of the grid."""
    spacing = [(h - l) / (int(k) - 1) if int(k) > 1 else (h - l)
               for l, h, k in zip(lo, hi, counts)]
    return 0.5 * float(np.sqrt(np.sum(np.square(spacing))))


def latin_hypercube(lo: np.ndarray, hi: np.ndarray, n_points: int, seed: int) -> np.ndarray:
    """Seeded Latin-hypercube sample of the box [lo, hi]."""
    sampler = qmc.LatinHypercube(d=len(lo), seed=np.random.default_rng(seed))
    return qmc.scale(sampler.random(n_points), lo, hi)


def max_nearest_distance(samples: np.ndarray, probes: np.ndarray) -> float:
    """Largest Euclidean distance from a probe to its nearest sample."""
    if len(probes) == 0:
        return 0.0
    distances, _ = cKDTree(samples).query(probes, k=1)
    return float(np.max(distances))
