"""Truncated singular integral operators on discrete measures.

The truncated operator at a point sums kernel values against atoms at
distance at least the cutoff; the complement of the open exclusion ball
is kept, so the comparison with truncated triple integrals uses one and
the same convention on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import K_INF, K_ZERO, KernelParam, kernel_values
from .measure import DiscreteMeasure
from .permutations import perm_measure
from .reduction import deterministic_sum

__all__ = [
    "TruncationGrid",
    "MvReport",
    "Theorem1Ratios",
    "default_grid",
    "apply_truncated",
    "t1_values",
    "l2_norm_T1",
    "sup_l2_norm",
    "mv_identity_report",
    "theorem1_ratios",
    "cauchy_l2_norm",
]


@dataclass(frozen=True)
class TruncationGrid:
    epsilons: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) == 0:
            raise ValueError("empty truncation grid")
        if any(e <= 0 for e in eps):
            raise ValueError("truncation lengths must be positive")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError("truncation grid must be strictly increasing")
        object.__setattr__(self, "epsilons", eps)


def default_grid(mu: DiscreteMeasure, n: int = 16) -> TruncationGrid:
    """Geometric grid from the discretization scale to the diameter.

    The discrete norm is piecewise constant in the cutoff between pairwise
    distances, and its sup typically lives at small cutoffs, where the
    geometric grid is densest.
    """
    lo = mu.scale
    hi = max(mu.diameter, lo * 2)
    return TruncationGrid(tuple(np.geomspace(lo, hi, n)))


def apply_truncated(
    k: KernelParam, mu: DiscreteMeasure, f: np.ndarray, eps: float, z: complex
) -> float:
    """Truncated operator applied to per-atom values ``f`` at the point ``z``."""
    if eps <= 0:
        raise ValueError("truncation length must be positive")
    dz = complex(z) - mu.points
    keep = np.abs(dz) >= eps
    vals = kernel_values(k, dz) * np.asarray(f, dtype=float) * mu.weights
    return deterministic_sum(np.where(keep, vals, 0.0))


def t1_values(k: KernelParam, mu: DiscreteMeasure, eps: float) -> np.ndarray:
    """The truncated transform of the constant 1 at every atom."""
    if eps <= 0:
        raise ValueError("truncation length must be positive")
    dz = mu.points[:, None] - mu.points[None, :]
    mask = np.abs(dz) >= eps
    kv = np.where(mask, kernel_values(k, dz), 0.0)
    return kv @ mu.weights


def l2_norm_T1(k: KernelParam, mu: DiscreteMeasure, eps: float) -> float:
    """Weighted l2 norm of the truncated transform of 1."""
    if len(mu) == 0:
        return 0.0
    t1 = t1_values(k, mu, eps)
    return math.sqrt(deterministic_sum(t1 * t1 * mu.weights))


def sup_l2_norm(
    k: KernelParam, mu: DiscreteMeasure, grid: TruncationGrid
) -> tuple[float, float]:
    """Max of the truncated norm over the grid and the attaining cutoff."""
    best_val, best_eps = -1.0, grid.epsilons[0]
    for eps in grid.epsilons:
        v = l2_norm_T1(k, mu, eps)
        if v > best_val:
            best_val, best_eps = v, eps
    return best_val, best_eps


def cauchy_l2_norm(mu: DiscreteMeasure, eps: float) -> float:
    """Weighted l2 norm of the truncated complex Cauchy transform of 1."""
    if eps <= 0:
        raise ValueError("truncation length must be positive")
    if len(mu) == 0:
        return 0.0
    dz = mu.points[:, None] - mu.points[None, :]
    mask = np.abs(dz) >= eps
    with np.errstate(divide="ignore", invalid="ignore"):
        kv = np.where(mask, 1.0 / np.where(dz == 0, 1.0, dz), 0.0)
    t1 = kv @ mu.weights.astype(complex)
    return math.sqrt(deterministic_sum((t1.real**2 + t1.imag**2) * mu.weights))


@dataclass(frozen=True)
class MvReport:
    lhs: float
    p_third: float
    remainder: float
    normalized_remainder: float
    eps: float
    growth: float
    mass: float


def mv_identity_report(k: KernelParam, mu: DiscreteMeasure, eps: float) -> MvReport:
    """Both sides of the squared-norm / third-of-permutation identity with
    matching truncations, plus the remainder normalized by the growth term."""
    lhs = l2_norm_T1(k, mu, eps) ** 2
    p = perm_measure(k, mu, eps=eps).value
    growth = mu.linear_growth_constant() if len(mu) else 0.0
    mass = mu.total_mass
    remainder = lhs - p / 3.0
    denom = growth * growth * mass
    normalized = remainder / denom if denom > 0 else 0.0
    return MvReport(lhs, p / 3.0, remainder, normalized, float(eps), growth, mass)


@dataclass(frozen=True)
class Theorem1Ratios:
    sup_inf: float
    sup_0: float
    eps_inf: float
    eps_0: float
    mass: float
    growth: float
    ratio_fwd: float
    ratio_bwd: float


def theorem1_ratios(mu: DiscreteMeasure, grid: TruncationGrid) -> Theorem1Ratios:
    """The two dimensionless ratios comparing the sup norms of the two
    endpoint operators, normalized by the growth term."""
    if len(mu) == 0:
        raise ValueError("empty measure")
    sup_inf, eps_inf = sup_l2_norm(K_INF, mu, grid)
    sup_0, eps_0 = sup_l2_norm(K_ZERO, mu, grid)
    mass = mu.total_mass
    growth = mu.linear_growth_constant()
    reg = growth * math.sqrt(mass)
    return Theorem1Ratios(
        sup_inf,
        sup_0,
        eps_inf,
        eps_0,
        mass,
        growth,
        sup_inf / (sup_0 + reg),
        sup_0 / (sup_inf + reg),
    )
