"""Curvature, permutation integrals, and corona decompositions of finite
atomic planar measures."""

from .kernels import K_INF, K_ZERO, KernelParam, Line, kt
from .measure import Ball, DiscreteMeasure, generate, load_json, pushforward, save_json

__all__ = [
    "Ball",
    "DiscreteMeasure",
    "KernelParam",
    "K_INF",
    "K_ZERO",
    "Line",
    "kt",
    "generate",
    "pushforward",
    "load_json",
    "save_json",
]

__version__ = "0.1.0"
