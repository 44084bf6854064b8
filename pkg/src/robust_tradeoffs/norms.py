"""Perturbation norms and their duals."""

from __future__ import annotations

import enum

import numpy as np


class Norm(str, enum.Enum):
    L2 = "l2"
    LINF = "linf"


def dual_norm(w, norm: Norm) -> float:
    """Largest value of w.delta over the unit ball of ``norm``."""
    w = np.asarray(w, dtype=float)
    if Norm(norm) is Norm.L2:
        return float(np.linalg.norm(w))
    return float(np.abs(w).sum())


def dual_norm_subgradient(w, norm: Norm) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if Norm(norm) is Norm.L2:
        n = np.linalg.norm(w)
        return w / n if n > 0 else np.zeros_like(w)
    return np.sign(w)
