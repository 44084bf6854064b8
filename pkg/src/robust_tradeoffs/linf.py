"""Robust classifiers when the adversary perturbs each coordinate by at most eps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .norms import Norm
from .three_class import (Case, IntervalClassifier, ThreeClassModel, alpha_star,
                          robust_risk_interval)
from .two_class import LinearClassifier, TwoClassModel


@dataclass(frozen=True)
class SoftThresholdResult:
    shrunk: np.ndarray
    kept_support: tuple[int, ...]


def soft_threshold(v, eps: float) -> SoftThresholdResult:
    """Shrink every coordinate toward zero by eps, clipping at zero."""
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative shrinkage {eps}")
    v = np.asarray(v, dtype=float)
    shrunk = np.where(np.abs(v) > eps, v - eps * np.sign(v), 0.0)
    return SoftThresholdResult(shrunk, tuple(int(i) for i in np.flatnonzero(shrunk)))


def water_filling_objective(w, mu, eps: float) -> float:
    """(w.mu - eps*||w||_1) / ||w||_2, the normalized worst-case margin."""
    w = np.asarray(w, dtype=float)
    return float((w @ np.asarray(mu, dtype=float) - eps * np.abs(w).sum()) / np.linalg.norm(w))


def optimal_linf_linear(model: TwoClassModel, eps: float) -> LinearClassifier:
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    top = float(np.abs(model.mu).max())
    if eps >= top:
        raise PreconditionError("eps < ||mu||_inf",
                                f"all coordinates thresholded to zero: budget {eps} >= {top}")
    return LinearClassifier(soft_threshold(model.mu, eps).shrunk, model.sigma**2 * model.q / 2)


@dataclass(frozen=True)
class LinfIntervalResult:
    classifier: IntervalClassifier
    case: Case
    risks: dict


def optimal_linf_interval(model: ThreeClassModel, eps: float) -> LinfIntervalResult:
    """Best of the two soft-thresholded interval rules for symmetric spacings.

    Each candidate's thresholds are the one-dimensional optima along its own
    unit direction, where the budget becomes eps * ||w||_1.
    """
    if not math.isclose(model.lambda_plus, -model.lambda_minus, rel_tol=1e-12):
        raise PreconditionError("lambda- = -lambda+", "the coordinate-wise result needs symmetric spacings")
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    mean_plus = model.lambda_plus * model.mu
    top = float(np.abs(mean_plus).max())
    if not eps < top / 2:
        raise PreconditionError("eps < ||mu||_inf / 2", f"budget {eps} >= {top / 2}")
    s = model.sigma
    log_m, log_p = math.log(model.pi_minus), math.log(model.pi_plus)

    def unit(v):
        return v / np.linalg.norm(v)

    w1 = unit(soft_threshold(mean_plus, eps).shrunk)
    a1, e1 = float(mean_plus @ w1) / s, eps * np.abs(w1).sum() / s
    c1 = s * (log_m - log_p) / (2 * (a1 - e1))
    first = IntervalClassifier(w1, c1, c1)
    risks = {Case.RARE_ZERO: robust_risk_interval(model, first, eps, Norm.LINF)}
    best, case = first, Case.RARE_ZERO

    if model.pi_zero > 0:
        w2 = unit(soft_threshold(mean_plus, 2 * eps).shrunk)
        a2, e2 = float(mean_plus @ w2) / s, eps * np.abs(w2).sum() / s
        log_0 = math.log(model.pi_zero)
        c_plus = s * (a2 / 2 + (log_0 - log_p) / (a2 - 2 * e2))
        c_minus = s * (-a2 / 2 - (log_0 - log_m) / (a2 - 2 * e2))
        if c_plus >= c_minus:
            second = IntervalClassifier(w2, c_plus, c_minus)
            risks[Case.FREQUENT_ZERO] = robust_risk_interval(model, second, eps, Norm.LINF)
            if risks[Case.FREQUENT_ZERO] < risks[Case.RARE_ZERO]:
                best, case = second, Case.FREQUENT_ZERO
    return LinfIntervalResult(best, case, risks)


def optimal_linf_one_sparse_cutoff(mu_j: float, gamma: float, eps: float) -> float:
    """Cutoff alpha for a mean with a single nonzero coordinate mu_j.

    Axis-aligned weights make both budgets act identically, so this is the
    three-class cutoff with spacings +-mu_j.
    """
    if not mu_j > 0:
        raise PreconditionError("mu_j > 0", f"got {mu_j}")
    if not 0 <= eps < mu_j / 2:
        raise PreconditionError("eps < mu_j / 2", f"budget {eps} with mu_j {mu_j}")
    model = ThreeClassModel.from_gamma(gamma, 0.5, -mu_j, mu_j)
    return alpha_star(model, eps)
