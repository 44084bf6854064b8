"""Two-class symmetric Gaussian mixture: Bayes and robust-optimal classifiers.

Data follow x | y ~ N(y * mu, sigma^2 I) with P(y = +1) = pi.  Internally
every formula works with the noise scaled to one (mu / sigma, eps / sigma);
returned classifiers act on the original inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import normal
from .errors import PreconditionError
from .norms import Norm, dual_norm
from .roots import increasing_root


def _as_vector(v) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if arr.ndim != 1:
        raise PreconditionError("vector input", f"expected a 1-D vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TwoClassModel:
    mu: np.ndarray
    sigma: float = 1.0
    pi: float = 0.5

    def __post_init__(self):
        mu = _as_vector(self.mu)
        object.__setattr__(self, "mu", mu)
        if not np.all(np.isfinite(mu)) or not np.any(mu):
            raise PreconditionError("mu != 0", "mean vector must be finite and nonzero")
        if not self.sigma > 0:
            raise PreconditionError("sigma > 0", f"noise level {self.sigma}")
        if not 0.0 < self.pi < 1.0:
            raise PreconditionError("0 < pi < 1", f"class proportion {self.pi}")

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def mu_norm(self) -> float:
        return float(np.linalg.norm(self.mu))

    @property
    def q(self) -> float:
        """Log-odds ln((1 - pi) / pi)."""
        return math.log1p(-self.pi) - math.log(self.pi)

    @property
    def snr(self) -> float:
        return self.mu_norm / self.sigma


@dataclass(frozen=True)
class LinearClassifier:
    """Predicts +1 when x.w - c >= 0 and -1 otherwise."""

    w: np.ndarray
    c: float

    def __post_init__(self):
        w = _as_vector(self.w)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", float(self.c))
        if not np.any(w):
            raise PreconditionError("w != 0", "weight vector is zero")

    def predict(self, x):
        scores = np.asarray(x, dtype=float) @ self.w - self.c
        return np.where(scores >= 0, 1, -1)


@dataclass(frozen=True)
class ConstantClassifier:
    """Always predicts ``label``; arises when restriction removes every weight."""

    label: int

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] if x.ndim > 1 else (), self.label)


def bayes_risk_scalar(m: float, pi: float) -> float:
    """Bayes risk for means +-m (m >= 0) at unit noise."""
    if m <= 0:
        return min(pi, 1.0 - pi)
    q = math.log1p(-pi) - math.log(pi)
    return pi * normal.cdf(q / (2 * m) - m) + (1 - pi) * normal.sf(q / (2 * m) + m)


def robust_bayes_risk_scalar(m: float, pi: float, eps: float) -> float:
    """Smallest robust risk for means +-m at unit noise under an eps budget."""
    return bayes_risk_scalar(max(m - eps, 0.0), pi)


def bayes_risk(model: TwoClassModel) -> float:
    return bayes_risk_scalar(model.snr, model.pi)


def bayes_classifier(model: TwoClassModel) -> LinearClassifier:
    return LinearClassifier(model.mu, model.sigma**2 * model.q / 2)


def _check_budget(model: TwoClassModel, eps: float):
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    if eps >= model.mu_norm:
        raise PreconditionError(
            "eps < ||mu||",
            f"nontrivial classification impossible: budget {eps} >= ||mu|| = {model.mu_norm}")


def optimal_robust_classifier(model: TwoClassModel, eps: float) -> LinearClassifier:
    _check_budget(model, eps)
    shrink = 1.0 - eps / model.mu_norm
    return LinearClassifier(model.mu * shrink, model.sigma**2 * model.q / 2)


def optimal_robust_risk(model: TwoClassModel, eps: float) -> float:
    _check_budget(model, eps)
    return robust_bayes_risk_scalar(model.snr, model.pi, eps / model.sigma)


def robust_risk_linear(model: TwoClassModel, clf: LinearClassifier, eps: float,
                       norm: Norm = Norm.L2) -> float:
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    if clf.w.size != model.dim:
        raise PreconditionError("dimension match", f"classifier has {clf.w.size} weights, model {model.dim}")
    scale = model.sigma * float(np.linalg.norm(clf.w))
    shift = eps * dual_norm(clf.w, norm)
    signal = float(clf.w @ model.mu)
    return (model.pi * normal.cdf((shift + clf.c - signal) / scale)
            + (1 - model.pi) * normal.cdf((shift - clf.c - signal) / scale))


def standard_risk_linear(model: TwoClassModel, clf: LinearClassifier) -> float:
    return robust_risk_linear(model, clf, 0.0)


@dataclass(frozen=True)
class ParetoRow:
    c: float
    std_risk: float
    robust_risk: float
    on_frontier: bool


def pareto_frontier(model: TwoClassModel, eps: float, grid: Sequence[float]) -> list[ParetoRow]:
    """Both risks of x -> sign(x.mu/||mu|| - c) for every c in the grid.

    Rows come back sorted by c; ``on_frontier`` marks the non-dominated ones.
    """
    cs = sorted(float(c) for c in grid)
    if not cs:
        raise PreconditionError("non-empty grid", "threshold grid is empty")
    if eps <= 0:
        raise PreconditionError("eps > 0", f"budget {eps} must be positive")
    direction = model.mu / model.mu_norm
    std = [robust_risk_linear(model, LinearClassifier(direction, c), 0.0) for c in cs]
    rob = [robust_risk_linear(model, LinearClassifier(direction, c), eps) for c in cs]
    flags = _non_dominated(std, rob)
    return [ParetoRow(c, s, r, f) for c, s, r, f in zip(cs, std, rob, flags)]


def _non_dominated(xs, ys) -> list[bool]:
    order = sorted(range(len(xs)), key=lambda i: (xs[i], ys[i]))
    flags = [False] * len(xs)
    best_before = math.inf
    k = 0
    while k < len(order):
        j = k
        while j < len(order) and xs[order[j]] == xs[order[k]]:
            j += 1
        group_min = ys[order[k]]
        if group_min < best_before:
            for i in order[k:j]:
                flags[i] = ys[i] == group_min
        best_before = min(best_before, group_min)
        k = j
    return flags


@dataclass(frozen=True)
class BudgetDistribution:
    """Finite distribution over budgets: atoms are (eps, probability)."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(e), float(p)) for e, p in self.atoms)
        if not atoms:
            raise PreconditionError("non-empty atoms", "budget distribution has no atoms")
        if any(e < 0 or p < 0 for e, p in atoms):
            raise PreconditionError("eps >= 0, prob >= 0", "negative atom")
        if abs(sum(p for _, p in atoms) - 1.0) > 1e-12:
            raise PreconditionError("probabilities sum to 1", f"sum is {sum(p for _, p in atoms)}")
        object.__setattr__(self, "atoms", atoms)


def _budget_stationarity(model: TwoClassModel, Q: BudgetDistribution):
    m = model.snr
    terms = [(p, m - e / model.sigma) for e, p in Q.atoms if p > 0]
    pi = model.pi

    def a(c: float) -> float:
        return sum(p * math.exp(-s * s / 2) * (pi * math.exp(c * s) - (1 - pi) * math.exp(-c * s))
                   for p, s in terms)

    return a


def weighted_budget_threshold(model: TwoClassModel, Q: BudgetDistribution) -> float:
    """Optimal threshold on x.mu/||mu|| when the budget is random with law Q."""
    for e, p in Q.atoms:
        if p > 0 and e >= model.mu_norm:
            raise PreconditionError("eps < ||mu||", f"atom {e} >= ||mu|| = {model.mu_norm}")
    a = _budget_stationarity(model, Q)
    return model.sigma * increasing_root(a, -1.0, 1.0, limit=1e3, xtol=1e-13)


def equivalent_noise_level(model: TwoClassModel, eps: float) -> float:
    """Extra isotropic noise whose Bayes problem has the robust problem's SNR."""
    _check_budget(model, eps)
    ratio = model.mu_norm / (model.mu_norm - eps)
    return model.sigma * math.sqrt(ratio * ratio - 1.0)


@dataclass(frozen=True)
class CovarianceModel:
    base: TwoClassModel
    sigma_matrix: np.ndarray

    def __post_init__(self):
        S = np.array(self.sigma_matrix, dtype=float)
        p = self.base.dim
        if S.shape != (p, p):
            raise PreconditionError("covariance shape", f"expected ({p}, {p}), got {S.shape}")
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise PreconditionError("symmetric covariance", "covariance is not symmetric")
        if self.base.sigma != 1.0:
            raise PreconditionError("base sigma = 1", "noise scale belongs in the covariance matrix")
        S.setflags(write=False)
        object.__setattr__(self, "sigma_matrix", S)

    def eigen_scale(self) -> float:
        """lambda with covariance @ mu = lambda * mu, mu in the smallest eigenspace."""
        mu = self.base.mu
        image = self.sigma_matrix @ mu
        lam = float(np.linalg.norm(image) / np.linalg.norm(mu))
        if np.linalg.norm(image - lam * mu) > 1e-8 * max(np.linalg.norm(image), 1e-300):
            raise PreconditionError("mu in V", "assumption mu in V violated: mu is not an eigenvector")
        smallest = float(np.linalg.eigvalsh(self.sigma_matrix)[0])
        if smallest <= 0:
            raise PreconditionError("positive definite", "covariance is not positive definite")
        if lam > smallest * (1 + 1e-8):
            raise PreconditionError("mu in V", "assumption mu in V violated: eigenvalue is not minimal")
        return lam


def optimal_robust_classifier_gencov(model: CovarianceModel, eps: float) -> LinearClassifier:
    """Robust-optimal linear rule when mu lies in the smallest eigenspace.

    The threshold carries lambda (not its square root): with covariance
    s^2 I this gives s^2 q / 2, the same rule as the isotropic case.
    """
    lam = model.eigen_scale()
    _check_budget(model.base, eps)
    shrink = 1.0 - eps / model.base.mu_norm
    return LinearClassifier(model.base.mu * shrink, lam * model.base.q / 2)


def robust_risk_linear_gencov(model: CovarianceModel, clf: LinearClassifier, eps: float,
                              norm: Norm = Norm.L2) -> float:
    base = model.base
    scale = math.sqrt(float(clf.w @ model.sigma_matrix @ clf.w))
    shift = eps * dual_norm(clf.w, norm)
    signal = float(clf.w @ base.mu)
    return (base.pi * normal.cdf((shift + clf.c - signal) / scale)
            + (1 - base.pi) * normal.cdf((shift - clf.c - signal) / scale))


def reduce_low_dimensional(mask, clf: LinearClassifier):
    """Restrict a linear rule to masked coordinates, the rest set to zero."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != clf.w.shape:
        raise PreconditionError("mask matches dimension", f"mask shape {mask.shape}")
    if not mask.any():
        raise PreconditionError("non-empty mask", "coordinate mask selects nothing")
    w = np.where(mask, clf.w, 0.0)
    if not np.any(w):
        return ConstantClassifier(1 if -clf.c >= 0 else -1)
    return LinearClassifier(w, clf.c)
