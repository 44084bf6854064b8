"""Three collinear Gaussian classes and robust interval classifiers.

Class y in {-1, 0, +1} has mean lambda_y * mu with lambda_0 = 0 and a unit
direction mu.  The proportions enter through gamma = sqrt(pi+/pi-) and the
normalized zero-class weight alpha = pi0 / sqrt(pi- pi+).  Whether the
optimal rule ignores the zero class or carves out a band for it is decided
by comparing alpha against the cutoff alpha_star.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry1d as g1
from . import normal
from .errors import NumericalFault, PreconditionError
from .norms import Norm, dual_norm
from .roots import decreasing_root_above
from .two_class import _as_vector, robust_bayes_risk_scalar


@dataclass(frozen=True)
class ThreeClassModel:
    mu: np.ndarray
    lambda_minus: float
    lambda_plus: float
    pi_minus: float
    pi_zero: float
    pi_plus: float
    sigma: float = 1.0
    mu_scale: float = field(default=1.0, init=False)

    def __post_init__(self):
        mu = _as_vector(self.mu)
        scale = float(np.linalg.norm(mu))
        if not scale > 0 or not math.isfinite(scale):
            raise PreconditionError("mu != 0", "direction must be finite and nonzero")
        unit = mu / scale
        unit.setflags(write=False)
        object.__setattr__(self, "mu", unit)
        object.__setattr__(self, "mu_scale", scale)
        object.__setattr__(self, "lambda_minus", float(self.lambda_minus) * scale)
        object.__setattr__(self, "lambda_plus", float(self.lambda_plus) * scale)
        if not self.lambda_minus < 0 < self.lambda_plus:
            raise PreconditionError("lambda- < 0 < lambda+", f"got {self.lambda_minus}, {self.lambda_plus}")
        if not self.sigma > 0:
            raise PreconditionError("sigma > 0", f"noise level {self.sigma}")
        props = (self.pi_minus, self.pi_zero, self.pi_plus)
        if abs(sum(props) - 1.0) > 1e-12:
            raise PreconditionError("proportions sum to 1", f"sum is {sum(props)}")
        if not (self.pi_minus > 0 and self.pi_plus > 0 and self.pi_zero >= 0):
            raise PreconditionError("pi-, pi+ > 0 and pi0 >= 0", f"proportions {props}")

    @classmethod
    def from_gamma(cls, gamma: float, pi_zero: float, lambda_minus: float = -1.0,
                   lambda_plus: float = 1.0, mu=(1.0,), sigma: float = 1.0):
        """Model with pi+/pi- = gamma^2 and the given zero-class share."""
        if not gamma > 0:
            raise PreconditionError("gamma > 0", f"got {gamma}")
        if not 0 <= pi_zero < 1:
            raise PreconditionError("0 <= pi0 < 1", f"got {pi_zero}")
        pi_minus = (1 - pi_zero) / (1 + gamma * gamma)
        return cls(mu, lambda_minus, lambda_plus, pi_minus, pi_zero, 1 - pi_zero - pi_minus, sigma)

    @property
    def gamma(self) -> float:
        return math.sqrt(self.pi_plus / self.pi_minus)

    @property
    def alpha(self) -> float:
        return self.pi_zero / math.sqrt(self.pi_minus * self.pi_plus)

    def mean(self, label: int) -> float:
        return {-1: self.lambda_minus, 0: 0.0, 1: self.lambda_plus}[label]

    def weights(self) -> dict[int, float]:
        return {-1: self.pi_minus, 0: self.pi_zero, 1: self.pi_plus}

    def _scaled(self, eps: float):
        if eps < 0:
            raise PreconditionError("eps >= 0", f"negative budget {eps}")
        s = self.sigma
        return self.lambda_plus / s, self.lambda_minus / s, eps / s


@dataclass(frozen=True)
class IntervalClassifier:
    """-1 when x.w <= c_minus, +1 when x.w >= c_plus, 0 in between."""

    w: np.ndarray
    c_plus: float
    c_minus: float

    def __post_init__(self):
        w = _as_vector(self.w)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c_plus", float(self.c_plus))
        object.__setattr__(self, "c_minus", float(self.c_minus))
        if not np.any(w):
            raise PreconditionError("w != 0", "weight vector is zero")
        if not self.c_minus <= self.c_plus:
            raise PreconditionError("c_minus <= c_plus", f"{self.c_minus} > {self.c_plus}")

    def predict(self, x):
        s = np.asarray(x, dtype=float) @ self.w
        return np.where(s >= self.c_plus, 1, np.where(s <= self.c_minus, -1, 0))


class Case(str, enum.Enum):
    RARE_ZERO = "RareZero"
    FREQUENT_ZERO = "FrequentZero"


@dataclass(frozen=True)
class PhaseDiagnostics:
    alpha: float
    alpha_bar: float
    alpha_hat: float
    alpha_star: float
    case: Case
    delta_at_alpha: float | None
    robust_risk: float
    globally_certified: bool


@dataclass(frozen=True)
class CandidateThresholds:
    equal: float
    separated_plus: float | None
    separated_minus: float | None


def bayes_thresholds(model: ThreeClassModel) -> tuple[float, float]:
    """(c_plus, c_minus) of the standard-risk Bayes rule along mu."""
    lp, lm, _ = model._scaled(0.0)
    log_m, log_p = math.log(model.pi_minus), math.log(model.pi_plus)
    middle = (lp + lm) / 2 + (log_m - log_p) / (lp - lm)
    if model.pi_zero == 0:
        return model.sigma * middle, model.sigma * middle
    log_0 = math.log(model.pi_zero)
    upper = lp / 2 + (log_0 - log_p) / lp
    lower = lm / 2 - (log_0 - log_m) / (-lm)
    return model.sigma * max(upper, middle), model.sigma * min(lower, middle)


def _require_small_budget(lp, lm, e, eps):
    if not e < min(lp, -lm) / 2:
        raise PreconditionError(
            "eps < min|lambda|/2",
            f"budget {eps} is outside the interval-classifier regime; use large_eps_reduction")


def candidate_thresholds(model: ThreeClassModel, eps: float) -> CandidateThresholds:
    lp, lm, e = model._scaled(eps)
    _require_small_budget(lp, lm, e, eps)
    log_m, log_p = math.log(model.pi_minus), math.log(model.pi_plus)
    equal = (lp + lm) / 2 + (log_m - log_p) / ((lp - lm) - 2 * e)
    if model.pi_zero == 0:
        return CandidateThresholds(model.sigma * equal, None, None)
    log_0 = math.log(model.pi_zero)
    plus = lp / 2 + (log_0 - log_p) / (lp - 2 * e)
    minus = lm / 2 - (log_0 - log_m) / (-lm - 2 * e)
    s = model.sigma
    return CandidateThresholds(s * equal, s * plus, s * minus)


def alpha_bar(model: ThreeClassModel, eps: float) -> float:
    """Smallest alpha for which the separated thresholds are over 2 eps apart."""
    lp, lm, e = model._scaled(eps)
    _require_small_budget(lp, lm, e, eps)
    log_gamma = math.log(model.gamma)
    return math.exp(-(lp - 2 * e) * (-lm - 2 * e) / 2 - (lp + lm) / ((lp - lm) - 4 * e) * log_gamma)


def alpha_hat(model: ThreeClassModel, eps: float) -> float:
    """Below this alpha the rare-zero rule is optimal among all classifiers."""
    lp, lm, e = model._scaled(eps)
    if not e < min(lp, -lm):
        raise PreconditionError("eps < min|lambda|", f"budget {eps} too large")
    log_gamma = math.log(model.gamma)
    return math.exp(-(lp - e) * (-lm - e) / 2 - (lp + lm) / ((lp - lm) - 2 * e) * log_gamma)


def _check_alpha(model, eps, alpha):
    bar = alpha_bar(model, eps)
    if alpha < bar * (1 - 1e-12):
        raise PreconditionError("alpha >= alpha_bar", f"alpha {alpha} < alpha_bar {bar}")


def delta(model: ThreeClassModel, eps: float, alpha: float) -> float:
    """Separated-minus-equal normalized risk difference, via two-class optima."""
    _check_alpha(model, eps, alpha)
    lp, lm, e = model._scaled(eps)
    g = model.gamma
    gi = 1.0 / g
    return ((g + alpha) * robust_bayes_risk_scalar(lp / 2, g / (g + alpha), e)
            + (gi + alpha) * robust_bayes_risk_scalar(-lm / 2, gi / (gi + alpha), e)
            - alpha
            - (g + gi) * robust_bayes_risk_scalar((lp - lm) / 2, g / (g + gi), e))


def delta_direct(model: ThreeClassModel, eps: float, alpha: float) -> float:
    """Same difference evaluated from the class-conditional tail probabilities."""
    _check_alpha(model, eps, alpha)
    lp, lm, e = model._scaled(eps)
    g = model.gamma
    log_a, log_g = math.log(alpha), math.log(g)
    c_plus = lp / 2 + (log_a - log_g) / (lp - 2 * e)
    c_minus = lm / 2 - (log_a + log_g) / (-lm - 2 * e)
    c_equal = (lp + lm) / 2 - 2 * log_g / ((lp - lm) - 2 * e)
    sep_minus = normal.sf(c_minus - e - lm) / g + alpha * normal.cdf(c_minus + e)
    sep_plus = alpha * normal.sf(c_plus - e) + g * normal.cdf(c_plus + e - lp)
    equal = normal.sf(c_equal - e - lm) / g + g * normal.cdf(c_equal + e - lp) + alpha
    return sep_minus + sep_plus - equal


def alpha_star(model: ThreeClassModel, eps: float) -> float:
    """Cutoff alpha where both candidate rules have equal robust risk."""
    bar = alpha_bar(model, eps)
    if eps == 0:
        # the three pairwise boundaries meet at alpha_bar, so the difference vanishes there
        return bar
    if delta(model, eps, bar) <= 0:
        return bar
    return decreasing_root_above(lambda a: delta(model, eps, a), bar, max(2 * bar, 10.0))


def _case_risk(model: ThreeClassModel, eps: float, case: Case) -> float:
    lp, lm, e = model._scaled(eps)
    pm, p0, pp = model.pi_minus, model.pi_zero, model.pi_plus
    if case is Case.RARE_ZERO:
        return p0 + (pp + pm) * robust_bayes_risk_scalar((lp - lm) / 2, pp / (pp + pm), e)
    return ((pp + p0) * robust_bayes_risk_scalar(lp / 2, pp / (pp + p0), e)
            + (pm + p0) * robust_bayes_risk_scalar(-lm / 2, pm / (pm + p0), e))


def optimal_interval_classifier(model: ThreeClassModel, eps: float):
    """Best interval rule along mu and its phase diagnostics."""
    cands = candidate_thresholds(model, eps)
    a_bar = alpha_bar(model, eps)
    a_hat = alpha_hat(model, eps)
    a_star = alpha_star(model, eps)
    a = model.alpha
    case = Case.RARE_ZERO if (model.pi_zero == 0 or a <= a_star) else Case.FREQUENT_ZERO
    if case is Case.RARE_ZERO:
        clf = IntervalClassifier(model.mu, cands.equal, cands.equal)
    else:
        clf = IntervalClassifier(model.mu, cands.separated_plus, cands.separated_minus)
    d = delta(model, eps, a) if a >= a_bar else None
    diag = PhaseDiagnostics(
        alpha=a, alpha_bar=a_bar, alpha_hat=a_hat, alpha_star=a_star, case=case,
        delta_at_alpha=d, robust_risk=_case_risk(model, eps, case),
        globally_certified=model.pi_zero <= a_hat * math.sqrt(model.pi_minus * model.pi_plus))
    return clf, diag


def interval_misclassification(model: ThreeClassModel, clf: IntervalClassifier, eps: float,
                               norm: Norm = Norm.L2) -> dict[int, float]:
    """Per-class robust error of an interval rule, by projecting onto its weights."""
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    wn = float(np.linalg.norm(clf.w))
    along = float(model.mu @ clf.w) / wn
    s = model.sigma
    budget = eps * dual_norm(clf.w, norm) / wn
    cp, cm = clf.c_plus / wn, clf.c_minus / wn
    m_minus = normal.sf((cm - budget - model.lambda_minus * along) / s)
    m_plus = normal.cdf((cp + budget - model.lambda_plus * along) / s)
    if cp - cm <= 2 * budget:
        m_zero = 1.0
    else:
        m_zero = min(1.0, normal.cdf((cm + budget) / s) + normal.sf((cp - budget) / s))
    return {-1: m_minus, 0: m_zero, 1: m_plus}


def robust_risk_interval(model: ThreeClassModel, clf: IntervalClassifier, eps: float,
                         norm: Norm = Norm.L2) -> float:
    errs = interval_misclassification(model, clf, eps, norm)
    return sum(model.weights()[y] * errs[y] for y in errs)


@dataclass(frozen=True)
class LargeBudgetResult:
    best: str
    risks: dict
    classifiers: dict


_PAIRS = {"minus_plus": (-1, 1, 0), "zero_plus": (0, 1, -1), "zero_minus": (-1, 0, 1)}


def large_eps_reduction(model: ThreeClassModel, eps: float) -> LargeBudgetResult:
    """Best of the three pairwise robust rules; the left-out class is always an error.

    Each rule splits the projection at the two-class robust threshold for
    its pair (or is constant once the budget reaches half the separation).
    """
    lp, lm, e = model._scaled(eps)
    means = {-1: lm, 0: 0.0, 1: lp}
    props = model.weights()
    risks, clfs = {}, {}
    for name, (low, high, other) in _PAIRS.items():
        pa, pb = props[low], props[high]
        half = (means[high] - means[low]) / 2
        if pa + pb == 0:
            risks[name] = 1.0
            clfs[name] = g1.PiecewiseClassifier1D.from_breakpoints([], [low])
            continue
        share = pb / (pa + pb)
        risks[name] = props[other] + (pa + pb) * robust_bayes_risk_scalar(half, share, e)
        if e < half:
            cut = (means[low] + means[high]) / 2 + math.log(pa / pb) / (2 * (half - e))
            clfs[name] = g1.PiecewiseClassifier1D.from_breakpoints([model.sigma * cut], [low, high])
        else:
            clfs[name] = g1.PiecewiseClassifier1D.from_breakpoints([], [high if pb >= pa else low])
    best = min(risks, key=lambda k: risks[k])
    return LargeBudgetResult(best, risks, clfs)


def ignore_separate_check(clf: g1.PiecewiseClassifier1D, eps: float) -> bool:
    """True when the zero region is empty or the +-1 regions are over 2 eps apart."""
    if clf.region(0).is_empty:
        return True
    return g1.distance(clf.region(1), clf.region(-1)) > 2 * eps


def match_interval_classifier(clf: g1.PiecewiseClassifier1D, model: ThreeClassModel) -> IntervalClassifier:
    """Interval rule whose +-1 standard errors equal those of ``clf``.

    Thresholds are placed so that each outer class loses exactly the same
    probability mass as under ``clf``.
    """
    s = model.sigma
    err_minus = g1.gaussian_measure(clf.region(-1).complement(), model.lambda_minus, s)
    err_plus = g1.gaussian_measure(clf.region(1).complement(), model.lambda_plus, s)
    c_minus = model.lambda_minus + s * normal.isf(err_minus)
    c_plus = model.lambda_plus + s * normal.quantile(err_plus)
    if c_minus > c_plus:
        # the construction guarantees c_minus <= c_plus; a crossing at
        # round-off level comes from inputs that are already a single threshold
        if c_minus - c_plus > 1e-9 * (1.0 + abs(c_plus)):
            raise NumericalFault(f"matched thresholds cross: {c_minus} > {c_plus}")
        c_minus = c_plus = (c_minus + c_plus) / 2
    return IntervalClassifier(model.mu, c_plus, c_minus)


def interval_as_piecewise(clf: IntervalClassifier, model: ThreeClassModel) -> g1.PiecewiseClassifier1D:
    """The 1-D rule along mu induced by an interval classifier with w parallel to mu."""
    wn = float(np.linalg.norm(clf.w))
    if not np.allclose(clf.w / wn, model.mu, atol=1e-12):
        raise PreconditionError("w parallel to mu", "only rules along the mean direction reduce to 1-D")
    return g1.PiecewiseClassifier1D.from_interval_thresholds(clf.c_minus / wn, clf.c_plus / wn)


@dataclass(frozen=True)
class FixtureValue:
    name: str
    computed: float
    reference: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.computed - self.reference) <= self.tolerance


@dataclass(frozen=True)
class FixtureReport:
    name: str
    values: tuple[FixtureValue, ...]
    conclusion: bool
    details: dict

    @property
    def passed(self) -> bool:
        return self.conclusion and all(v.ok for v in self.values)


def _no_dominating_linear() -> FixtureReport:
    eps = 0.3
    model = ThreeClassModel((1.0,), -1.0, 1.0, 0.25, 0.5, 0.25)
    clf = g1.PiecewiseClassifier1D.from_breakpoints([1.0, 2.15, 4.0], [-1, 1, 0, 1])
    errs = {y: g1.robust_misclassification(clf, y, model.mean(y), eps) for y in (-1, 0, 1)}
    risk = g1.robust_risk_exact_1d(clf, {y: model.mean(y) for y in errs}, model.weights(), eps)
    c_minus = normal.isf(errs[-1]) + model.lambda_minus + eps
    c_plus = normal.quantile(errs[1]) + model.lambda_plus - eps
    _, diag = optimal_interval_classifier(model, eps)
    tol = 1e-3
    values = (
        FixtureValue("M_minus", errs[-1], 0.0446, tol),
        FixtureValue("M_zero", errs[0], 0.9930, tol),
        FixtureValue("M_plus", errs[1], 0.8151, tol),
        FixtureValue("robust_risk", risk, 0.7114, tol),
        FixtureValue("c_minus", c_minus, 1.000, tol),
        FixtureValue("c_plus", c_plus, 1.597, tol),
        FixtureValue("optimal_interval_risk", diag.robust_risk, 0.4953, tol),
    )
    # a matching interval rule would leave no room for the zero class
    conclusion = c_minus + eps >= c_plus - eps and not ignore_separate_check(clf, eps)
    return FixtureReport("no_dominating_linear", values, conclusion,
                         {"zero_band_width": (c_plus - eps) - (c_minus + eps)})


def _perturbed_bayes(lm, l0, lp, props) -> tuple[float, float]:
    shifted = ThreeClassModel((1.0,), lm - l0, lp - l0, *props)
    c_plus, c_minus = bayes_thresholds(shifted)
    return c_plus + l0, c_minus + l0


def _no_matching_perturbed_means(grid: int = 13) -> FixtureReport:
    eps = 0.3
    third = 1.0 / 3.0
    props = (third, third, 1.0 - 2 * third)
    weights = {-1: props[0], 0: props[1], 1: props[2]}
    model = ThreeClassModel((1.0,), -1.0, 1.0, *props)
    # Every perturbed-means Bayes rule keeps a zero band wider than 2 eps, so
    # the best separated interval rule bounds their robust risk from below.
    if model.alpha < alpha_bar(model, eps):
        raise NumericalFault("separated candidate is not feasible for this fixture")
    lower = _case_risk(model, eps, Case.FREQUENT_ZERO)
    _, diag = optimal_interval_classifier(model, eps)
    bayes = g1.PiecewiseClassifier1D.from_interval_thresholds(-0.5, 0.5)
    worst = {-1: -0.7, 0: 0.3, 1: 0.7}
    upper = g1.robust_risk_exact_1d(bayes, worst, weights, 0.0)
    means = {-1: -1.0, 0: 0.0, 1: 1.0}
    min_robust, max_standard, min_band = math.inf, -math.inf, math.inf
    for lm in np.linspace(-1.3, -0.7, grid):
        for l0 in np.linspace(-0.3, 0.3, grid):
            for lp in np.linspace(0.7, 1.3, grid):
                cp, cm = _perturbed_bayes(lm, l0, lp, props)
                min_band = min(min_band, cp - cm)
                rule = g1.PiecewiseClassifier1D.from_interval_thresholds(cm, cp)
                min_robust = min(min_robust, g1.robust_risk_exact_1d(rule, means, weights, eps))
                moved = {-1: lm, 0: l0, 1: lp}
                max_standard = max(max_standard, g1.robust_risk_exact_1d(bayes, moved, weights, 0.0))
    values = (
        FixtureValue("robust_lower_bound", lower, 0.56, 1e-2),
        FixtureValue("standard_upper_bound", upper, 0.49, 1e-2),
    )
    conclusion = (lower > upper and min_band > 2 * eps
                  and min_robust >= lower - 1e-12 and max_standard <= upper + 1e-12)
    return FixtureReport("no_matching_perturbed_means", values, conclusion, {
        "grid_min_robust": min_robust, "grid_max_standard": max_standard,
        "grid_min_band": min_band, "unrestricted_interval_optimum": diag.robust_risk})


FIXTURES = {
    "no_dominating_linear": _no_dominating_linear,
    "no_matching_perturbed_means": _no_matching_perturbed_means,
}


def counterexample_fixture(name: str) -> FixtureReport:
    try:
        build = FIXTURES[name]
    except KeyError:
        raise PreconditionError("known fixture", f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return build()
