"""Finite-sample robust learning: sampling, empirical risks, ERM, experiments.

Robust margins use the dual-norm identity: the worst perturbation in an
eps-ball lowers y * (w.x - c) by exactly eps * ||w||_*.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from . import geometry1d as g1
from .errors import NumericalFault, PreconditionError
from .linf import soft_threshold
from .norms import Norm, dual_norm, dual_norm_subgradient
from .oracle import stream
from .parallel import ordered_map
from .two_class import LinearClassifier, TwoClassModel, robust_risk_linear


@dataclass(frozen=True)
class LabeledSample:
    points: np.ndarray
    labels: np.ndarray
    seed: int

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] != self.labels.shape[0]:
            raise PreconditionError("n x p points with n labels", "shape mismatch")
        if self.points.shape[0] < 1:
            raise PreconditionError("n >= 1", "empty sample")
        if not np.all(np.abs(self.labels) == 1):
            raise PreconditionError("labels in {-1, +1}", "unexpected label")

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sample(model: TwoClassModel, n: int, seed: int) -> LabeledSample:
    if n < 1:
        raise PreconditionError("n >= 1", f"sample size {n}")
    rng = stream(seed, 0)
    labels = np.where(rng.random(n) < model.pi, 1, -1)
    points = labels[:, None] * model.mu + model.sigma * rng.standard_normal((n, model.dim))
    return LabeledSample(points, labels, seed)


class LossKind(str, enum.Enum):
    ZERO_ONE = "zero_one"
    LINEAR = "linear"
    HINGE = "hinge"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if self is LossKind.ZERO_ONE:
            return (z <= 0).astype(float)
        if self is LossKind.LINEAR:
            return -z
        if self is LossKind.HINGE:
            return np.maximum(0.0, 1.0 - z)
        if self is LossKind.LOGISTIC:
            return np.logaddexp(0.0, -z)
        return np.exp(-z)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self is LossKind.ZERO_ONE:
            raise PreconditionError("differentiable loss", "0-1 loss has no useful derivative")
        if self is LossKind.LINEAR:
            return -np.ones_like(z)
        if self is LossKind.HINGE:
            return -(z < 1.0).astype(float)
        if self is LossKind.LOGISTIC:
            return -0.5 * (1.0 - np.tanh(z / 2.0))
        return -np.exp(-z)


def robust_margins(data: LabeledSample, w, c: float, eps: float, norm: Norm) -> np.ndarray:
    return data.labels * (data.points @ w - c) - eps * dual_norm(w, norm)


def empirical_robust_risk(data: LabeledSample, clf: LinearClassifier, eps: float,
                          norm: Norm = Norm.L2, loss: LossKind = LossKind.ZERO_ONE) -> float:
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    return float(LossKind(loss).value(robust_margins(data, clf.w, clf.c, eps, norm)).mean())


def erm_linear_loss(data: LabeledSample, eps: float) -> LinearClassifier:
    """Unit-norm minimizer of the linear-loss robust risk under an l_inf budget."""
    signed_mean = (data.labels[:, None] * data.points).mean(axis=0)
    shrunk = soft_threshold(signed_mean, eps).shrunk
    norm = np.linalg.norm(shrunk)
    if norm == 0:
        raise PreconditionError("eps < ||mean of y x||_inf",
                                f"budget {eps} zeroes every coordinate (largest is {np.abs(signed_mean).max()})")
    return LinearClassifier(shrunk / norm, 0.0)


@dataclass(frozen=True)
class ErmFit:
    w: np.ndarray
    c: float
    objective: float
    converged: bool
    method: str

    @property
    def degenerate(self) -> bool:
        return not np.any(self.w)

    @property
    def classifier(self) -> LinearClassifier:
        if self.degenerate:
            raise PreconditionError("w != 0", "the fitted weights are all zero")
        return LinearClassifier(self.w, self.c)


def convex_objective(data: LabeledSample, w, eps: float, norm: Norm, loss: LossKind) -> float:
    return float(LossKind(loss).value(robust_margins(data, w, 0.0, eps, norm)).mean())


def erm_convex(data: LabeledSample, eps: float, norm: Norm = Norm.LINF,
               loss: LossKind = LossKind.HINGE, constraint: str = "none",
               method: str = "subgradient", iterations: int = 10_000,
               step: float | None = None) -> ErmFit:
    """Minimize the empirical surrogate robust risk over w (threshold fixed at 0).

    ``method="subgradient"`` runs projected subgradient descent with step
    step/sqrt(t) and returns the averaged iterate.  ``method="exact"`` hands
    the same problem to a linear program (hinge loss, l_inf budget, no
    constraint) or to SLSQP (linear and logistic losses).
    """
    loss, norm = LossKind(loss), Norm(norm)
    if loss is LossKind.ZERO_ONE:
        raise PreconditionError("convex loss", "0-1 loss is not convex")
    if constraint not in ("none", "unit_ball"):
        raise PreconditionError("constraint in {none, unit_ball}", f"got {constraint!r}")
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    if loss is LossKind.LINEAR and constraint == "none":
        raise PreconditionError("bounded problem", "linear loss needs the unit-ball constraint")
    if method == "subgradient":
        return _subgradient(data, eps, norm, loss, constraint, iterations, step)
    if method == "exact":
        if loss is LossKind.HINGE and norm is Norm.LINF and constraint == "none":
            return _hinge_linf_lp(data, eps)
        if loss in (LossKind.LINEAR, LossKind.LOGISTIC):
            return _smooth_exact(data, eps, norm, loss, constraint)
        raise PreconditionError("supported exact solver", f"{loss.value}/{norm.value}/{constraint}")
    raise PreconditionError("method in {subgradient, exact}", f"got {method!r}")


def _subgradient(data, eps, norm, loss, constraint, iterations, step) -> ErmFit:
    X = data.labels[:, None] * data.points
    p = X.shape[1]
    if step is None:
        step = 1.0 / (math.sqrt(float((X * X).sum(axis=1).mean())) + eps * math.sqrt(p))
    w = np.zeros(p)
    total = np.zeros(p)
    tail = []
    for t in range(1, iterations + 1):
        z = X @ w - eps * dual_norm(w, norm)
        d = loss.derivative(z)
        grad = (d @ X) / X.shape[0] - eps * d.mean() * dual_norm_subgradient(w, norm)
        w = w - step / math.sqrt(t) * grad
        if constraint == "unit_ball":
            w /= max(1.0, float(np.linalg.norm(w)))
        total += w
        if t > iterations - 100:
            tail.append(convex_objective(data, w, eps, norm, loss))
    w_avg = total / iterations
    converged = (max(tail) - min(tail)) <= 1e-4 if tail else True
    return ErmFit(w_avg, 0.0, convex_objective(data, w_avg, eps, norm, loss), converged, "subgradient")


def _hinge_linf_lp(data: LabeledSample, eps: float) -> ErmFit:
    # Dual of  min mean(slack)  s.t.  slack_i >= 1 - X_i.w + eps*||w||_1:
    #   max sum(u)  s.t.  |sum_i u_i X_ij| <= eps * sum(u),  0 <= u_i <= 1/n.
    # The multipliers of the 2p coupling rows are the positive and negative
    # parts of the primal weights.
    X = data.labels[:, None] * data.points
    n, p = X.shape
    rows = np.vstack([X.T - eps, -X.T - eps])
    res = linprog(-np.ones(n), A_ub=rows, b_ub=np.zeros(2 * p), bounds=(0, 1.0 / n), method="highs")
    if res.status != 0:
        raise NumericalFault(f"linear program failed: {res.message}")
    duals = -res.ineqlin.marginals
    w = duals[:p] - duals[p:]
    w[np.abs(w) < 1e-12] = 0.0
    return ErmFit(w, 0.0, convex_objective(data, w, eps, Norm.LINF, LossKind.HINGE), True, "exact")


def _smooth_exact(data, eps, norm, loss, constraint) -> ErmFit:
    X = data.labels[:, None] * data.points
    n, p = X.shape

    if norm is Norm.LINF:
        # split w = a - b with a, b >= 0 so the l1 penalty becomes linear
        def unpack(v):
            return v[:p] - v[p:]

        def fun(v):
            z = X @ unpack(v) - eps * v.sum()
            d = loss.derivative(z) / n
            g = d @ X
            return float(loss.value(z).mean()), np.concatenate([g - eps * d.sum(), -g - eps * d.sum()])

        x0 = np.concatenate([np.full(p, 0.5 / math.sqrt(p)), np.zeros(p)])
        bounds = [(0, None)] * (2 * p)
    else:
        def unpack(v):
            return v

        def fun(v):
            nv = np.linalg.norm(v)
            z = X @ v - eps * nv
            d = loss.derivative(z) / n
            g = d @ X - eps * d.sum() * (v / nv if nv > 0 else 0.0)
            return float(loss.value(z).mean()), g

        x0 = np.full(p, 0.5 / math.sqrt(p))
        bounds = None

    cons = []
    if constraint == "unit_ball":
        cons = [{"type": "ineq",
                 "fun": lambda v: 1.0 - float(unpack(v) @ unpack(v)),
                 "jac": lambda v: -2.0 * (np.concatenate([unpack(v), -unpack(v)])
                                          if norm is Norm.LINF else v)}]
    res = minimize(fun, x0, jac=True, method="SLSQP", bounds=bounds, constraints=cons,
                   options={"ftol": 1e-15, "maxiter": 2000})
    w = unpack(res.x)
    return ErmFit(w, 0.0, convex_objective(data, w, eps, norm, loss), bool(res.success), "exact")


@dataclass(frozen=True)
class GapRow:
    n: int
    eps: float
    mean_gap: float
    trials: int
    std_err: float
    degenerate: int = 0


@dataclass(frozen=True)
class GapCurve:
    loss: LossKind
    rows: tuple[GapRow, ...]

    def by_eps(self) -> dict[float, list[GapRow]]:
        out: dict[float, list[GapRow]] = {}
        for row in self.rows:
            out.setdefault(row.eps, []).append(row)
        return out

    def decreasing(self) -> bool:
        """Largest-n gap below smallest-n gap for every positive budget."""
        return all(rows[-1].mean_gap < rows[0].mean_gap
                   for eps, rows in self.by_eps().items() if eps > 0)

    def non_decreasing(self, k: float = 2.0) -> bool:
        """No consecutive drop larger than k combined standard errors."""
        for rows in self.by_eps().values():
            for a, b in zip(rows, rows[1:]):
                if b.mean_gap < a.mean_gap - k * math.hypot(a.std_err, b.std_err):
                    return False
        return True


def _train(model, loss, data, eps):
    if loss is LossKind.LINEAR:
        return erm_linear_loss(data, eps)
    fit = erm_convex(data, eps, Norm.LINF, LossKind.HINGE, "none", method="exact")
    return fit.classifier


def gap_experiment(model: TwoClassModel, loss: LossKind, n_grid, eps_list, trials: int,
                   seed: int) -> GapCurve:
    """Mean population robust-minus-standard risk of ERM fits (l_inf budget)."""
    loss = LossKind(loss)
    if loss not in (LossKind.LINEAR, LossKind.HINGE):
        raise PreconditionError("loss in {linear, hinge}", f"got {loss.value}")
    if trials < 1:
        raise PreconditionError("trials >= 1", f"got {trials}")
    rows = []
    for eps in sorted(float(e) for e in eps_list):
        for n in sorted(int(m) for m in n_grid):
            def one(t, n=n, eps=eps):
                data = sample(model, n, seed + t)
                try:
                    clf = _train(model, loss, data, eps)
                except PreconditionError:
                    return None
                return (robust_risk_linear(model, clf, eps, Norm.LINF)
                        - robust_risk_linear(model, clf, 0.0, Norm.LINF))
            gaps = [g for g in ordered_map(one, range(trials)) if g is not None]
            k = len(gaps)
            mean = float(np.mean(gaps)) if k else math.nan
            se = float(np.std(gaps, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
            rows.append(GapRow(n, eps, mean, k, se, trials - k))
    return GapCurve(loss, tuple(rows))


def random_piecewise_classifier(rng: np.random.Generator, k: int, span: float = 5.0):
    """k sorted uniform breakpoints with alternating +-1 labels."""
    breaks = np.sort(rng.uniform(-span, span, size=k))
    first = 1 if rng.random() < 0.5 else -1
    labels = [first * (-1) ** i for i in range(k + 1)]
    return g1.PiecewiseClassifier1D.from_breakpoints(breaks.tolist(), labels)


def empirical_risk_1d(clf: g1.PiecewiseClassifier1D, x: np.ndarray, y: np.ndarray, eps: float) -> float:
    errors = 0
    for label in (-1, 1):
        pts = np.sort(x[y == label])
        for lo, hi in g1.expand(clf.region(label).complement(), eps).intervals:
            errors += int(np.searchsorted(pts, hi, "right") - np.searchsorted(pts, lo, "left"))
    return errors / x.size


@dataclass(frozen=True)
class DkwReport:
    k: int
    n: int
    delta: float
    eps: float
    trials: int
    failures: int
    failure_fraction: float
    std_err: float
    bound: float
    deviation_scale: int
    median_max_deviation: float
    max_deviations: tuple = field(repr=False, default=())

    @property
    def passes(self) -> bool:
        return self.failure_fraction <= self.bound + 3 * self.std_err


def dkw_experiment(model_1d: TwoClassModel, k: int, n: int, delta: float, trials: int,
                   classifiers_per_trial: int, seed: int, eps: float = 0.1) -> DkwReport:
    """How often the worst sampled classifier's robust risk deviates by more than ceil(k/2)*delta."""
    if model_1d.dim != 1:
        raise PreconditionError("p = 1", f"model has dimension {model_1d.dim}")
    if k < 1:
        raise PreconditionError("k >= 1", f"got {k}")
    if not delta > 0:
        raise PreconditionError("delta > 0", f"got {delta}")
    m = float(model_1d.mu[0])
    means = {1: m, -1: -m}
    weights = {1: model_1d.pi, -1: 1 - model_1d.pi}
    scale = math.ceil(k / 2)

    def one(t):
        data = sample(model_1d, n, seed + t)
        x, y = data.points[:, 0], data.labels
        rng = stream(seed, t, 1)
        worst = 0.0
        for _ in range(classifiers_per_trial):
            clf = random_piecewise_classifier(rng, k)
            pop = g1.robust_risk_exact_1d(clf, means, weights, eps, model_1d.sigma)
            worst = max(worst, abs(empirical_risk_1d(clf, x, y, eps) - pop))
        return worst

    devs = ordered_map(one, range(trials))
    failures = sum(d > scale * delta for d in devs)
    frac = failures / trials
    return DkwReport(k, n, delta, eps, trials, failures, frac, math.sqrt(frac * (1 - frac) / trials),
                     4 * math.exp(-2 * n * delta * delta), scale, float(np.median(devs)), tuple(devs))


def linear_max_deviation(model: TwoClassModel, n: int, eps: float, norm: Norm, classifiers: int,
                         seed: int, chunk: int = 100) -> float:
    """max |empirical - population| robust 0-1 risk over random linear rules, one sample."""
    data = sample(model, n, seed)
    rng = stream(seed, 1)
    W = rng.standard_normal((classifiers, model.dim))
    C = rng.uniform(-1.0, 1.0, classifiers)
    worst = 0.0
    for start in range(0, classifiers, chunk):
        Wc, Cc = W[start:start + chunk], C[start:start + chunk]
        budget = eps * np.array([dual_norm(w, norm) for w in Wc])
        margins = data.labels[:, None] * (data.points @ Wc.T - Cc) - budget
        emp = (margins <= 0).mean(axis=0)
        for w, c, e in zip(Wc, Cc, emp):
            worst = max(worst, abs(e - robust_risk_linear(model, LinearClassifier(w, c), eps, norm)))
    return worst


@dataclass(frozen=True)
class ScalingReport:
    n_small: int
    n_large: int
    median_small: float
    median_large: float

    @property
    def ratio(self) -> float:
        return self.median_large / self.median_small


def deviation_scaling(model: TwoClassModel, n_small: int, factor: int, eps: float, norm: Norm,
                      classifiers: int, trials: int, seed: int) -> ScalingReport:
    def med(n, offset):
        devs = ordered_map(lambda t: linear_max_deviation(model, n, eps, norm, classifiers,
                                                          seed + offset + t), range(trials))
        return float(np.median(devs))
    return ScalingReport(n_small, n_small * factor, med(n_small, 0), med(n_small * factor, trials))


@dataclass(frozen=True)
class CalibrationReport:
    """Biases use the score w.x + b.  ``zero_one_bias`` minimizes the 0-1 robust
    risk along the optimal direction; the two formula fields are -q/(2c) and
    -q/c with c the normalized worst-case margin, reported side by side."""

    direction: np.ndarray
    bias: float
    target_direction: np.ndarray
    angle: float
    converged: bool
    iterations: int
    zero_one_bias: float
    bias_half_formula: float
    bias_full_formula: float


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)
_Z = math.sqrt(2.0) * _GH_NODES
_OMEGA = _GH_WEIGHTS / math.sqrt(math.pi)


def surrogate_population_risk(model: TwoClassModel, w, b: float, eps: float, norm: Norm,
                              loss: LossKind) -> float:
    """E l(w.mu - eps ||w||_* + b y + ||w|| sigma z) by 64-node Gauss-Hermite."""
    loss = LossKind(loss)
    w = np.asarray(w, dtype=float)
    base = float(w @ model.mu) - eps * dual_norm(w, norm)
    spread = model.sigma * float(np.linalg.norm(w)) * _Z
    pos = loss.value(base + b + spread) @ _OMEGA
    neg = loss.value(base - b + spread) @ _OMEGA
    return float(model.pi * pos + (1 - model.pi) * neg)


def _risk_and_grad(model, w, b, eps, norm, loss):
    """Value, smooth gradient in w, gradient in b, and the weight on ||w||_1.

    For the l_inf budget the kink of -eps*||w||_1 inside the loss is left
    out of the gradient; its local coefficient kappa = -E l' >= 0 is handled
    by a proximal (soft-threshold) step instead.
    """
    base = float(w @ model.mu) - eps * dual_norm(w, norm)
    spread = model.sigma * _Z
    smooth_dir = model.mu - (eps * w if norm is Norm.L2 else 0.0)
    value, gw, gb, kappa = 0.0, np.zeros_like(w), 0.0, 0.0
    for y, share in ((1, model.pi), (-1, 1 - model.pi)):
        m = base + y * b + spread
        d = loss.derivative(m) * _OMEGA * share
        value += share * float(loss.value(m) @ _OMEGA)
        gw += d.sum() * smooth_dir + float(d @ spread) * w
        gb += y * d.sum()
        kappa -= d.sum()
    return value, gw, gb, (kappa if norm is Norm.LINF else 0.0)


def calibration_check(model: TwoClassModel, loss: LossKind, norm: Norm, eps: float,
                      bias_mode: str = "zero", max_iter: int = 20_000, tol: float = 1e-10) -> CalibrationReport:
    """Minimize the population surrogate robust risk over unit w (and b) and
    compare the direction with the 0-1 robust optimum.

    Proximal gradient on the sphere: tangential gradient step, soft-threshold
    for the l_inf budget, renormalize, backtrack on the exact objective.
    """
    loss, norm = LossKind(loss), Norm(norm)
    if bias_mode not in ("zero", "free"):
        raise PreconditionError("bias_mode in {zero, free}", f"got {bias_mode!r}")
    if norm is Norm.L2:
        if eps >= model.mu_norm:
            raise PreconditionError("eps < ||mu||", f"budget {eps}")
        target = model.mu / model.mu_norm
    else:
        shrunk = soft_threshold(model.mu, eps).shrunk
        if not np.any(shrunk):
            raise PreconditionError("eps < ||mu||_inf", f"budget {eps}")
        target = shrunk / np.linalg.norm(shrunk)
    free = bias_mode == "free"
    w = np.ones(model.dim) / math.sqrt(model.dim)
    b = 0.0
    value, gw, gb, kappa = _risk_and_grad(model, w, b, eps, norm, loss)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = min(step * 2.0, 1e8)
        tangent = gw - (gw @ w) * w
        while True:
            u = w - step * tangent
            if kappa > 0:
                u = soft_threshold(u, step * kappa * eps).shrunk
            size = float(np.linalg.norm(u))
            if size > 0:
                w_new = u / size
                b_new = b - step * gb if free else 0.0
                moved = float(np.sum((w_new - w) ** 2)) + (b_new - b) ** 2
                v_new, gw_new, gb_new, k_new = _risk_and_grad(model, w_new, b_new, eps, norm, loss)
                if v_new <= value - 0.25 * moved / step:
                    break
            if step < 1e-14:
                break
            step /= 2.0
        if step < 1e-14:
            break
        w, b, value, gw, gb, kappa = w_new, b_new, v_new, gw_new, gb_new, k_new
        # the second test stops once moves are at round-off level
        if math.sqrt(moved) / step < tol or math.sqrt(moved) < 1e-13:
            converged = True
            break
    angle = math.acos(min(1.0, max(-1.0, float(w @ target))))
    margin = (float(target @ model.mu) - eps * dual_norm(target, norm)) / model.sigma
    res = minimize_scalar(lambda t: model.pi * _phi(-(margin + t)) + (1 - model.pi) * _phi(-(margin - t)),
                          bounds=(-20.0, 20.0), method="bounded", options={"xatol": 1e-12})
    q = model.q
    return CalibrationReport(w, b, target, angle, converged, it, float(res.x),
                             -q / (2 * margin), -q / margin)


def _phi(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
