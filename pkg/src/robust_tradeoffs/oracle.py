"""Monte-Carlo estimates of standard and robust risk.

Samples are drawn in fixed-size blocks.  Each block has its own Philox
stream keyed on (seed, block index), so the estimate is identical no matter
how many threads process the blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry1d as g1
from .errors import PreconditionError
from .norms import Norm, dual_norm
from .parallel import ordered_map
from .three_class import IntervalClassifier, ThreeClassModel
from .two_class import ConstantClassifier, LinearClassifier, TwoClassModel

BLOCK = 1 << 17


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by (seed, *keys)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=keys)))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_err: float
    n: int
    seed: int

    def within(self, reference: float, k: float = 3.0) -> bool:
        return abs(self.value - reference) <= k * self.std_err + 1e-15


def _in_union(t: np.ndarray, union: g1.IntervalUnion) -> np.ndarray:
    hit = np.zeros(t.shape, dtype=bool)
    for lo, hi in union.intervals:
        hit |= (t >= lo) & (t <= hi)
    return hit


def _two_class_errors(model: TwoClassModel, clf, eps, norm, noise_factor, rng, size):
    y = np.where(rng.random(size) < model.pi, 1, -1)
    if isinstance(clf, g1.PiecewiseClassifier1D):
        t = y * model.mu_norm + model.sigma * rng.standard_normal(size)
        return _piecewise_errors(clf, t, y, eps)
    z = rng.standard_normal((size, model.dim))
    noise = z @ np.asarray(noise_factor).T if noise_factor is not None else model.sigma * z
    x = y[:, None] * model.mu + noise
    if isinstance(clf, ConstantClassifier):
        return y != clf.label
    margin = y * (x @ clf.w - clf.c)
    return margin <= eps * dual_norm(clf.w, norm)


def _three_class_errors(model: ThreeClassModel, clf, eps, norm, rng, size):
    u = rng.random(size)
    y = np.where(u < model.pi_minus, -1, np.where(u < model.pi_minus + model.pi_zero, 0, 1))
    lam = np.where(y == -1, model.lambda_minus, np.where(y == 1, model.lambda_plus, 0.0))
    if isinstance(clf, g1.PiecewiseClassifier1D):
        t = lam + model.sigma * rng.standard_normal(size)
        return _piecewise_errors(clf, t, y, eps)
    x = lam[:, None] * model.mu + model.sigma * rng.standard_normal((size, model.mu.size))
    s = x @ clf.w
    b = eps * dual_norm(clf.w, norm)
    err_plus = s - b < clf.c_plus
    err_minus = s + b > clf.c_minus
    err_zero = (s - b <= clf.c_minus) | (s + b >= clf.c_plus)
    return np.where(y == 1, err_plus, np.where(y == -1, err_minus, err_zero))


def _piecewise_errors(clf: g1.PiecewiseClassifier1D, t, y, eps):
    err = np.zeros(t.shape, dtype=bool)
    for label in np.unique(y):
        sel = y == label
        wrong = g1.expand(clf.region(int(label)).complement(), eps)
        err[sel] = _in_union(t[sel], wrong)
    return err


def mc_robust_risk(model, clf, eps: float, norm: Norm = Norm.L2, n: int = 10**6,
                   seed: int = 0, noise_factor=None) -> McEstimate:
    """Fraction of n fresh samples that some eps-perturbation misclassifies.

    ``noise_factor`` (two-class linear rules only) replaces sigma*I by a
    matrix L so that the noise is L z.
    """
    if n < 1000:
        raise PreconditionError("n >= 1000", f"sample size {n} too small")
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    norm = Norm(norm)
    dim = model.dim if isinstance(model, TwoClassModel) else model.mu.size
    if isinstance(clf, g1.PiecewiseClassifier1D) and norm is Norm.LINF and dim > 1:
        raise PreconditionError("supported pair", "1-D regions along mu need the l2 budget when p > 1")
    if isinstance(model, TwoClassModel):
        if not isinstance(clf, (LinearClassifier, ConstantClassifier, g1.PiecewiseClassifier1D)):
            raise PreconditionError("supported pair", f"{type(clf).__name__} on a two-class model")

        def block_errors(rng, size):
            return _two_class_errors(model, clf, eps, norm, noise_factor, rng, size)
    elif isinstance(model, ThreeClassModel):
        if not isinstance(clf, (IntervalClassifier, g1.PiecewiseClassifier1D)):
            raise PreconditionError("supported pair", f"{type(clf).__name__} on a three-class model")

        def block_errors(rng, size):
            return _three_class_errors(model, clf, eps, norm, rng, size)
    else:
        raise PreconditionError("supported model", f"{type(model).__name__}")

    sizes = [min(BLOCK, n - start) for start in range(0, n, BLOCK)]
    counts = ordered_map(lambda k: int(np.count_nonzero(block_errors(stream(seed, k), sizes[k]))),
                         range(len(sizes)))
    value = sum(counts) / n
    return McEstimate(value, math.sqrt(value * (1 - value) / n), n, seed)


def _closed_form_vulnerable(clf: LinearClassifier, x, y, eps, norm) -> bool:
    return y * (float(x @ clf.w) - clf.c) <= eps * dual_norm(clf.w, norm)


def attack_search(clf: LinearClassifier, x, y: int, eps: float, norm: Norm = Norm.L2,
                  draws: int = 10_000, seed: int = 0) -> tuple[bool, bool]:
    """(closed-form verdict, brute-force verdict) on whether (x, y) can be flipped."""
    x = np.asarray(x, dtype=float)
    rng = stream(seed, 0)
    if Norm(norm) is Norm.L2:
        d = rng.standard_normal((draws, x.size))
        d *= eps / np.linalg.norm(d, axis=1, keepdims=True)
    else:
        d = eps * rng.choice([-1.0, 1.0], size=(draws, x.size))
    scores = (x + d) @ clf.w - clf.c
    flipped = scores < 0 if y == 1 else scores >= 0
    return _closed_form_vulnerable(clf, x, y, eps, norm), bool(flipped.any())


def mc_pointwise_attack_check(clf: LinearClassifier, x, y: int, eps: float,
                              norm: Norm = Norm.L2, draws: int = 10_000, seed: int = 0) -> bool:
    """True unless random search flips a point the closed form calls safe."""
    closed, brute = attack_search(clf, x, y, eps, norm, draws, seed)
    return closed or not brute
