import numpy as np
import pytest

from robust_tradeoffs import PreconditionError, oracle
from robust_tradeoffs import geometry1d as g1
from robust_tradeoffs import three_class as t3
from robust_tradeoffs import two_class as tc
from robust_tradeoffs.norms import Norm
from robust_tradeoffs.parallel import THREADS_ENV


def test_optimal_classifier_within_three_se():
    model = tc.TwoClassModel([0.6, 0.8, 0.0], 1.2, 0.3)
    clf = tc.optimal_robust_classifier(model, 0.4)
    assert oracle.mc_robust_risk(model, clf, 0.4, n=10**6, seed=2).within(tc.optimal_robust_risk(model, 0.4))
    assert oracle.mc_robust_risk(model, clf, 0.0, n=10**6, seed=2).within(tc.standard_risk_linear(model, clf))


def test_four_piece_classifier_within_three_se():
    model = t3.ThreeClassModel((1.0,), -1.0, 1.0, 0.25, 0.5, 0.25)
    clf = g1.PiecewiseClassifier1D.from_breakpoints([1.0, 2.15, 4.0], [-1, 1, 0, 1])
    est = oracle.mc_robust_risk(model, clf, 0.3, n=10**6, seed=0)
    exact = g1.robust_risk_exact_1d(clf, {-1: -1.0, 0: 0.0, 1: 1.0}, model.weights(), 0.3)
    assert est.within(exact) and abs(est.value - 0.7114) < 3 * est.std_err + 1e-3


def test_estimate_is_independent_of_thread_count(monkeypatch):
    model = tc.TwoClassModel([1.0, 0.5], pi=0.4)
    clf = tc.LinearClassifier([1.0, 0.2], 0.1)
    monkeypatch.setenv(THREADS_ENV, "1")
    serial = oracle.mc_robust_risk(model, clf, 0.2, n=300_000, seed=7)
    monkeypatch.setenv(THREADS_ENV, "4")
    threaded = oracle.mc_robust_risk(model, clf, 0.2, n=300_000, seed=7)
    assert serial == threaded
    assert oracle.mc_robust_risk(model, clf, 0.2, n=300_000, seed=8) != serial


def test_streams_are_distinct_and_repeatable():
    a = oracle.stream(1, 0).random(4)
    assert np.array_equal(a, oracle.stream(1, 0).random(4))
    assert not np.array_equal(a, oracle.stream(1, 1).random(4))
    assert not np.array_equal(a, oracle.stream(2, 0).random(4))


def test_unsupported_pairs():
    model = tc.TwoClassModel([1.0, 0.0])
    clf = g1.PiecewiseClassifier1D.from_breakpoints([0.0], [-1, 1])
    with pytest.raises(PreconditionError):
        oracle.mc_robust_risk(model, clf, 0.1, Norm.LINF)
    with pytest.raises(PreconditionError):
        oracle.mc_robust_risk(model, t3.IntervalClassifier([1.0, 0.0], 0.5, -0.5), 0.1)
    with pytest.raises(PreconditionError):
        oracle.mc_robust_risk(model, tc.LinearClassifier([1.0, 0.0], 0.0), 0.1, n=10)


def test_pointwise_attack_cases():
    clf = tc.LinearClassifier([1.0, 1.0], 0.0)
    assert oracle.attack_search(clf, [5.0, 5.0], 1, 0.5) == (False, False)
    edge = np.array([0.5, 0.5])
    closed, _ = oracle.attack_search(clf, edge, 1, 1.0 / np.sqrt(2))
    assert closed
    closed, _ = oracle.attack_search(clf, edge, 1, 0.5, Norm.LINF)
    assert closed


@pytest.mark.parametrize("norm", [Norm.L2, Norm.LINF])
def test_closed_form_never_misses_a_brute_force_flip(norm):
    rng = np.random.default_rng(13)
    clf = tc.LinearClassifier(rng.standard_normal(3), 0.2)
    for k in range(1000):
        x = rng.standard_normal(3)
        y = 1 if rng.random() < 0.5 else -1
        assert oracle.mc_pointwise_attack_check(clf, x, y, 0.3, norm, draws=200, seed=k)
