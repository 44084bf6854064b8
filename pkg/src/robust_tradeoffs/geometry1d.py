"""Exact geometry on finite unions of real intervals.

Intervals are half-open ``[lo, hi)``.  Infinite endpoints are allowed at
the extremes.  All Gaussian measures are evaluated in closed form, so these
routines double as an exact oracle for one-dimensional robust risks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import normal
from .errors import PreconditionError

LABELS = (-1, 0, 1)


@dataclass(frozen=True)
class IntervalUnion:
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        cleaned = []
        for lo, hi in sorted((float(a), float(b)) for a, b in self.intervals):
            if math.isnan(lo) or math.isnan(hi):
                raise PreconditionError("finite or infinite endpoints", "NaN endpoint")
            if lo > hi:
                raise PreconditionError("lo <= hi", f"interval [{lo}, {hi}) is reversed")
            if lo == hi:
                continue
            if cleaned and lo <= cleaned[-1][1]:
                cleaned[-1] = (cleaned[-1][0], max(cleaned[-1][1], hi))
            else:
                cleaned.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def of(cls, *pairs) -> "IntervalUnion":
        return cls(tuple(pairs))

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls(((-math.inf, math.inf),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def finite_endpoints(self) -> list[float]:
        return [e for iv in self.intervals for e in iv if math.isfinite(e)]

    def complement(self) -> "IntervalUnion":
        out = []
        cursor = -math.inf
        for lo, hi in self.intervals:
            if lo > cursor:
                out.append((cursor, lo))
            cursor = hi
        if cursor < math.inf:
            out.append((cursor, math.inf))
        return IntervalUnion(tuple(out))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.intervals + other.intervals)

    def contains(self, x: float) -> bool:
        return any(lo <= x < hi for lo, hi in self.intervals)

    def issubset(self, other: "IntervalUnion") -> bool:
        return all(any(a <= lo and hi <= b for a, b in other.intervals)
                   for lo, hi in self.intervals)

    def gaps(self) -> list[float]:
        return [self.intervals[k + 1][0] - self.intervals[k][1]
                for k in range(len(self.intervals) - 1)]


def expand(J: IntervalUnion, eps: float) -> IntervalUnion:
    """Points within distance eps of J; overlapping pieces are merged."""
    if eps < 0:
        raise PreconditionError("eps >= 0", f"negative budget {eps}")
    if eps == 0:
        return J
    return IntervalUnion(tuple((lo - eps, hi + eps) for lo, hi in J.intervals))


def _interval_mass(lo: float, hi: float, mean: float, sd: float) -> float:
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    # subtract in whichever tail keeps the small numbers small
    if a > 0:
        return normal.sf(a) - normal.sf(b)
    return normal.cdf(b) - normal.cdf(a)


def gaussian_measure(J: IntervalUnion, mean: float = 0.0, sd: float = 1.0) -> float:
    total = sum(_interval_mass(lo, hi, mean, sd) for lo, hi in J.intervals)
    return min(max(total, 0.0), 1.0)


def boundary_measure(J: IntervalUnion) -> float:
    return sum(normal.pdf(e) for e in J.finite_endpoints())


def distance(A: IntervalUnion, B: IntervalUnion) -> float:
    """Infimum distance between two unions (inf if either is empty)."""
    best = math.inf
    for a_lo, a_hi in A.intervals:
        for b_lo, b_hi in B.intervals:
            best = min(best, max(0.0, b_lo - a_hi, a_lo - b_hi))
    return best


def halfline_deficit(J: IntervalUnion) -> float:
    """Smallest Gaussian measure of J symmetric-difference a half-line.

    For the left half-line (-inf, t] the objective has derivative
    pdf(t) * (1 - 2*[t in J]), so its minima sit at right endpoints of J or
    at t = +-inf; the right half-line is the mirror case with left
    endpoints.  Enumerating those candidates gives the exact infimum.
    """
    g = gaussian_measure(J)
    best = min(g, 1.0 - g)
    for _, hi in J.intervals:
        if math.isfinite(hi):
            left = IntervalUnion(((-math.inf, hi),))
            best = min(best, g + normal.cdf(hi) - 2.0 * _overlap(J, left))
    for lo, _ in J.intervals:
        if math.isfinite(lo):
            right = IntervalUnion(((lo, math.inf),))
            best = min(best, g + normal.sf(lo) - 2.0 * _overlap(J, right))
    return max(best, 0.0)


def _overlap(J: IntervalUnion, H: IntervalUnion) -> float:
    pieces = []
    for lo, hi in J.intervals:
        for a, b in H.intervals:
            lo2, hi2 = max(lo, a), min(hi, b)
            if lo2 < hi2:
                pieces.append((lo2, hi2))
    return gaussian_measure(IntervalUnion(tuple(pieces)))


@dataclass(frozen=True)
class IsoperimetryReport:
    gaussian_measure: float
    boundary_measure: float
    profile: float
    deficit: float
    halfline_deficit: float


def isoperimetry(J: IntervalUnion) -> IsoperimetryReport:
    g = gaussian_measure(J)
    bm = boundary_measure(J)
    prof = normal.isoperimetric_profile(g)
    return IsoperimetryReport(g, bm, prof, bm - prof, halfline_deficit(J))


def expansion_bound_check(J: IntervalUnion, eps: float, M: float):
    """Compare gamma(J + B_eps) against its lower bound for unions of intervals.

    Returns (lhs, rhs, holds).  Raises PreconditionError naming the first
    violated condition.
    """
    if eps <= 0:
        raise PreconditionError("eps > 0", f"budget {eps} must be positive")
    if M <= 0:
        raise PreconditionError("M > 0", f"endpoint bound {M} must be positive")
    for e in J.finite_endpoints():
        if abs(e) > M:
            raise PreconditionError("endpoints in [-M, M]", f"endpoint {e} lies outside [-{M}, {M}]")
    for gap in J.gaps():
        if not 2.0 * eps < gap:
            raise PreconditionError("2*eps < every gap", f"expansion by {eps} merges a gap of {gap}")
    for lo, hi in J.intervals:
        if not eps < (hi - lo) / 2.0:
            raise PreconditionError("eps < half-width", f"interval [{lo}, {hi}) is narrower than 2*{eps}")
    lhs = gaussian_measure(expand(J, eps))
    rhs = gaussian_measure(J) + eps * math.exp(-(M * eps + eps * eps / 2.0)) * boundary_measure(J)
    return lhs, rhs, lhs >= rhs - 1e-12


@dataclass(frozen=True)
class PiecewiseClassifier1D:
    """Decision regions of a 1-D classifier, keyed by label."""

    regions: Mapping[int, IntervalUnion]

    def __post_init__(self):
        regions = {}
        for label, union in dict(self.regions).items():
            if label not in LABELS:
                raise PreconditionError("labels in {-1, 0, 1}", f"unknown label {label}")
            regions[int(label)] = union
        pieces = sorted(iv for u in regions.values() for iv in u.intervals)
        cursor = -math.inf
        for lo, hi in pieces:
            if lo != cursor:
                raise PreconditionError("regions partition the line", f"gap or overlap near {lo}")
            cursor = hi
        if cursor != math.inf:
            raise PreconditionError("regions partition the line", "regions do not reach +inf")
        object.__setattr__(self, "regions", regions)

    @classmethod
    def from_breakpoints(cls, breaks: Iterable[float], labels: Iterable[int]):
        """Cells [b_k, b_{k+1}) labelled in order; len(labels) = len(breaks) + 1."""
        edges = [-math.inf, *map(float, breaks), math.inf]
        labels = list(labels)
        if len(labels) != len(edges) - 1:
            raise PreconditionError("len(labels) = len(breaks) + 1", "label count mismatch")
        if any(edges[k] > edges[k + 1] for k in range(len(edges) - 1)):
            raise PreconditionError("sorted breakpoints", "breakpoints must be nondecreasing")
        pieces: dict[int, list] = {}
        for k, label in enumerate(labels):
            pieces.setdefault(int(label), []).append((edges[k], edges[k + 1]))
        return cls({lab: IntervalUnion(tuple(p)) for lab, p in pieces.items()})

    @classmethod
    def from_interval_thresholds(cls, c_minus: float, c_plus: float):
        """-1 below c_minus, 0 in between, +1 from c_plus on."""
        if c_minus > c_plus:
            raise PreconditionError("c_minus <= c_plus", f"{c_minus} > {c_plus}")
        return cls.from_breakpoints([c_minus, c_plus], [-1, 0, 1])

    def region(self, label: int) -> IntervalUnion:
        return self.regions.get(label, IntervalUnion())

    def predict(self, x: float) -> int:
        for label in LABELS:
            if self.region(label).contains(x):
                return label
        raise AssertionError("partition does not cover x")  # unreachable after validation


def robust_misclassification(clf: PiecewiseClassifier1D, label: int, mean: float,
                             eps: float, sd: float = 1.0) -> float:
    """Probability that a class-`label` point lies within eps of a wrong region."""
    return gaussian_measure(expand(clf.region(label).complement(), eps), mean, sd)


def robust_risk_exact_1d(clf: PiecewiseClassifier1D, means: Mapping[int, float],
                         weights: Mapping[int, float], eps: float, sd: float = 1.0) -> float:
    if abs(sum(weights.values()) - 1.0) > 1e-12:
        raise PreconditionError("weights sum to 1", f"weights sum to {sum(weights.values())}")
    for label in weights:
        if label not in LABELS:
            raise PreconditionError("labels in {-1, 0, 1}", f"unknown label {label}")
    return sum(w * robust_misclassification(clf, y, means[y], eps, sd)
               for y, w in weights.items() if w > 0)
