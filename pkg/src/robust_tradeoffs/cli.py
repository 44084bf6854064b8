"""Command-line front end: every computation as a CSV table or JSON report.

Floats are printed with 12 significant digits so repeated runs diff cleanly.
Precondition failures exit with status 2 and name the violated bound; usage
errors exit with status 64.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import empirical, geometry1d as g1, linf, oracle, three_class as tc, two_class as tw
from .errors import NumericalFault, PreconditionError
from .norms import Norm
from .parallel import ordered_map

SCHEMA_VERSION = 1
EXIT_PRECONDITION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x):
    """Round to 12 significant digits; non-finite values become strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.12g}")
    if isinstance(x, np.ndarray):
        return [_num(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return str(x)


def _json_text(command: str, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **_num(payload)}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, command, header, rows, summary: dict):
    """CSV rows (summary to --summary or stderr) or one JSON document."""
    if _format(args, "csv") == "json":
        _emit(args, _json_text(command, {"rows": [dict(zip(header, r)) for r in rows], "summary": summary}))
        return
    _emit(args, _csv_text(header, rows))
    text = _json_text(command, {"summary": summary})
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)


def _format(args, default: str) -> str:
    return args.format or default


def _emit_report(args, command, payload: dict):
    if _format(args, "json") == "csv":
        flat = {k: v for k, v in _num(payload).items() if not isinstance(v, (list, dict))}
        _emit(args, _csv_text(list(flat), [list(flat.values())]))
    else:
        _emit(args, _json_text(command, payload))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 1:
        raise PreconditionError("grid_n >= 1", f"got {n}")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise PreconditionError("finite grid", f"bounds {lo}, {hi}")
    if hi < lo:
        raise PreconditionError("grid_lo <= grid_hi", f"{lo} > {hi}")
    return np.array([lo]) if n == 1 else np.linspace(lo, hi, n)


def _mean_vector(args) -> np.ndarray:
    if getattr(args, "mu", None):
        return np.array(_floats(args.mu))
    return np.full(args.dim, args.mu_norm / math.sqrt(args.dim))


# ---------------------------------------------------------------- commands

def cmd_two_opt(args):
    model = tw.TwoClassModel(_mean_vector(args), args.sigma, args.pi)
    norm = Norm(args.norm)
    if norm is Norm.L2:
        clf = tw.optimal_robust_classifier(model, args.eps)
    else:
        clf = linf.optimal_linf_linear(model, args.eps)
    _emit_report(args, "two-opt", {
        "norm": norm.value, "eps": args.eps, "pi": args.pi, "sigma": args.sigma,
        "mu": model.mu, "w": clf.w, "c": clf.c,
        "robust_risk": tw.robust_risk_linear(model, clf, args.eps, norm),
        "standard_risk": tw.standard_risk_linear(model, clf),
        "bayes_risk": tw.bayes_risk(model),
    })


def cmd_pareto(args):
    model = tw.TwoClassModel(np.array([args.mu_norm]), args.sigma, args.pi)
    rows = tw.pareto_frontier(model, args.eps, _grid(args.grid_lo, args.grid_hi, args.grid_n))
    std_min = min(rows, key=lambda r: r.std_risk)
    rob_min = min(rows, key=lambda r: r.robust_risk)
    _emit_table(args, "pareto", ["c", "std_risk", "robust_risk", "on_frontier"],
                [(r.c, r.std_risk, r.robust_risk, r.on_frontier) for r in rows],
                {"argmin_std_risk": std_min.c, "argmin_robust_risk": rob_min.c,
                 "frontier_rows": sum(r.on_frontier for r in rows)})


def _three_model(args, pi0):
    return tc.ThreeClassModel.from_gamma(args.gamma, pi0, args.lambda_minus, args.lambda_plus,
                                         sigma=args.sigma)


def cmd_three_opt(args):
    model = _three_model(args, args.pi0)
    if args.large_budget:
        res = tc.large_eps_reduction(model, args.eps)
        _emit_report(args, "three-opt", {
            "best": res.best, "risks": res.risks,
            "classifiers": {k: {"c_plus": c.c_plus, "c_minus": c.c_minus} for k, c in res.classifiers.items()},
        })
        return
    clf, diag = tc.optimal_interval_classifier(model, args.eps)
    _emit_report(args, "three-opt", {
        "pi_minus": model.pi_minus, "pi_zero": model.pi_zero, "pi_plus": model.pi_plus,
        "c_plus": clf.c_plus, "c_minus": clf.c_minus, "case": diag.case,
        "alpha": diag.alpha, "alpha_bar": diag.alpha_bar, "alpha_hat": diag.alpha_hat,
        "alpha_star": diag.alpha_star, "delta_at_alpha": diag.delta_at_alpha,
        "robust_risk": diag.robust_risk, "globally_certified": diag.globally_certified,
    })


def cmd_three_phase(args):
    if args.steps < 2:
        raise PreconditionError("steps >= 2", f"got {args.steps}")
    if not 0 <= args.pi0_lo < args.pi0_hi < 1:
        raise PreconditionError("0 <= pi0_lo < pi0_hi < 1", f"got {args.pi0_lo}, {args.pi0_hi}")
    grid = np.linspace(args.pi0_lo, args.pi0_hi, args.steps)
    # validate the regime once up front so a bad budget aborts before any row
    reference = _three_model(args, float(grid[-1]))
    a_star = tc.alpha_star(reference, args.eps)

    def row(pi0):
        model = _three_model(args, float(pi0))
        clf, diag = tc.optimal_interval_classifier(model, args.eps)
        return (float(pi0), diag.alpha, diag.case, clf.c_plus, clf.c_minus, diag.robust_risk)

    rows = ordered_map(row, grid)
    jump = None
    for a, b in zip(rows, rows[1:]):
        if a[2] != b[2]:
            jump = {"pi0_before": a[0], "pi0_after": b[0], "case_before": a[2], "case_after": b[2],
                    "c_plus_jump": b[3] - a[3], "c_minus_jump": b[4] - a[4],
                    "band_after": b[3] - b[4]}
            break
    g = reference.gamma
    pi0_star = a_star * g / (1 + g * g + a_star * g)
    _emit_table(args, "three-phase", ["pi0", "alpha", "case", "c_plus", "c_minus", "robust_risk"], rows,
                {"alpha_star": a_star, "pi0_star": pi0_star, "jump": jump})


def cmd_linf_opt(args):
    mu = np.array(_floats(args.mu))
    if args.pi0 is None:
        model = tw.TwoClassModel(mu, args.sigma, args.pi)
        clf = linf.optimal_linf_linear(model, args.eps)
        _emit_report(args, "linf-opt", {
            "w": clf.w, "c": clf.c, "support": linf.soft_threshold(mu, args.eps).kept_support,
            "robust_risk": tw.robust_risk_linear(model, clf, args.eps, Norm.LINF),
            "standard_risk": tw.standard_risk_linear(model, clf),
        })
        return
    model = tc.ThreeClassModel.from_gamma(args.gamma, args.pi0, -1.0, 1.0, mu=mu, sigma=args.sigma)
    res = linf.optimal_linf_interval(model, args.eps)
    _emit_report(args, "linf-opt", {
        "w": res.classifier.w, "c_plus": res.classifier.c_plus, "c_minus": res.classifier.c_minus,
        "case": res.case, "risks": {k.value: v for k, v in res.risks.items()},
    })


def cmd_erm_gap(args):
    mu = np.full(args.dim, args.mean)
    model = tw.TwoClassModel(mu, args.sigma, args.pi)
    curve = empirical.gap_experiment(model, args.loss, [int(v) for v in _floats(args.n_grid)],
                                     _floats(args.eps_list), args.trials, args.seed)
    if curve.loss is empirical.LossKind.HINGE:
        trend = {"kind": "decreasing", "holds": curve.decreasing()}
    else:
        trend = {"kind": "non_decreasing_within_2se", "holds": curve.non_decreasing(2.0)}
    rows = [(r.n, r.eps, r.mean_gap, r.trials, r.std_err) for r in curve.rows]
    _emit_table(args, "erm-gap", ["n", "eps", "mean_gap", "trials", "std_err"], rows,
                {"loss": curve.loss, "trend": trend,
                 "degenerate_fits": sum(r.degenerate for r in curve.rows)})


def cmd_dkw(args):
    model = tw.TwoClassModel(np.array([args.mean]), args.sigma, args.pi)
    rep = empirical.dkw_experiment(model, args.k, args.n, args.delta, args.trials,
                                   args.classifiers, args.seed, args.eps)
    _emit_report(args, "dkw", {
        "k": rep.k, "n": rep.n, "delta": rep.delta, "eps": rep.eps, "trials": rep.trials,
        "failures": rep.failures, "failure_fraction": rep.failure_fraction, "std_err": rep.std_err,
        "bound": rep.bound, "deviation_scale": rep.deviation_scale,
        "median_max_deviation": rep.median_max_deviation, "passes": rep.passes,
    })


def cmd_calib(args):
    model = tw.TwoClassModel(_mean_vector(args), args.sigma, args.pi)
    rep = empirical.calibration_check(model, args.loss, args.norm, args.eps, args.bias_mode)
    _emit_report(args, "calib", {
        "direction": rep.direction, "target_direction": rep.target_direction, "angle": rep.angle,
        "bias": rep.bias, "converged": rep.converged, "iterations": rep.iterations,
        "zero_one_bias": rep.zero_one_bias, "bias_half_formula": rep.bias_half_formula,
        "bias_full_formula": rep.bias_full_formula,
    })


def cmd_mc_check(args):
    norm = Norm(args.norm)
    if args.target == "two-class":
        model = tw.TwoClassModel(_mean_vector(args), args.sigma, args.pi)
        if norm is Norm.L2:
            clf = tw.optimal_robust_classifier(model, args.eps)
        else:
            clf = linf.optimal_linf_linear(model, args.eps)
        analytic = tw.robust_risk_linear(model, clf, args.eps, norm)
    else:
        model = tc.ThreeClassModel.from_gamma(args.gamma, args.pi0, args.lambda_minus, args.lambda_plus,
                                              sigma=args.sigma)
        clf, _ = tc.optimal_interval_classifier(model, args.eps)
        analytic = tc.robust_risk_interval(model, clf, args.eps, norm)
    est = oracle.mc_robust_risk(model, clf, args.eps, norm, args.n, args.seed)
    _emit_report(args, "mc-check", {
        "target": args.target, "analytic": analytic, "monte_carlo": est.value, "std_err": est.std_err,
        "n": est.n, "abs_diff": abs(est.value - analytic), "within_3se": est.within(analytic, 3.0),
    })


def cmd_fixtures(args):
    names = [args.name] if args.name else sorted(tc.FIXTURES)
    reports = [tc.counterexample_fixture(n) for n in names]
    payload = {"passed": all(r.passed for r in reports), "fixtures": [
        {"name": r.name, "passed": r.passed, "conclusion": r.conclusion, "details": r.details,
         "values": [{"name": v.name, "computed": v.computed, "reference": v.reference,
                     "tolerance": v.tolerance, "ok": v.ok} for v in r.values]}
        for r in reports]}
    _emit(args, _json_text("fixtures", payload))
    return 0 if payload["passed"] else 1


def _intervals(text: str) -> g1.IntervalUnion:
    pairs = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            pairs.append((float(lo), float(hi)))
        except ValueError:
            raise UsageError(f"intervals look like 'lo:hi,lo:hi', got {part!r}")
    return g1.IntervalUnion.of(*pairs)


def cmd_isoperimetry(args):
    J = _intervals(args.intervals)
    rep = g1.isoperimetry(J)
    payload = {"intervals": [list(p) for p in J.intervals], "gaussian_measure": rep.gaussian_measure,
               "boundary_measure": rep.boundary_measure, "profile": rep.profile,
               "deficit": rep.deficit, "halfline_deficit": rep.halfline_deficit}
    if args.eps is not None:
        lhs, rhs, holds = g1.expansion_bound_check(J, args.eps, args.bound)
        payload["expansion"] = {"eps": args.eps, "bound": args.bound, "expanded_measure": lhs,
                                "lower_bound": rhs, "holds": holds}
    _emit_report(args, "isoperimetry", payload)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--summary", help="JSON summary path for table commands (default: stderr)")

    parser = _Parser(prog="robust-tradeoffs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        return p

    def two_class_args(p, eps_default=0.5):
        p.add_argument("--mu-norm", type=float, default=1.0)
        p.add_argument("--dim", type=int, default=1)
        p.add_argument("--mu", help="explicit mean vector, comma separated")
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--pi", type=float, default=0.5)
        p.add_argument("--eps", type=float, default=eps_default)

    def three_class_args(p):
        p.add_argument("--lambda-plus", type=float, default=1.0)
        p.add_argument("--lambda-minus", type=float, default=-1.0)
        p.add_argument("--gamma", type=float, default=1.2)
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--eps", type=float, default=0.4)

    p = add("two-opt", cmd_two_opt, "robust-optimal linear rule for two classes")
    two_class_args(p)
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")

    p = add("pareto", cmd_pareto, "standard vs robust risk over thresholds")
    p.add_argument("--mu-norm", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--grid-lo", type=float, default=0.0)
    p.add_argument("--grid-hi", type=float, default=2.0)
    p.add_argument("--grid-n", type=int, default=401)

    p = add("three-opt", cmd_three_opt, "optimal interval rule for three classes")
    three_class_args(p)
    p.add_argument("--pi0", type=float, default=0.42)
    p.add_argument("--large-budget", action="store_true", help="use the pairwise reduction for eps >= min|lambda|/2")

    p = add("three-phase", cmd_three_phase, "sweep the zero-class share across the phase transition")
    three_class_args(p)
    p.add_argument("--pi0-lo", type=float, default=0.40)
    p.add_argument("--pi0-hi", type=float, default=0.44)
    p.add_argument("--steps", type=int, default=401)

    p = add("linf-opt", cmd_linf_opt, "optimal rules under a coordinate-wise budget")
    p.add_argument("--mu", required=True, help="mean vector, comma separated")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--pi0", type=float, help="zero-class share; switches to the three-class rule")
    p.add_argument("--gamma", type=float, default=1.0)

    p = add("erm-gap", cmd_erm_gap, "robust minus standard risk of ERM fits versus n")
    p.add_argument("--loss", choices=("hinge", "linear"), default="hinge")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--mean", type=float, default=0.5, help="value of every mean coordinate")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--n-grid", default="100,1000,10000")
    p.add_argument("--eps-list", default="0.1,0.2,0.3")
    p.add_argument("--trials", type=int, default=200)

    p = add("dkw", cmd_dkw, "uniform deviation of piecewise rules in one dimension")
    p.add_argument("--mean", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--classifiers", type=int, default=50)
    p.add_argument("--eps", type=float, default=0.1)

    p = add("calib", cmd_calib, "surrogate-loss minimizer versus the 0-1 robust optimum")
    two_class_args(p, eps_default=0.2)
    p.add_argument("--loss", choices=("logistic", "exponential", "hinge"), default="logistic")
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--bias-mode", choices=("zero", "free"), default="zero")

    p = add("mc-check", cmd_mc_check, "Monte-Carlo estimate against the closed form")
    p.add_argument("--target", choices=("two-class", "interval"), default="two-class")
    two_class_args(p)
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--gamma", type=float, default=1.2)
    p.add_argument("--pi0", type=float, default=0.42)
    p.add_argument("--lambda-plus", type=float, default=1.0)
    p.add_argument("--lambda-minus", type=float, default=-1.0)

    p = add("fixtures", cmd_fixtures, "rebuild the three-class counterexamples")
    p.add_argument("--name", choices=sorted(tc.FIXTURES))

    p = add("isoperimetry", cmd_isoperimetry, "Gaussian isoperimetry of a union of intervals")
    p.add_argument("--intervals", required=True, help="e.g. '-1:0.5,2:inf'")
    p.add_argument("--eps", type=float)
    p.add_argument("--bound", type=float, default=5.0, help="endpoint bound M for the expansion check")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"robust-tradeoffs: error: {exc}\n")
        return EXIT_USAGE
    except PreconditionError as exc:
        sys.stderr.write(f"robust-tradeoffs: precondition failed: {exc}\n")
        return EXIT_PRECONDITION
    except NumericalFault as exc:
        sys.stderr.write(f"robust-tradeoffs: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
