"""Batch front door.

    equiscreen <verb> --scenario FILE [--out DIR] [--format json|csv|both]
                      [--seed N] [--set section.key=value ...] [verb flags]

Verbs: validate, construct, verify, probe, score, compare, export.  Exit
codes: 0 all checks passed / artifact written, 1 a check failed (reports
are still written), 2 usage or scenario errors (one-line diagnostic on
stderr).  All randomness derives from the single seed; identical inputs
and seed produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .allocations import IncreasingAllocation
from .checks import check_convexity, check_equity, check_ic, check_ir, check_merit_monotone
from .exceptions import EquiscreenError, NotEquitable
from .fairness import compare_instruments, global_violation, payment_lower_bound
from .mechanisms import MixtureMechanism, ThresholdMechanism
from .probes import probe_contour_classes, probe_single_instrument
from .reparam import to_kl
from .reporting import envelope, to_csv, to_json, write_atomic
from .scenario import Scenario, scenario_from_file, validate_scenario
from .single_instrument import ConditionalMechanism, KnifeEdgeOrdealMechanism, OneStepOrdealMechanism


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="equiscreen", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True, help="scenario file path")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", choices=("json", "csv", "both"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a scenario entry")

    common(sub.add_parser("validate", help="check the standing assumptions"))

    def mech_flags(sp):
        sp.add_argument("--mechanism", default="threshold",
                        choices=("threshold", "mixture", "knife_edge", "one_step", "conditional"))
        sp.add_argument("--eta-star", type=float, default=None,
                        help="merit threshold (default: mid-range)")
        sp.add_argument("--side", choices=("low", "high"), default="low")
        sp.add_argument("--n-steps", type=int, default=100, help="mixture quantile steps")
        sp.add_argument("--q-star", type=float, default=None, help="posted ordeal")
        sp.add_argument("--anchor", default=None, metavar="ALPHA,BETA")
        sp.add_argument("--x-take", type=float, default=0.1)
        sp.add_argument("--instrument", choices=("payments", "ordeals"), default="payments")

    for verb, blurb in (
        ("construct", "build a mechanism and export its fields"),
        ("verify", "build a mechanism and run the check battery"),
        ("score", "equity-violation score of a mechanism"),
        ("export", "dump the threshold curve and mechanism fields"),
    ):
        sp = sub.add_parser(verb, help=blurb)
        common(sp)
        mech_flags(sp)

    sp = sub.add_parser("probe", help="single-instrument impossibility probe")
    common(sp)
    sp.add_argument("--instrument", choices=("payments", "ordeals"), required=True)
    sp.add_argument("--classes", type=int, default=5)
    sp.add_argument("--coupling", choices=("merit", "exact", "none"), default="merit")
    sp.add_argument("--layout", choices=("grid", "contours"), default="grid")

    sp = sub.add_parser("compare", help="payments-vs-ordeals fairness comparison")
    common(sp)
    sp.add_argument("--anchor", default=None, metavar="ALPHA,BETA")
    sp.add_argument("--x-take", type=float, default=0.1)

    return p


def _load_scenario(args) -> Scenario:
    sc = scenario_from_file(args.scenario)
    overrides = {}
    for entry in args.overrides:
        if "=" not in entry:
            raise EquiscreenError(f"--set needs SECTION.KEY=VALUE, got {entry!r}")
        key, value = entry.split("=", 1)
        overrides[key.strip()] = value.strip()
    return sc.with_overrides(overrides)


def _anchor(args, scenario):
    if args.anchor is None:
        sp = scenario.space
        return (0.5 * (sp.alpha_lo + sp.alpha_hi), 0.5 * (sp.beta_lo + sp.beta_hi))
    a, b = args.anchor.split(",")
    return (float(a), float(b))


def _build_mechanism(args, scenario):
    lo, hi = scenario.merit_range()
    eta_star = 0.5 * (lo + hi) if args.eta_star is None else args.eta_star
    kind = args.mechanism
    if kind == "threshold":
        return ThresholdMechanism(eta_star=eta_star, side=args.side).fit(scenario)
    if kind == "mixture":
        return MixtureMechanism(IncreasingAllocation.ramp((lo, hi)), n_steps=args.n_steps).fit(scenario)
    if kind == "knife_edge":
        q_star = args.q_star
        if q_star is None:
            raise EquiscreenError("knife_edge needs --q-star")
        return KnifeEdgeOrdealMechanism(q_star=q_star).fit(scenario)
    if kind == "one_step":
        return OneStepOrdealMechanism(anchor=_anchor(args, scenario), x_take=args.x_take).fit(scenario)
    if kind == "conditional":
        alloc = IncreasingAllocation.threshold(eta_star, (lo, hi))
        return ConditionalMechanism(alloc, instrument=args.instrument).fit(scenario)
    raise EquiscreenError(f"unknown mechanism {kind!r}")


def _mechanism_rows(mech, scenario, grid):
    nodes = grid.nodes()
    alpha, beta = nodes[:, 0], nodes[:, 1]
    b = mech.bundle(nodes)
    spec = scenario.linear
    if spec is not None:
        kappa, lam = to_kl(spec, alpha, beta)
    else:
        kappa = np.full_like(alpha, np.nan)
        lam = np.full_like(alpha, np.nan)
    eta = scenario.merit(alpha, beta)
    v_implied = kappa * b.x + lam * b.q - b.p
    cols = ["alpha", "beta", "kappa", "lambda", "eta", "x", "p", "q", "V_implied"]
    rows = zip(alpha, beta, kappa, lam, eta, b.x, b.p, b.q, v_implied)
    return cols, rows


def _write(args, name, text):
    path = os.path.join(args.out, name)
    write_atomic(path, text)
    return path


def _emit_json(args, name, report) -> None:
    if args.format in ("json", "both"):
        _write(args, name, to_json(report))


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    threads = os.environ.get("EQUISCREEN_THREADS")
    if threads is not None and not threads.isdigit():
        print(f"equiscreen: EQUISCREEN_THREADS must be an integer, got {threads!r}", file=sys.stderr)
        return 2

    try:
        scenario = _load_scenario(args)
    except (EquiscreenError, OSError) as exc:
        print(f"equiscreen: {exc}", file=sys.stderr)
        return 2

    try:
        return _dispatch(args, scenario)
    except EquiscreenError as exc:
        print(f"equiscreen: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, scenario) -> int:
    verb = args.verb
    if verb == "validate":
        report = validate_scenario(scenario)
        _emit_json(args, "validate.json", envelope("validate", scenario, args.seed, report.describe()))
        if args.format in ("csv", "both"):
            cols = ["name", "passed", "detail"]
            rows = [(c.name, c.passed, c.detail.replace(",", ";")) for c in report.checks]
            _write(args, "validate.csv", to_csv(cols, rows))
        return 0 if report.passed else 1

    if verb == "construct" or verb == "export":
        mech = _build_mechanism(args, scenario)
        grid = scenario.grid()
        manifest = envelope(verb, scenario, args.seed, {"mechanism": mech.describe()})
        _emit_json(args, "construct_manifest.json", manifest)
        if args.format in ("csv", "both"):
            cols, rows = _mechanism_rows(mech, scenario, grid)
            _write(args, "mechanism.csv", to_csv(cols, rows))
            if verb == "export" and hasattr(mech, "curve_"):
                table = mech.curve_.table()
                _write(args, "curve.csv",
                       to_csv(["lam", "kappa_star", "dkappa_star", "d2kappa_star"], table))
        return 0

    if verb == "verify":
        mech = _build_mechanism(args, scenario)
        grid = scenario.grid()
        restrict = "same_alpha" if args.mechanism == "conditional" else None
        checks = [
            check_ic(mech, grid, restrict=restrict),
            check_ir(mech, grid),
            check_equity(mech, grid),
        ]
        reports = [c.describe() for c in checks]
        try:
            mono = check_merit_monotone(mech, grid)
            checks.append(mono)
            reports.append(mono.describe())
        except NotEquitable as exc:
            # monotonicity along the merit sort is undefined for an
            # inequitable allocation; the equity entry already reports the failure
            reports.append({
                "check": "merit_monotone",
                "pass": False,
                "skipped": True,
                "reason": str(exc),
            })
        if isinstance(mech, ThresholdMechanism):
            cx = check_convexity(mech, n_trials=20000, seed=args.seed)
            checks.append(cx)
            reports.append(cx.describe())
        payload = {
            "mechanism": mech.describe(),
            "checks": reports,
            "pass": all(r["pass"] for r in reports),
        }
        _emit_json(args, "verify.json", envelope("verify", scenario, args.seed, payload))
        if args.format in ("csv", "both"):
            cols = ["check", "pass", "value", "tolerance"]
            rows = [(r["check"], r["pass"], r.get("value", ""), r.get("tolerance", "")) for r in reports]
            _write(args, "verify.csv", to_csv(cols, rows))
        return 0 if payload["pass"] else 1

    if verb == "probe":
        grid = scenario.grid()
        if args.layout == "contours":
            result = probe_contour_classes(scenario, args.instrument,
                                           n_levels=max(args.classes, 2), n_per_level=6)
        else:
            try:
                result = probe_single_instrument(scenario, grid, args.instrument,
                                                 n_classes=args.classes, coupling=args.coupling)
            except ValueError as exc:
                raise EquiscreenError(str(exc)) from exc
        _emit_json(args, "probe.json", envelope("probe", scenario, args.seed, result.describe()))
        return 0

    if verb == "score":
        mech = _build_mechanism(args, scenario)
        grid = scenario.grid()
        report = global_violation(mech, grid)
        bound = payment_lower_bound(scenario.merit, scenario.space, grid)
        payload = report.describe()
        payload["payment_lower_bound"] = bound
        payload["mechanism"] = mech.describe()
        _emit_json(args, "score.json", envelope("score", scenario, args.seed, payload))
        if args.format in ("csv", "both") and report.locals_interior is not None:
            g = grid
            rows = []
            li = report.locals_interior
            for i in range(li.shape[0]):
                for j in range(li.shape[1]):
                    v = li[i, j]
                    rows.append((g.alpha[i + 1], g.beta[j + 1],
                                 "inf" if np.isinf(v) else float(v)))
            _write(args, "score_locals.csv", to_csv(["alpha", "beta", "local_violation"], rows))
        return 0

    if verb == "compare":
        report = compare_instruments(scenario, _anchor(args, scenario), args.x_take,
                                     grid=scenario.grid(), seed=args.seed)
        _emit_json(args, "compare.json", envelope("compare", scenario, args.seed, report.describe()))
        return 0

    raise EquiscreenError(f"unknown verb {verb!r}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
