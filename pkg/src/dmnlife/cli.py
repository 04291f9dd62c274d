"""Command-line front end.

Subcommands: test, power, simulate, calibrate, check-odl.  Exit codes carry
execution status only (0 = ran, 2 = usage/input error); the statistical
decision lives in the output.  Identical command line and seed give
byte-identical stdout; warnings go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, datasets, dmn, mc
from .lifedist import default_odl_grid, hazard_criterion, odl_check
from .ustat import Sample, run_test

FORMATS = ("text", "json", "tsv")


class InputError(ValueError):
    """Bad user input (file contents, values); mapped to exit code 2."""


def parse_sample(text: str) -> Sample:
    """Parse whitespace/comma-separated positive numbers; '#' starts a comment."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for col, token in enumerate(body.replace(",", " ").split(), start=1):
            try:
                v = float(token)
            except ValueError:
                raise InputError(
                    f"non-numeric token {token!r} at line {lineno}, field {col}"
                ) from None
            if not np.isfinite(v) or v <= 0:
                raise InputError(
                    f"non-positive value {token} at position {len(values) + 1} "
                    f"(line {lineno})"
                )
            values.append(v)
    if len(values) < 2:
        raise InputError(f"need at least 2 values, found {len(values)}")
    return Sample(values)


def sample_to_tsv(sample: Sample) -> str:
    lines = ["value"]
    lines += [repr(float(v)) for v in sample.values]
    return "\n".join(lines) + "\n"


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _positive_float(value: str) -> float:
    v = float(value)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not positive")
    return v


def _alpha_arg(value: str) -> float:
    v = float(value)
    if not 0.0 < v <= 0.5:
        raise argparse.ArgumentTypeError("alpha must be in (0, 0.5]")
    return v


def _float_list(value: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in value.split(","))


def _int_list(value: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in value.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmnlife",
        description=(
            "Exponentiality testing against overall-decreasing-life aging, "
            "with dichotomous-Markov-noise simulation and power studies."
        ),
        epilog=(
            f"Default worker count comes from the {mc.WORKERS_ENV_VAR} "
            "environment variable, else the CPU count."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=FORMATS, default="text",
                       help="output format (default text)")
        p.add_argument("--out", metavar="PATH", default=None,
                       help="write output to PATH instead of stdout")

    p_test = sub.add_parser("test", help="run the exponentiality test on a sample")
    src = p_test.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH",
                     help="sample file ('-' for stdin); numbers separated by "
                          "whitespace or commas, '#' comments ignored")
    src.add_argument("--fixture", choices=sorted(datasets.FIXTURES),
                     help="use a bundled data set")
    p_test.add_argument("--alpha", type=_alpha_arg, default=0.05)
    p_test.add_argument("--mode", choices=("normal_approx", "calibrated", "both"),
                        default="normal_approx")
    p_test.add_argument("--calibration", metavar="PATH", default=None,
                        help="calibration TSV produced by the calibrate subcommand")
    p_test.add_argument("--cal-replicates", type=int, default=10000,
                        help="replicates for on-the-fly calibration when no "
                             "calibration file is given (default 10000)")
    p_test.add_argument("--seed", type=int, default=0,
                        help="master seed for on-the-fly calibration")
    add_common(p_test)

    p_power = sub.add_parser("power", help="Monte Carlo power table")
    p_power.add_argument("--family", required=True,
                         choices=("weibull", "lfr", "gamma"))
    p_power.add_argument("--theta", type=_float_list, required=True,
                         metavar="T1,T2,...")
    p_power.add_argument("--n", type=_int_list, required=True, metavar="N1,N2,...")
    p_power.add_argument("--alpha", type=_alpha_arg, default=0.05)
    p_power.add_argument("--replicates", type=int, default=10000)
    p_power.add_argument("--seed", type=int, default=0)
    p_power.add_argument("--mode", choices=("normal_approx", "calibrated"),
                         default="normal_approx")
    p_power.add_argument("--calibration", metavar="PATH", default=None)
    p_power.add_argument("--cal-replicates", type=int, default=10000)
    p_power.add_argument("--workers", type=int, default=None,
                         help=f"worker processes (default: {mc.WORKERS_ENV_VAR} "
                              "or CPU count)")
    add_common(p_power)

    p_cal = sub.add_parser("calibrate", help="null quantiles of the statistic")
    p_cal.add_argument("--n", type=_int_list, required=True, metavar="N1,N2,...")
    p_cal.add_argument("--replicates", type=int, default=10000)
    p_cal.add_argument("--seed", type=int, default=0)
    p_cal.add_argument("--workers", type=int, default=None)
    add_common(p_cal)

    p_sim = sub.add_parser("simulate", help="simulate a noise-driven age path")
    p_sim.add_argument("--v-plus", type=_positive_float, required=True)
    p_sim.add_argument("--v-minus", type=_positive_float, required=True)
    p_sim.add_argument("--lambda-plus", type=float, required=True)
    p_sim.add_argument("--lambda-minus", type=float, required=True)
    p_sim.add_argument("--t-end", type=_positive_float, required=True)
    p_sim.add_argument("--x0", type=float, default=0.0)
    p_sim.add_argument("--start-state", choices=("+", "-"), default="+")
    p_sim.add_argument("--seed", type=int, default=0)
    add_common(p_sim)

    p_odl = sub.add_parser("check-odl",
                           help="check the overall-decreasing-life criterion")
    p_odl.add_argument("--dist", required=True,
                       choices=("exponential", "weibull", "lfr", "gamma"))
    p_odl.add_argument("--theta", type=float, default=1.0,
                       help="family parameter (mean for exponential)")
    p_odl.add_argument("--grid-points", type=int, default=64)
    p_odl.add_argument("--tol", type=_positive_float, default=1e-6)
    p_odl.add_argument("--hazard", action="store_true",
                       help="also report the hazard-rate criterion")
    add_common(p_odl)

    return parser


def _load_calibration(args, n_values) -> mc.CalibrationTable:
    if args.calibration:
        return mc.CalibrationTable.from_tsv(_read_input(args.calibration))
    print(
        f"note: no calibration file; calibrating on the fly at "
        f"{args.cal_replicates} replicates (seed {args.seed})",
        file=sys.stderr,
    )
    return mc.calibrate_null(
        n_values, replicates=args.cal_replicates, master_seed=args.seed
    )


def cmd_test(args) -> int:
    if args.fixture:
        sample = datasets.fixture_sample(args.fixture)
    else:
        sample = parse_sample(_read_input(args.input))

    modes = ["normal_approx", "calibrated"] if args.mode == "both" else [args.mode]
    calibration = None
    if "calibrated" in modes:
        calibration = _load_calibration(args, [sample.n])
    if modes == ["normal_approx"]:
        print(
            "note: normal_approx reproduces the reference rule, which is not "
            "size-alpha; use --mode calibrated for a calibrated decision",
            file=sys.stderr,
        )

    results = [
        run_test(sample, alpha=args.alpha, mode=m, calibration=calibration)
        for m in modes
    ]

    reference = None
    if args.fixture == "leukemia":
        reference = {
            "reference_delta_cap": datasets.LEUKEMIA_REFERENCE_DELTA_CAP,
            "reference_z": datasets.LEUKEMIA_REFERENCE_Z,
        }

    if args.format == "json":
        payload = [json.loads(r.to_json()) for r in results]
        doc = {"results": payload}
        if reference:
            doc.update(reference)
        _emit(json.dumps(doc, indent=2), args.out)
    elif args.format == "tsv":
        _emit("".join(r.to_tsv() for r in results), args.out)
    else:
        blocks = [r.to_text() for r in results]
        if reference:
            blocks.append(
                "reference values reported for this data set:\n"
                f"  delta_cap  {reference['reference_delta_cap']}\n"
                f"  z          {reference['reference_z']}\n"
                "(recomputed values above differ; the reference pair is also "
                "mutually inconsistent)"
            )
        _emit("\n\n".join(blocks), args.out)
    return 0


def cmd_power(args) -> int:
    cfg = mc.PowerConfig(
        family=args.family,
        theta_list=args.theta,
        n_list=args.n,
        alpha=args.alpha,
        replicates=args.replicates,
        master_seed=args.seed,
        mode=args.mode,
    )
    calibration = None
    if args.mode == "calibrated":
        calibration = _load_calibration(args, list(args.n))
    table = mc.estimate_power(cfg, calibration=calibration, workers=args.workers)
    if args.format == "json":
        _emit(table.to_json(), args.out)
    elif args.format == "tsv":
        _emit(table.to_tsv(), args.out)
    else:
        _emit(table.to_text(), args.out)
    return 0


def cmd_calibrate(args) -> int:
    table = mc.calibrate_null(
        list(args.n), replicates=args.replicates, master_seed=args.seed,
        workers=args.workers,
    )
    if args.format == "json":
        _emit(table.to_json(), args.out)
    else:
        _emit(table.to_tsv(), args.out)  # text == tsv for calibration tables
    return 0


def cmd_simulate(args) -> int:
    params = dmn.DmnParams(
        v_plus=args.v_plus,
        v_minus=args.v_minus,
        lambda_plus=args.lambda_plus,
        lambda_minus=args.lambda_minus,
    )
    start = dmn.STATE_PLUS if args.start_state == "+" else dmn.STATE_MINUS
    traj = dmn.simulate_trajectory(
        params, x0=args.x0, t_end=args.t_end, seed=args.seed, start_state=start
    )
    v = dmn.drift(params)
    try:
        lam = dmn.steady_state_mean(params)
        lam_text = f"{lam:g}"
    except dmn.NoSteadyStateError:
        lam = None
        lam_text = "undefined"

    if args.format == "json":
        doc = {
            "params": {
                "v_plus": params.v_plus,
                "v_minus": params.v_minus,
                "lambda_plus": params.lambda_plus,
                "lambda_minus": params.lambda_minus,
            },
            "drift": v,
            "aging_class": dmn.classify(params).value,
            "steady_state_mean": lam,
            "seed": traj.seed,
            "trajectory": {
                "time": [0.0] + [float(t) for t in traj.switch_times],
                "state": (["+" if traj.states[0] == dmn.STATE_PLUS else "-"]
                          + ["+" if s == dmn.STATE_PLUS else "-" for s in traj.states]),
                "age": [traj.start_age] + [float(a) for a in traj.ages],
            },
        }
        _emit(json.dumps(doc), args.out)
    else:
        header = (
            f"# drift V = {v:g}  aging_class = {dmn.classify(params).value}  "
            f"steady_state_mean = {lam_text}  seed = {traj.seed}\n"
        )
        _emit(header + dmn.trajectory_to_tsv(traj), args.out)
    return 0


def cmd_check_odl(args) -> int:
    dist = mc.make_distribution(args.dist, args.theta)
    grid = default_odl_grid(dist, points=args.grid_points)
    report = odl_check(dist, grid=grid, tol=args.tol)
    if args.format == "json":
        doc = {
            "dist": dist.label(),
            "mean": dist.mean,
            "verdict": report.verdict.value,
            "tol": report.tol,
            "grid": report.grid.tolist(),
            "lhs": report.lhs.tolist(),
            "rhs": report.rhs.tolist(),
            "margin": report.margin.tolist(),
        }
        if args.hazard:
            hz = hazard_criterion(dist, grid=grid)
            doc["hazard"] = {
                "threshold": hz.threshold,
                "values": [None if c else float(h)
                           for h, c in zip(hz.hazard, hz.censored)],
                "all_below": hz.all_below,
            }
        _emit(json.dumps(doc), args.out)
    elif args.format == "tsv":
        _emit(f"# {dist.label()}\tverdict={report.verdict.value}\n"
              + report.to_tsv(), args.out)
    else:
        lines = [
            f"distribution : {dist.label()}",
            f"mean         : {dist.mean:.6g}",
            f"verdict      : {report.verdict.value} (tol {report.tol:g})",
            f"margin range : [{report.margin.min():.3e}, {report.margin.max():.3e}]",
        ]
        if args.hazard:
            hz = hazard_criterion(dist, grid=grid)
            lines.append(
                f"hazard < 1/mean at {int(np.sum(hz.below & ~hz.censored))}"
                f"/{len(grid)} grid points (criterion threshold "
                f"{hz.threshold:.6g})"
            )
        lines.append("")
        lines.append(f"{'t':>12} {'lhs':>12} {'rhs':>12} {'margin':>12}")
        for t, l, r in zip(report.grid, report.lhs, report.rhs):
            lines.append(f"{t:>12.5g} {l:>12.5g} {r:>12.5g} {r - l:>12.5g}")
        _emit("\n".join(lines), args.out)
    return 0


_HANDLERS = {
    "test": cmd_test,
    "power": cmd_power,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "check-odl": cmd_check_odl,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (InputError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
