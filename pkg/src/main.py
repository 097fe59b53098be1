"""
src/main.py
════════════════════════════════════════════════════════════════════════════
Command-line (and importable) entry point for *ipd-inference*.

Sub-commands
  simulate   write a simulated stacked dataset to CSV
  fit        fit one method and print the result (JSON by default)
  benchmark  Monte Carlo coverage / width study over every method

*Every* sub-command requires ``--seed``; nothing is seeded from the clock.

Exit codes: **0** success, **2** usage or configuration error, **3** data
error, **4** numerical failure.  Errors from ``fit`` and ``benchmark`` are
written to standard error as ``{"error": {"type": …, "message": …}}``.

Example
-------
python -m src simulate --n 100,100,1000 --effect 1 --sigma-y 4 \
                       --model ols --seed 42 --out d.csv
python -m src fit --formula "Y - f ~ X1" --method ppi --model ols \
                  --data d.csv --label set --seed 42
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import textwrap
from pathlib import Path

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

# ────────────────────────────────────────────────────────────────────────────
# Local imports
# ────────────────────────────────────────────────────────────────────────────
from src.config import Settings
from src.dataset import load_split_csv, load_stacked, parse_formula, write_csv
from src.errors import ConfigurationError, DataError, IpdError
from src.methods.estimating import ESTIMANDS
from src.report import render_print, render_summary, to_json
from src.simdat import SimConfig, simdat
from src.study import StudyConfig, StudyReport, run_study
from src.workflows import METHODS, fit_ipd, make_config

_LOG = logging.getLogger(__name__)
_ERR = Console(stderr=True)


# ────────────────────────────────────────────────────────────────────────────
# CLI Argument Parser
# ────────────────────────────────────────────────────────────────────────────
def build_parser(settings: Settings | None = None) -> argparse.ArgumentParser:
    s = settings or Settings()
    p = argparse.ArgumentParser(
        prog="ipd",
        formatter_class=argparse.RawTextHelpFormatter,
        description=textwrap.dedent(
            """
            Inference on predicted data: PostPI (bootstrap), PPI, PPI++ and
            PSPA for means, quantiles, linear and logistic regression.

            Commands:
              simulate   write a simulated stacked dataset
              fit        fit one method to a dataset
              benchmark  Monte Carlo coverage study
            """
        ),
    )
    p.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    sub = p.add_subparsers(dest="command", required=True)

    # simulate ─────────────────────────────────────────────────────────────
    sim = sub.add_parser("simulate", help="Write a simulated stacked dataset.")
    _add_design_flags(sim)
    sim.add_argument("--model", default="ols", choices=ESTIMANDS, help="Estimand the data is for.")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--label", default=s.IPD_LABEL_COLUMN, help="Label column name.")
    sim.add_argument("--out", required=True, help="Output CSV path.")

    # fit ──────────────────────────────────────────────────────────────────
    fit = sub.add_parser("fit", help="Fit one method.")
    fit.add_argument("--formula", required=True, help='e.g. "Y - f ~ X1 + X2"')
    fit.add_argument("--method", required=True, help=", ".join(METHODS))
    fit.add_argument("--model", required=True, help=", ".join(ESTIMANDS))
    src_group = fit.add_mutually_exclusive_group(required=True)
    src_group.add_argument("--data", help="Stacked CSV with a label column.")
    src_group.add_argument("--labeled", help="Labeled CSV (use with --unlabeled).")
    fit.add_argument("--unlabeled", help="Unlabeled CSV (use with --labeled).")
    fit.add_argument("--label", default=s.IPD_LABEL_COLUMN, help="Label column name.")
    fit.add_argument("--alpha", type=float, default=s.IPD_ALPHA)
    fit.add_argument("--q", type=float, default=None, help="Quantile level (quantile only).")
    fit.add_argument("--nboot", type=int, default=s.IPD_NBOOT, help="postpi_boot replicates.")
    fit.add_argument("--seed", type=int, required=True)
    fit.add_argument("--lambda", dest="lambda_value", type=float, default=None,
                     help="Pin the PPI++ tuning parameter.")
    fit.add_argument("--omega", dest="omega_value", type=float, default=None,
                     help="Pin the PSPA weights.")
    fit.add_argument("--coord", type=int, default=None,
                     help="Coefficient the PPI++ tuning targets (default: all).")
    fit.add_argument("--no-lambda-clip", dest="lambda_clip", action="store_false")
    fit.add_argument("--postpi-se", choices=("npar", "par"), default="npar")
    fit.add_argument("--fixed-relationship", dest="resample_labeled", action="store_false",
                     help="postpi_boot: fit the relationship model once instead of per replicate.")
    fit.add_argument("--benchmark-se", choices=("model", "sandwich"), default="model")
    fit.add_argument("--format", choices=("json", "summary", "print"), default="json")

    # benchmark ────────────────────────────────────────────────────────────
    bench = sub.add_parser("benchmark", help="Monte Carlo coverage study.")
    _add_design_flags(bench)
    bench.add_argument("--design", choices=("ols", "mean"), default="ols")
    bench.add_argument("--replicates", type=int, default=s.IPD_REPLICATES)
    bench.add_argument("--seed", type=int, required=True)
    bench.add_argument("--jobs", type=int, default=s.IPD_JOBS)
    bench.add_argument("--methods", default=",".join(METHODS),
                       help="Comma-separated subset of methods.")
    bench.add_argument("--alpha", type=float, default=s.IPD_ALPHA)
    bench.add_argument("--nboot", type=int, default=s.IPD_NBOOT)
    bench.add_argument("--out", default=None, help="Report CSV (default: standard output).")
    bench.add_argument("--long-out", default=None, help="Per-replicate long-format CSV.")
    return p


def _add_design_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", default="100,100,1000", type=_sizes,
                   help="training,labeled,unlabeled row counts.")
    p.add_argument("--effect", type=float, default=1.0)
    p.add_argument("--sigma-y", type=float, default=4.0)


def _sizes(text: str) -> tuple[int, int, int]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}") from None
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}")
    return values  # type: ignore[return-value]


# ────────────────────────────────────────────────────────────────────────────
# Logging
# ────────────────────────────────────────────────────────────────────────────
def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=_ERR, show_path=False)],
        force=True,
    )


# ────────────────────────────────────────────────────────────────────────────
# Commands
# ────────────────────────────────────────────────────────────────────────────
def cmd_simulate(args: argparse.Namespace) -> None:
    n_training, n_labeled, n_unlabeled = args.n
    config = _validated(
        SimConfig,
        n_training=n_training,
        n_labeled=n_labeled,
        n_unlabeled=n_unlabeled,
        effect=args.effect,
        sigma_y=args.sigma_y,
        model=args.model,
        seed=args.seed,
        label_column=args.label,
    )
    data = simdat(config)
    write_csv(data, args.out)
    print(json.dumps({"rows": data.rows, **data.label_counts(), "out": args.out}))


def cmd_fit(args: argparse.Namespace) -> None:
    formula = parse_formula(args.formula)
    config = make_config(
        method=args.method,
        estimand=args.model,
        alpha=args.alpha,
        q=args.q,
        nboot=args.nboot,
        seed=args.seed,
        lambda_clip=args.lambda_clip,
        lambda_value=args.lambda_value,
        omega_value=args.omega_value,
        coord=args.coord,
        postpi_se=args.postpi_se,
        postpi_resample_labeled=args.resample_labeled,
        benchmark_se=args.benchmark_se,
    )

    if args.data is not None:
        data = load_stacked(_existing(args.data), args.label, formula)
    else:
        if args.unlabeled is None:
            raise ConfigurationError("cli: --labeled needs --unlabeled.")
        data = load_split_csv(_existing(args.labeled), _existing(args.unlabeled), formula, args.label)

    fit = fit_ipd(formula, data, config)
    if args.format == "summary":
        sys.stdout.write(render_summary(fit))
    elif args.format == "print":
        sys.stdout.write(render_print(fit))
    else:
        print(to_json(fit))


def cmd_benchmark(args: argparse.Namespace) -> None:
    n_training, n_labeled, n_unlabeled = args.n
    config = _validated(
        StudyConfig,
        replicates=args.replicates,
        seed=args.seed,
        design=args.design,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        n_training=n_training,
        n_labeled=n_labeled,
        n_unlabeled=n_unlabeled,
        effect=args.effect,
        sigma_y=args.sigma_y,
        alpha=args.alpha,
        nboot=args.nboot,
        jobs=args.jobs,
    )
    _LOG.info("Running %d replicates of the %s design on %d worker(s)",
              config.replicates, config.design, config.jobs)
    report = run_study(config)

    report.write(args.out or sys.stdout, args.long_out)

    if not args.quiet:
        _ERR.print(_study_table(report))


def _study_table(report: StudyReport) -> Table:
    table = Table(title=f"Coverage study ({report.config.replicates} replicates, truth = {report.config.truth:g})")
    for col in ("method", "coverage", "mc_se", "mean_width", "mean_estimate", "failures"):
        table.add_column(col, justify="left" if col == "method" else "right")
    for row in report.rows:
        table.add_row(
            row.method,
            f"{row.coverage:.3f}",
            f"{row.mc_se:.3f}",
            f"{row.mean_width:.4f}",
            f"{row.mean_estimate:.4f}",
            str(row.failures),
        )
    return table


def _validated(model, /, **values):
    try:
        return model(**values)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigurationError(f"cli: {details}") from exc


def _existing(path: str) -> Path:
    p = Path(path).expanduser()
    if not p.is_file():
        raise DataError(f"dataset: file not found: {p}")
    return p


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "benchmark": cmd_benchmark}


# ────────────────────────────────────────────────────────────────────────────
# Main driver
# ────────────────────────────────────────────────────────────────────────────
def main(argv: list[str] | None = None) -> None:
    """Parse CLI args, run the command and exit with its status code."""
    try:
        settings = Settings()
    except ValidationError as exc:
        print(f"invalid environment settings: {exc}", file=sys.stderr)
        sys.exit(2)

    parser = build_parser(settings)
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    setup_logging("WARNING" if args.quiet else settings.LOG_LEVEL)

    try:
        COMMANDS[args.command](args)
    except IpdError as exc:
        _LOG.debug("command failed", exc_info=True)
        print(json.dumps({"error": exc.to_dict()}), file=sys.stderr)
        sys.exit(exc.exit_code)
    sys.exit(0)


# ────────────────────────────────────────────────────────────────────────────
# `python -m src` entry-point behaviour
# ────────────────────────────────────────────────────────────────────────────
if __name__ == "__main__":
    main()
