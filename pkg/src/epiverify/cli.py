"""Command-line front end.

Subcommands mirror the verification units: ``entropy`` (estimator
cross-checks), ``map-check`` (transport diagnostics), ``epi`` (the inequality
grid with its gap decomposition), ``smooth`` (the Gaussian-perturbation
ladder), and ``sample`` (inverse-transform draws to CSV).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 assertion failure under ``--assert``.  Reports are byte-reproducible for a
fixed seed; pass ``--no-timestamp`` to drop the wall-clock fields.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .checks import map_diagnostics
from .densities import GaussianMixture
from .entropy import (
    entropy_cov,
    entropy_quadrature_1d,
    entropy_resub,
    entropy_via_divergence,
    gaussian_entropy,
)
from .epi import DEFAULT_LAMBDAS, default_grid, epi_run, smoothing_curve
from .numerics import BracketError, ConvergenceError, QuadratureBudgetError
from .reports import EPI_CSV_HEADER, epi_csv_row, render_json, to_jsonable, write_csv_text
from .rng import RngStream
from .scenarios import ConfigError, RunConfig, ScenarioConfig, load_config
from .transport import build_knothe, sample_mitsm

_NUMERICAL_ERRORS = (
    QuadratureBudgetError,
    ConvergenceError,
    BracketError,
    FloatingPointError,
    np.linalg.LinAlgError,
)

DEFAULT_GRID_SAMPLES = 100_000


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epiverify",
        description="Triangular-transport verification of the entropy power inequality.",
    )
    parser.add_argument("--version", action="version", version=f"epiverify {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON configuration file")
        p.add_argument("--out", help="write the JSON report here (default: stdout)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for grid cells")
        p.add_argument(
            "--assert",
            dest="assert_checks",
            action="store_true",
            help="exit with code 4 when any built-in check fails",
        )
        p.add_argument(
            "--no-timestamp",
            action="store_true",
            help="omit timestamp and wall-clock fields (for byte-stable output)",
        )

    add_common(sub.add_parser("entropy", help="cross-check entropy estimators per scenario"))
    add_common(sub.add_parser("map-check", help="transport-map diagnostics per target"))
    epi_p = sub.add_parser("epi", help="run the inequality grid with gap decomposition")
    add_common(epi_p, config_required=False)
    epi_p.add_argument("--csv", help="write the per-cell CSV table here")
    add_common(sub.add_parser("smooth", help="entropy along a Gaussian smoothing ladder"))
    sample_p = sub.add_parser("sample", help="write inverse-transform draws to CSV")
    add_common(sample_p)
    sample_p.add_argument("out_csv", help="destination CSV file (one row per sample)")
    return parser


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sigma_window(delta: float, se: float, k: float = 3.0, floor: float = 1e-12) -> bool:
    """|delta| within k standard errors, with a tiny floor for exact routes."""
    return abs(delta) <= max(k * se, floor)


# -- subcommands ---------------------------------------------------------------


def _cmd_entropy(cfg: RunConfig, args) -> tuple[list, list]:
    results, failures = [], []
    for index, scen in enumerate(cfg.scenarios):
        base = RngStream(scen.seed).child(index)
        estimates = {}
        for tag in scen.estimators:
            if tag == "closed_form":
                estimates[tag] = gaussian_entropy(scen.x.covs[0])
            elif tag == "resubstitution":
                estimates[tag] = entropy_resub(scen.x, base.child(0), scen.n_samples)
            elif tag == "change_of_variables":
                estimates[tag] = entropy_cov(build_knothe(scen.x), base.child(1), scen.n_samples)
            elif tag == "divergence_route":
                estimates[tag] = entropy_via_divergence(
                    scen.x, scen.x.covariance, base.child(2), scen.n_samples
                )
            elif tag == "quadrature_oracle":
                estimates[tag] = entropy_quadrature_1d(scen.x)
        if scen.x.dim == 1 and "quadrature_oracle" not in estimates:
            estimates["quadrature_oracle"] = entropy_quadrature_1d(scen.x)

        comparisons = []
        tags = list(estimates)
        for i in range(len(tags)):
            for j in range(i + 1, len(tags)):
                a, b = estimates[tags[i]], estimates[tags[j]]
                delta = a.value - b.value
                combined = float(np.hypot(a.std_error, b.std_error))
                ok = _sigma_window(delta, combined, floor=1e-7)
                comparisons.append(
                    {
                        "a": tags[i],
                        "b": tags[j],
                        "abs_diff": abs(delta),
                        "combined_se": combined,
                        "within_3_sigma": ok,
                    }
                )
                if not ok:
                    failures.append(
                        f"{scen.name}: {tags[i]} and {tags[j]} disagree by {abs(delta):.6g} "
                        f"(3 sigma = {3 * combined:.6g})"
                    )
        results.append(
            {
                "scenario": scen.name,
                "dim": scen.x.dim,
                "stream_id": base.stream_id,
                "estimates": estimates,
                "comparisons": comparisons,
            }
        )
    return results, failures


def _cmd_map_check(cfg: RunConfig, args) -> tuple[list, list]:
    targets = []
    for index, scen in enumerate(cfg.scenarios):
        targets.append((index, scen, "x", scen.x))
        if scen.y is not None:
            targets.append((index, scen, "y", scen.y))

    def run(entry):
        index, scen, side, target = entry
        base = RngStream(scen.seed).child(2 * index + (0 if side == "x" else 1))
        checks = map_diagnostics(target, base, scen.n_samples)
        return {
            "scenario": scen.name,
            "target": side,
            "dim": target.dim,
            "stream_id": base.stream_id,
            "checks": [c.as_dict() for c in checks],
        }

    results = _pool_map(run, targets, args.threads)
    failures = [
        f"{r['scenario']}.{r['target']}: {c['name']} failed "
        f"(statistic {c['statistic']:.6g}, threshold {c['threshold']:.6g})"
        for r in results
        for c in r["checks"]
        if not c["passed"]
    ]
    return results, failures


def _cmd_epi(cfg: RunConfig, args) -> tuple[list, list]:
    cells = []
    for scen in cfg.scenarios:
        for lam in scen.lambdas:
            cells.append((len(cells), scen, lam))

    def run(cell):
        index, scen, lam = cell
        stream = RngStream(scen.seed).child(index)
        report = epi_run(scen.x, scen.y, lam, stream, scen.n_samples)
        return {
            "scenario": scen.name,
            "lambda": lam,
            "stream_id": stream.stream_id,
            "report": report,
        }

    results = _pool_map(run, cells, args.threads)
    failures = []
    for entry in results:
        report = entry["report"]
        label = f"{entry['scenario']} (lambda={entry['lambda']})"
        if report.total_gap.value < -3.0 * report.total_gap.std_error:
            failures.append(f"{label}: total gap {report.total_gap.value:.6g} below -3 sigma")
        if report.conditioning_gap.value < -3.0 * report.conditioning_gap.std_error:
            failures.append(f"{label}: conditioning gap below -3 sigma")
        if report.jensen_gap.value < 0.0:
            failures.append(f"{label}: negative Jensen gap")
        if report.diagnostics["jensen_violations"] != 0:
            failures.append(
                f"{label}: {report.diagnostics['jensen_violations']} pointwise Jensen violations"
            )
        if not _sigma_window(report.diagnostics["recon_residual"], report.diagnostics["recon_se"]):
            failures.append(f"{label}: gap decomposition does not reconcile within 3 sigma")
    return results, failures


def _cmd_smooth(cfg: RunConfig, args) -> tuple[list, list]:
    results, failures = [], []
    for index, scen in enumerate(cfg.scenarios):
        base = RngStream(scen.seed).child(index)
        curve = smoothing_curve(scen.x, scen.t_values, base, scen.n_samples)
        monotone = True
        for (t_hi, est_hi), (t_lo, est_lo) in zip(curve, curve[1:]):
            slack = 3.0 * float(np.hypot(est_hi.std_error, est_lo.std_error))
            if est_hi.value < est_lo.value - slack:
                monotone = False
        results.append(
            {
                "scenario": scen.name,
                "stream_id": base.stream_id,
                "curve": [{"t": t, "estimate": est} for t, est in curve],
                "monotone_in_t": monotone,
            }
        )
        if not monotone:
            failures.append(f"{scen.name}: smoothed entropy is not increasing in t")
    return results, failures


def _cmd_sample(cfg: RunConfig, args) -> tuple[list, list]:
    results = []
    rows = []
    for index, scen in enumerate(cfg.scenarios):
        base = RngStream(scen.seed).child(index)
        draws = sample_mitsm(scen.x, base, scen.n_samples)
        rows.append(draws)
        results.append(
            {
                "scenario": scen.name,
                "count": scen.n_samples,
                "dim": scen.x.dim,
                "stream_id": base.stream_id,
                "sample_mean": draws.mean(axis=0),
                "sample_covariance": np.cov(draws.T, ddof=1).reshape(scen.x.dim, scen.x.dim),
            }
        )
    dim = max(scen.x.dim for scen in cfg.scenarios)
    header = ["scenario"] + [f"x{k + 1}" for k in range(dim)]
    csv_rows = []
    for scen, draws in zip(cfg.scenarios, rows):
        for row in draws:
            csv_rows.append([scen.name] + list(row) + [""] * (dim - len(row)))
    with open(args.out_csv, "w", encoding="utf-8") as handle:
        handle.write(write_csv_text(header, csv_rows))
    return results, []


_COMMANDS = {
    "entropy": _cmd_entropy,
    "map-check": _cmd_map_check,
    "epi": _cmd_epi,
    "smooth": _cmd_smooth,
    "sample": _cmd_sample,
}


def _default_epi_config(seed: int) -> RunConfig:
    """The versioned built-in grid, used when ``epi`` runs without a config."""
    scenarios = tuple(
        ScenarioConfig(
            name=scen.name,
            x=scen.x,
            y=scen.y,
            lambdas=DEFAULT_LAMBDAS,
            n_samples=DEFAULT_GRID_SAMPLES,
            seed=seed,
            estimators=(),
            t_values=None,
        )
        for scen in default_grid()
    )
    raw = {
        "name": "default-grid",
        "seed": seed,
        "n_samples": DEFAULT_GRID_SAMPLES,
        "lambdas": list(DEFAULT_LAMBDAS),
        "scenarios": [
            {"name": s.name, "x": s.x.to_dict(), "y": s.y.to_dict()} for s in default_grid()
        ],
    }
    return RunConfig(name="default-grid", seed=seed, scenarios=scenarios, raw=raw)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.config is None:
            if args.command != "epi":
                raise ConfigError("--config", "a configuration file is required")
            if args.seed is None:
                raise ConfigError("--seed", "the built-in grid needs an explicit seed")
            cfg = _default_epi_config(args.seed)
        else:
            cfg = load_config(args.config, args.command, args.seed)
        if args.threads < 1:
            raise ConfigError("--threads", f"must be at least 1, got {args.threads}")
        results, failures = _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    report = {
        "tool": {"name": "epiverify", "version": __version__},
        "command": args.command,
        "seed": cfg.seed,
        "config": cfg.raw,
        "results": results,
        "assertions": {
            "checked": bool(args.assert_checks),
            "failures": failures,
        },
    }
    if not args.no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
        report["wall_seconds"] = time.perf_counter() - started

    if args.command == "epi":
        csv_path = args.csv
        if csv_path is None and args.out:
            csv_path = args.out.rsplit(".", 1)[0] + ".csv"
        if csv_path:
            csv_rows = [epi_csv_row(entry["scenario"], entry["report"]) for entry in results]
            with open(csv_path, "w", encoding="utf-8") as handle:
                handle.write(write_csv_text(EPI_CSV_HEADER, csv_rows))

    text = render_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)

    if args.assert_checks and failures:
        for failure in failures:
            print(f"assertion failed: {failure}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
