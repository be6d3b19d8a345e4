"""Command-line pipeline: prepare, estimate, irf, simulate, sweep.

Every command is a pure function of (config file, input files, seed):
reruns write byte-identical outputs. Validation runs before any compute and
file writes are atomic, so a failed run never leaves partial outputs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import panel as panel_mod
from ._atomic import atomic_write_text
from .config import METHODS, load_config
from .errors import ConfigError, DataError, FavarError, NumericalError
from .gibbs import GibbsResult, SamplerConfig, convergence_report, run_chains, run_gibbs
from .irf import convert_irf_units, posterior_irfs, summarize_irfs
from .pca import two_step_estimate
from .persist import (
    read_chain,
    write_chain,
    write_diagnostics_json,
    write_irf_csv,
    write_screening_csv,
)
from .plots import plot_irf_grid, plot_sweep_grid
from .simulate import simulate_favar

# Geweke diagnostics need a minimally long chain to compare segments.
_MIN_DIAGNOSED_DRAWS = 20


def _fmt(v):
    return format(float(v), ".17g")


def _require(cfg, command, *keys):
    missing = [k for k in keys if not getattr(cfg, k)]
    if missing:
        raise ConfigError(
            f"{command} requires config key(s): {', '.join(missing)}"
        )


def _input_file(path, what):
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found: {p}")
    return p


def _load_prepared(cfg):
    data_path, sidecar_path = cfg.prepared_paths()
    _input_file(data_path, "prepared panel")
    _input_file(sidecar_path, "prepared panel sidecar")
    return panel_mod.read_prepared_panel(data_path, sidecar_path)


def cmd_prepare(cfg):
    """Transform and balance the raw panel; write it with its screening report."""
    _require(cfg, "prepare", "data", "metadata", "policy")
    data_file = _input_file(cfg.data, "data file")
    meta_file = _input_file(cfg.metadata, "metadata file")
    series, metas = panel_mod.load_panel(data_file, meta_file)
    prepared, report = panel_mod.prepare_panel(series, metas, cfg.policy)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    data_path, sidecar_path = cfg.prepared_paths()
    data_path.parent.mkdir(parents=True, exist_ok=True)
    panel_mod.write_prepared_panel(prepared, data_path, sidecar_path)
    write_screening_csv(out / "screening.csv", report)
    print(f"prepared {prepared.n_periods} x {prepared.n_series} panel -> {data_path}")
    return 0


def _two_step_result(prepared, cfg):
    params, factors = two_step_estimate(
        prepared.informational_data(),
        prepared.policy_data(),
        prepared.n_slow(),
        cfg.n_factors,
        cfg.n_lags,
    )
    point = SamplerConfig(
        n_factors=cfg.n_factors,
        n_lags=cfg.n_lags,
        n_draws=1,
        n_burn=0,
        thin=1,
        seed=cfg.seed,
        enforce_stationarity=False,
    )
    return GibbsResult(
        factors=factors[None],
        loadings_f=params.loadings_f[None],
        loadings_y=params.loadings_y[None],
        var_coefs=params.var_coefs[None],
        innovation_cov=params.innovation_cov[None],
        idio_var=params.idio_var[None],
        n_slow=prepared.n_slow(),
        config=point,
    )


def cmd_estimate(cfg):
    """Estimate the model on the prepared panel and persist the chain(s)."""
    prepared = _load_prepared(cfg)
    out = cfg.out_dir()
    if cfg.method == "two-step":
        results = [_two_step_result(prepared, cfg)]
    else:
        results = run_chains(
            prepared.informational_data(),
            prepared.policy_data(),
            prepared.n_slow(),
            cfg.sampler_config(),
            cfg.n_chains,
            prior=cfg.prior_config(),
            workers=cfg.workers,
        )
    out.mkdir(parents=True, exist_ok=True)
    chains_meta = []
    geweke = {}
    written = set()
    for c, result in enumerate(results):
        name = f"chain_{c:02d}"
        written.add(name)
        write_chain(out / name, result)
        chains_meta.append(
            {
                "directory": name,
                "seed": result.config.seed,
                "n_stored": result.n_stored,
                "stationarity_redraws": result.stationarity_redraws,
            }
        )
        if result.n_stored >= _MIN_DIAGNOSED_DRAWS:
            geweke[name] = convergence_report(result)
    for p in sorted(out.glob("chain_*")):
        if p.is_dir() and p.name not in written:
            shutil.rmtree(p)
    write_diagnostics_json(
        out / "diagnostics.json",
        geweke,
        extra={"method": cfg.method, "chains": chains_meta},
    )
    stored = sum(r.n_stored for r in results)
    print(f"estimated {len(results)} chain(s), {stored} stored draws -> {out}")
    return 0


def _load_chains(out):
    dirs = sorted(p for p in out.glob("chain_*") if p.is_dir())
    if not dirs:
        raise DataError(f"no chains found under {out}; run estimate first")
    results = [read_chain(d) for d in dirs]
    first = results[0]
    for r, d in zip(results[1:], dirs[1:]):
        if (
            r.factors.shape[1:] != first.factors.shape[1:]
            or r.loadings_f.shape[1:] != first.loadings_f.shape[1:]
            or r.config.n_lags != first.config.n_lags
        ):
            raise DataError(f"chain {d.name} has mismatched dimensions; re-estimate")
    return results


def _band_summary(results, prepared, cfg):
    tcodes = [m.tcode for m in prepared.meta]
    draws = np.concatenate(
        [posterior_irfs(r, cfg.horizon, cfg.shock_size) for r in results]
    )
    converted = convert_irf_units(draws, prepared.standardization, tcodes, cfg.units)
    return summarize_irfs(converted, cfg.quantiles())


def cmd_irf(cfg):
    """Compute band summaries from persisted chains; write CSV and figure."""
    prepared = _load_prepared(cfg)
    out = cfg.out_dir()
    results = _load_chains(out)
    if results[0].loadings_f.shape[1] + 1 != prepared.n_series:
        raise DataError("persisted chains do not match the prepared panel width")
    summary = _band_summary(results, prepared, cfg)
    write_irf_csv(out / "irf.csv", summary, prepared.names, cfg.units, cfg.shock_size)
    plot_irf_grid(
        summary,
        prepared.names,
        out / "irf_grid.svg",
        cfg.units,
        cfg.shock_size,
        variables=cfg.plot_selection(prepared.names),
    )
    print(f"wrote {out / 'irf.csv'} and {out / 'irf_grid.svg'}")
    return 0


def cmd_simulate(cfg):
    """Generate a synthetic panel with known truth, in the raw input format."""
    sim_cfg = cfg.simulation_config()
    sim = simulate_favar(sim_cfg)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / "sim_data.csv"
    meta_path = out / "sim_metadata.csv"
    policy_name = sim.write_raw_csv(data_path, meta_path, start_year=cfg.sim_start_year)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    K = sim.factors.shape[1]
    writer.writerow(["period"] + [f"factor_{k + 1}" for k in range(K)])
    for t in range(sim.factors.shape[0]):
        writer.writerow([t] + [_fmt(v) for v in sim.factors[t]])
    atomic_write_text(out / "truth_factors.csv", buf.getvalue())

    truth = {
        "loadings_f": sim.params.loadings_f.tolist(),
        "loadings_y": sim.params.loadings_y.tolist(),
        "var_coefs": sim.params.var_coefs.tolist(),
        "innovation_cov": sim.params.innovation_cov.tolist(),
        "idio_var": sim.params.idio_var.tolist(),
        "n_slow": sim_cfg.resolved_n_slow(),
        "n_lags": sim_cfg.n_lags,
        "policy_name": policy_name,
        "seed": sim_cfg.seed,
    }
    atomic_write_text(
        out / "truth_params.json", json.dumps(truth, indent=2, sort_keys=True) + "\n"
    )
    atomic_write_text(
        out / "sim_config.txt",
        f"data = {data_path}\nmetadata = {meta_path}\npolicy = {policy_name}\n",
    )
    print(
        f"simulated {sim_cfg.n_periods} x {sim_cfg.n_series + 1} panel "
        f"(seed {sim_cfg.seed}) -> {out}"
    )
    return 0


def parse_sweep_spec(tokens, cfg):
    """Expand sweep tokens like ``K=1..5 d=2,4`` into (K, d) cells.

    Axes: K (factor count) and d (lag order). A missing axis stays at its
    configured baseline. Values are a single integer, a comma list, or an
    inclusive ``a..b`` range.
    """
    axes = {"K": [cfg.n_factors], "d": [cfg.n_lags]}
    seen = set()
    for token in tokens:
        name, sep, spec = token.partition("=")
        if not sep or name not in axes:
            raise ConfigError(f"sweep token must be K=... or d=..., got {token!r}")
        if name in seen:
            raise ConfigError(f"duplicate sweep axis {name!r}")
        seen.add(name)
        try:
            if ".." in spec:
                lo, hi = spec.split("..", 1)
                values = list(range(int(lo, 10), int(hi, 10) + 1))
            else:
                values = [int(v, 10) for v in spec.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse sweep values {spec!r}") from None
        if not values or any(v < 1 for v in values):
            raise ConfigError(f"sweep values must be positive integers: {token!r}")
        axes[name] = values
    return [(k, d) for k in axes["K"] for d in axes["d"]]


def _sweep_cell_task(args):
    cfg, cell, data, policy, n_slow, records, tcodes = args
    k, d = cell
    sampler = SamplerConfig(
        n_factors=k,
        n_lags=d,
        n_draws=cfg.n_draws,
        n_burn=cfg.n_burn,
        thin=cfg.thin,
        seed=cfg.seed,
        enforce_stationarity=cfg.enforce_stationarity,
    )
    result = run_gibbs(data, policy, n_slow, sampler, cfg.prior_config())
    draws = posterior_irfs(result, cfg.horizon, cfg.shock_size)
    converted = convert_irf_units(draws, records, tcodes, cfg.units)
    summary = summarize_irfs(converted, cfg.quantiles())
    return summary, result.stationarity_redraws


def cmd_sweep(cfg, tokens):
    """Re-estimate across factor/lag settings and write a comparison report."""
    cells = parse_sweep_spec(tokens, cfg)
    prepared = _load_prepared(cfg)
    for k, _ in cells:
        if k > prepared.n_slow():
            raise ConfigError(
                f"sweep cell K={k} exceeds the {prepared.n_slow()} slow series"
            )
    out = cfg.out_dir() / "sweep"
    data = prepared.informational_data()
    policy = prepared.policy_data()
    records = prepared.standardization
    tcodes = [m.tcode for m in prepared.meta]
    tasks = [
        (cfg, cell, data, policy, prepared.n_slow(), records, tcodes)
        for cell in cells
    ]
    if cfg.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(cells))) as pool:
            outcomes = list(pool.map(_sweep_cell_task, tasks))
    else:
        outcomes = [_sweep_cell_task(t) for t in tasks]

    out.mkdir(parents=True, exist_ok=True)
    lines = ["n_factors,n_lags,variable,horizon,median,lower,upper,units,shock"]
    shock = _fmt(cfg.shock_size)
    labelled = []
    redraws = {}
    for (k, d), (summary, n_redraws) in zip(cells, outcomes):
        label = f"K{k}_d{d}"
        cell_dir = out / label
        cell_dir.mkdir(parents=True, exist_ok=True)
        write_irf_csv(
            cell_dir / "irf.csv", summary, prepared.names, cfg.units, cfg.shock_size
        )
        labelled.append((f"K={k} d={d}", summary))
        redraws[label] = n_redraws
        for j, name in enumerate(prepared.names):
            for h in range(summary.median.shape[0]):
                lines.append(
                    f"{k},{d},{name},{h},{_fmt(summary.median[h, j])},"
                    f"{_fmt(summary.lower[h, j])},{_fmt(summary.upper[h, j])},"
                    f"{cfg.units},{shock}"
                )
    for p in sorted(out.glob("K*_d*")):
        if p.is_dir() and p.name not in redraws:
            shutil.rmtree(p)
    atomic_write_text(out / "report.csv", "\n".join(lines) + "\n")
    plot_sweep_grid(
        labelled,
        prepared.names,
        out / "sweep_grid.svg",
        cfg.units,
        cfg.shock_size,
        variables=cfg.plot_selection(prepared.names),
    )
    write_diagnostics_json(
        out / "diagnostics.json",
        {},
        extra={"cells": sorted(redraws), "stationarity_redraws": redraws},
    )
    print(f"swept {len(cells)} cell(s) -> {out / 'report.csv'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="favar",
        description="Factor-augmented VAR estimation and policy-shock analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument("--seed", type=int, metavar="INT", help="override config seed")
    common.add_argument("--out", metavar="DIR", help="override output directory")
    common.add_argument(
        "--workers", type=int, metavar="INT", help="max concurrent chains/cells"
    )
    sub.add_parser(
        "prepare", parents=[common], help="transform and balance the raw panel"
    )
    est = sub.add_parser(
        "estimate", parents=[common], help="run the posterior sampler"
    )
    est.add_argument(
        "--method", choices=METHODS, help="estimation path (default from config)"
    )
    sub.add_parser("irf", parents=[common], help="impulse responses from saved chains")
    sub.add_parser("simulate", parents=[common], help="generate synthetic data")
    swp = sub.add_parser(
        "sweep", parents=[common], help="re-estimate across K/d settings"
    )
    swp.add_argument(
        "--sweep",
        nargs="+",
        metavar="AXIS=VALUES",
        required=True,
        help="axes to vary, e.g. K=1..5 d=2,4",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "out": args.out, "workers": args.workers}
    if getattr(args, "method", None):
        overrides["method"] = args.method
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "prepare":
            return cmd_prepare(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg)
        if args.command == "irf":
            return cmd_irf(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_sweep(cfg, args.sweep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except FavarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
