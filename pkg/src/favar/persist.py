"""Deterministic on-disk formats for chains and impulse-response summaries.

All numbers are written with 17 significant digits (%.17g), which round
trips float64 exactly; JSON is emitted with sorted keys and no timestamps,
so rewriting identical results yields byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_text as _atomic_write_text
from .errors import DataError
from .gibbs import GibbsResult, SamplerConfig

_FORMAT_VERSION = 1

_GROUPS = ("factors", "loadings_f", "loadings_y", "var_coefs", "innovation_cov", "idio_var")


def _fmt(v):
    return format(float(v), ".17g")


def write_irf_csv(path, summary, names, units, shock_size):
    """Write one band summary as delimited text.

    Columns: variable, horizon, median, lower, upper, units, shock. Rows
    iterate variables in panel order, horizons ascending within each.
    """
    med = summary.median
    H1, V = med.shape
    if len(names) != V:
        raise ValueError("names length does not match the variable axis")
    lines = ["variable,horizon,median,lower,upper,units,shock"]
    shock = _fmt(shock_size)
    for j, name in enumerate(names):
        for h in range(H1):
            lines.append(
                f"{name},{h},{_fmt(med[h, j])},{_fmt(summary.lower[h, j])},"
                f"{_fmt(summary.upper[h, j])},{units},{shock}"
            )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_irf_csv(path):
    """Reload a band summary written by ``write_irf_csv``.

    Returns a dict with names (panel order), median/lower/upper arrays,
    units and shock size.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["variable", "horizon", "median", "lower", "upper", "units", "shock"]
        if reader.fieldnames != expected:
            raise DataError(f"unexpected columns in {path}: {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise DataError(f"empty impulse-response file {path}")
    names = []
    for r in rows:
        if r["variable"] not in names:
            names.append(r["variable"])
    horizons = sorted({int(r["horizon"]) for r in rows})
    if horizons != list(range(len(horizons))):
        raise DataError("horizons must be contiguous from 0")
    H1, V = len(horizons), len(names)
    med = np.empty((H1, V))
    lower = np.empty((H1, V))
    upper = np.empty((H1, V))
    units = rows[0]["units"]
    shock = float(rows[0]["shock"])
    index = {n: j for j, n in enumerate(names)}
    seen = np.zeros((H1, V), dtype=bool)
    for r in rows:
        j = index[r["variable"]]
        h = int(r["horizon"])
        if seen[h, j]:
            raise DataError(f"duplicate row for {r['variable']} at horizon {h}")
        seen[h, j] = True
        med[h, j] = float(r["median"])
        lower[h, j] = float(r["lower"])
        upper[h, j] = float(r["upper"])
        if r["units"] != units:
            raise DataError("mixed units in one impulse-response file")
    if not seen.all():
        raise DataError("missing (variable, horizon) rows")
    return {
        "names": names,
        "median": med,
        "lower": lower,
        "upper": upper,
        "units": units,
        "shock": shock,
    }


def _write_group_csv(path, arr):
    flat = arr.reshape(arr.shape[0], -1)
    shape_tail = arr.shape[1:]
    headers = ["draw"]
    for k in range(flat.shape[1]):
        idx = np.unravel_index(k, shape_tail) if shape_tail else ()
        headers.append("x" + "_".join(str(i) for i in idx))
    lines = [",".join(headers)]
    for i in range(flat.shape[0]):
        lines.append(",".join([str(i)] + [_fmt(v) for v in flat[i]]))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _read_group_csv(path, shape):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_cols = len(header) - 1
        rows = [row[1:] for row in reader]
    expected = int(np.prod(shape[1:])) if len(shape) > 1 else 1
    if n_cols != expected or len(rows) != shape[0]:
        raise DataError(f"{path}: stored shape does not match the manifest")
    data = np.array([[float(c) for c in row] for row in rows])
    return data.reshape(shape)


def write_chain(directory, result):
    """Persist one chain: one CSV per parameter group plus manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    groups = {}
    for name in _GROUPS:
        arr = getattr(result, name)
        fname = f"{name}.csv"
        _write_group_csv(directory / fname, arr)
        groups[name] = {"file": fname, "shape": list(arr.shape)}
    cfg = result.config
    manifest = {
        "format_version": _FORMAT_VERSION,
        "groups": groups,
        "n_slow": result.n_slow,
        "stationarity_redraws": result.stationarity_redraws,
        "sampler": {
            "n_factors": cfg.n_factors,
            "n_lags": cfg.n_lags,
            "n_draws": cfg.n_draws,
            "n_burn": cfg.n_burn,
            "thin": cfg.thin,
            "seed": cfg.seed,
            "enforce_stationarity": cfg.enforce_stationarity,
            "max_stationarity_redraws": cfg.max_stationarity_redraws,
        },
    }
    _atomic_write_text(
        directory / "manifest.json",
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def read_chain(directory):
    """Reload a chain written by ``write_chain``."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {directory}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != _FORMAT_VERSION:
        raise DataError(f"unsupported chain format {manifest.get('format_version')!r}")
    arrays = {}
    for name in _GROUPS:
        info = manifest["groups"].get(name)
        if info is None:
            raise DataError(f"manifest misses parameter group {name!r}")
        group_path = directory / info["file"]
        if not group_path.is_file():
            raise DataError(f"chain file for group {name!r} missing: {group_path}")
        arrays[name] = _read_group_csv(group_path, tuple(info["shape"]))
    cfg = SamplerConfig(**manifest["sampler"])
    return GibbsResult(
        factors=arrays["factors"],
        loadings_f=arrays["loadings_f"],
        loadings_y=arrays["loadings_y"],
        var_coefs=arrays["var_coefs"],
        innovation_cov=arrays["innovation_cov"],
        idio_var=arrays["idio_var"],
        n_slow=int(manifest["n_slow"]),
        config=cfg,
        stationarity_redraws=int(manifest["stationarity_redraws"]),
    )


def write_screening_csv(path, report):
    """Write the per-variable screening report (transform + unit-root test)."""
    lines = ["name,tcode,speed,seasonal,adf_statistic,adf_lags,adf_reject_unit_root_5pct"]
    for row in report:
        lines.append(
            f"{row['name']},{row['tcode']},{row['speed']},"
            f"{str(row['seasonal']).lower()},{_fmt(row['adf_statistic'])},"
            f"{row['adf_lags']},{str(row['adf_reject_unit_root_5pct']).lower()}"
        )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_diagnostics_json(path, report, extra=None):
    """Write convergence diagnostics (and optional run metadata) as JSON."""
    payload = {"geweke": report}
    if extra:
        payload.update(extra)
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
