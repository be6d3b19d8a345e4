"""Panel ingestion: load, transform, screen and standardize quarterly macro panels.

The pipeline turns a raw quarterly CSV (possibly holding annualized series
with gaps) into a balanced, standardized T x N matrix ready for factor
estimation, keeping per-column records so that results can be mapped back
to original units.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_text
from .errors import DataError

SPEEDS = ("slow", "fast")
INTERPOLATIONS = ("none", "sum", "mean")
FREQUENCIES = ("quarterly", "annual", "monthly")

# Tabulated large-T critical values for the intercept-only ADF regression
# (1%, 5%, 10%).
ADF_CRITICAL_VALUES = (-3.43, -2.86, -2.57)

# Observations lost at the start of a series by each transformation code.
TCODE_DROPS = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2}

_QUARTER_RE = re.compile(r"^(\d{4})Q([1-4])$")


@dataclass(frozen=True)
class VariableMeta:
    """Per-variable metadata driving the preparation pipeline."""

    name: str
    tcode: int
    speed: str
    interpolation: str
    seasonal: bool
    native_frequency: str

    def __post_init__(self):
        if self.tcode not in TCODE_DROPS:
            raise DataError(f"{self.name}: tcode must be in 1..6, got {self.tcode}")
        if self.speed not in SPEEDS:
            raise DataError(f"{self.name}: speed must be one of {SPEEDS}, got {self.speed!r}")
        if self.interpolation not in INTERPOLATIONS:
            raise DataError(
                f"{self.name}: interpolation must be one of {INTERPOLATIONS}, "
                f"got {self.interpolation!r}"
            )
        if self.native_frequency not in FREQUENCIES:
            raise DataError(
                f"{self.name}: native_frequency must be one of {FREQUENCIES}, "
                f"got {self.native_frequency!r}"
            )
        if (self.interpolation == "none") != (self.native_frequency == "quarterly"):
            raise DataError(
                f"{self.name}: interpolation must be 'none' exactly for quarterly "
                f"series (got interpolation={self.interpolation!r}, "
                f"native_frequency={self.native_frequency!r})"
            )


@dataclass(frozen=True)
class RawSeries:
    """One raw series on the quarterly grid; NaN marks missing cells."""

    name: str
    dates: tuple
    values: np.ndarray


@dataclass(frozen=True)
class AdfResult:
    """Augmented Dickey-Fuller outcome for one series."""

    statistic: float
    lags_used: int
    critical_1: float
    critical_5: float
    critical_10: float
    reject_unit_root_5pct: bool


@dataclass(frozen=True)
class Panel:
    """Balanced, standardized quarterly panel.

    Columns are ordered slow variables first, then fast variables, with the
    policy variable last. Non-policy columns have sample mean 0 and sample
    standard deviation 1 (ddof=1); the policy column is demeaned but kept in
    its native scale so that shocks stay expressible in native units.
    ``standardization`` stores one ``(mean, stddev)`` pair per column, with
    stddev fixed at 1.0 for the policy column.
    """

    data: np.ndarray
    meta: tuple
    dates: tuple
    standardization: tuple
    policy_name: str
    _names: tuple = field(init=False, default=())

    def __post_init__(self):
        object.__setattr__(self, "_names", tuple(m.name for m in self.meta))
        self.data.setflags(write=False)
        self.validate()

    @property
    def names(self):
        return self._names

    @property
    def n_periods(self):
        return self.data.shape[0]

    @property
    def n_series(self):
        return self.data.shape[1]

    @property
    def policy_index(self):
        return self._names.index(self.policy_name)

    def column(self, name):
        return self.data[:, self._names.index(name)]

    def informational_names(self):
        return tuple(n for n in self._names if n != self.policy_name)

    def informational_data(self):
        """T x (N-1) block of non-policy columns, in panel order."""
        keep = [i for i, n in enumerate(self._names) if n != self.policy_name]
        return self.data[:, keep]

    def policy_data(self):
        """T x 1 policy column (demeaned, native scale)."""
        return self.data[:, [self.policy_index]]

    def n_slow(self):
        return sum(1 for m in self.meta if m.speed == "slow" and m.name != self.policy_name)

    def validate(self):
        T, N = self.data.shape
        if T < 20:
            raise DataError(f"panel too short: T={T} < 20")
        if len(self.meta) != N or len(self.standardization) != N:
            raise DataError("metadata/standardization length does not match column count")
        if len(self.dates) != T:
            raise DataError("date index length does not match row count")
        if len(set(self._names)) != N:
            raise DataError("duplicate variable names in panel")
        if self.policy_name not in self._names:
            raise DataError(f"policy variable {self.policy_name!r} not in panel")
        if not np.all(np.isfinite(self.data)):
            raise DataError("panel contains non-finite entries")
        pol = self.policy_index
        means = self.data.mean(axis=0)
        sds = self.data.std(axis=0, ddof=1)
        for j in range(N):
            if self.standardization[j][1] <= 0:
                raise DataError(f"{self._names[j]}: stored stddev must be positive")
            if j == pol:
                continue
            if abs(means[j]) > 1e-10:
                raise DataError(f"{self._names[j]}: column mean {means[j]:.3e} not 0")
            if abs(sds[j] - 1.0) > 1e-10:
                raise DataError(f"{self._names[j]}: column stddev {sds[j]:.12f} not 1")


def parse_quarter(label):
    """Parse 'YYYYQn' into (year, quarter); raise DataError on anything else."""
    m = _QUARTER_RE.match(str(label).strip())
    if not m:
        raise DataError(f"unparseable quarter label {label!r} (expected YYYYQn)")
    return int(m.group(1)), int(m.group(2))


def quarter_label(year, quarter):
    return f"{year}Q{quarter}"


def next_quarter(year, quarter):
    return (year + 1, 1) if quarter == 4 else (year, quarter + 1)


def load_panel(data_file, meta_file):
    """Load a quarterly data CSV plus its metadata CSV.

    Parameters
    ----------
    data_file : path-like
        CSV with a ``date`` first column (labels ``YYYYQn`` on a contiguous,
        strictly increasing quarterly grid) and one column per variable.
        Empty cells mark missing values (annual series carry one value per
        year).
    meta_file : path-like
        CSV with exactly the columns
        ``name,tcode,speed,interpolation,seasonal,native_frequency``.

    Returns
    -------
    (list of RawSeries, list of VariableMeta)
        Both in data-file column order.
    """
    metas_by_name = _read_meta_csv(meta_file)
    names, dates, columns = _read_data_csv(data_file)

    missing = [n for n in names if n not in metas_by_name]
    if missing:
        raise DataError(f"no metadata row for data column(s): {', '.join(missing)}")
    extra = [n for n in metas_by_name if n not in names]
    if extra:
        raise DataError(f"metadata rows without a data column: {', '.join(extra)}")

    series = [RawSeries(name=n, dates=tuple(dates), values=columns[n]) for n in names]
    metas = [metas_by_name[n] for n in names]
    return series, metas


def _read_meta_csv(meta_file):
    expected = ["name", "tcode", "speed", "interpolation", "seasonal", "native_frequency"]
    path = Path(meta_file)
    if not path.exists():
        raise DataError(f"metadata file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"metadata file {path} is empty")
        fields = [f.strip() for f in reader.fieldnames]
        unknown = [f for f in fields if f not in expected]
        if unknown:
            raise DataError(f"unknown metadata field(s): {', '.join(unknown)}")
        if sorted(fields) != sorted(expected):
            missing = [f for f in expected if f not in fields]
            raise DataError(f"missing metadata field(s): {', '.join(missing)}")
        metas = {}
        for row in reader:
            name = row["name"].strip()
            if name in metas:
                raise DataError(f"duplicate metadata row for variable {name!r}")
            metas[name] = VariableMeta(
                name=name,
                tcode=_parse_int(row["tcode"], f"{name}: tcode"),
                speed=row["speed"].strip().lower(),
                interpolation=row["interpolation"].strip().lower(),
                seasonal=_parse_bool(row["seasonal"], f"{name}: seasonal"),
                native_frequency=row["native_frequency"].strip().lower(),
            )
    if not metas:
        raise DataError(f"metadata file {path} has no rows")
    return metas


def _read_data_csv(data_file):
    path = Path(data_file)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"data file {path} is empty") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "date":
            raise DataError("data file must have 'date' as its first column")
        names = header[1:]
        if not names:
            raise DataError("data file has no variable columns")
        seen = set()
        for n in names:
            if n in seen:
                raise DataError(f"duplicate variable name {n!r} in data file")
            seen.add(n)
        dates = []
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {len(dates) + 2} of {path} has {len(row)} cells, expected {len(header)}")
            dates.append(row[0].strip())
            rows.append([_parse_cell(c) for c in row[1:]])
    if len(dates) < 2:
        raise DataError("data file needs at least two rows")
    yq = [parse_quarter(d) for d in dates]
    for prev, cur in zip(yq, yq[1:]):
        if cur != next_quarter(*prev):
            raise DataError(
                f"date column must advance one quarter at a time "
                f"({quarter_label(*prev)} is followed by {quarter_label(*cur)})"
            )
    data = np.asarray(rows, dtype=float)
    columns = {n: np.ascontiguousarray(data[:, j]) for j, n in enumerate(names)}
    return names, dates, columns


def _parse_cell(cell):
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"unparseable numeric cell {cell!r}") from None


def _parse_int(text, what):
    try:
        return int(str(text).strip())
    except ValueError:
        raise DataError(f"{what}: expected integer, got {text!r}") from None


def _parse_bool(text, what):
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise DataError(f"{what}: expected boolean, got {text!r}")


def apply_tcode(values, tcode):
    """Apply transformation code 1-6 to a series.

    Codes: 1 level, 2 first difference, 3 second difference, 4 log,
    5 first difference of log, 6 second difference of log. Output is
    shorter than the input by 0/1/2 observations for difference codes.
    """
    x = np.asarray(values, dtype=float)
    if tcode not in TCODE_DROPS:
        raise ValueError(f"tcode must be in 1..6, got {tcode}")
    drop = TCODE_DROPS[tcode]
    if x.size <= drop:
        raise ValueError(f"series of length {x.size} too short for tcode {tcode}")
    if tcode in (4, 5, 6):
        if np.any(x <= 0):
            raise ValueError(f"log transform (tcode {tcode}) requires strictly positive values")
        x = np.log(x)
    if tcode in (2, 5):
        return np.diff(x)
    if tcode in (3, 6):
        return np.diff(x, n=2)
    return x.copy()


def tcode_anchors(values, tcode):
    """Leading original values discarded by ``apply_tcode`` (0, 1 or 2)."""
    x = np.asarray(values, dtype=float)
    drop = TCODE_DROPS[tcode]
    return x[:drop].copy()


def invert_tcode(transformed, tcode, initial_values):
    """Invert ``apply_tcode`` given the discarded anchor values.

    ``invert_tcode(apply_tcode(x, c), c, tcode_anchors(x, c))`` reproduces
    ``x`` elementwise.
    """
    d = np.asarray(transformed, dtype=float)
    a = np.asarray(initial_values, dtype=float)
    if tcode not in TCODE_DROPS:
        raise ValueError(f"tcode must be in 1..6, got {tcode}")
    need = TCODE_DROPS[tcode]
    if a.size != need:
        raise ValueError(f"tcode {tcode} needs {need} anchor value(s), got {a.size}")
    if tcode == 1:
        return d.copy()
    if tcode == 4:
        return np.exp(d)
    if tcode in (5, 6):
        if np.any(a <= 0):
            raise ValueError("log-code anchors must be strictly positive")
        a = np.log(a)
    if tcode in (2, 5):
        out = np.concatenate([a, a[0] + np.cumsum(d)])
    else:
        first_diffs = np.concatenate([[a[1] - a[0]], (a[1] - a[0]) + np.cumsum(d)])
        out = np.concatenate([[a[0]], a[0] + np.cumsum(first_diffs)])
    if tcode in (5, 6):
        out = np.exp(out)
    return out


def quadratic_interpolate(low_freq_values, mode):
    """Disaggregate annual values to quarterly by smooth quadratic allocation.

    Solves the constrained least-squares problem that minimizes the sum of
    squared second differences of the quarterly path subject to each block
    of four quarters summing (mode='sum') or averaging (mode='mean') to the
    corresponding input value. The solution is the unique smoothest
    piecewise-quadratic allocation.
    """
    b = np.asarray(low_freq_values, dtype=float)
    if b.ndim != 1 or b.size < 3:
        raise ValueError("quadratic interpolation needs at least 3 low-frequency values")
    if mode not in ("sum", "mean"):
        raise ValueError(f"mode must be 'sum' or 'mean', got {mode!r}")
    if not np.all(np.isfinite(b)):
        raise ValueError("low-frequency values must be finite")
    m = b.size
    n = 4 * m
    # Second-difference operator, (n-2) x n.
    D = np.zeros((n - 2, n))
    idx = np.arange(n - 2)
    D[idx, idx] = 1.0
    D[idx, idx + 1] = -2.0
    D[idx, idx + 2] = 1.0
    C = np.kron(np.eye(m), np.ones((1, 4)))
    if mode == "mean":
        C /= 4.0
    # KKT system for min ||D x||^2 s.t. C x = b.
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = 2.0 * (D.T @ D)
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.concatenate([np.zeros(n), b])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:n]


def aggregate_to_quarterly(monthly_values, mode):
    """Collapse monthly observations to quarters by block sum or mean.

    Utility for building quarterly input files from monthly sources; the
    prepared pipeline itself expects monthly-native series to arrive
    already on the quarterly grid.
    """
    x = np.asarray(monthly_values, dtype=float)
    if x.size % 3 != 0:
        raise ValueError("monthly series length must be a multiple of 3")
    blocks = x.reshape(-1, 3)
    if mode == "sum":
        return blocks.sum(axis=1)
    if mode == "mean":
        return blocks.mean(axis=1)
    raise ValueError(f"mode must be 'sum' or 'mean', got {mode!r}")


def deseasonalize(values, dates):
    """Remove quarter-dummy means from a series, keeping its overall level.

    Fits one mean per calendar quarter and subtracts it, adding back the
    average fitted seasonal so the series keeps its intercept. Regressing
    the output on quarter dummies afterwards yields zero coefficients.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 8:
        raise ValueError(f"deseasonalize needs at least 8 observations, got {x.size}")
    if len(dates) != x.size:
        raise ValueError("dates and values must have equal length")
    quarters = np.array([parse_quarter(d)[1] for d in dates])
    seasonal = np.empty_like(x)
    for q in (1, 2, 3, 4):
        mask = quarters == q
        if not np.any(mask):
            raise ValueError(f"no observations in quarter Q{q}")
        seasonal[mask] = x[mask].mean()
    return x - seasonal + seasonal.mean()


def adf_test(values, max_lag="auto"):
    """Augmented Dickey-Fuller test with intercept.

    Regresses the first difference on an intercept, the lagged level and
    ``max_lag`` lagged differences; the statistic is the t-ratio on the
    lagged level. ``max_lag='auto'`` uses the Schwert rule
    floor(4 * (T/100)^(1/4)). The decision compares against fixed large-T
    critical values (-3.43, -2.86, -2.57).
    """
    x = np.asarray(values, dtype=float)
    T = x.size
    if T < 20:
        raise ValueError(f"adf_test needs at least 20 observations, got {T}")
    if not np.all(np.isfinite(x)):
        raise ValueError("adf_test input must be finite")
    if np.ptp(x) == 0.0:
        raise ValueError("adf_test: constant series (zero-variance regressor)")
    if max_lag == "auto":
        p = int(math.floor(4.0 * (T / 100.0) ** 0.25))
    else:
        p = int(max_lag)
        if p < 0:
            raise ValueError("max_lag must be non-negative")
    dx = np.diff(x)
    n_eff = T - 1 - p
    if n_eff <= p + 3:
        raise ValueError(f"too few observations ({T}) for {p} augmentation lags")
    y = dx[p:]
    design = [np.ones(n_eff), x[p : T - 1]]
    for j in range(1, p + 1):
        design.append(dx[p - j : p - j + n_eff])
    X = np.column_stack(design)
    XtX = X.T @ X
    try:
        XtX_inv = np.linalg.inv(XtX)
    except np.linalg.LinAlgError:
        raise ValueError("adf_test: singular regressor matrix") from None
    beta = XtX_inv @ (X.T @ y)
    resid = y - X @ beta
    dof = n_eff - X.shape[1]
    s2 = float(resid @ resid) / dof
    se_rho = math.sqrt(s2 * XtX_inv[1, 1])
    stat = float(beta[1] / se_rho)
    c1, c5, c10 = ADF_CRITICAL_VALUES
    return AdfResult(
        statistic=stat,
        lags_used=p,
        critical_1=c1,
        critical_5=c5,
        critical_10=c10,
        reject_unit_root_5pct=stat < c5,
    )


def standardize(matrix):
    """Scale every column to mean 0 and sample stddev 1 (ddof=1).

    Returns the standardized matrix and a list of per-column
    ``(mean, stddev)`` records sufficient to undo the scaling.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ValueError("standardize expects a 2-d matrix")
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    if np.any(sds <= 1e-12):
        bad = int(np.argmax(sds <= 1e-12))
        raise ValueError(f"column {bad} is (near-)constant, cannot standardize")
    records = [(float(m), float(s)) for m, s in zip(means, sds)]
    return (X - means) / sds, records


def prepare_panel(series, metas, policy_name, adf_max_lag="auto"):
    """Run the full preparation pipeline on raw series.

    Steps per variable: disaggregate annual values to quarters (quadratic
    interpolation), take logs where the tcode requires them, remove quarter
    dummies where flagged seasonal, difference per the tcode, then balance
    the panel to the common sample and standardize (the policy column is
    only demeaned). Columns are reordered slow / fast / policy-last.

    Returns
    -------
    (Panel, list of dict)
        The prepared panel and a screening report with one entry per
        variable (ADF statistic on the transformed series, lags, decision).
    """
    by_name = {s.name: s for s in series}
    meta_by_name = {m.name: m for m in metas}
    if policy_name not in meta_by_name:
        raise DataError(f"policy variable {policy_name!r} has no metadata/data column")

    order = (
        [m.name for m in metas if m.speed == "slow" and m.name != policy_name]
        + [m.name for m in metas if m.speed == "fast" and m.name != policy_name]
        + [policy_name]
    )

    grid_dates = series[0].dates
    for s in series:
        if s.dates != grid_dates:
            raise DataError(f"{s.name}: series not on the common quarterly grid")

    transformed = {}
    spans = {}
    for name in order:
        meta = meta_by_name[name]
        try:
            values, start = _to_quarterly(by_name[name], meta, grid_dates)
            out, start = _transform_series(values, start, meta, grid_dates)
        except ValueError as exc:
            raise DataError(f"{name}: {exc}") from None
        transformed[name] = out
        spans[name] = (start, start + out.size)

    lo = max(s for s, _ in spans.values())
    hi = min(e for _, e in spans.values())
    if hi - lo < 20:
        raise DataError(f"balanced sample too short: {max(hi - lo, 0)} quarters")
    dates = tuple(grid_dates[lo:hi])

    cols = []
    for name in order:
        start, _ = spans[name]
        col = transformed[name][lo - start : hi - start]
        if not np.all(np.isfinite(col)):
            raise DataError(f"{name}: interior gap inside the balanced sample")
        cols.append(col)
    raw = np.column_stack(cols)

    pol = len(order) - 1
    X = raw[:, :pol]
    try:
        Xs, records = standardize(X)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    y = raw[:, pol]
    y_mean = float(y.mean())
    data = np.column_stack([Xs, y - y_mean])
    records.append((y_mean, 1.0))

    panel = Panel(
        data=data,
        meta=tuple(meta_by_name[n] for n in order),
        dates=dates,
        standardization=tuple(records),
        policy_name=policy_name,
    )

    report = []
    for j, name in enumerate(order):
        res = adf_test(data[:, j], max_lag=adf_max_lag)
        meta = meta_by_name[name]
        report.append(
            {
                "name": name,
                "tcode": meta.tcode,
                "speed": meta.speed,
                "seasonal": meta.seasonal,
                "adf_statistic": res.statistic,
                "adf_lags": res.lags_used,
                "adf_reject_unit_root_5pct": res.reject_unit_root_5pct,
            }
        )
    return panel, report


def _to_quarterly(raw, meta, grid_dates):
    """Return (values, start index on grid) with annual series disaggregated."""
    vals = np.asarray(raw.values, dtype=float)
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise ValueError("series has no observations")
    first = int(np.argmax(finite))
    last = int(len(vals) - np.argmax(finite[::-1]) - 1)

    if meta.native_frequency in ("quarterly", "monthly"):
        window = vals[first : last + 1]
        if not np.all(np.isfinite(window)):
            raise ValueError("interior gap in quarterly values")
        return window, first

    # Annual: one observation per calendar year, any quarter.
    years = {}
    for i in range(first, last + 1):
        if finite[i]:
            y, _ = parse_quarter(grid_dates[i])
            if y in years:
                raise ValueError(f"more than one annual observation in year {y}")
            years[y] = vals[i]
    keys = sorted(years)
    if keys != list(range(keys[0], keys[-1] + 1)):
        raise ValueError("annual observations must cover consecutive years")
    quarterly = quadratic_interpolate([years[y] for y in keys], meta.interpolation)
    # Align output with the Q1 row of the first covered year.
    y0, q0 = keys[0], 1
    start = None
    for i, d in enumerate(grid_dates):
        if parse_quarter(d) == (y0, q0):
            start = i
            break
    if start is None:
        raise ValueError(f"grid does not contain {quarter_label(y0, q0)}")
    if start + quarterly.size > len(grid_dates):
        quarterly = quarterly[: len(grid_dates) - start]
    return quarterly, start


def _transform_series(values, start, meta, grid_dates):
    """Log / deseasonalize / difference one quarterly series."""
    x = np.asarray(values, dtype=float)
    if meta.tcode in (4, 5, 6):
        if np.any(x <= 0):
            raise ValueError(f"log transform (tcode {meta.tcode}) requires positive values")
        x = np.log(x)
    if meta.seasonal:
        x = deseasonalize(x, grid_dates[start : start + x.size])
    n_diff = TCODE_DROPS[meta.tcode]
    if n_diff:
        if x.size <= n_diff:
            raise ValueError(f"series too short for tcode {meta.tcode}")
        x = np.diff(x, n=n_diff)
    return x, start + n_diff


def write_prepared_panel(panel, data_path, sidecar_path):
    """Write a prepared panel as CSV plus a JSON sidecar of records."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", *panel.names])
    for t, d in enumerate(panel.dates):
        writer.writerow([d] + [format(float(v), ".17g") for v in panel.data[t]])
    atomic_write_text(data_path, out.getvalue())
    sidecar = {
        "policy_name": panel.policy_name,
        "dates": [panel.dates[0], panel.dates[-1]],
        "variables": [
            {
                "name": m.name,
                "tcode": m.tcode,
                "speed": m.speed,
                "interpolation": m.interpolation,
                "seasonal": m.seasonal,
                "native_frequency": m.native_frequency,
                "mean": panel.standardization[j][0],
                "stddev": panel.standardization[j][1],
            }
            for j, m in enumerate(panel.meta)
        ],
    }
    atomic_write_text(sidecar_path, json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_prepared_panel(data_path, sidecar_path):
    """Reload a panel written by ``write_prepared_panel``."""
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    names, dates, columns = _read_data_csv(data_path)
    var_info = {v["name"]: v for v in sidecar["variables"]}
    if set(names) != set(var_info):
        raise DataError("sidecar variables do not match panel columns")
    metas = []
    records = []
    for n in names:
        v = var_info[n]
        metas.append(
            VariableMeta(
                name=n,
                tcode=v["tcode"],
                speed=v["speed"],
                interpolation=v["interpolation"],
                seasonal=v["seasonal"],
                native_frequency=v["native_frequency"],
            )
        )
        records.append((float(v["mean"]), float(v["stddev"])))
    data = np.column_stack([columns[n] for n in names])
    return Panel(
        data=data,
        meta=tuple(metas),
        dates=tuple(dates),
        standardization=tuple(records),
        policy_name=sidecar["policy_name"],
    )
