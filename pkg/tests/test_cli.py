"""End-to-end tests of the command-line pipeline.

Commands run in-process through main() on a small synthetic panel, checking
outputs, exit codes, byte-level reproducibility and the worker pool.
"""

import csv
import json
import shutil

import numpy as np
import pytest
from numpy.testing import assert_allclose

from favar.cli import main, parse_sweep_spec
from favar.config import RunConfig
from favar.errors import ConfigError
from favar.panel import read_prepared_panel
from favar.persist import read_chain, read_irf_csv

BASE = """
n_factors = 2
n_lags = 1
n_draws = 120
n_burn = 40
thin = 2
seed = 11
horizon = 8
sim_n_series = 12
sim_n_periods = 100
sim_n_factors = 2
sim_n_lags = 1
"""


def write_cfg(directory, name="cfg.txt", extra=""):
    path = directory / name
    path.write_text(BASE + extra)
    return path


def run_cli(*args):
    return main([str(a) for a in args])


def snapshot(directory, skip=("sim_config.txt",)):
    """Map of relative path -> bytes for every file under a directory."""
    return {
        str(p.relative_to(directory)): p.read_bytes()
        for p in sorted(directory.rglob("*"))
        if p.is_file() and p.name not in skip
    }


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Simulated, prepared and estimated baseline run shared across tests."""
    root = tmp_path_factory.mktemp("cli")
    out = root / "run"
    cfg = write_cfg(root)
    assert run_cli("simulate", "--config", cfg, "--out", out) == 0
    cfg = write_cfg(
        root,
        extra=(
            f"data = {out / 'sim_data.csv'}\n"
            f"metadata = {out / 'sim_metadata.csv'}\n"
            "policy = policy\n"
        ),
    )
    assert run_cli("prepare", "--config", cfg, "--out", out) == 0
    assert run_cli("estimate", "--config", cfg, "--out", out) == 0
    assert run_cli("irf", "--config", cfg, "--out", out) == 0
    return root, cfg, out


def test_simulate_outputs_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run_cli("simulate", "--config", cfg, "--out", a) == 0
    assert run_cli("simulate", "--config", cfg, "--out", b) == 0
    expected = {
        "sim_data.csv",
        "sim_metadata.csv",
        "truth_factors.csv",
        "truth_params.json",
        "sim_config.txt",
    }
    assert {p.name for p in a.iterdir()} == expected
    assert snapshot(a) == snapshot(b)


def test_simulate_seed_changes_bytes(tmp_path):
    cfg = write_cfg(tmp_path)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert run_cli("simulate", "--config", cfg, "--out", a) == 0
    assert run_cli("simulate", "--config", cfg, "--out", b, "--seed", 99) == 0
    assert a.joinpath("sim_data.csv").read_bytes() != b.joinpath("sim_data.csv").read_bytes()


def test_prepare_outputs(workspace):
    _, _, out = workspace
    panel = read_prepared_panel(out / "prepared_panel.csv", out / "prepared_panel.json")
    means = panel.informational_data().mean(axis=0)
    assert np.abs(means).max() < 1e-10
    assert panel.policy_name == "policy"
    with open(out / "screening.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == panel.n_series


def test_prepare_rerun_byte_identical(workspace, tmp_path):
    root, cfg, out = workspace
    again = tmp_path / "again"
    assert run_cli("prepare", "--config", cfg, "--out", again) == 0
    for name in ("prepared_panel.csv", "screening.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes()


def test_prepare_unknown_policy_exits_3(workspace, tmp_path, capsys):
    root, _, out = workspace
    cfg = write_cfg(
        tmp_path,
        extra=(
            f"data = {out / 'sim_data.csv'}\n"
            f"metadata = {out / 'sim_metadata.csv'}\n"
            "policy = nonexistent\n"
        ),
    )
    assert run_cli("prepare", "--config", cfg, "--out", tmp_path / "x") == 3
    assert "nonexistent" in capsys.readouterr().err


def test_prepare_missing_keys_exit_2(tmp_path):
    cfg = write_cfg(tmp_path)
    assert run_cli("prepare", "--config", cfg, "--out", tmp_path / "x") == 2


def test_estimate_outputs(workspace):
    _, _, out = workspace
    result = read_chain(out / "chain_00")
    assert result.n_stored == 40
    assert result.factors.shape == (40, 100, 2)
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["method"] == "one-step"
    assert diag["chains"][0]["directory"] == "chain_00"
    assert "chain_00" in diag["geweke"]


def test_estimate_rerun_byte_identical(workspace):
    _, cfg, out = workspace
    before = snapshot(out / "chain_00")
    assert run_cli("estimate", "--config", cfg, "--out", out) == 0
    assert snapshot(out / "chain_00") == before


def test_estimate_multichain_workers_match_sequential(workspace, tmp_path):
    root, _, out = workspace
    seq = tmp_path / "seq"
    par = tmp_path / "par"
    for target, workers in ((seq, "1"), (par, "2")):
        target.mkdir()
        for name in ("prepared_panel.csv", "prepared_panel.json"):
            shutil.copy(out / name, target / name)
        cfg = write_cfg(tmp_path, name=f"cfg_{target.name}.txt", extra="n_chains = 2\n")
        assert run_cli(
            "estimate", "--config", cfg, "--out", target, "--workers", workers
        ) == 0
    assert snapshot(seq) == snapshot(par)
    assert (seq / "chain_01" / "manifest.json").is_file()
    chain0 = read_chain(seq / "chain_00")
    chain1 = read_chain(seq / "chain_01")
    assert chain1.config.seed == chain0.config.seed + 1000
    assert not np.array_equal(chain0.factors, chain1.factors)


def test_estimate_removes_stale_chains(workspace, tmp_path):
    root, _, out = workspace
    target = tmp_path / "stale"
    target.mkdir()
    for name in ("prepared_panel.csv", "prepared_panel.json"):
        shutil.copy(out / name, target / name)
    two = write_cfg(tmp_path, name="two.txt", extra="n_chains = 2\n")
    one = write_cfg(tmp_path, name="one.txt")
    assert run_cli("estimate", "--config", two, "--out", target) == 0
    assert (target / "chain_01").is_dir()
    assert run_cli("estimate", "--config", one, "--out", target) == 0
    assert not (target / "chain_01").exists()


def test_estimate_validates_before_compute(workspace, tmp_path):
    root, _, out = workspace
    target = tmp_path / "noop"
    target.mkdir()
    for name in ("prepared_panel.csv", "prepared_panel.json"):
        shutil.copy(out / name, target / name)
    cfg = write_cfg(tmp_path, extra="n_factors = 7\n")
    assert run_cli("estimate", "--config", cfg, "--out", target) == 2
    assert not list(target.glob("chain_*"))
    assert not (target / "diagnostics.json").exists()


def test_irf_outputs_and_rerun_bytes(workspace):
    _, cfg, out = workspace
    first = (out / "irf.csv").read_bytes()
    svg = (out / "irf_grid.svg").read_bytes()
    assert run_cli("irf", "--config", cfg, "--out", out) == 0
    assert (out / "irf.csv").read_bytes() == first
    assert (out / "irf_grid.svg").read_bytes() == svg
    assert svg.startswith(b"<?xml")
    bands = read_irf_csv(out / "irf.csv")
    assert bands["units"] == "native"
    assert bands["shock"] == 0.25
    assert np.all(bands["lower"] <= bands["median"])
    assert np.all(bands["median"] <= bands["upper"])


def test_irf_without_chain_exits_3(workspace, tmp_path):
    root, _, out = workspace
    bare = tmp_path / "bare"
    bare.mkdir()
    for name in ("prepared_panel.csv", "prepared_panel.json"):
        shutil.copy(out / name, bare / name)
    cfg = write_cfg(tmp_path)
    assert run_cli("irf", "--config", cfg, "--out", bare) == 3


def test_irf_shock_doubling_is_exact(workspace, tmp_path):
    root, _, out = workspace
    double = tmp_path / "double"
    shutil.copytree(out, double)
    cfg = write_cfg(tmp_path, extra="shock_size = 0.5\n")
    assert run_cli("irf", "--config", cfg, "--out", double) == 0
    base = read_irf_csv(out / "irf.csv")
    scaled = read_irf_csv(double / "irf.csv")
    assert scaled["shock"] == 0.5
    for key in ("median", "lower", "upper"):
        assert_allclose(scaled[key], 2.0 * base[key], rtol=0, atol=0)


def test_two_step_estimate_and_irf(workspace, tmp_path):
    root, _, out = workspace
    target = tmp_path / "ts"
    target.mkdir()
    for name in ("prepared_panel.csv", "prepared_panel.json"):
        shutil.copy(out / name, target / name)
    cfg = write_cfg(tmp_path)
    assert run_cli(
        "estimate", "--config", cfg, "--out", target, "--method", "two-step"
    ) == 0
    result = read_chain(target / "chain_00")
    assert result.n_stored == 1
    diag = json.loads((target / "diagnostics.json").read_text())
    assert diag["method"] == "two-step"
    assert diag["geweke"] == {}
    before = snapshot(target)
    assert run_cli(
        "estimate", "--config", cfg, "--out", target, "--method", "two-step"
    ) == 0
    assert snapshot(target) == before
    assert run_cli("irf", "--config", cfg, "--out", target) == 0
    bands = read_irf_csv(target / "irf.csv")
    assert_allclose(bands["lower"], bands["median"], rtol=0, atol=0)
    assert_allclose(bands["upper"], bands["median"], rtol=0, atol=0)


def test_estimate_numerical_failure_exits_4(tmp_path):
    rng = np.random.default_rng(0)
    T = 60
    path = rng.standard_normal(T).cumsum() + 30
    rate = rng.standard_normal(T) + 4
    dates = []
    y, q = 1990, 1
    for _ in range(T):
        dates.append(f"{y}Q{q}")
        y, q = (y + 1, 1) if q == 4 else (y, q + 1)
    with open(tmp_path / "data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "s1", "s2", "s3", "s4", "rate"])
        for t in range(T):
            writer.writerow(
                [dates[t], path[t], 2 * path[t], -path[t], 0.5 * path[t], rate[t]]
            )
    with open(tmp_path / "meta.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "tcode", "speed", "interpolation", "seasonal", "native_frequency"])
        for name in ("s1", "s2", "s3", "s4"):
            writer.writerow([name, 1, "slow", "none", "false", "quarterly"])
        writer.writerow(["rate", 1, "fast", "none", "false", "quarterly"])
    cfg = write_cfg(
        tmp_path,
        extra=(
            f"data = {tmp_path / 'data.csv'}\n"
            f"metadata = {tmp_path / 'meta.csv'}\n"
            "policy = rate\n"
        ),
    )
    out = tmp_path / "out"
    assert run_cli("prepare", "--config", cfg, "--out", out) == 0
    assert run_cli("estimate", "--config", cfg, "--out", out) == 4


def test_sweep_report_and_cells(workspace, tmp_path):
    root, cfg, out = workspace
    target = tmp_path / "sw"
    shutil.copytree(out, target)
    assert run_cli(
        "sweep", "--config", cfg, "--out", target, "--sweep", "K=1..2", "d=1"
    ) == 0
    sweep = target / "sweep"
    assert (sweep / "K1_d1" / "irf.csv").is_file()
    assert (sweep / "K2_d1" / "irf.csv").is_file()
    assert (sweep / "sweep_grid.svg").read_bytes().startswith(b"<?xml")
    with open(sweep / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    ks = {r["n_factors"] for r in rows}
    assert ks == {"1", "2"}
    panel = read_prepared_panel(out / "prepared_panel.csv", out / "prepared_panel.json")
    assert len(rows) == 2 * panel.n_series * 9
    cell = read_irf_csv(sweep / "K2_d1" / "irf.csv")
    from_report = np.array(
        [float(r["median"]) for r in rows if r["n_factors"] == "2"]
    ).reshape(panel.n_series, 9).T
    assert_allclose(from_report, cell["median"], rtol=0, atol=0)


def test_sweep_workers_match_sequential(workspace, tmp_path):
    root, cfg, out = workspace
    seq = tmp_path / "seq"
    par = tmp_path / "par"
    shutil.copytree(out, seq)
    shutil.copytree(out, par)
    args = ("--sweep", "K=1..2")
    assert run_cli("sweep", "--config", cfg, "--out", seq, *args) == 0
    assert run_cli("sweep", "--config", cfg, "--out", par, "--workers", "2", *args) == 0
    assert snapshot(seq / "sweep") == snapshot(par / "sweep")


def test_sweep_removes_stale_cells(workspace, tmp_path):
    root, cfg, out = workspace
    target = tmp_path / "stale"
    shutil.copytree(out, target)
    assert run_cli("sweep", "--config", cfg, "--out", target, "--sweep", "K=1..2") == 0
    assert (target / "sweep" / "K2_d1").is_dir()
    assert run_cli("sweep", "--config", cfg, "--out", target, "--sweep", "K=1") == 0
    assert not (target / "sweep" / "K2_d1").exists()
    assert (target / "sweep" / "K1_d1").is_dir()


def test_sweep_cell_exceeding_slow_block_exits_2(workspace, tmp_path):
    root, cfg, out = workspace
    target = tmp_path / "big"
    shutil.copytree(out, target)
    assert run_cli("sweep", "--config", cfg, "--out", target, "--sweep", "K=9") == 2


def test_parse_sweep_spec():
    cfg = RunConfig(n_factors=3, n_lags=4)
    assert parse_sweep_spec(["K=1..3"], cfg) == [(1, 4), (2, 4), (3, 4)]
    assert parse_sweep_spec(["d=2,4"], cfg) == [(3, 2), (3, 4)]
    assert parse_sweep_spec(["K=2", "d=1..2"], cfg) == [(2, 1), (2, 2)]
    with pytest.raises(ConfigError, match="sweep token"):
        parse_sweep_spec(["lags=2"], cfg)
    with pytest.raises(ConfigError, match="duplicate"):
        parse_sweep_spec(["K=1", "K=2"], cfg)
    with pytest.raises(ConfigError, match="parse"):
        parse_sweep_spec(["K=a..b"], cfg)
    with pytest.raises(ConfigError, match="positive"):
        parse_sweep_spec(["K=0,2"], cfg)
