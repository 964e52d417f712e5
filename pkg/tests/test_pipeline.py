import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from liquidity_lab.cli import main
from liquidity_lab.config import ConfigError, RunConfig, load_config, write_config
from liquidity_lab.pipeline import FAILURE_MARKER, run_pipeline
from liquidity_lab.synth import TickScenario, write_scenario

RUN_INI = """[run]
seed = 5
assets = AAA, BBB, CCC
ticks_dir = ticks
output_dir = out
window_days = 55
pmax = 1
qmax = 1
refit_every = 5
wash = {wash}
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    write_scenario(TickScenario(kind="regime", assets=("AAA", "BBB", "CCC"), n_days=70), 5, root / "ticks")
    for wash in ("on", "off"):
        (root / f"run_{wash}.ini").write_text(RUN_INI.format(wash=wash))
    return root


@pytest.fixture(scope="module")
def runs(workspace):
    out = {}
    for wash in ("on", "off"):
        cfg = load_config(workspace / f"run_{wash}.ini")
        out[wash] = run_pipeline(cfg, workspace / f"out_{wash}")
    return out


def test_happy_path_artifact_tree(runs):
    res = runs["on"]
    assert res.status == 0 and res.ran == ["ingest", "liquidity", "fit", "backtest", "report"]
    o = res.out_dir
    for rel in ("minutes/AAA_minutes.csv", "daily/AAA_daily.csv", "daily/intraday_cov.csv",
                "forecasts/forecast_standard.csv", "forecasts/forecast_liquidity_adjusted.csv",
                "ledger/weights.csv", "ledger/performance.csv", "report/summary.csv",
                "report/beta_stats.csv", "report/amount_stats.csv", "report/variance_stats.csv",
                "report/adf_rmse.csv", "report/equity_curves.csv", "manifest.json"):
        assert (o / rel).exists(), rel
    manifest = json.loads((o / "manifest.json").read_text())
    assert manifest["seed"] == 5 and "config_hash" in manifest and "numpy" in manifest["versions"]


def test_rerun_skips_and_keeps_manifest(workspace, runs):
    o = runs["on"].out_dir
    before = (o / "manifest.json").read_bytes()
    res = run_pipeline(load_config(workspace / "run_on.ini"), o)
    assert res.ran == [] and len(res.skipped) == 5
    assert (o / "manifest.json").read_bytes() == before


def test_wash_toggle_leaves_regular_return_portfolios_alone(runs):
    perf = {k: pd.read_csv(r.out_dir / "ledger/performance.csv", float_precision="round_trip")
            for k, r in runs.items()}
    for pid in (1, 5, 7):
        a = perf["on"][perf["on"]["portfolio_id"] == pid].reset_index(drop=True)
        b = perf["off"][perf["off"]["portfolio_id"] == pid].reset_index(drop=True)
        pd.testing.assert_frame_equal(a, b)
    d_on = pd.read_csv(runs["on"].out_dir / "daily/AAA_daily.csv")
    d_off = pd.read_csv(runs["off"].out_dir / "daily/AAA_daily.csv")
    np.testing.assert_array_equal(d_on["r_tt"], d_off["r_tt"])
    assert not np.array_equal(d_on["amount_tt"], d_off["amount_tt"])


def test_changed_setting_reruns_downstream_only(workspace, runs, tmp_path):
    o = tmp_path / "out"
    shutil.copytree(runs["on"].out_dir, o)
    cfg = load_config(workspace / "run_on.ini")
    cfg.cap = 0.25
    res = run_pipeline(cfg, o)
    assert res.skipped == ["ingest", "liquidity", "fit"] and res.ran == ["backtest", "report"]


def test_nonexistent_tick_path_fails_before_any_stage(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\nseed = 1\nassets = ZZZ\nticks_dir = nowhere\n")
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(ini)
    assert not (tmp_path / "out").exists()


def test_stage_failure_writes_marker(workspace, tmp_path):
    bad = tmp_path / "ticks"
    bad.mkdir()
    (bad / "AAA_ticks.csv").write_text("asset,ts_ms,price,qty\nAAA,1,0,1\n")
    ini = tmp_path / "r.ini"
    ini.write_text("[run]\nseed = 1\nassets = AAA\nticks_dir = ticks\nportfolios = 1\n")
    res = run_pipeline(load_config(ini), tmp_path / "out")
    assert res.status == 1 and res.failed == "ingest"
    assert (tmp_path / "out" / FAILURE_MARKER).exists()


def test_config_rules(tmp_path, workspace):
    (tmp_path / "a.ini").write_text("[run]\nassets = AAA\n")
    with pytest.raises(ConfigError, match="seed"):
        load_config(tmp_path / "a.ini", validate=False)
    (tmp_path / "b.ini").write_text("[run]\nseed = 1\nassets = AAA\nwindow = 3\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config(tmp_path / "b.ini", validate=False)
    cfg = load_config(workspace / "run_on.ini", seed_override=9)
    assert cfg.seed == 9 and cfg.ticks["AAA"] == workspace / "ticks" / "AAA_ticks.csv"
    cfg.window_days = 40
    with pytest.raises(ConfigError):
        cfg.validate()


def test_config_round_trip_and_hash(workspace, tmp_path):
    cfg = load_config(workspace / "run_on.ini")
    back = load_config(write_config(cfg, tmp_path / "c.ini"))
    assert back.hash() == cfg.hash()
    back.output_dir = tmp_path / "elsewhere"
    assert back.hash() == cfg.hash()
    back.seed = 6
    assert back.hash() != cfg.hash()


def test_cli_report_and_fit(runs, tmp_path, capsys):
    o = runs["on"].out_dir
    assert main(["report", "--ledger", str(o / "ledger"), "--daily", str(o / "daily"),
                 "--format", "json", "--out", str(tmp_path / "rep")]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["portfolio_id"] for r in rows] == list(range(1, 9))
    assert main(["fit", "--daily", str(o / "daily"), "--series", "r_lq", "--la", "on", "--window", "55",
                 "--pmax", "1", "--qmax", "0", "--refit-every", "10", "--assets", "AAA",
                 "--out", str(tmp_path / "fc")]) == 0
    fc = pd.read_csv(tmp_path / "fc" / "forecast_r_lq_la-on.csv")
    assert (fc["la_mode"] == 1).all() and fc["mu_hat"].notna().all()


def test_cli_stagewise_matches_pipeline(workspace, runs, tmp_path):
    o = runs["on"].out_dir
    for a in ("AAA", "BBB", "CCC"):
        assert main(["ingest", "--ticks", str(workspace / "ticks" / f"{a}_ticks.csv"), "--asset", a,
                     "--out", str(tmp_path / "m")]) == 0
    assert main(["compute-liquidity", "--minutes", str(tmp_path / "m"), "--seed", "5",
                 "--out", str(tmp_path / "d")]) == 0
    for a in ("AAA", "BBB", "CCC"):
        assert (tmp_path / "d" / f"{a}_daily.csv").read_bytes() == (o / "daily" / f"{a}_daily.csv").read_bytes()


def test_cli_synth_requires_seed(tmp_path):
    with pytest.raises(SystemExit):
        main(["synth", "--out", str(tmp_path)])
    assert main(["synth", "--scenario", "daily", "--assets", "X,Y", "--days", "40", "--seed", "1",
                 "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "X_daily.csv").exists()


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "liquidity_lab.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compute-liquidity" in out.stdout
