import json

from gssmlab.bench import THREADS_ENV, resolve_threads
from gssmlab.cli import main
from gssmlab.series import CSV_HEADER, RadarRunTable


def run_cli(*args):
    return main(list(args))


def test_dims_prints_table_values(capsys):
    assert run_cli("dims", "--nb", "2", "--nc", "1", "--m", "1", "--w", "10") == 0
    out = capsys.readouterr().out
    assert "22x13" in out
    assert "23x13" in out
    assert out.count("13") >= 2
    assert "33" in out


def test_dims_missing_flag_is_usage_error(capsys):
    assert run_cli("dims", "--nb", "2", "--nc", "1", "--m", "1") == 1


def test_unknown_estimator_is_usage_error():
    assert run_cli("run", "--estimator", "ukf", "--steps", "1") == 1


def test_unknown_subcommand_is_usage_error():
    assert run_cli("frobnicate") == 1


def test_run_zero_steps_writes_header_only(tmp_path):
    assert run_cli("run", "--estimator", "ekf", "--steps", "0", "--out-dir", str(tmp_path)) == 0
    lines = (tmp_path / "ekf.csv").read_text().splitlines()
    assert lines == [",".join(CSV_HEADER)]


def test_run_writes_parseable_series(tmp_path):
    assert run_cli("run", "--estimator", "gssm", "--steps", "25", "--seed", "3",
                   "--out-dir", str(tmp_path)) == 0
    table = RadarRunTable.from_csv(tmp_path / "gssm.csv")
    assert len(table) == 25
    assert table.step[0] == 1 and table.step[-1] == 25


def test_simulate_writes_truth_csv(tmp_path):
    assert run_cli("simulate", "--steps", "10", "--seed", "1", "--out-dir", str(tmp_path)) == 0
    lines = (tmp_path / "truth.csv").read_text().splitlines()
    assert lines[0] == "step,t,truth_x,truth_v,truth_h,rho"
    assert len(lines) == 11


def test_compare_is_bit_deterministic(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    for d in (d1, d2):
        assert run_cli("compare", "--seed", "7", "--steps", "30", "--out-dir", str(d)) == 0
    for name in ("ekf.csv", "gssm.csv", "rmse.json"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_compare_writes_rmse_summary(tmp_path):
    assert run_cli("compare", "--seed", "5", "--steps", "40", "--trailing", "0.5",
                   "--out-dir", str(tmp_path)) == 0
    payload = json.loads((tmp_path / "rmse.json").read_text())
    assert payload["seed"] == 5
    assert payload["trailing_fraction"] == 0.5
    assert set(payload["estimators"]) == {"ekf", "gssm"}
    for rmse in payload["estimators"].values():
        assert set(rmse) == {"x", "v", "h"}
        assert all(v >= 0 for v in rmse.values())


def test_monte_carlo_single_run_equals_compare(tmp_path):
    assert run_cli("compare", "--seed", "11", "--steps", "30", "--trailing", "0.5",
                   "--out-dir", str(tmp_path)) == 0
    assert run_cli("monte-carlo", "--seed", "11", "--steps", "30", "--runs", "1",
                   "--trailing", "0.5", "--threads", "1", "--out-dir", str(tmp_path)) == 0
    cmp_payload = json.loads((tmp_path / "rmse.json").read_text())
    mc_payload = json.loads((tmp_path / "monte_carlo.json").read_text())
    assert mc_payload["runs"] == 1
    for tag, rmse in cmp_payload["estimators"].items():
        assert mc_payload["estimators"][tag]["per_run"][0] == rmse
        assert mc_payload["estimators"][tag]["mean"] == rmse


def test_monte_carlo_aggregates_within_extrema(tmp_path):
    assert run_cli("monte-carlo", "--steps", "25", "--runs", "3", "--threads", "1",
                   "--out-dir", str(tmp_path)) == 0
    payload = json.loads((tmp_path / "monte_carlo.json").read_text())
    for entry in payload["estimators"].values():
        for state in ("x", "v", "h"):
            assert entry["min"][state] <= entry["mean"][state] <= entry["max"][state]
        assert len(entry["per_run"]) == 3


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps({
        "T": 0.05, "N": 12, "w": 4, "seed": 2,
        "Q": {"x": 0.005, "xdot": 0.005}, "R": 9.0,
        "priors": {"x": -100.0, "xdot": 200.0, "h": 2000.0,
                   "P_x": 49.0, "P_xdot": 49.0, "P_h": 49.0},
        "estimators": ["ekf"],
    }))
    out = tmp_path / "out"
    assert run_cli("compare", "--config", str(cfg_path), "--steps", "20",
                   "--out-dir", str(out)) == 0
    table = RadarRunTable.from_csv(out / "ekf.csv")
    assert len(table) == 20  # flag overrides the file's N=12
    assert not (out / "gssm.csv").exists()  # estimator list came from the file


def test_unreadable_config_fails(tmp_path):
    missing = tmp_path / "nope.json"
    assert run_cli("compare", "--config", str(missing), "--steps", "5") == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("compare", "--config", str(bad), "--steps", "5") == 1


def test_invalid_config_value_fails(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps({"R": -3.0}))
    assert run_cli("run", "--estimator", "ekf", "--config", str(cfg_path), "--steps", "5") == 1


def test_fgo_estimator_runs_from_cli(tmp_path):
    assert run_cli("run", "--estimator", "fgo", "--steps", "15", "--seed", "2",
                   "--out-dir", str(tmp_path)) == 0
    table = RadarRunTable.from_csv(tmp_path / "fgo.csv")
    assert len(table) == 15


def test_thread_cap_env_variable(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv(THREADS_ENV)
    assert resolve_threads() >= 1


def test_zero_noise_run_overlays_truth(tmp_path):
    assert run_cli("compare", "--steps", "30", "--truth-mode", "exact", "--zero-noise",
                   "--out-dir", str(tmp_path)) == 0
    for name in ("ekf", "gssm"):
        table = RadarRunTable.from_csv(tmp_path / f"{name}.csv")
        assert float(abs(table.err).max()) < 1e-5
