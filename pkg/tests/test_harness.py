"""Config loading, pipeline orchestration, and CLI behavior."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from repde.config import (
    ConfigError,
    bundled_config,
    config_from_dict,
    has_parameter,
    load_config,
    override_parameter,
)
from repde.harness import converge, predict_table, run, sweep

MINI = {
    "schema_version": 1,
    "dimension": 1,
    "family": "algebraic:c0=1,gamma=4",
    "radius": 30.0,
    "intervals": 300,
    "s_end": 1e4,
    "scheme": "semi_implicit",
    "rel_change": 0.02,
    "snapshot_count": 300,
    "t_count": 120,
    "scenario": "algebraic",
    "eps_slack": 1.0,
}


def write_mini_config(path: Path, **overrides) -> Path:
    data = dict(MINI)
    data.update(overrides)
    lines = []
    for key, value in data.items():
        if isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict({**MINI, "no_such_key": 1})
    with pytest.raises(ConfigError, match="missing required"):
        config_from_dict({"dimension": 1})
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({**MINI, "schema_version": 99})
    with pytest.raises(ConfigError, match="gamma > n"):
        config_from_dict({**MINI, "family": "algebraic:c0=1,gamma=0.8"})
    with pytest.raises(ConfigError, match="grading"):
        config_from_dict({**MINI, "grading": "random"})
    with pytest.raises(ConfigError, match="normalize"):
        config_from_dict({**MINI, "family": "separable:delta=1", "scenario": "none"})


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_bundled_configs_all_load():
    for name in (
        "algebraic_n1_g4",
        "algebraic_sweep_base",
        "exponential_n1_b2",
        "doubly_exponential_n1_b2",
        "separable_convergence",
        "algebraic_refinement",
        "k_zero_synthetic",
    ):
        cfg = bundled_config(name)
        assert cfg.label == name
    with pytest.raises(ConfigError, match="available"):
        bundled_config("no_such_config")


def test_override_parameter():
    cfg = config_from_dict(MINI)
    assert override_parameter(cfg, "s_end", 5.0).s_end == 5.0
    assert override_parameter(cfg, "intervals", 64).intervals == 64
    swapped = override_parameter(cfg, "gamma", 3.0)
    assert swapped.decay_family().gamma == 3.0
    assert has_parameter(cfg, "gamma") and has_parameter(cfg, "s_end")
    assert not has_parameter(cfg, "zeta")
    with pytest.raises(ConfigError, match="neither"):
        override_parameter(cfg, "zeta", 1.0)


def test_run_writes_documented_outputs(tmp_path):
    cfg = config_from_dict(MINI)
    report = run(cfg, tmp_path / "out")
    for name in (
        "trace.csv",
        "tables.csv",
        "tables_s.csv",
        "predictions.csv",
        "report.json",
    ):
        assert (tmp_path / "out" / name).exists(), name
    assert (tmp_path / "out" / "predictions.csv").read_text().splitlines()[
        0
    ] == "t,E_pred_upper,E_pred_lower"
    loaded = json.loads((tmp_path / "out" / "report.json").read_text())
    assert set(loaded) == {
        "config_echo",
        "fitted",
        "predicted",
        "residuals",
        "verdict",
        "diagnostics",
    }
    assert loaded["config_echo"]["family"] == MINI["family"]
    assert report.verdict in ("pass", "fail", "inconclusive")


def test_run_is_deterministic(tmp_path):
    cfg = config_from_dict(MINI)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for name in ("trace.csv", "tables.csv", "tables_s.csv", "predictions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes(), name


def test_run_writes_snapshot_files(tmp_path):
    cfg = config_from_dict({**MINI, "snapshot_count": 12, "write_snapshots": True})
    run(cfg, tmp_path / "out")
    snaps = sorted((tmp_path / "out").glob("v_s*.csv"))
    assert len(snaps) >= 12
    header = snaps[0].read_text().splitlines()[0]
    assert header == "r,value"


def test_k_zero_synthetic_passes_with_zero_energy(tmp_path):
    report = run(bundled_config("k_zero_synthetic"), tmp_path / "out")
    assert report.verdict == "pass"
    tables = np.loadtxt(tmp_path / "out" / "tables.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(tables[:, 3])) < 1e-10  # E column identically ~0
    assert np.allclose(tables[:, 2], 1.0, atol=1e-12)  # g identically 1


def test_sweep_records_partial_failures(tmp_path):
    cfg = config_from_dict({**MINI, "eps_slack": 0.5})
    # gamma = 0.9 is inadmissible (gamma <= n) and must be recorded, not fatal
    summary = sweep(cfg, "gamma", [0.9, 3.0], tmp_path / "sweep")
    entries = summary["entries"]
    assert entries[0]["error"] is not None
    assert entries[0]["verdict"] == "error"
    assert entries[1]["error"] is None
    assert not summary["strictly_increasing"]
    lines = (tmp_path / "sweep" / "sweep_summary.csv").read_text().splitlines()
    assert lines[0] == "param,value,fitted,stderr,r2,verdict,predicted_upper,predicted_lower"
    assert len(lines) == 3


def test_sweep_rejects_bad_parameter_and_empty_values():
    cfg = config_from_dict(MINI)
    with pytest.raises(ConfigError, match="neither"):
        sweep(cfg, "zeta", [1.0])
    with pytest.raises(ConfigError, match="at least one"):
        sweep(cfg, "gamma", [])


def test_converge_requires_two_levels():
    cfg = bundled_config("separable_convergence")
    with pytest.raises(ConfigError, match="2 levels"):
        converge(cfg, 1)


def test_converge_writes_outputs(tmp_path):
    cfg = bundled_config("separable_convergence").with_overrides(
        intervals=24, s_end=0.25
    )
    summary = converge(cfg, 2, tmp_path / "conv")
    assert (tmp_path / "conv" / "convergence.csv").exists()
    assert (tmp_path / "conv" / "convergence.json").exists()
    header = (tmp_path / "conv" / "convergence.csv").read_text().splitlines()[0]
    assert header.startswith("level,intervals,dr,linf_error,order")
    assert summary["levels"] == 2


def test_predict_table_shapes():
    header, data = predict_table("algebraic", 1, 1e3, count=20, gamma=4.0, eps=1.0)
    assert header == ["t", "E_pred_upper", "E_pred_lower"]
    t = data[:, 0]
    assert np.allclose(data[:, 1], 1.0 * np.log(t))
    assert np.allclose(data[:, 2], (2.0 / 3.0) * np.log(t))
    header, data = predict_table("doubly_exponential", 1, 1e3, count=20, beta=2.0)
    assert np.all(np.isnan(data[:, 1]))  # no upper law
    assert np.isfinite(data[-1, 2])


CLI = [sys.executable, "-m", "repde.cli"]


def test_cli_malformed_config_exits_2_no_partial_files(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('dimension = 1\nfamily = "algebraic:c0=1,gamma=4"\n')  # missing keys
    out_dir = tmp_path / "out"
    proc = subprocess.run(
        CLI + ["run", "--config", str(bad), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "config error" in proc.stderr
    assert not out_dir.exists()

    garbled = tmp_path / "garbled.toml"
    garbled.write_text("this is { not toml\n")
    proc = subprocess.run(
        CLI + ["run", "--config", str(garbled), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert not out_dir.exists()


def test_cli_run_and_predict(tmp_path):
    cfg_path = write_mini_config(tmp_path / "mini.toml")
    out_dir = tmp_path / "out"
    proc = subprocess.run(
        CLI + ["run", "--config", str(cfg_path), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "verdict:" in proc.stdout
    assert (out_dir / "report.json").exists()

    proc = subprocess.run(
        CLI + ["predict", "--scenario", "exponential", "--dim", "1",
               "--tmax", "100", "--beta", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "t,E_pred_upper,E_pred_lower"


def test_cli_sweep_empty_values_exits_2(tmp_path):
    cfg_path = write_mini_config(tmp_path / "mini.toml")
    proc = subprocess.run(
        CLI + ["sweep", "--config", str(cfg_path), "--param", "gamma",
               "--values", "", "--out", str(tmp_path / "s")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
