import csv
import json

import pytest

from quadkf.cli import main
from quadkf.config import reference_cw_config


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def write_config(tmp_path, body):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(body))
    return str(path)


def test_validate_defaults(capsys):
    assert main(["validate"]) == 0
    assert main(["validate", "--scenario", "scalar"]) == 0
    assert "config is valid" in capsys.readouterr().out


def test_validate_reports_nonzero_mean_table(tmp_path, capsys):
    cfg = write_config(tmp_path, {"noise": {"support": [1e-3, -3e-3, -9e-3], "probs": [0.9, 0.05, 0.05]}})
    assert main(["validate", "--config", cfg]) == 1
    assert "zero-mean precondition" in capsys.readouterr().err


def test_validate_reports_negative_dt(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scenario": {"id": "cw", "dt": -60}})
    assert main(["validate", "--config", cfg]) == 1
    assert "dt must be positive" in capsys.readouterr().err


def test_run_refuses_invalid_config(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scenario": {"id": "cw", "dt": -60}})
    assert main(["cw", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "dt must be positive" in capsys.readouterr().err


def test_scalar_low_sample_warning(tmp_path, capsys):
    assert main(["scalar", "--samples", "100", "--out", str(tmp_path)]) == 0
    assert "low sample count" in capsys.readouterr().err
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["warnings"]
    for name in ("config.json", "scatter.csv", "estimators.csv", "conditional_mean.csv", "rmse.csv"):
        assert (tmp_path / name).exists()


def test_scalar_outputs_are_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["scalar", "--samples", "2000", "--seed", "4", "--out", str(out)]) == 0
    for name in ("scatter.csv", "estimators.csv", "rmse.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = read_csv(a / "estimators.csv")[0]
    assert header[0] == "y_rad" and "qukf_x" in header


def test_cw_filter_subset_columns(tmp_path):
    assert main(["cw", "--nmc", "2", "--filters", "ekf,qekf", "--out", str(tmp_path)]) == 0
    sigma = read_csv(tmp_path / "sigma.csv")
    assert len(sigma) == 181
    assert sigma[0] == ["time_s", "ekf_est_sigma_pos_km", "ekf_eff_sigma_pos_km", "ekf_est_sigma_vel_kms",
                        "ekf_eff_sigma_vel_kms", "qekf_est_sigma_pos_km", "qekf_eff_sigma_pos_km",
                        "qekf_est_sigma_vel_kms", "qekf_eff_sigma_vel_kms"]
    assert not any("ukf" in c for c in sigma[0])
    assert len(read_csv(tmp_path / "trajectory.csv")) == 181
    assert len(read_csv(tmp_path / "containment.csv")) == 181
    assert len(read_csv(tmp_path / "errors.csv")) == 1 + 2 * 180


@pytest.mark.slow
def test_cw_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["cw", "--nmc", "20", "--seed", "7", "--filters", "ekf,qekf", "--out", str(out)]) == 0
    for name in ("sigma.csv", "containment.csv", "errors.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("QUADKF_OUT", str(tmp_path))
    assert main(["scalar", "--samples", "500", "--seed", "2"]) == 0
    assert (tmp_path / "scalar-seed2" / "summary.json").exists()


def test_ut_flags_reach_config(tmp_path):
    assert main(["scalar", "--samples", "500", "--alpha", "0.5", "--kappa", "1", "--out", str(tmp_path)]) == 0
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["ut"] == {"alpha": 0.5, "beta": 2.0, "kappa": 1.0}


def test_unknown_filter_is_rejected(tmp_path, capsys):
    assert main(["scalar", "--filters", "ekf,pf", "--out", str(tmp_path)]) == 2
    assert "filters" in capsys.readouterr().err


def test_config_round_trip(tmp_path):
    cfg = reference_cw_config()
    path = write_config(tmp_path, cfg.to_json_dict())
    assert main(["validate", "--config", path]) == 0
