import json

import numpy as np
import pytest

import cubelap as cl
from cubelap.runner import (
    EXIT_ASSUMPTION_VIOLATION,
    EXIT_CERTIFICATE_REFUSED,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    TRACE_HEADER,
)


def _certified_config(out_dir, **overrides):
    cfg = {
        "grid": {"L": 20.0, "N": 256},
        "model": {"a": 0.0, "b": 1.0},
        "kernel": {"name": "gaussian", "amplitude": 0.01, "width": 2.0},
        "nonlinearity": {
            "name": "saturating",
            "lipschitz": 3.8,
            "source": {"name": "gaussian", "amplitude": 0.1, "width": 1.0},
        },
        "initial_condition": {"name": "gaussian", "amplitude": 1.0, "width": 1.5},
        "horizon": 0.4,
        "solver": {"frames": 32},
        "output_dir": str(out_dir),
        "flags": {},
    }
    cfg.update(overrides)
    return cfg


def _write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


# --------------------------------------------------------------------------
# configuration parsing
# --------------------------------------------------------------------------


def test_defaults_are_materialized(tmp_path):
    cfg = _certified_config(tmp_path / "out")
    del cfg["solver"]
    del cfg["flags"]
    config = cl.parse_config(_write(tmp_path, cfg))
    echo = config.echo()
    assert echo["solver"]["safety"] == 0.9
    assert echo["solver"]["frames"] == 64
    assert echo["solver"]["tol_fix"] is None
    assert echo["solver"]["max_iter"] == 200
    assert echo["flags"] == {"run_oracle": False, "override_certificate": False}


def test_negative_a_rejected_with_constraint(tmp_path):
    cfg = _certified_config(tmp_path / "out")
    cfg["model"]["a"] = -1.0
    with pytest.raises(cl.ConfigError, match="a >= 0"):
        cl.parse_config(_write(tmp_path, cfg))


def test_unknown_key_rejected(tmp_path):
    cfg = _certified_config(tmp_path / "out")
    cfg["alpha"] = 1.0
    with pytest.raises(cl.ConfigError, match="alpha"):
        cl.parse_config(_write(tmp_path, cfg))
    cfg = _certified_config(tmp_path / "out")
    cfg["solver"]["turbo"] = True
    with pytest.raises(cl.ConfigError, match="turbo"):
        cl.parse_config(_write(tmp_path, cfg))


def test_unknown_catalog_names_rejected(tmp_path):
    cfg = _certified_config(tmp_path / "out")
    cfg["kernel"] = {"name": "mystery"}
    with pytest.raises(cl.ConfigError, match="mystery"):
        cl.parse_config(_write(tmp_path, cfg))


def test_missing_config_file():
    with pytest.raises(cl.ConfigError, match="does not exist"):
        cl.parse_config("/nonexistent/run.json")


# --------------------------------------------------------------------------
# pipeline and exit codes
# --------------------------------------------------------------------------


def test_certified_run_artifacts(tmp_path):
    out = tmp_path / "out"
    config = cl.parse_config(_write(tmp_path, _certified_config(out)))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_OK
    # trace CSV: exact header, ratios below the certified constant
    trace = (out / "trace_w0.csv").read_text().splitlines()
    assert trace[0] == TRACE_HEADER
    rows = [line.split(",") for line in trace[1:]]
    c = float(rows[0][3])
    ratios = [float(r[2]) for r in rows if r[2]]
    assert ratios and max(ratios) <= c * 1.05
    # certificate file is self-sufficient to recompute C
    cert = dict(
        line.split("=", 1) for line in (out / "certificate.txt").read_text().splitlines()
    )
    re_c = cl.contraction_constant(
        float(cert["q"]), float(cert["l"]), float(cert["T"]),
        float(cert["a"]), float(cert["b"]),
    )
    assert abs(re_c - float(cert["C"])) <= 1e-14
    assert cert["valid"] == "true"
    assert (out / "final_field.sxd").exists()
    assert (out / "norms_w0.csv").exists()
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["solver"]["safety"] == 0.9


def test_run_is_deterministic(tmp_path, monkeypatch):
    for sub in ("r1", "r2"):
        d = tmp_path / sub
        d.mkdir()
        monkeypatch.chdir(d)
        cfg = _certified_config("out")
        config = cl.parse_config(_write(d, cfg))
        artifacts = cl.run(config)
        assert artifacts.exit_code == EXIT_OK
        cl.emit_plot_data(artifacts, "decay")
        cl.emit_plot_data(artifacts, "trace")
    for name in (
        "trace_w0.csv", "norms_w0.csv", "certificate.txt", "summary.txt",
        "decay.csv", "trace.csv", "final_field.sxd", "config_echo.json",
    ):
        a = (tmp_path / "r1" / "out" / name).read_bytes()
        b = (tmp_path / "r2" / "out" / name).read_bytes()
        assert a == b, f"nondeterministic artifact {name}"


def test_refusal_exit_code(tmp_path):
    out = tmp_path / "out"
    cfg = _certified_config(out)
    cfg["kernel"] = {"name": "gaussian", "amplitude": 1.0, "width": 1.0}
    cfg["nonlinearity"] = {"name": "saturating", "lipschitz": 1.0}
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_CERTIFICATE_REFUSED
    assert "no window length satisfies" in artifacts.summary["error"]
    # the certificate trail exists even on refusal
    text = (out / "certificate.txt").read_text()
    assert "valid=false" in text


def test_zero_kernel_exit_code(tmp_path):
    zeros = tmp_path / "zeros.csv"
    zeros.write_text("0.0,0.0\n1.0,0.0\n2.0,0.0\n")
    out = tmp_path / "out"
    cfg = _certified_config(out)
    cfg["kernel"] = {"name": "tabulated", "path": str(zeros)}
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_ASSUMPTION_VIOLATION
    assert "vanishes identically" in artifacts.summary["error"]


def test_wrong_lipschitz_declaration_exit_code(tmp_path):
    out = tmp_path / "out"
    cfg = _certified_config(out)
    cfg["nonlinearity"] = {
        "name": "linear_plus_source",
        "kappa": 2.0,
        "lipschitz": 0.5,
        "source": {"name": "gaussian", "amplitude": 0.1, "width": 1.0},
    }
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_ASSUMPTION_VIOLATION
    assert "Lipschitz" in artifacts.summary["error"]


def test_solver_failure_exit_code(tmp_path):
    out = tmp_path / "out"
    cfg = _certified_config(out)
    cfg["solver"] = {"frames": 32, "max_iter": 1}
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_SOLVER_FAILURE
    assert "no fixed point" in artifacts.summary["error"]


def test_oracle_flag_records_deviation(tmp_path):
    out = tmp_path / "out"
    cfg = _certified_config(out)
    cfg["flags"] = {"run_oracle": True}
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_OK
    assert artifacts.summary["oracle_rel_deviation"] <= 1e-4


# --------------------------------------------------------------------------
# plot data
# --------------------------------------------------------------------------


@pytest.mark.filterwarnings("ignore:F\\(0, .\\) is identically zero")
def test_decay_csv_slope_for_free_mode(tmp_path):
    # F == 0, single mode k=1 on an L=pi grid: log ||u(t)|| has slope a - 1
    out = tmp_path / "out"
    cfg = {
        "grid": {"L": np.pi, "N": 32},
        "model": {"a": 0.0, "b": 0.0},
        "kernel": {"name": "gaussian", "amplitude": 1.0, "width": 1.0},
        "nonlinearity": {"name": "linear_plus_source", "kappa": 0.0},
        "initial_condition": {"name": "mode", "amplitude": 1.0, "k": 1},
        "horizon": 0.5,
        "solver": {"frames": 32},
        "output_dir": str(out),
    }
    config = cl.parse_config(_write(tmp_path, cfg))
    artifacts = cl.run(config)
    assert artifacts.exit_code == EXIT_OK
    paths = cl.emit_plot_data(artifacts, "decay")
    rows = paths[0].read_text().splitlines()
    assert rows[0] == "t,l2"
    data = np.array([[float(v) for v in line.split(",")] for line in rows[1:]])
    slope = np.polyfit(data[:, 0], np.log(data[:, 1]), 1)[0]
    assert abs(slope - (0.0 - 1.0)) <= 1e-4


def test_snapshot_at_t0_matches_initial_condition(tmp_path):
    out = tmp_path / "out"
    config = cl.parse_config(_write(tmp_path, _certified_config(out)))
    artifacts = cl.run(config)
    paths = cl.emit_plot_data(artifacts, "snapshot", frames=[0])
    rows = paths[0].read_text().splitlines()
    assert rows[0] == "x,re_u"
    data = np.array([[float(v) for v in line.split(",")] for line in rows[1:]])
    expected = 1.0 * np.exp(-((data[:, 0]) / 1.5) ** 2)
    assert np.max(np.abs(data[:, 1] - expected)) <= 1e-10


def test_unknown_plot_selector(tmp_path):
    out = tmp_path / "out"
    config = cl.parse_config(_write(tmp_path, _certified_config(out)))
    artifacts = cl.run(config)
    with pytest.raises(ValueError, match="selector"):
        cl.emit_plot_data(artifacts, "spectrogram")


# --------------------------------------------------------------------------
# command line entry
# --------------------------------------------------------------------------


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "out"
    path = _write(tmp_path, _certified_config(out))
    from cubelap.runner import main

    assert main(["--config", str(path)]) == EXIT_OK
    assert "status=ok" in capsys.readouterr().out
    # --out overrides the configured directory
    alt = tmp_path / "alt"
    assert main(["--config", str(path), "--out", str(alt)]) == EXIT_OK
    assert (alt / "certificate.txt").exists()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == EXIT_ASSUMPTION_VIOLATION
