"""Batch front door: declarative run configuration -> artifacts on disk.

A run is a single JSON file naming the grid, the model constants, a kernel
and a nonlinearity from the catalogs, an initial condition and a horizon.
The pipeline validates the structural assumptions, evaluates the contraction
certificate, refuses by default when it is invalid, executes the windowed
global solve, and writes everything needed to audit the run:

    certificate.txt    flat key=value, enough to recompute C by hand
    config_echo.json   the configuration with every default materialized
    summary.txt        status, warnings, overlap measure, final norms
    trace_w<k>.csv     per-window Picard trace, header n,d_n,r_n,C
    norms_w<k>.csv     per-window frame norms, header t,l2,d6u_l2,dudt_l2
    final_field.sxd    binary dump of the last window's spectral frames

Exit codes: 0 success, 2 certificate refusal, 3 solver failure,
4 assumption/configuration violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certify import Certificate, NoAdmissibleWindow, certificate_report
from .evolve import (
    CertificateRefusedError,
    SolveReport,
    SolverError,
    global_march,
)
from .grid import Field, field_from_function, inverse_transform, make_grid
from .model import (
    AssumptionViolation,
    ModelEvaluationError,
    ProblemSpec,
    bandlimited_kernel,
    check_lipschitz_sampling,
    gaussian_kernel,
    kernel_strength,
    linear_plus_source,
    logistic_clip,
    saturating,
    sech_kernel,
    source_bandlimited,
    source_gaussian,
    source_zero,
    tabulated_kernel_from_csv,
    validate_kernel,
)
from .storage import dump_spacetime_field

EXIT_OK = 0
EXIT_CERTIFICATE_REFUSED = 2
EXIT_SOLVER_FAILURE = 3
EXIT_ASSUMPTION_VIOLATION = 4

TRACE_HEADER = "n,d_n,r_n,C"
NORMS_HEADER = "t,l2,d6u_l2,dudt_l2"
DECAY_HEADER = "t,l2"
SNAPSHOT_HEADER = "x,re_u"


class ConfigError(ValueError):
    """Configuration file violates the documented schema."""


_SOLVER_DEFAULTS = {
    "frames": 64,
    "tol_fix": None,
    "max_iter": 200,
    "safety": 0.9,
    "oracle_substeps_factor": 4,
    "max_window_length": None,
    "seed": 0,
    "lipschitz_trials": 2000,
}

_FLAG_DEFAULTS = {"run_oracle": False, "override_certificate": False}


@dataclass
class RunConfig:
    grid: dict
    model: dict
    kernel: dict
    nonlinearity: dict
    initial_condition: dict
    horizon: float
    solver: dict
    output_dir: str
    flags: dict

    def echo(self) -> dict:
        return {
            "grid": self.grid,
            "model": self.model,
            "kernel": self.kernel,
            "nonlinearity": self.nonlinearity,
            "initial_condition": self.initial_condition,
            "horizon": self.horizon,
            "solver": self.solver,
            "output_dir": self.output_dir,
            "flags": self.flags,
        }


@dataclass
class RunArtifacts:
    exit_code: int
    output_dir: Path
    summary: dict
    reports: list[SolveReport] = field(default_factory=list)
    config: RunConfig | None = None


def _require_keys(section: dict, name: str, known: dict, required: tuple = ()):
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be an object, got {section!r}")
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section {name!r}")
    for key in required:
        if key not in section:
            raise ConfigError(f"missing key {key!r} in section {name!r}")
    merged = {k: v for k, v in known.items() if v is not ...}
    merged.update(section)
    return merged


def _as_number(value, where: str, constraint: str | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def parse_config(path) -> RunConfig:
    """Read, validate and default-materialize a run configuration file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be an object")

    top_known = {
        "grid": ...,
        "model": ...,
        "kernel": ...,
        "nonlinearity": ...,
        "initial_condition": ...,
        "horizon": ...,
        "solver": {},
        "output_dir": "out",
        "flags": {},
    }
    top = _require_keys(
        raw,
        "<top>",
        top_known,
        required=("grid", "model", "kernel", "nonlinearity", "initial_condition", "horizon"),
    )

    grid = _require_keys(top["grid"], "grid", {"L": ..., "N": ...}, required=("L", "N"))
    L = _as_number(grid["L"], "grid.L")
    if L <= 0:
        raise ConfigError("grid.L violates the constraint L > 0")
    N = grid["N"]
    if not isinstance(N, int) or N % 2 != 0 or N < 8:
        raise ConfigError("grid.N violates the constraint: even integer, N >= 8")
    grid = {"L": L, "N": N}

    model = _require_keys(top["model"], "model", {"a": ..., "b": ...}, required=("a", "b"))
    a = _as_number(model["a"], "model.a")
    if a < 0:
        raise ConfigError("model.a violates the constraint a >= 0")
    model = {"a": a, "b": _as_number(model["b"], "model.b")}

    kernel = _parse_kernel_section(top["kernel"])
    nonlinearity = _parse_nonlinearity_section(top["nonlinearity"])
    ic = _parse_ic_section(top["initial_condition"])

    horizon = _as_number(top["horizon"], "horizon")
    if horizon <= 0:
        raise ConfigError("horizon violates the constraint horizon > 0")

    solver = _require_keys(top["solver"], "solver", dict(_SOLVER_DEFAULTS))
    if not isinstance(solver["frames"], int) or solver["frames"] < 2:
        raise ConfigError("solver.frames violates the constraint: integer >= 2")
    if not 0 < _as_number(solver["safety"], "solver.safety") < 1:
        raise ConfigError("solver.safety violates the constraint 0 < safety < 1")
    if solver["max_iter"] < 1:
        raise ConfigError("solver.max_iter violates the constraint max_iter >= 1")
    if solver["oracle_substeps_factor"] < 4:
        raise ConfigError(
            "solver.oracle_substeps_factor violates the constraint factor >= 4"
        )

    flags = _require_keys(top["flags"], "flags", dict(_FLAG_DEFAULTS))
    for key, val in flags.items():
        if not isinstance(val, bool):
            raise ConfigError(f"flags.{key} must be a boolean, got {val!r}")

    out_dir = top["output_dir"]
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output_dir must be a nonempty string")

    return RunConfig(
        grid=grid,
        model=model,
        kernel=kernel,
        nonlinearity=nonlinearity,
        initial_condition=ic,
        horizon=horizon,
        solver=solver,
        output_dir=out_dir,
        flags=flags,
    )


def _parse_kernel_section(section) -> dict:
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError("kernel section needs a 'name'")
    name = section["name"]
    schemas = {
        "gaussian": {"name": ..., "amplitude": 1.0, "width": 1.0},
        "sech": {"name": ..., "amplitude": 1.0, "width": 1.0},
        "bandlimited": {"name": ..., "amplitude": 1.0, "cutoff": ...},
        "tabulated": {"name": ..., "path": ...},
    }
    if name not in schemas:
        raise ConfigError(
            f"kernel.name {name!r} is not in the catalog {sorted(schemas)}"
        )
    required = ("cutoff",) if name == "bandlimited" else ()
    required = ("path",) if name == "tabulated" else required
    return _require_keys(section, "kernel", schemas[name], required=required)


def _parse_source_section(section) -> dict:
    if section is None:
        return {"name": "zero"}
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError("nonlinearity.source needs a 'name'")
    name = section["name"]
    schemas = {
        "zero": {"name": ...},
        "gaussian": {"name": ..., "amplitude": 1.0, "width": 1.0, "center": 0.0},
        "bandlimited": {"name": ..., "amplitude": 1.0, "p_lo": ..., "p_hi": ...},
    }
    if name not in schemas:
        raise ConfigError(
            f"nonlinearity.source.name {name!r} is not in the catalog {sorted(schemas)}"
        )
    required = ("p_lo", "p_hi") if name == "bandlimited" else ()
    return _require_keys(section, "nonlinearity.source", schemas[name], required=required)


def _parse_nonlinearity_section(section) -> dict:
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError("nonlinearity section needs a 'name'")
    name = section["name"]
    schemas = {
        "linear_plus_source": {"name": ..., "kappa": ..., "lipschitz": None, "source": None},
        "saturating": {"name": ..., "lipschitz": ..., "source": None},
        "logistic_clip": {"name": ..., "lipschitz": ..., "u_max": ..., "source": None},
    }
    if name not in schemas:
        raise ConfigError(
            f"nonlinearity.name {name!r} is not in the catalog {sorted(schemas)}"
        )
    required = {
        "linear_plus_source": ("kappa",),
        "saturating": ("lipschitz",),
        "logistic_clip": ("lipschitz", "u_max"),
    }[name]
    out = _require_keys(section, "nonlinearity", schemas[name], required=required)
    out["source"] = _parse_source_section(out.get("source"))
    return out


def _parse_ic_section(section) -> dict:
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError("initial_condition section needs a 'name'")
    name = section["name"]
    schemas = {
        "zero": {"name": ...},
        "gaussian": {"name": ..., "amplitude": 1.0, "width": 1.0, "center": 0.0},
        "mode": {"name": ..., "amplitude": 1.0, "k": ...},
        "csv": {"name": ..., "path": ...},
    }
    if name not in schemas:
        raise ConfigError(
            f"initial_condition.name {name!r} is not in the catalog {sorted(schemas)}"
        )
    required = {"zero": (), "gaussian": (), "mode": ("k",), "csv": ("path",)}[name]
    out = _require_keys(section, "initial_condition", schemas[name], required=required)
    if name == "mode" and not isinstance(out["k"], int):
        raise ConfigError("initial_condition.k must be an integer mode index")
    return out


def build_problem(config: RunConfig) -> ProblemSpec:
    """Instantiate the typed model objects a validated configuration names."""
    grid = make_grid(config.grid["L"], config.grid["N"])

    ks = config.kernel
    if ks["name"] == "gaussian":
        kernel = gaussian_kernel(ks["amplitude"], ks["width"])
    elif ks["name"] == "sech":
        kernel = sech_kernel(ks["amplitude"], ks["width"])
    elif ks["name"] == "bandlimited":
        kernel = bandlimited_kernel(grid, ks["amplitude"], ks["cutoff"])
    else:
        kernel = tabulated_kernel_from_csv(grid, ks["path"])

    src = config.nonlinearity["source"]
    if src["name"] == "zero":
        source = source_zero()
    elif src["name"] == "gaussian":
        source = source_gaussian(src["amplitude"], src["width"], src["center"])
    else:
        source = source_bandlimited(grid, src["amplitude"], src["p_lo"], src["p_hi"])

    ns = config.nonlinearity
    if ns["name"] == "linear_plus_source":
        nonlinearity = linear_plus_source(ns["kappa"], source, lipschitz=ns["lipschitz"])
    elif ns["name"] == "saturating":
        nonlinearity = saturating(ns["lipschitz"], source)
    else:
        nonlinearity = logistic_clip(ns["lipschitz"], ns["u_max"], source)

    ic = config.initial_condition
    if ic["name"] == "zero":
        u0 = Field(grid, np.zeros(grid.n_points), "physical")
    elif ic["name"] == "gaussian":
        u0 = field_from_function(
            grid,
            lambda x: ic["amplitude"] * np.exp(-(((x - ic["center"]) / ic["width"]) ** 2)),
        )
    elif ic["name"] == "mode":
        p0 = ic["k"] * np.pi / grid.half_length
        u0 = field_from_function(grid, lambda x: ic["amplitude"] * np.cos(p0 * x))
    else:
        data = np.loadtxt(ic["path"], delimiter=",")
        if data.ndim != 2 or data.shape[1] != 2:
            raise ConfigError(f"initial_condition csv {ic['path']} must have two columns")
        u0 = field_from_function(
            grid, lambda x: np.interp(x, data[:, 0], data[:, 1], left=0.0, right=0.0)
        )

    return ProblemSpec(
        a=config.model["a"],
        b=config.model["b"],
        kernel=kernel,
        nonlinearity=nonlinearity,
        u0=u0,
        grid=grid,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_trace_csv(path: Path, report: SolveReport, watermark: str | None):
    lines = [TRACE_HEADER]
    c = report.certificate.constant
    tr = report.trace
    for n in range(tr.iterations):
        r = tr.ratios[n]
        lines.append(
            f"{n + 1},{_fmt(float(tr.distances[n]))},"
            f"{_fmt(float(r)) if np.isfinite(r) else ''},{_fmt(c)}"
        )
    text = "\n".join(lines) + "\n"
    if watermark:
        text = watermark + text
    path.write_text(text)


def _write_norms_csv(path: Path, report: SolveReport, watermark: str | None):
    lines = [NORMS_HEADER]
    tg = report.field.time_grid
    for j in range(report.field.n_frames):
        lines.append(
            f"{_fmt(report.t_offset + float(tg[j]))},{_fmt(float(report.l2_per_frame[j]))},"
            f"{_fmt(float(report.d6_l2_per_frame[j]))},{_fmt(float(report.dudt_l2_per_frame[j]))}"
        )
    text = "\n".join(lines) + "\n"
    if watermark:
        text = watermark + text
    path.write_text(text)


def _write_summary(path: Path, summary: dict, watermark: str | None):
    lines = [f"{key}={_fmt(val)}" for key, val in summary.items()]
    text = "\n".join(lines) + "\n"
    if watermark:
        text = watermark + text
    path.write_text(text)


def run(config: RunConfig) -> RunArtifacts:
    """Execute the whole certified pipeline for one configuration."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    override = config.flags["override_certificate"]
    watermark = None
    summary: dict = {"status": "incomplete", "exit_code": EXIT_SOLVER_FAILURE}
    (out / "config_echo.json").write_text(json.dumps(config.echo(), indent=2) + "\n")

    def finish(code: int, status: str, error: str | None = None) -> RunArtifacts:
        summary["status"] = status
        summary["exit_code"] = code
        if error:
            summary["error"] = error
        _write_summary(out / "summary.txt", summary, watermark)
        return RunArtifacts(
            exit_code=code, output_dir=out, summary=summary, reports=reports,
            config=config,
        )

    reports: list[SolveReport] = []
    q = float("nan")
    ell = float("nan")
    try:
        prob = build_problem(config)
        ell = prob.nonlinearity.lipschitz_l
        validate_kernel(prob.kernel, prob.grid)
        q = kernel_strength(prob.kernel)
        check_lipschitz_sampling(
            prob.nonlinearity,
            trials=config.solver["lipschitz_trials"],
            seed=config.solver["seed"],
        )
    except (ConfigError, AssumptionViolation, ValueError) as exc:
        _write_partial_certificate(out, q, ell, config, watermark)
        return finish(EXIT_ASSUMPTION_VIOLATION, "assumption_violation", str(exc))

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            reports = global_march(
                prob,
                config.horizon,
                safety=config.solver["safety"],
                n_frames=config.solver["frames"],
                tol_fix=config.solver["tol_fix"],
                max_iter=config.solver["max_iter"],
                max_window_length=config.solver["max_window_length"],
                override_certificate=override,
                run_oracle=config.flags["run_oracle"],
                oracle_substeps_factor=config.solver["oracle_substeps_factor"],
            )
    except (NoAdmissibleWindow, CertificateRefusedError) as exc:
        _write_partial_certificate(out, q, ell, config, watermark)
        return finish(EXIT_CERTIFICATE_REFUSED, "certificate_refused", str(exc))
    except Exception as exc:
        inner = getattr(exc, "__cause__", None)
        if isinstance(inner, (NoAdmissibleWindow, CertificateRefusedError)):
            _write_partial_certificate(out, q, ell, config, watermark)
            return finish(EXIT_CERTIFICATE_REFUSED, "certificate_refused", str(exc))
        if isinstance(exc, (SolverError, ModelEvaluationError)):
            _write_partial_certificate(out, q, ell, config, watermark)
            return finish(EXIT_SOLVER_FAILURE, "solver_failure", str(exc))
        raise

    cert = reports[0].certificate
    if override and not cert.valid:
        watermark = (
            f"# OVERRIDE: certificate invalid (C={cert.constant!r}); "
            "results are experimental\n"
        )
    (out / "certificate.txt").write_text(
        (watermark or "") + certificate_report(cert)
    )
    for k, rep in enumerate(reports):
        _write_trace_csv(out / f"trace_w{k}.csv", rep, watermark)
        _write_norms_csv(out / f"norms_w{k}.csv", rep, watermark)
    dump_spacetime_field(out / "final_field.sxd", reports[-1].field)

    tail_warnings = [w for rep in reports for w in rep.tail_warnings]
    runtime_warnings = [str(w.message) for w in caught]
    summary.update(
        {
            "windows": len(reports),
            "window_length": reports[0].field.horizon,
            "C": cert.constant,
            "q": cert.q,
            "l": cert.l,
            "T_max": cert.t_max,
            "overlap": reports[-1].overlap,
            "final_l2": float(reports[-1].l2_per_frame[-1]),
            "final_h6_part": float(reports[-1].d6_l2_per_frame[-1]),
            "max_picard_ratio": _max_ratio(reports),
            "oracle_rel_deviation": _max_oracle_dev(reports),
            "tail_warnings": "; ".join(tail_warnings) if tail_warnings else "none",
            "runtime_warnings": "; ".join(runtime_warnings) if runtime_warnings else "none",
        }
    )
    return finish(EXIT_OK, "ok")


def _max_ratio(reports: list[SolveReport]):
    vals = [r for rep in reports for r in rep.trace.reported_ratios()]
    return float(max(vals)) if vals else None


def _max_oracle_dev(reports: list[SolveReport]):
    vals = [rep.oracle_rel_deviation for rep in reports if rep.oracle_rel_deviation is not None]
    return float(max(vals)) if vals else None


def _write_partial_certificate(
    out: Path, q: float, ell: float, config: RunConfig, watermark: str | None
):
    """Even refused/failed runs leave a certificate trail for diagnosis."""
    limit = q * ell * math.sqrt(2.0) if np.isfinite(q) and np.isfinite(ell) else float("nan")
    lines = [
        f"q={q!r}",
        f"l={ell!r}",
        f"a={config.model['a']!r}",
        f"b={config.model['b']!r}",
        "T=None",
        f"C_small_T_limit={limit!r}",
        "valid=false",
        "T_max=None",
    ]
    (out / "certificate.txt").write_text(
        (watermark or "") + "\n".join(lines) + "\n"
    )


def emit_plot_data(artifacts: RunArtifacts, which: str, frames=None) -> list[Path]:
    """Write plot-ready CSVs from a completed run.

    which = 'decay'    -> decay.csv with (t, L2 norm) across all windows
            'trace'    -> trace.csv, all windows concatenated, global n
            'snapshot' -> snapshot_f<j>.csv with (x, Re u) per requested frame
                          of the final window (default: first and last frame)
    """
    if artifacts.exit_code != EXIT_OK or not artifacts.reports:
        raise ValueError("plot data requires a completed successful run")
    out = artifacts.output_dir
    written: list[Path] = []
    if which == "decay":
        lines = [DECAY_HEADER]
        for k, rep in enumerate(artifacts.reports):
            start = 1 if k > 0 else 0  # window joints share a frame
            tg = rep.field.time_grid
            for j in range(start, rep.field.n_frames):
                lines.append(
                    f"{_fmt(rep.t_offset + float(tg[j]))},{_fmt(float(rep.l2_per_frame[j]))}"
                )
        path = out / "decay.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    elif which == "trace":
        lines = [TRACE_HEADER]
        n_global = 0
        for rep in artifacts.reports:
            tr = rep.trace
            c = rep.certificate.constant
            for n in range(tr.iterations):
                n_global += 1
                r = tr.ratios[n]
                lines.append(
                    f"{n_global},{_fmt(float(tr.distances[n]))},"
                    f"{_fmt(float(r)) if np.isfinite(r) else ''},{_fmt(c)}"
                )
        path = out / "trace.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    elif which == "snapshot":
        rep = artifacts.reports[-1]
        idx = frames if frames is not None else [0, rep.field.n_frames - 1]
        for j in idx:
            phys = inverse_transform(rep.field.frame(j))
            lines = [SNAPSHOT_HEADER]
            for xj, uj in zip(rep.field.grid.x, phys.values.real):
                lines.append(f"{_fmt(float(xj))},{_fmt(float(uj))}")
            path = out / f"snapshot_f{j}.csv"
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
    else:
        raise ValueError(f"unknown plot selector {which!r}")
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cubelap",
        description="certified spectral solve of the sixth-order nonlocal model",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", help="override the configured output directory")
    parser.add_argument(
        "--oracle", action="store_true", help="also run the cross-validation marcher"
    )
    parser.add_argument(
        "--override-certificate",
        action="store_true",
        help="iterate even when the certificate is invalid (watermarks outputs)",
    )
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"configuration rejected: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION_VIOLATION
    if args.out:
        config.output_dir = args.out
    if args.oracle:
        config.flags["run_oracle"] = True
    if args.override_certificate:
        config.flags["override_certificate"] = True
    artifacts = run(config)
    status = artifacts.summary.get("status")
    err = artifacts.summary.get("error")
    print(f"status={status} exit={artifacts.exit_code}" + (f" ({err})" if err else ""))
    return artifacts.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
