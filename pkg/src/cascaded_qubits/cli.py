"""Command-line front end.

Subcommands map onto the library layers: ``steady`` and ``spectrum``
interrogate the master equation, ``single``/``ensemble`` run seeded
conditional trajectories, ``portrait`` draws the two-plane phase picture,
and ``compare`` checks the trajectory ensemble against the exact
master-equation solution.  All artifacts are plain JSON/CSV/SVG with
floats at 17 significant digits, so identical configurations (including
the seed) reproduce output files byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, master, model, portrait, recordio, trajectory
from .errors import DegenerateSteadyState, SimulationError
from .model import SystemParams

OUT_DIR_ENV = "CASCADE_QUBITS_OUT"
ALL_FORMATS = ("json", "csv", "svg")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: SystemParams
    out_dir: Path
    formats: tuple[str, ...]
    initial: np.ndarray | None = None
    initial_label: str = ""
    t_max: float = 20.0
    max_jumps: int = trajectory.DEFAULT_MAX_JUMPS
    n_traj: int = 1
    seed: int | None = None
    workers: int = 1
    grid_points: int = 51
    samples_per_unit: float = trajectory.DEFAULT_SAMPLES_PER_UNIT
    r_grid: list[float] = field(default_factory=list)
    record_path: Path | None = None
    scaled_from: dict | None = None


def parse_initial(text: str) -> tuple[np.ndarray, str]:
    """A named state ('00', 'bell:psi-') or four comma-separated amplitudes."""
    try:
        return np.array(model.named_state(text)), text.strip().lower()
    except KeyError:
        pass
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(
            f"initial state {text!r} is neither a named state nor four "
            "comma-separated complex amplitudes")
    try:
        amps = np.array([complex(p.strip().replace("i", "j")) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"cannot parse amplitudes in {text!r}: {exc}") from None
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ConfigError("initial state must be nonzero")
    return amps / norm, "custom"


def parse_r_grid(text: str) -> list[float]:
    """'start:stop:step' inclusive, or a comma-separated list of r values."""
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad r grid {text!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ConfigError("r grid needs step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        values = [start + k * step for k in range(n + 1)]
        if values[-1] > stop + 1e-12:
            values.pop()
        return values
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad r grid {text!r}") from None


def _add_param_args(p: argparse.ArgumentParser):
    p.add_argument("--r", type=float, help="scaled transition ratio (>= 0)")
    p.add_argument("--epsilon", type=float, default=1.0,
                   help="inter-cavity coupling efficiency in [0, 1]")
    p.add_argument("--beta-r", type=float, help="unscaled downward amplitude")
    p.add_argument("--beta-s", type=float, help="unscaled upward amplitude")
    p.add_argument("--kappa", type=float, default=1.0,
                   help="cavity decay rate for the scaled reduction")


def _add_io_args(p: argparse.ArgumentParser, formats_default: str):
    p.add_argument("--out-dir", type=Path,
                   default=Path(os.environ.get(OUT_DIR_ENV, "out")),
                   help=f"output directory (default: ${OUT_DIR_ENV} or ./out)")
    p.add_argument("--formats", default=formats_default,
                   help=f"comma subset of {','.join(ALL_FORMATS)}")


def _add_trajectory_args(p: argparse.ArgumentParser, t_max_default: float):
    p.add_argument("--initial", required=True,
                   help="named state (00, 01, 10, 11, bell:phi+, ...) or 4 amplitudes")
    p.add_argument("--seed", type=int, required=True,
                   help="64-bit stream seed (required: no silent nondeterminism)")
    p.add_argument("--t-max", type=float, default=t_max_default)
    p.add_argument("--max-jumps", type=int, default=trajectory.DEFAULT_MAX_JUMPS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-qubits",
        description="Cascaded two-qubit photon-counting trajectory simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="steady state of the master equation")
    _add_param_args(p)
    _add_io_args(p, "json")

    p = sub.add_parser("spectrum", help="Liouvillian spectrum and relaxation-time sweep")
    _add_param_args(p)
    p.add_argument("--r-grid", required=True,
                   help="start:stop:step (inclusive) or comma list of r values")
    _add_io_args(p, "json,csv")

    p = sub.add_parser("single", help="one conditional trajectory")
    _add_param_args(p)
    _add_trajectory_args(p, 20.0)
    p.add_argument("--samples-per-unit", type=float,
                   default=trajectory.DEFAULT_SAMPLES_PER_UNIT)
    _add_io_args(p, "json,csv")

    p = sub.add_parser("ensemble", help="seeded trajectory ensemble")
    _add_param_args(p)
    _add_trajectory_args(p, 10.0)
    p.add_argument("--n-traj", type=int, required=True)
    p.add_argument("--grid-points", type=int, default=51,
                   help="sample-grid points on [0, t_max]")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_io_args(p, "json,csv")

    p = sub.add_parser("portrait", help="two-plane phase portrait")
    _add_param_args(p)
    p.add_argument("--record", type=Path,
                   help="existing record JSON; if absent, simulate from flags")
    p.add_argument("--initial")
    p.add_argument("--seed", type=int)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--max-jumps", type=int, default=trajectory.DEFAULT_MAX_JUMPS)
    p.add_argument("--points-per-unit", type=float, default=200.0)
    _add_io_args(p, "json,csv,svg")

    p = sub.add_parser("compare", help="ensemble average vs master equation")
    _add_param_args(p)
    _add_trajectory_args(p, 10.0)
    p.add_argument("--n-traj", type=int, required=True)
    p.add_argument("--grid-points", type=int, default=51)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_io_args(p, "json,csv")

    return parser


def _params_from_args(args) -> tuple[SystemParams, dict | None]:
    has_scaled = args.r is not None
    has_raw = args.beta_r is not None or args.beta_s is not None
    if has_scaled and has_raw:
        raise ConfigError("give either --r or --beta-r/--beta-s, not both")
    if has_raw:
        if args.beta_r is None or args.beta_s is None:
            raise ConfigError("--beta-r and --beta-s must be given together")
        params = SystemParams.from_rates(args.beta_r, args.beta_s,
                                         kappa=args.kappa, epsilon=args.epsilon)
        echo = {"beta_r": args.beta_r, "beta_s": args.beta_s, "kappa": args.kappa,
                "time_unit": float(np.sqrt(args.kappa) / args.beta_r)}
        return params, echo
    if not has_scaled:
        raise ConfigError("missing --r (or --beta-r/--beta-s)")
    return SystemParams(r=args.r, epsilon=args.epsilon), None


def config_from_args(args) -> RunConfig:
    try:
        if (args.command == "spectrum" and args.r is None
                and args.beta_r is None and args.beta_s is None):
            # the sweep supplies r; only epsilon matters here
            params, echo = SystemParams(r=0.0, epsilon=args.epsilon), None
        else:
            params, echo = _params_from_args(args)
    except SimulationError as exc:
        raise ConfigError(str(exc)) from None
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    for f in formats:
        if f not in ALL_FORMATS:
            raise ConfigError(f"unknown format {f!r}")
    cfg = RunConfig(
        command=args.command,
        params=params,
        out_dir=args.out_dir,
        formats=formats,
        scaled_from=echo,
    )
    if hasattr(args, "initial") and args.initial is not None:
        cfg.initial, cfg.initial_label = parse_initial(args.initial)
    if hasattr(args, "seed") and args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be a non-negative 64-bit integer")
        cfg.seed = args.seed
    for name in ("t_max", "max_jumps", "n_traj", "workers", "grid_points",
                 "samples_per_unit"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if cfg.t_max <= 0:
        raise ConfigError("t_max must be positive")
    if getattr(args, "command", "") == "spectrum":
        cfg.r_grid = parse_r_grid(args.r_grid)
    if hasattr(args, "record"):
        cfg.record_path = args.record
    if hasattr(args, "points_per_unit"):
        cfg.samples_per_unit = args.points_per_unit
    if cfg.command in ("single", "ensemble", "compare") and cfg.initial is None:
        raise ConfigError("missing --initial")
    if cfg.command in ("ensemble", "compare") and cfg.n_traj < 1:
        raise ConfigError("n_traj must be >= 1")
    return cfg


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _header(cfg: RunConfig) -> dict:
    doc = {"command": cfg.command,
           "params": {"r": cfg.params.r, "epsilon": cfg.params.epsilon}}
    if cfg.scaled_from is not None:
        doc["scaled_from"] = cfg.scaled_from
    return doc


def _cmd_steady(cfg: RunConfig) -> int:
    doc = _header(cfg)
    try:
        result = master.steady_state(cfg.params)
        doc["degenerate"] = False
        doc["rho"] = recordio.complex_matrix_to_dict(result.rho)
        doc["sigmazz"] = master.expectation_sigmazz(result.rho)
        doc["pure_state"] = (recordio.complex_vector_to_dict(result.pure_state)
                             if result.pure_state is not None else None)
    except DegenerateSteadyState as exc:
        doc["degenerate"] = True
        doc["null_space_dimension"] = len(exc.null_basis)
        doc["null_basis"] = [recordio.complex_matrix_to_dict(m)
                             for m in exc.null_basis]
    if "json" in cfg.formats:
        _write(cfg.out_dir / "steady.json", recordio.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_spectrum(cfg: RunConfig) -> int:
    entries = []
    rows = []
    for r in cfg.r_grid:
        report = master.relaxation_time(SystemParams(r=r, epsilon=cfg.params.epsilon))
        finite = np.isfinite(report.tau)
        entries.append({
            "r": r,
            "tau": report.tau if finite else None,
            "tau_infinite": not finite,
            "lambda2": {"re": report.lambda2.real, "im": report.lambda2.imag},
            "zero_multiplicity": report.zero_multiplicity,
            "eigenvalues": [{"re": z.real, "im": z.imag}
                            for z in report.eigenvalues],
        })
        rows.append((r, recordio.format_float(report.tau) if finite else "inf",
                     report.lambda2.real, report.lambda2.imag,
                     report.zero_multiplicity))
    doc = _header(cfg)
    doc["sweep"] = entries
    if "json" in cfg.formats:
        _write(cfg.out_dir / "spectrum.json", recordio.dumps(doc, indent=2) + "\n")
    if "csv" in cfg.formats:
        _write(cfg.out_dir / "spectrum.csv", recordio.csv_table(
            ["r", "tau", "re_lambda2", "im_lambda2", "zero_multiplicity"], rows))
    return 0


def _timeseries_rows(record: trajectory.TrajectoryRecord):
    rows = []
    for t, state in zip(record.sample_times, record.sample_states):
        dec = analysis.bell_decompose(state)
        split = analysis.correlated_projection(state)
        w_plus = float(np.real(np.vdot(split.plus, split.plus)))
        w_minus = float(np.real(np.vdot(split.minus, split.minus)))
        if w_minus <= 1e-12:
            plane = 1
        elif w_plus <= 1e-12:
            plane = -1
        else:
            plane = 0
        rows.append((
            float(t),
            analysis.sigmazz_expectation(state),
            analysis.entanglement_entropy(state),
            abs(dec.a) ** 2, abs(dec.b) ** 2, abs(dec.c) ** 2, abs(dec.d) ** 2,
            plane,
        ))
    return rows


_TIMESERIES_HEADER = ["t", "sigmazz", "entropy", "weight_phi_plus",
                      "weight_phi_minus", "weight_psi_plus", "weight_psi_minus",
                      "plane"]


def _cmd_single(cfg: RunConfig) -> int:
    record = trajectory.run_trajectory(
        cfg.initial, cfg.params, cfg.t_max, cfg.max_jumps, cfg.seed,
        samples_per_unit=cfg.samples_per_unit)
    if "json" in cfg.formats:
        _write(cfg.out_dir / "record.json", recordio.dump_record(record))
    if "csv" in cfg.formats:
        _write(cfg.out_dir / "timeseries.csv",
               recordio.csv_table(_TIMESERIES_HEADER, _timeseries_rows(record)))
    if "svg" in cfg.formats:
        data = portrait.build_portrait(record)
        title = (f"r={cfg.params.r:g} eps={cfg.params.epsilon:g} "
                 f"initial={cfg.initial_label} seed={cfg.seed}")
        _write(cfg.out_dir / "portrait.svg", portrait.render_svg(data, title))
    return 0


def _ensemble_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.t_max, cfg.grid_points)


def _run_ensemble(cfg: RunConfig):
    grid = _ensemble_grid(cfg)
    records = trajectory.run_ensemble(
        cfg.initial, cfg.params, cfg.n_traj, cfg.seed,
        t_max=cfg.t_max, max_jumps=cfg.max_jumps,
        sample_times=grid, workers=cfg.workers)
    return grid, records


def _cmd_ensemble(cfg: RunConfig) -> int:
    grid, records = _run_ensemble(cfg)
    report = analysis.ensemble_average(records, grid)
    doc = _header(cfg)
    doc.update({
        "seed": cfg.seed,
        "n_trajectories": report.n_trajectories,
        "class_counts": dict(sorted(report.class_counts.items())),
        "times": report.times,
        "mean_sigmazz": report.mean_sigmazz,
        "stderr_sigmazz": report.stderr_sigmazz,
        "mean_density": [recordio.complex_matrix_to_dict(m)
                         for m in report.mean_density],
    })
    if "json" in cfg.formats:
        _write(cfg.out_dir / "ensemble.json", recordio.dumps(doc, indent=2) + "\n")
        _write(cfg.out_dir / "records.ndjson",
               recordio.dump_records_ndjson(records))
    if "csv" in cfg.formats:
        rows = list(zip(report.times, report.mean_sigmazz, report.stderr_sigmazz))
        _write(cfg.out_dir / "ensemble.csv",
               recordio.csv_table(["t", "mean_sigmazz", "stderr_sigmazz"], rows))
    return 0


def _cmd_portrait(cfg: RunConfig) -> int:
    if cfg.record_path is not None:
        record = recordio.load_record(cfg.record_path.read_text(encoding="utf-8"))
        label = cfg.record_path.name
    else:
        if cfg.initial is None or cfg.seed is None:
            raise ConfigError("portrait needs --record, or --initial with --seed")
        record = trajectory.run_trajectory(
            cfg.initial, cfg.params, cfg.t_max, cfg.max_jumps, cfg.seed)
        label = (f"r={cfg.params.r:g} eps={cfg.params.epsilon:g} "
                 f"initial={cfg.initial_label} seed={cfg.seed}")
    data = portrait.build_portrait(record, points_per_unit=cfg.samples_per_unit)
    if "csv" in cfg.formats:
        _write(cfg.out_dir / "portrait_paths.csv", recordio.csv_table(
            ["kind", "index", "plane", "t", "x", "y"], portrait.portrait_rows(data)))
    if "svg" in cfg.formats:
        _write(cfg.out_dir / "portrait.svg", portrait.render_svg(data, label))
    if "json" in cfg.formats:
        doc = _header(cfg)
        doc["record"] = recordio.record_to_dict(record)
        _write(cfg.out_dir / "portrait.json", recordio.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_compare(cfg: RunConfig) -> int:
    grid, records = _run_ensemble(cfg)
    report = analysis.ensemble_average(records, grid)
    rho0 = master.pure_density(cfg.initial)
    exact = master.DensityPropagator(cfg.params).evolve_grid(rho0, grid)
    master_zz = np.array([master.expectation_sigmazz(m) for m in exact])
    residual = report.mean_sigmazz - master_zz
    tolerance = np.maximum(3.0 * report.stderr_sigmazz, 0.02)
    rows = list(zip(grid, report.mean_sigmazz, report.stderr_sigmazz,
                    master_zz, residual))
    doc = _header(cfg)
    doc.update({
        "seed": cfg.seed,
        "n_trajectories": report.n_trajectories,
        "max_abs_residual": float(np.max(np.abs(residual))),
        "within_tolerance": bool(np.all(np.abs(residual) <= tolerance)),
        "times": grid,
        "ensemble_sigmazz": report.mean_sigmazz,
        "stderr_sigmazz": report.stderr_sigmazz,
        "master_sigmazz": master_zz,
    })
    if "csv" in cfg.formats:
        _write(cfg.out_dir / "compare.csv", recordio.csv_table(
            ["t", "ensemble_sigmazz", "stderr", "master_sigmazz", "residual"], rows))
    if "json" in cfg.formats:
        _write(cfg.out_dir / "compare.json", recordio.dumps(doc, indent=2) + "\n")
    return 0


_COMMANDS = {
    "steady": _cmd_steady,
    "spectrum": _cmd_spectrum,
    "single": _cmd_single,
    "ensemble": _cmd_ensemble,
    "portrait": _cmd_portrait,
    "compare": _cmd_compare,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(recordio.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    try:
        return _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    except OSError as exc:
        return _fail(type(exc).__name__, str(exc), 4)
    except SimulationError as exc:
        return _fail(type(exc).__name__, str(exc), 3)


if __name__ == "__main__":
    sys.exit(main())
