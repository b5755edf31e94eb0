"""
Command-line pipeline.

    obsreg simulate    --config exp.toml --out DIR   reference trajectory -> DIR/snapshots/
    obsreg observe     ...                           modal/nodal files    -> DIR/observations/
    obsreg interpolate ...                           H^1 norm report      -> DIR/interpolate.{json,csv}
    obsreg monitor     ...                           criterion report     -> DIR/monitor.json, DIR/monitor_mh.csv
    obsreg nudge       ...                           synchronization      -> DIR/sync.csv, DIR/nudge.json
    obsreg report      ...                           plot-ready CSVs      -> DIR/report/

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ObsRegError
from .fileio import (
    load_observation,
    load_snapshot,
    load_trajectory,
    save_observation,
    save_snapshot,
    save_trajectory,
    write_csv,
    write_json,
)
from .nse_solver import run
from .nudging import NudgeConfig, default_gain, run_nudged
from .observers import NodalData, observe_modal, observe_nodal
from .regularity_monitor import ObservationSeries, check_series, mh_series
from .spectral_core import norms
from .tetra_interpolant import face_jump, h1_data_norms

log = logging.getLogger("obsreg")

COMMANDS = ("simulate", "observe", "interpolate", "monitor", "nudge", "report")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="obsreg", description="Observable regularity toolkit for periodic 3D Navier-Stokes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="TOML experiment file")
        s.add_argument("--out", type=Path, help="working/output directory")
        s.add_argument("--snapshot-every", type=int, dest="snapshot_every")
        s.add_argument("--h", type=float, help="observation scale used in the criterion / default gain")
        s.add_argument("--N", type=int, help="modal cutoff (selects the modal observer)")
        s.add_argument("--mu", type=float, help="nudging gain")
        s.add_argument("--c", type=float, help="criterion constant")
        s.add_argument("--t0", type=float, help="start of the monitored window")
        if name == "interpolate":
            s.add_argument("--input", type=Path, help="nodal observation file or directory")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    kw = dict(snapshot_every=args.snapshot_every, h=args.h, N=args.N, mu=args.mu, c=args.c, t0=args.t0)
    if args.N is not None:
        kw["observer_kind"] = "modal"
    if args.out is not None:
        kw["out"] = str(args.out)
    return cfg.with_overrides(**kw)


def _snap_dir(cfg) -> Path:
    return Path(cfg.out) / "snapshots"


def _obs_files(cfg, kind=None) -> list[Path]:
    kind = kind or cfg.observer_kind
    files = sorted((Path(cfg.out) / "observations").glob(f"{kind}_*.json"))
    if not files:
        raise ObsRegError(f"no {kind} observations in {Path(cfg.out) / 'observations'}; run `obsreg observe` first")
    return files


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> None:
    solver = cfg.solver_config()
    traj = run(cfg.initial_field(), solver, cfg.snapshot_every)
    d = save_trajectory(traj, _snap_dir(cfg))
    if solver.forcing is not None:
        save_snapshot(solver.forcing, Path(cfg.out) / "forcing.obsreg", kind="forcing")
    log.info("wrote %d snapshots to %s", len(traj), d)


def cmd_observe(cfg: ExperimentConfig) -> None:
    traj = load_trajectory(_snap_dir(cfg), cfg.solver_config())
    out = Path(cfg.out) / "observations"
    for old in out.glob(f"{cfg.observer_kind}_*.json"):
        old.unlink()
    for i, (t, u) in enumerate(traj):
        if cfg.observer_kind == "modal":
            data = observe_modal(u, cfg.N)
        else:
            data = observe_nodal(u, cfg.n_cubes)
        save_observation(data, t, out / f"{cfg.observer_kind}_{i:05d}.json")
    log.info("wrote %d %s observations to %s", len(traj), cfg.observer_kind, out)


def cmd_interpolate(cfg: ExperimentConfig, source: Path | None) -> None:
    if source is None:
        files = _obs_files(cfg, "nodal")
    elif source.is_dir():
        files = sorted(source.glob("*.json"))
    else:
        files = [source]
    entries, rows = [], []
    for p in files:
        t, data = load_observation(p)
        if not isinstance(data, NodalData):
            raise ObsRegError(f"{p}: interpolate needs nodal observations")
        nrm = h1_data_norms(data)
        jump = face_jump(data)
        entries.append(
            {
                "file": p.name,
                "t": t,
                "h": data.h,
                "n_cubes": data.n_cubes,
                "exact": nrm.exact,
                "exact2": nrm.exact**2,
                "data": nrm.data,
                "data2": nrm.data**2,
                "lower": nrm.lower,
                "upper": nrm.upper,
                "face_jump": jump,
            }
        )
        rows.append((t, nrm.exact, nrm.data, nrm.lower, nrm.upper, jump))
    write_json(Path(cfg.out) / "interpolate.json", {"entries": entries})
    write_csv(Path(cfg.out) / "interpolate.csv", ("t", "exact", "data", "lower", "upper", "face_jump"), rows)


def _series(cfg: ExperimentConfig) -> ObservationSeries:
    loaded = [load_observation(p) for p in _obs_files(cfg)]
    loaded.sort(key=lambda e: e[0])
    window = [(t, d) for t, d in loaded if t >= cfg.t0 - 1e-12]
    if not window:
        raise ObsRegError(f"no observations at or after t0={cfg.t0}")
    return ObservationSeries(cfg.observer_kind, cfg.t0, window[-1][0], tuple(window))


def _reference_at(cfg, t0):
    d = _snap_dir(cfg)
    if not (d / "index.csv").exists():
        return None
    traj = load_trajectory(d, cfg.solver_config())
    sub = traj.window(t0)
    return sub.fields[0] if len(sub) else None


def _forcing(cfg):
    p = Path(cfg.out) / "forcing.obsreg"
    if p.exists():
        return load_snapshot(p).field
    return cfg.forcing_field()


def cmd_monitor(cfg: ExperimentConfig) -> None:
    series = _series(cfg)
    torus = cfg.torus
    report = check_series(
        series,
        _forcing(cfg),
        cfg.nu,
        torus.lambda1,
        cfg.c,
        cfg.variant,
        reference=_reference_at(cfg, series.entries[0][0]),
        h=cfg.h,
    )
    d = report.to_dict()
    d.update(kind=series.kind, window=[series.t0, series.T], n_observations=len(series.entries), h_source="cli" if cfg.h else "observer")
    write_json(Path(cfg.out) / "monitor.json", d)
    write_csv(Path(cfg.out) / "monitor_mh.csv", ("t", "mh2"), mh_series(series))
    log.info("criterion %s", "satisfied" if report.satisfied else "not satisfied")


def cmd_nudge(cfg: ExperimentConfig) -> None:
    traj = load_trajectory(_snap_dir(cfg), cfg.solver_config())
    mu = cfg.mu
    if mu is None and cfg.h is not None:
        mu = default_gain(cfg.nu, cfg.torus.lambda1, cfg.h, cfg.c)
    ncfg = NudgeConfig(cfg.observer_kind, cfg.resolution, mu, cfg.c, cfg.project)
    _, sync = run_nudged(traj, ncfg)
    write_csv(Path(cfg.out) / "sync.csv", ("t", "l2", "h1"), sync.rows)
    h1 = sync.h1
    write_json(
        Path(cfg.out) / "nudge.json",
        {
            "mu": sync.mu,
            "kind": ncfg.kind,
            "resolution": ncfg.resolution,
            "final_h1": float(h1[-1]),
            "max_h1": float(h1.max()),
            "final_over_max": float(h1[-1] / h1.max()) if h1.max() > 0 else 0.0,
        },
    )


def cmd_report(cfg: ExperimentConfig) -> None:
    out = Path(cfg.out)
    rep = out / "report"
    written = []
    if (_snap_dir(cfg) / "index.csv").exists():
        traj = load_trajectory(_snap_dir(cfg), cfg.solver_config())
        rows = [(t, *norms(u), u.divergence_defect()) for t, u in traj]
        written.append(write_csv(rep / "trajectory_norms.csv", ("t", "l2", "h1", "divergence_defect"), rows))
    for name in ("monitor_mh.csv", "sync.csv", "interpolate.csv"):
        src = out / name
        if src.exists():
            dst = rep / name
            dst.write_bytes(src.read_bytes())
            written.append(dst)
    if not written:
        raise ObsRegError(f"nothing to report in {out}; run simulate first")
    write_json(rep / "index.json", {"files": [p.name for p in written]})


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        cfg = _config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "observe":
            cmd_observe(cfg)
        elif args.command == "interpolate":
            cmd_interpolate(cfg, args.input)
        elif args.command == "monitor":
            cmd_monitor(cfg)
        elif args.command == "nudge":
            cmd_nudge(cfg)
        else:
            cmd_report(cfg)
    except (ObsRegError, ValueError) as e:
        print(f"obsreg {args.command}: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
