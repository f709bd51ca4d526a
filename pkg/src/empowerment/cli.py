"""Command-line entry point: ``empowerment {landscape,rollout,convergence,lyapunov}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .capacity import controlled_lyapunov
from .config import RunConfig, parse_config
from .controller import first_crossing_time, longest_hold, run_rollout
from .exceptions import EmpowermentError, ParseError
from .landscape import convergence_study, evaluate_landscape
from .model import wrap_angle


def _rollout(cfg: RunConfig, model):
    return run_rollout(model, cfg.start_state(), cfg.duration_s, cfg.policy(),
                       noise=cfg.noise(), seed=cfg.seed)


def cmd_landscape(cfg: RunConfig, out: Path, svg=False) -> list:
    model = cfg.build_model()
    grid = cfg.grid(model)
    land = evaluate_landscape(model, grid, cfg.variant, cfg.horizon(), cfg.channel(),
                              workers=cfg.workers)
    written = [out / "landscape.csv", out / "landscape.json"]
    io.write_landscape_csv(written[0], land, model.d_x)
    io.write_json(written[1], {
        "system": cfg.system, "variant": cfg.variant,
        "axis_indices": grid.axis_indices, "axis_ranges": grid.axis_ranges,
        "resolution": grid.resolution, "fixed_values": grid.fixed_values,
        "values_nats": land.values, "failed": land.failed,
        "argmax_state": land.argmax_state(model.d_x)})
    if svg:
        traj = None
        if cfg.trajectory:
            ro = _rollout(cfg, model)
            traj = ro.all_states[:, list(grid.axis_indices)].copy()
            for col, idx in enumerate(grid.axis_indices):
                if idx in model.angle_indices:
                    traj[:, col] = wrap_angle(traj[:, col])
        path = out / "landscape.svg"
        path.write_text(io.heatmap_svg(land, traj), encoding="utf-8")
        written.append(path)
    return written


def cmd_rollout(cfg: RunConfig, out: Path, svg=False) -> list:
    model = cfg.build_model()
    ro = _rollout(cfg, model)
    hold_start, hold_len = longest_hold(model, ro)
    written = [out / "rollout.csv", out / "rollout.json"]
    io.write_rollout_csv(written[0], model, ro)
    io.write_json(written[1], {
        "system": cfg.system, "variant": cfg.variant, "seed": cfg.seed,
        "failed": ro.failed, "message": ro.message,
        "final_time_s": ro.final_time, "final_state": ro.final_state,
        "first_crossing_s": first_crossing_time(model, ro),
        "longest_hold_start_s": hold_start, "longest_hold_s": hold_len})
    if svg:
        series = {name: ro.states[:, i] for i, name in enumerate(model.state_names)}
        series.update({name: ro.actions[:, i] for i, name in enumerate(model.action_names)})
        series["empowerment_nats"] = ro.empowerment_trace
        path = out / "rollout.svg"
        path.write_text(io.timeseries_svg(ro.times, series), encoding="utf-8")
        written.append(path)
    return written


def cmd_convergence(cfg: RunConfig, out: Path, svg=False) -> list:
    model = cfg.build_model()
    x0 = (np.asarray(cfg.convergence_state, dtype=float)
          if cfg.convergence_state is not None else np.zeros(model.d_x))
    rows = convergence_study(model, x0, cfg.variant, cfg.convergence_t_e,
                             cfg.convergence_dt_list, cfg.channel())
    written = [out / "convergence.csv", out / "convergence.json"]
    io.write_convergence_csv(written[0], rows)
    io.write_json(written[1], {
        "system": cfg.system, "variant": cfg.variant, "state": x0,
        "t_e_seconds": cfg.convergence_t_e,
        "rows": [{"dt_s": r.dt, "value_nats": r.value_nats, "delta_prev": r.delta_prev}
                 for r in rows]})
    return written


def cmd_lyapunov(cfg: RunConfig, out: Path, svg=False) -> list:
    model = cfg.build_model()
    x0 = (np.asarray(cfg.lyapunov_state, dtype=float)
          if cfg.lyapunov_state is not None else np.zeros(model.d_x))
    result, spec = controlled_lyapunov(model, x0, cfg.lyapunov_horizon_steps,
                                       cfg.lyapunov_dt, cfg.channel())
    path = out / "lyapunov.json"
    io.write_json(path, {
        "system": cfg.system, "state": x0, "horizon_steps": cfg.lyapunov_horizon_steps,
        "dt_s": cfg.lyapunov_dt, "horizon_seconds": spec.horizon_seconds,
        "exponents_per_s": spec.exponents, "reliable": spec.reliable,
        "degenerate": spec.degenerate, "value_nats": result.value_nats})
    return [path]


COMMANDS = {"landscape": cmd_landscape, "rollout": cmd_rollout,
            "convergence": cmd_convergence, "lyapunov": cmd_lyapunov}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="empowerment",
                                     description="Linear-response empowerment tools.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="INI configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    parser.add_argument("--workers", type=int, help="threads for landscape evaluation")
    parser.add_argument("--svg", action="store_true", help="also write an SVG plot")
    return parser


def _error_record(exc) -> dict:
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        record.update(key=exc.key, line=exc.line, reason=exc.reason)
    return record


def main(argv=None, env=None) -> int:
    args = build_parser().parse_args(argv)
    env = os.environ if env is None else env
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, env)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ParseError("seed must be an unsigned 64-bit integer", key="seed")
            cfg.seed = args.seed
        if args.workers is not None:
            if args.workers < 1:
                raise ParseError("workers must be >= 1", key="workers")
            cfg.workers = args.workers
        args.out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command](cfg, args.out, svg=args.svg)
    except (EmpowermentError, OSError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(json.dumps(_error_record(exc)) + "\n")
        return 2 if isinstance(exc, ParseError) else 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
