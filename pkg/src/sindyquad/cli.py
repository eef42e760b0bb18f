"""Command-line front end.

``sindyquad {simulate|fit|sweep|eval} [--config PATH] [flags]``

Flags override the config file; ``SINDYQUAD_SEED`` overrides the seed.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict

import numpy as np

from .config import RunConfig, _grid_from
from .control import reference
from .dynamics import STATE_NAMES
from .errors import ConfigError, DataError, SindyQuadError
from .evaluate import abs_error_trace, compare_to_truth, lambda_sweep, rmse
from .integrate import add_noise, read_csv, rollout, write_csv
from .sindy.differentiation import finite_difference
from .sindy.model import SparseModel, fit, simulate_model, truth_model
from .svg import line_chart


def _out(cfg, args, name):
    d = args.output_dir or cfg.output_dir
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _sidecar(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


def _tracking(ss, case):
    ref = np.array([[(r := reference(case, t)).y, r.z] for t in ss.t])
    err = np.linalg.norm(ss.X[:, :2] - ref, axis=1)
    return float(err.max()), float(err[-1])


def _case_dict(case):
    d = asdict(case)
    d["waypoints"] = [list(w) for w in case.waypoints]
    return d


def _emit_warnings(log):
    for w in log:
        print(f"warning: {w.category.__name__}: {w.message}", file=sys.stderr)


def cmd_simulate(cfg, args):
    overrides = {}
    if args.laps is not None:
        overrides["laps"] = args.laps
    case = cfg.case(args.case, **overrides)
    dt = args.dt or cfg.dt
    steps = args.steps or cfg.steps or case.steps(dt)
    p, gains = cfg.quad_params(), cfg.pd_gains()
    ss = rollout(case, gains, p, dt, steps, clamp_thrust=cfg.clamp_thrust)
    track_max, track_final = _tracking(ss, case)
    sigma = np.asarray(args.noise_sigma if args.noise_sigma is not None else cfg.noise_sigma, dtype=float)
    seed = args.seed if args.seed is not None else cfg.seed
    if np.any(sigma > 0):
        ss = add_noise(ss, sigma, seed)
    name = args.name or case.tag
    csv_path = _out(cfg, args, f"snapshots_{name}.csv")
    write_csv(ss, csv_path)
    summary = {
        "case": _case_dict(case),
        "gains": asdict(gains),
        "quad": asdict(p),
        "dt": dt,
        "steps": steps,
        "noise_sigma": sigma.tolist(),
        "seed": seed,
        "final_state": dict(zip(STATE_NAMES, ss.X[-1].tolist())),
        "max_tracking_error": track_max,
        "final_tracking_error": track_final,
    }
    _write_json(_sidecar(csv_path), summary)
    if args.svg:
        line_chart(_out(cfg, args, f"snapshots_{name}.svg"), ss.t,
                   {"y": ss.X[:, 0], "z": ss.X[:, 1], "phi": ss.X[:, 2]},
                   title=f"case {case.tag} response", ylabel="state")
    print(f"wrote {csv_path} ({ss.m} rows); final y={ss.X[-1, 0]:.6f} z={ss.X[-1, 1]:.6f}; "
          f"max tracking error {track_max:.4g} m")
    return 0


def cmd_fit(cfg, args):
    ss = read_csv(args.snapshots)
    opt = cfg.optimizer_config(**({"lam": args.lam} if args.lam is not None else {}),
                               **({"name": args.optimizer} if args.optimizer else {}))
    align = args.align or cfg.align
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        model = fit(finite_difference(ss, align=align), cfg.library_spec(), opt)
    _emit_warnings(log)
    name = args.name or "model"
    model.save(_out(cfg, args, f"{name}.json"))
    text = model.render()
    with open(_out(cfg, args, f"{name}.txt"), "w") as fh:
        fh.write(text)
    report = compare_to_truth(model, truth_model(cfg.quad_params(), cfg.library_spec()))
    sys.stdout.write(text)
    print(f"support match vs planar model: {str(report.support_match).lower()}")
    return 0


def cmd_sweep(cfg, args):
    train = read_csv(args.train)
    test = read_csv(args.test)
    test_case = None
    side = _sidecar(args.test)
    if os.path.exists(side):
        with open(side) as fh:
            meta = json.load(fh)
        try:
            c = dict(meta["case"])
            test_case = cfg.case(c.pop("tag"), **c)
        except (KeyError, TypeError) as exc:
            raise DataError(f"{side}: cannot read case description ({exc})") from exc
    else:
        print(f"note: {side} not found; scoring by open-loop replay of recorded controls", file=sys.stderr)
    grid = _grid_from(_parse_grid(args.grid), "--grid") if args.grid else cfg.grid
    jobs = args.jobs or cfg.jobs
    align = args.align or cfg.align
    res = lambda_sweep(finite_difference(train, align=align), test, spec=cfg.library_spec(),
                       optimizer=cfg.optimizer_config(), grid=grid, test_case=test_case,
                       gains=cfg.pd_gains(), p=cfg.quad_params(), jobs=jobs)
    res.write_csv(_out(cfg, args, "sweep.csv"))
    _write_json(_out(cfg, args, "sweep_summary.json"), res.summary())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = fit(finite_difference(train, align=align), cfg.library_spec(),
                    cfg.optimizer_config(lam=res.selected))
    model.save(_out(cfg, args, "model_selected.json"))
    for rec in res.records:
        flag = "*" if rec.support_match else " "
        state = rec.error or f"score {rec.score:.4g}"
        print(f"{flag} lambda={rec.lam:<5g} support={rec.support_size:<3d} {state}")
    pl = res.plateau()
    print(f"selected lambda: {res.selected:g}")
    print("correct-support plateau: " + (f"[{pl[0]:g}, {pl[1]:g}] width {pl[1] - pl[0]:.2f}" if pl else "none"))
    return 0


def cmd_eval(cfg, args):
    model = SparseModel.load(args.model)
    case = cfg.case(args.case)
    dt = cfg.dt
    steps = cfg.steps or case.steps(dt)
    p, gains = cfg.quad_params(), cfg.pd_gains()
    truth = rollout(case, gains, p, dt, steps)
    pred = simulate_model(model, case, gains, p, dt, steps)
    err = abs_error_trace(truth.X, pred.X)
    r = rmse(truth.X, pred.X)
    tag = case.tag
    trace_path = _out(cfg, args, f"abs_error_{tag}.csv")
    with open(trace_path, "w") as fh:
        fh.write(",".join(("t",) + STATE_NAMES) + "\n")
        for t, row in zip(truth.t, err):
            fh.write(",".join(f"{v:.17g}" for v in (t, *row)) + "\n")
    with open(_out(cfg, args, f"rmse_{tag}.csv"), "w") as fh:
        fh.write("state,rmse\n")
        for s, v in zip(STATE_NAMES, r):
            fh.write(f"{s},{v:.17g}\n")
    report = compare_to_truth(model, truth_model(p, model.spec))
    with open(_out(cfg, args, f"comparison_{tag}.txt"), "w") as fh:
        fh.write(report.to_text())
    with open(_out(cfg, args, f"comparison_{tag}.json"), "w") as fh:
        fh.write(report.to_json())
    if args.svg:
        line_chart(_out(cfg, args, f"abs_error_{tag}.svg"), truth.t,
                   {s: err[:, j] for j, s in enumerate(STATE_NAMES)},
                   title=f"absolute error, case {tag}", ylabel="|error|")
    print(f"{'state':<8} {'rmse':>12} {'max abs':>12}")
    for j, s in enumerate(STATE_NAMES):
        print(f"{s:<8} {r[j]:12.4e} {err[:, j].max():12.4e}")
    print(f"support match: {str(report.support_match).lower()}; max abs error {err.max():.4e}")
    return 0


def _parse_grid(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("--grid expects start:step:stop or a comma list")
        start, step, stop = (float(v) for v in parts)
        return {"start": start, "stop": stop, "step": step}
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from exc


def build_parser():
    ap = argparse.ArgumentParser(prog="sindyquad", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output-dir", help="directory for artifacts (default: paths.output_dir or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="closed-loop simulation to snapshot CSV")
    s.add_argument("--case", choices=["A", "B", "C"], help="trajectory case (default: config or C)")
    s.add_argument("--dt", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--laps", type=int, help="diamond laps within the horizon")
    s.add_argument("--noise-sigma", type=float, help="state noise standard deviation")
    s.add_argument("--seed", type=int)
    s.add_argument("--name", help="suffix of the output file name (default: case tag)")
    s.add_argument("--svg", action="store_true", help="also write an SVG chart")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", parents=[common], help="identify a sparse model from a snapshot CSV")
    f.add_argument("snapshots")
    f.add_argument("--lam", type=float)
    f.add_argument("--optimizer", choices=["sr3", "stlsq"])
    f.add_argument("--align", choices=["forward", "midpoint"])
    f.add_argument("--name", help="output stem (default: model)")
    f.set_defaults(func=cmd_fit)

    w = sub.add_parser("sweep", parents=[common], help="lambda sweep with held-out scoring")
    w.add_argument("train")
    w.add_argument("test")
    w.add_argument("--grid", help="start:step:stop or comma-separated values")
    w.add_argument("--jobs", type=int)
    w.add_argument("--align", choices=["forward", "midpoint"])
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("eval", parents=[common], help="compare a model with the true plant on a case")
    e.add_argument("model")
    e.add_argument("--case", choices=["A", "B", "C"])
    e.add_argument("--svg", action="store_true")
    e.set_defaults(func=cmd_eval)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        return args.func(cfg, args)
    except SindyQuadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
