"""``ikpaver`` command line: solve IK targets, or evaluate forward kinematics."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .interval import BisectionRule
from .paving import CurveSet, finalize_curves
from .robot import BUNDLED_MODELS, ModelError, build_constraint_system, bundled_model, load_model, load_target
from .solver import SearchState, SolverConfig, Strategy, solve_heuristic, solve_vanilla

log = logging.getLogger("ikpaver")


def resolve_model(arg: str):
    """A model file, or the name of a bundled model (``ur5`` or ``ur5.json``)."""
    p = Path(arg)
    if p.exists():
        return load_model(p)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in BUNDLED_MODELS and p.parent == Path("."):
        return bundled_model(stem)
    raise ModelError(f"{arg}: no such model file (bundled models: {', '.join(BUNDLED_MODELS)})")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _budget(text: str) -> float | None:
    if text.lower() in ("inf", "none", "unbounded"):
        return None
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("time budget must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ikpaver", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="enclose every IK solution of a pose target")
    s.add_argument("--model", required=True, help="robot model JSON (or a bundled model name)")
    s.add_argument("--target", required=True, nargs="+", help="pose target JSON file(s)")
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--mode", choices=("heuristic", "vanilla"), default="heuristic")
    s.add_argument("--strategy", choices=("dfs", "mc"), default="dfs")
    s.add_argument("--bisection", choices=("rr", "lf"), default="rr")
    s.add_argument("--time-budget", type=_budget, default=None, help="seconds (default: unbounded)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--max-rounds", type=int, default=10, help="contractor sweeps per box")
    s.add_argument("--min-reduction", type=float, default=0.01,
                   help="contractor stops when no width shrinks by this fraction")
    s.add_argument("--early-termination", action="store_true",
                   help="with --strategy mc, stop once continuation and local IK run dry")
    s.add_argument("--jobs", type=int, default=1, help="targets solved concurrently")

    f = sub.add_parser("fk", help="forward kinematics of a joint vector")
    f.add_argument("--model", required=True)
    f.add_argument("--theta", required=True, type=_float_list, help="comma-separated joint angles (rad)")
    return ap


def _config(args) -> SolverConfig:
    return SolverConfig(
        epsilon=args.epsilon,
        time_budget=args.time_budget,
        bisection_rule=BisectionRule(args.bisection),
        exploration_strategy=Strategy(args.strategy),
        max_rounds=args.max_rounds,
        min_relative_reduction=args.min_reduction,
        rng_seed=args.seed,
        early_termination=args.early_termination,
    )


def _pairs(lo, hi) -> list:
    return [[float(a), float(b)] for a, b in zip(lo, hi)]


def write_outputs(out: Path, curves: CurveSet, report: dict):
    out.mkdir(parents=True, exist_ok=True)
    sols = curves.solutions
    labels = sols.clusters() if len(sols) else np.zeros(0, dtype=int)
    cluster_of = {id(b): int(c) for b, c in zip(sols, labels)}
    ordered = sorted(sols, key=lambda b: b.key())
    records = [{
        "rotation_box": _pairs(b.box.lo, b.box.hi),
        "joint_box": b.joints.to_list(),
        "cluster_id": cluster_of[id(b)],
        "curve_id": b.curve_id,
    } for b in ordered]
    (out / "solutions.json").write_text(json.dumps(records, indent=1) + "\n")

    n = curves.model.n
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve_id", "order_index"] + [f"theta{i + 1}" for i in range(n)])
        for c in curves.ordered():
            for k, sb in enumerate(curves.curve_boxes(c)):
                w.writerow([c.id, k] + [repr(float(t)) for t in sb.joints.mid])
        for k in sorted(curves.pool, key=lambda j: curves.boxes[j].key()):
            w.writerow(["", ""] + [repr(float(t)) for t in curves.boxes[k].joints.mid])
    (out / "report.json").write_text(json.dumps(report, indent=1) + "\n")


def run_solve(model, target, cfg: SolverConfig, mode: str) -> tuple[CurveSet, dict]:
    system = build_constraint_system(model, target, max_rounds=cfg.max_rounds,
                                     min_relative_reduction=cfg.min_relative_reduction)
    if mode == "vanilla":
        state = SearchState(system, cfg, model)
        sols = solve_vanilla(system, model, cfg, state=state)
        report = sols.report
        t0 = time.perf_counter()
        curves = CurveSet(cfg.epsilon, model)
        for sb in sols:
            curves.insert_box(sb)
        finalize_curves(curves, model, state)
        curves.solutions = sols
        report.phase_times["paving"] = time.perf_counter() - t0
        report.curves = len(curves.curves)
    else:
        curves = solve_heuristic(system, model, target, cfg)
        report = curves.report
    rep = report.to_dict()
    rep["target"] = target.to_dict()
    rep["model"] = model.name
    rep["pooled_boxes"] = len(curves.pool)
    rep["curve_lengths"] = [len(c) for c in curves.ordered()]
    rep["curve_ends"] = [list(c.ends) for c in curves.ordered()]
    return curves, rep


def _solve_one(model_arg: str, target_path: str, cfg: SolverConfig, mode: str, out: str) -> str:
    model = resolve_model(model_arg)
    target = load_target(target_path)
    curves, rep = run_solve(model, target, cfg, mode)
    write_outputs(Path(out), curves, rep)
    return (f"{target_path}: {rep['solutions']} boxes, {rep['clusters']} clusters, "
            f"{rep['curves']} curves ({rep['termination']}, {rep['wall_time']:.2f} s)")


def cmd_solve(args) -> int:
    cfg = _config(args)
    # validate every input before solving anything
    resolve_model(args.model)
    for t in args.target:
        load_target(t)
    out = Path(args.out)
    if len(args.target) == 1:
        jobs = [(args.target[0], out)]
    else:
        jobs = [(t, out / Path(t).stem) for t in args.target]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_solve_one, args.model, t, cfg, args.mode, str(o)) for t, o in jobs]
            for fut in futures:
                print(fut.result())
    else:
        for t, o in jobs:
            print(_solve_one(args.model, t, cfg, args.mode, str(o)))
    return 0


def cmd_fk(args) -> int:
    model = resolve_model(args.model)
    theta = np.asarray(args.theta, dtype=float)
    if theta.shape != (model.n,):
        raise ModelError(f"--theta has {theta.size} values, model {model.name!r} has {model.n} joints")
    T = model.forward_kinematics(theta)
    # usable as-is as a full-pose target file
    pose = {
        "mode": "full_pose",
        "position": [float(v) for v in T[:3, 3]],
        "rotation": [float(v) for v in T[:3, :3].reshape(-1)],
        "z_axis": [float(v) for v in T[:3, 2]],
    }
    print(json.dumps(pose))
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            if not (args.epsilon > 0 and math.isfinite(args.epsilon)):
                raise ModelError("--epsilon must be a positive number")
            return cmd_solve(args)
        return cmd_fk(args)
    except ModelError as exc:
        print(f"ikpaver: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
