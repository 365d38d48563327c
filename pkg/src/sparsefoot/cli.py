"""Command-line entry point.

Every subcommand derives all randomness from ``--seed``.  The worker count
for ``eval`` comes from ``SPARSEFOOT_WORKERS`` and never changes output
bytes.  Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import gridio
from .config import Config, load_config
from .core import BasePose, Command
from .errors import SparseFootError, TerrainMismatchError, ValidationError
from .losses import run_gradient_checks
from .metrics import (DEFAULT_MEV_THRESHOLD, edge_violation_counts, foothold_kde,
                      success_rate, traversing_rate)
from .perception import (Intrinsics, camera_pose_from_base, edge_distance_field,
                         raster_local_heightmap, render_depth)
from .rewards import TERMS, compute_rewards
from .schedulers import ADVANCED, ScheduleState, assign_terrains, sample_ground_truth_substitution
from .terrain import TerrainSpec, generate, sparsity
from .walker import EpisodeLog, InvalidStartError, Outcome, run_episode, synthesize_state

WORKERS_ENV = "SPARSEFOOT_WORKERS"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return repr(float(v))


def _difficulties(text: str) -> list:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out or any(not 1 <= d <= 10 for d in out):
        raise ValidationError(f"difficulty list {text!r} must name levels in 1..10")
    return out


def _terrain_args(p, family_flag="--family"):
    p.add_argument(family_flag, dest="family", default="stepping-stones")
    p.add_argument("--difficulty", type=int, default=1)
    p.add_argument("--randomness", default="low")


def _spec(args) -> TerrainSpec:
    return TerrainSpec(args.family, args.difficulty, args.randomness, args.seed)


def _pose_arg(args, hf, cfg: Config) -> BasePose:
    x, y, yaw = args.pose if args.pose else (cfg.walker.start_x, hf.ny * hf.resolution / 2.0, 0.0)
    z = hf.height_at(x, y) + cfg.robot.nominal_base_height if args.z is None else args.z
    return BasePose(x, y, z, yaw)


def cmd_gen(args, cfg: Config) -> int:
    hf = generate(_spec(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gridio.write_heightfield(out.with_suffix(".sfg"), hf)
    _write_text(out.with_suffix(".json"), gridio.dump_json(
        gridio.terrain_sidecar(hf, {"sparsity": sparsity(hf)})))
    if args.csv:
        gridio.write_csv_grid(out.with_name(out.name + "_heights.csv"), hf.heights)
        gridio.write_csv_grid(out.with_name(out.name + "_steppable.csv"), hf.steppable, fmt="%d")
    print(f"{hf.meta['family']} difficulty {hf.meta['difficulty']}: sparsity {sparsity(hf):.4f}")
    return 0


def cmd_raster(args, cfg: Config) -> int:
    hf = generate(_spec(args))
    pose = _pose_arg(args, hf, cfg)
    hm = raster_local_heightmap(hf, pose)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gridio.write_grid(out.with_suffix(".sfg"), hm.heights, hf.resolution, (-0.5, -0.4))
    gridio.write_csv_grid(out.with_suffix(".csv"), hm.heights)
    if args.edge_field:
        fe = edge_distance_field(hf)
        gridio.write_grid(out.with_name(out.name + "_edges.sfg"), fe.distances,
                          fe.resolution, fe.origin_xy)
    return 0


def cmd_render(args, cfg: Config) -> int:
    hf = generate(_spec(args))
    pose = _pose_arg(args, hf, cfg)
    cam_pose = camera_pose_from_base(pose, cfg.camera)
    intr = Intrinsics.from_config(cfg.camera)
    sigma = cfg.camera.noise_sigma if args.noise is None else args.noise
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(args.seed).spawn(2)[1]))
    img = render_depth(hf, cam_pose, intr, noise_sigma=sigma, rng=rng)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gridio.write_pgm16(out.with_suffix(".pgm"), img.depth)
    gridio.write_grid(out.with_suffix(".sfg"), img.depth, 1.0, (0.0, 0.0))
    return 0


def _replay_target(args):
    """The log selected by ``--log``/``--run`` and its regenerated terrain."""
    logs = _load_logs(args.log)
    if args.run is None:
        log = logs[0]
    else:
        picked = [lg for lg in logs if lg.run == args.run]
        if not picked:
            raise ValidationError(f"{args.log}: no episode with run {args.run}")
        log = picked[0]
    hf = generate(TerrainSpec.from_dict(log.terrain))
    if hf.fingerprint() != log.terrain_fingerprint:
        raise TerrainMismatchError(f"regenerated terrain {hf.fingerprint()} does not match the log")
    return log, hf


def cmd_reward_eval(args, cfg: Config) -> int:
    if args.log is not None:
        log, hf = _replay_target(args)
        fe = edge_distance_field(hf)
    else:
        hf = generate(_spec(args))
        fe = edge_distance_field(hf)
        log = run_episode(hf, Command(args.vx, 0.0, args.wyaw), args.max_time, args.seed,
                          goal=args.distance, field_e=fe, walker=cfg.walker, robot=cfg.robot)
    # the oracle has no joint-space actions; the history stays zero
    zero = np.zeros(12)
    rows = []
    for k, step in enumerate(log.steps):
        state = synthesize_state(log, k, cfg.robot)
        rb = compute_rewards(state, Command(*step.command), zero, zero, zero, fe, cfg.robot)
        rows.append([_fmt(step.time)] + [_fmt(rb.terms[t]) for t in TERMS] + [_fmt(rb.weighted_total)])
    _write_text(Path(args.out), _csv_text(["t", *TERMS, "weighted_total"], rows))
    print(f"{len(rows)} steps, outcome {log.outcome.value}")
    return 0


def cmd_schedule(args, cfg: Config) -> int:
    """Runs the schedules against a synthetic learner whose skill grows
    linearly over training; traversed fractions and returns are drawn from
    the seeded stream."""
    rng = np.random.Generator(np.random.PCG64(args.seed))
    state = ScheduleState(cfg.schedule)
    rows = []
    for it in range(args.iterations):
        skill = min(1.0, it / max(cfg.schedule.t_end, 1))
        assigned = assign_terrains(state, rng, args.envs)
        n_adv = 0
        for env, (fam, rnd) in enumerate(assigned):
            level = state.level(env)
            frac = float(np.clip(0.5 + skill - 0.08 * level + 0.2 * rng.standard_normal(), 0.0, 1.0))
            state.report_episode(env, frac)
            state.record_return(10.0 * frac + rng.standard_normal())
            n_adv += (fam, rnd) in ADVANCED
        p_smpl = state.p_smpl
        subst = sample_ground_truth_substitution(p_smpl, rng)
        mean_level = sum(state.level(e) for e in range(args.envs)) / args.envs
        r = np.asarray(state.returns)
        cv = float(np.std(r) / abs(np.mean(r))) if len(r) >= 2 and np.mean(r) != 0 else float("nan")
        rows.append([it, _fmt(cv), _fmt(p_smpl), _fmt(state.p_advance), _fmt(mean_level),
                     int(subst), n_adv])
        state.step()
    _write_text(Path(args.out), _csv_text(
        ["T", "cv", "p_smpl", "p_advance", "mean_level", "ground_truth", "advanced_envs"], rows))
    return 0


def _eval_task(task):
    spec_d, runs, distance, vx, max_time, cfg_d = task
    from .config import config_from_dict
    cfg = config_from_dict(cfg_d)
    spec = TerrainSpec.from_dict(spec_d)
    hf = generate(spec)
    fe = edge_distance_field(hf)
    out = []
    for run, seed in runs:
        try:
            log = run_episode(hf, Command(vx, 0.0, 0.0), max_time, seed, goal=distance,
                              field_e=fe, walker=cfg.walker, robot=cfg.robot, run=run)
        except InvalidStartError:
            # no safe stance near the start counts as an immediate fall
            log = EpisodeLog([], Outcome.FALL, 0.0, distance, cfg.walker.dt, seed,
                             hf.fingerprint(), dict(hf.meta), run)
        out.append((run, log.to_json(), _summary_row(log, spec)))
    return out, gridio.terrain_sidecar(hf, {"sparsity": sparsity(hf)})


def _summary_row(log: EpisodeLog, spec: TerrainSpec) -> list:
    contacts = log.contacts()
    min_e = min((c.edge_distance for c in contacts), default=float("nan"))
    duration = log.steps[-1].time if log.steps else 0.0
    return [log.run, spec.family.value, spec.randomness.value, spec.difficulty, spec.seed,
            log.seed, log.outcome.value, _fmt(log.distance_traversed), _fmt(log.total_distance),
            _fmt(duration), len(contacts), _fmt(min_e)]


SUMMARY_HEADER = ["run", "family", "randomness", "difficulty", "terrain_seed", "episode_seed",
                  "outcome", "distance_traversed", "total_distance", "duration", "contacts",
                  "min_edge_distance"]


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _config_dict(cfg: Config) -> dict:
    from dataclasses import asdict
    return asdict(cfg)


def evaluate(terrain, levels, randomness, runs: int, terrains: int, distance: float, vx: float,
             max_time: float, seed: int, cfg: Config = Config(), workers: int = 1) -> tuple:
    """Runs the evaluation protocol: per level, ``runs`` episodes spread
    round-robin over ``terrains`` seeded terrains.

    Returns:
        ``(episodes, sidecars)``: episodes as ``(run, json_line, summary_row)``
        sorted by run, sidecars keyed by terrain fingerprint.  The result
        does not depend on ``workers``.
    """
    if runs < 1 or terrains < 1:
        raise ValidationError("--runs and --terrains must be positive")
    cmd = Command(vx, 0.0, 0.0)
    if cmd.vx == 0.0:
        raise ValidationError("eval needs a forward command")
    tasks = []
    run = 0
    for level in levels:
        seeds = np.random.SeedSequence([seed, level]).generate_state(terrains + runs, dtype=np.uint32)
        t_seeds, e_seeds = seeds[:terrains], seeds[terrains:]
        per = defaultdict(list)
        for r in range(runs):
            per[r % terrains].append((run + r, int(e_seeds[r])))
        for k in range(terrains):
            spec = TerrainSpec(terrain, level, randomness, int(t_seeds[k]))
            tasks.append((spec.to_dict(), per[k], distance, cmd.vx, max_time, _config_dict(cfg)))
        run += runs

    if workers == 1:
        results = [_eval_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_task, tasks))
    episodes = sorted((item for res, _ in results for item in res), key=lambda e: e[0])
    sidecars = {side["fingerprint"]: side for _, side in results}
    return episodes, sidecars


def cmd_eval(args, cfg: Config) -> int:
    levels = _difficulties(args.difficulty)
    if args.vx <= 0.0:
        raise ValidationError("eval needs a forward command")
    max_time = args.max_time if args.max_time is not None else 2.0 * args.distance / args.vx + 1.0
    episodes, sidecars = evaluate(args.terrain, levels, args.randomness, args.runs, args.terrains,
                                  args.distance, args.vx, max_time, args.seed, cfg, _workers())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "episodes.jsonl", "".join(line + "\n" for _, line, _ in episodes))
    _write_text(out / "summary.csv", _csv_text(SUMMARY_HEADER, [row for _, _, row in episodes]))
    for fp in sorted(sidecars):
        _write_text(out / "terrains" / f"{fp}.json", gridio.dump_json(sidecars[fp]))
    n_ok = sum(1 for _, _, row in episodes if row[6] == Outcome.SUCCESS.value)
    print(f"{len(episodes)} episodes, {n_ok} successes")
    return 0


def _load_logs(path) -> list:
    logs = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                logs.append(EpisodeLog.from_json(line))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{n}: malformed episode log ({exc})") from exc
    if not logs:
        raise ValidationError(f"{path}: no episodes")
    return logs


def _load_sidecars(directory) -> dict:
    out = {}
    for p in sorted(Path(directory).glob("*.json")):
        side = json.loads(p.read_text(encoding="utf-8"))
        out[side["fingerprint"]] = side
    return out


def _stone_relative(hf, points) -> np.ndarray:
    """Foothold offsets from the centroid of the platform they landed on."""
    labels, n = ndimage.label(hf.steppable)
    cents = ndimage.center_of_mass(np.ones_like(labels), labels, range(1, n + 1))
    out = []
    for x, y, i, j in points:
        lab = labels[i, j]
        ci, cj = cents[lab - 1]
        cx, cy = hf.origin_xy[0] + (ci + 0.5) * hf.resolution, hf.origin_xy[1] + (cj + 0.5) * hf.resolution
        out.append((x - cx, y - cy))
    return np.array(out, dtype=np.float64)


def cmd_metrics(args, cfg: Config) -> int:
    logs = _load_logs(args.logs)
    terrain_dir = Path(args.terrains) if args.terrains else Path(args.logs).parent / "terrains"
    sidecars = _load_sidecars(terrain_dir)
    groups = defaultdict(list)
    for lg in logs:
        key = (lg.terrain.get("family", ""), lg.terrain.get("randomness", ""),
               int(lg.terrain.get("difficulty", 0)))
        groups[key].append(lg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for key in sorted(groups):
        glogs = groups[key]
        by_terrain = defaultdict(list)
        for lg in glogs:
            by_terrain[lg.terrain_fingerprint].append(lg)
        bad = total = 0
        points = []
        for fp in sorted(by_terrain):
            if fp not in sidecars:
                raise ValidationError(f"no terrain sidecar for fingerprint {fp}")
            hf = generate(TerrainSpec.from_dict(sidecars[fp]["meta"]))
            fe = edge_distance_field(hf)
            b, t = edge_violation_counts(by_terrain[fp], fe, args.threshold)
            bad += b
            total += t
            pts = [(c.position[0], c.position[1], c.cell[0], c.cell[1])
                   for lg in by_terrain[fp] for c in lg.contacts()]
            if pts:
                points.append(_stone_relative(hf, pts))
        mean, std = traversing_rate(glogs)
        mev = bad / total if total else float("nan")
        rows.append([*key, len(glogs), _fmt(success_rate(glogs, glogs[0].total_distance)),
                     _fmt(mean), _fmt(std), _fmt(mev), total])
        if points:
            rel = np.concatenate(points)
            xs = np.arange(-40, 41) * 0.005
            density, _, _, h = foothold_kde(rel, args.bandwidth, (xs, xs))
            name = f"kde_{key[0]}_{key[1]}_{key[2]:02d}.csv"
            body = [[_fmt(x), _fmt(y), _fmt(density[a, b])]
                    for a, x in enumerate(xs) for b, y in enumerate(xs)]
            _write_text(out / name, f"# bandwidth={h!r}\n" + _csv_text(["dx", "dy", "density"], body))
    _write_text(out / "metrics.csv", _csv_text(
        ["family", "randomness", "difficulty", "episodes", "success_rate", "traversing_mean",
         "traversing_std", "mev", "contacts"], rows))
    return 0


def cmd_losses_check(args, cfg: Config) -> int:
    rows = run_gradient_checks(args.seed, n=args.n)
    print(f"{'check':<6} {'max_rel_err':>12}  result")
    for name, worst, ok in rows:
        print(f"{name:<6} {worst:12.3e}  {'pass' if ok else 'FAIL'}")
    return 0 if all(ok for _, _, ok in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsefoot", description="Sparse-foothold terrain and evaluation harness.")
    parser.add_argument("--config", help="JSON file overriding module defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(fn=fn)
        return p

    p = add("gen", cmd_gen, "generate a terrain patch")
    _terrain_args(p)
    p.add_argument("--out", default="terrain")
    p.add_argument("--csv", action="store_true", help="also write CSV grids")

    for name, fn, help_ in (("raster", cmd_raster, "rasterize a local heightmap"),
                            ("render", cmd_render, "render a depth image")):
        p = add(name, fn, help_)
        _terrain_args(p)
        p.add_argument("--pose", type=float, nargs=3, metavar=("X", "Y", "YAW"))
        p.add_argument("--z", type=float, help="base height; default stands on the terrain")
        p.add_argument("--out", default=name)
        if name == "raster":
            p.add_argument("--edge-field", action="store_true")
        else:
            p.add_argument("--noise", type=float, help="multiplicative depth noise sigma")

    p = add("reward-eval", cmd_reward_eval, "per-step reward breakdown of an episode")
    _terrain_args(p)
    p.add_argument("--log", help="replay an episode from a JSON-lines log instead of walking")
    p.add_argument("--run", type=int, help="run index to pick from --log; default the first")
    p.add_argument("--vx", type=float, default=1.0)
    p.add_argument("--wyaw", type=float, default=0.0)
    p.add_argument("--distance", type=float, default=6.0)
    p.add_argument("--max-time", type=float, default=20.0)
    p.add_argument("--out", default="rewards.csv")

    p = add("schedule", cmd_schedule, "simulate the training schedules")
    p.add_argument("mode", nargs="?", choices=["sim"], default="sim")
    p.add_argument("--iterations", type=int, default=8000)
    p.add_argument("--envs", type=int, default=20)
    p.add_argument("--out", default="schedule.csv")

    p = add("eval", cmd_eval, "run oracle episodes over seeded terrains")
    p.add_argument("--terrain", default="stepping-stones")
    p.add_argument("--difficulty", default="1", help="level, list or range such as 1-10")
    p.add_argument("--randomness", default="low")
    p.add_argument("--runs", type=int, default=500, help="runs per difficulty level")
    p.add_argument("--terrains", type=int, default=10)
    p.add_argument("--distance", type=float, default=6.0)
    p.add_argument("--vx", type=float, default=1.0)
    p.add_argument("--max-time", type=float)
    p.add_argument("--out", default="eval")

    p = add("metrics", cmd_metrics, "metrics over episode logs")
    p.add_argument("--logs", required=True)
    p.add_argument("--terrains", help="sidecar directory; default <logs dir>/terrains")
    p.add_argument("--threshold", type=float, default=DEFAULT_MEV_THRESHOLD)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--out", default="metrics")

    p = add("losses-check", cmd_losses_check, "gradient checks for the loss formulas")
    p.add_argument("--n", type=int, default=100)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        return args.fn(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SparseFootError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
