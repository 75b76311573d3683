"""Run orchestration: subcommands, seeding, CSV export.

Subcommands:
  constellation  serving-satellite trajectory and handover trace
  train          DDPG training run (training log, per-step trace, checkpoint)
  eval           frozen-policy rollout from a checkpoint
  baseline       ZF / MRT / random precoder sweep
  check          numerical oracle identities (exit nonzero on any failure)

Every run writes a frozen copy of its resolved configuration next to its CSV
outputs; repeating a subcommand with the same frozen config and seed yields
byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import agent as agent_mod
from . import baselines as base_mod
from .config import RunConfig, dump_config, load_config
from .env import DelayedCsiEnv, project_action
from .errors import ConfigError
from .gradcheck import gradient_check
from .nn import Adam, build_actor, build_critic, load_networks, save_networks, \
    soft_update
from .orbits import GroundUser, handover_trace
from .rate import lower_bound_identity_check, sum_rate

CSV_VERSION = "leoprecode-csv-v1"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "-".join(str(v) for v in value)
    return str(value)


def _write_csv(path: str, kind: str, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {CSV_VERSION} {kind}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _prepare_outdir(args, cfg: RunConfig) -> str:
    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    return outdir


def _load(args) -> RunConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"run.seed={args.seed}")
    return load_config(args.config, overrides)


# -- subcommands -------------------------------------------------------------

def cmd_constellation(args) -> int:
    cfg = _load(args)
    if args.epsilon is not None:
        cfg.parser["handover"]["epsilon"] = repr(args.epsilon)
    if args.duration is not None:
        cfg.parser["handover"]["trace_duration_s"] = repr(args.duration)
    outdir = _prepare_outdir(args, cfg)
    spec = cfg.constellation()
    center = GroundUser(
        math.radians(float(cfg.parser["users"]["center_lat_deg"])),
        math.radians(float(cfg.parser["users"]["center_lon_deg"])))
    rows = []
    count = 0
    for t, sid, dist, elev, flag in handover_trace(
            spec, center,
            epsilon=float(cfg.parser["handover"]["epsilon"]),
            duration=float(cfg.parser["handover"]["trace_duration_s"]),
            step=float(cfg.parser["handover"]["trace_step_s"]),
            min_elevation=math.radians(
                float(cfg.parser["handover"]["min_elevation_deg"])),
            start=float(cfg.parser["env"]["start_time_s"])):
        rows.append((t, sid, dist, elev, flag))
        count += flag
    _write_csv(os.path.join(outdir, "constellation.csv"), "constellation",
               ["t", "serving_id", "distance_m", "elevation_rad",
                "handover_flag"], rows)
    print(f"constellation trace: {len(rows)} rows, {count} handovers "
          f"-> {outdir}/constellation.csv")
    return 0


def _episode_rows(log: agent_mod.TrainingLog):
    for e in log.episodes:
        yield (e.episode, e.mean_reward, e.mean_sum_rate, e.actor_loss_proxy,
               e.critic_loss, e.noise_var, e.handovers)


def _step_rows(log: agent_mod.TrainingLog):
    for s in log.steps:
        yield (s.episode, s.step, s.t_seconds, s.r_con, s.r_quant, s.sum_rate,
               s.serving, s.handover)


STEP_HEADER = ["episode", "step", "t_seconds", "r_con", "r_quant", "sum_rate",
               "serving_sat", "handover_flag"]
EPISODE_HEADER = ["episode", "mean_reward", "mean_sum_rate",
                  "actor_loss_proxy", "critic_loss", "noise_var",
                  "handovers_this_episode"]


def cmd_train(args) -> int:
    cfg = _load(args)
    if args.episodes is not None:
        cfg.parser["ddpg"]["episodes"] = str(args.episodes)
    if args.steps is not None:
        cfg.parser["env"]["episode_length"] = str(args.steps)
    outdir = _prepare_outdir(args, cfg)
    env = DelayedCsiEnv(cfg.env(), np.random.SeedSequence(cfg.seed).spawn(2)[0])
    log = agent_mod.train(env, cfg.ddpg(),
                          np.random.SeedSequence(cfg.seed).spawn(2)[1],
                          checkpoint_dir=outdir)
    _write_csv(os.path.join(outdir, "training.csv"), "training",
               EPISODE_HEADER, _episode_rows(log))
    _write_csv(os.path.join(outdir, "steps.csv"), "steps",
               STEP_HEADER, _step_rows(log))
    save_networks(os.path.join(outdir, "checkpoint.npz"),
                  {"actor": log.agent.actor, "critic": log.agent.critic,
                   "target_actor": log.agent.target_actor,
                   "target_critic": log.agent.target_critic})
    last = log.episodes[-1]
    print(f"trained {len(log.episodes)} episodes; final mean reward "
          f"{last.mean_reward:.3f}, mean sum rate {last.mean_sum_rate:.3f} "
          f"-> {outdir}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    outdir = _prepare_outdir(args, cfg)
    nets = load_networks(args.checkpoint)
    env = DelayedCsiEnv(cfg.env(), np.random.SeedSequence(cfg.seed).spawn(2)[0])
    log = agent_mod.evaluate_policy(env, nets["actor"], args.episodes)
    _write_csv(os.path.join(outdir, "eval.csv"), "steps", STEP_HEADER,
               _step_rows(log))
    mean_rate = float(np.mean([e.mean_sum_rate for e in log.episodes]))
    print(f"evaluated {args.episodes} episodes; mean sum rate {mean_rate:.3f} "
          f"-> {outdir}/eval.csv")
    return 0


def cmd_baseline(args) -> int:
    cfg = _load(args)
    if args.kind is not None:
        cfg.parser["baseline"]["kind"] = args.kind
    if args.csi is not None:
        cfg.parser["baseline"]["csi"] = args.csi
    if args.steps is not None:
        cfg.parser["baseline"]["steps"] = str(args.steps)
    outdir = _prepare_outdir(args, cfg)
    kind = base_mod.BaselineKind(cfg.parser["baseline"]["kind"],
                                 cfg.parser["baseline"]["csi"])
    seq = np.random.SeedSequence(cfg.seed).spawn(3)
    env = DelayedCsiEnv(cfg.env(), seq[0])
    steps = int(cfg.parser["baseline"]["steps"])
    trace = base_mod.collect_channel_trace(env, steps)
    rng = np.random.default_rng(seq[2])
    reports = base_mod.evaluate_baseline(
        kind, trace, env.power_budget, env.sigma2, rng)
    start = float(cfg.parser["env"]["start_time_s"])
    rows = [(0, i, start + i * env.delta_t, rep.sum_rate,
             0.0, rep.sum_rate, env.serving, 0)
            for i, rep in enumerate(reports)]
    _write_csv(os.path.join(outdir, f"baseline_{kind.kind}_{kind.csi}.csv"),
               "steps", STEP_HEADER, rows)
    mean_rate = float(np.mean([r.sum_rate for r in reports]))
    print(f"baseline {kind.kind}/{kind.csi}: mean sum rate {mean_rate:.3f} "
          f"over {steps} steps -> {outdir}")
    return 0


def cmd_check(args) -> int:
    """Numerical oracle identities on a fresh seed; exits nonzero on failure."""
    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
        failures += 0 if ok else 1

    rng = np.random.default_rng(0)

    worst = 0.0
    for _ in range(100):
        h = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        f_mat = a @ a.conj().T
        gamma = float(rng.uniform(0.5, 5.0))
        lhs, rhs = lower_bound_identity_check(h, f_mat, gamma)
        worst = max(worst, abs(lhs - rhs))
    report("determinant identity (100 draws, M=9)", worst < 1e-9,
           f"max |lhs-rhs| = {worst:.2e}")

    worst = 0.0
    for _ in range(100):
        h = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        v = [rng.standard_normal(9) + 1j * rng.standard_normal(9)
             for _ in range(2)]
        sigma2 = float(rng.uniform(0.5, 2.0))
        gamma = sigma2 + sum(abs(h.conj() @ vi) ** 2 for vi in v[1:])
        lhs, _ = lower_bound_identity_check(h, np.outer(v[0], v[0].conj()), gamma)
        direct = sum_rate(np.stack([h, h], axis=1), np.stack(v, axis=1),
                          sigma2).per_user_rate[0]
        worst = max(worst, abs(lhs - direct) / max(direct, 1e-12))
    report("rank-one bound equals per-user rate", worst < 1e-10,
           f"max rel err = {worst:.2e}")

    for name, net in (("actor", build_actor(48, 16, rng)),
                      ("critic", build_critic(48, 16, rng))):
        max_err = gradient_check(net, rng, coords=60)
        report(f"{name} gradients vs finite differences", max_err < 1e-4,
               f"max rel err = {max_err:.2e}")

    x = rng.standard_normal(16) * 3.0
    p1 = project_action(x, 1.0)
    p2 = project_action(p1, 1.0)
    report("projection idempotent and norm-limited",
           np.allclose(p1, p2) and np.linalg.norm(p1) <= 1.0 + 1e-12)

    src = build_actor(8, 4, rng)
    tgt = src.copy()
    for w in tgt.weights:
        w += 1.0
    gap0 = float(np.linalg.norm(tgt.weights[0] - src.weights[0]))
    for _ in range(10):
        soft_update(tgt, src, 0.005)
    gap = float(np.linalg.norm(tgt.weights[0] - src.weights[0]))
    report("soft update geometric decay",
           abs(gap - gap0 * (1 - 0.005) ** 10) < 1e-9)

    params = [np.ones(4)]
    opt = Adam(0.01)
    for _ in range(5000):
        opt.step(params, [np.full(4, 2.0)])
    # constant gradient drives the step size to lr * sign(g)
    before = params[0].copy()
    opt.step(params, [np.full(4, 2.0)])
    report("adam asymptotic step is lr*sign(g)",
           np.allclose(before - params[0], 0.01, rtol=1e-3))

    print("all checks passed" if failures == 0 else f"{failures} checks FAILED")
    return 0 if failures == 0 else 1


# -- entry point --------------------------------------------------------------

def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="INI config file")
    sub.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                     help="override one config value")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--output", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leoprecode",
        description="LEO downlink precoding under delayed CSI")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("constellation", help="trajectory and handover trace")
    _common(sub)
    sub.add_argument("--epsilon", type=float, default=None)
    sub.add_argument("--duration", type=float, default=None, help="seconds")
    sub.set_defaults(func=cmd_constellation)

    sub = subs.add_parser("train", help="train the DDPG precoder")
    _common(sub)
    sub.add_argument("--episodes", type=int, default=None)
    sub.add_argument("--steps", type=int, default=None,
                     help="steps per episode")
    sub.set_defaults(func=cmd_train)

    sub = subs.add_parser("eval", help="frozen-policy rollout")
    _common(sub)
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--episodes", type=int, default=5)
    sub.set_defaults(func=cmd_eval)

    sub = subs.add_parser("baseline", help="reference precoder sweep")
    _common(sub)
    sub.add_argument("--kind", choices=base_mod.KINDS, default=None)
    sub.add_argument("--csi", choices=base_mod.CSI_VIEWS, default=None)
    sub.add_argument("--steps", type=int, default=None)
    sub.set_defaults(func=cmd_baseline)

    sub = subs.add_parser("check", help="run numerical oracle identities")
    sub.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface one diagnostic line, nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
