"""Command-line entry point: run experiments, solve oracles, sweep, check.

Subcommands: ``run`` (full multi-solver experiment), ``oracle`` (exact
equilibrium of the configured scenario), ``sweep`` (oracle across one
parameter axis), and ``gradcheck`` (finite-difference verification of every
network architecture the solvers use). Any failure exits nonzero with a
one-line diagnostic on stderr.
"""

import argparse
import sys

import numpy as np

from . import nn
from .config import apply_overrides, default_config, load_config
from .diffusion import (
    DiffusionSchedule,
    chain_backward,
    chain_forward,
    draw_chain_noise,
    init_critic,
    init_policy,
)
from .harness import run_experiment, run_oracle, run_sweep


def build_parser():
    parser = argparse.ArgumentParser(
        prog="edgemarket",
        description="Layer-pricing market: exact oracle, diffusion policy, "
                    "and baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="TOML config file (defaults apply if omitted)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory override")
    common.add_argument("--seeds", metavar="LIST",
                        help="comma-separated training seeds, e.g. 0,1,2")
    common.add_argument("--epochs", type=int, metavar="N",
                        help="training epochs per run")
    common.add_argument("--reward-mode", choices=("raw", "binary"),
                        help="reward rule for the learners")
    common.add_argument("--solvers", metavar="LIST",
                        help="comma-separated subset of gdm,ppo,random")

    sub.add_parser("run", parents=[common],
                   help="train all configured solvers and summarize")
    sub.add_parser("oracle", parents=[common],
                   help="solve the configured scenario exactly")
    sweep = sub.add_parser("sweep", parents=[common],
                           help="oracle solve across one parameter axis")
    sweep.add_argument("--parameter", required=True,
                       choices=("beta", "F", "alpha-scale", "W-scale",
                                "l_max"))
    sweep.add_argument("--values", required=True, metavar="LIST",
                       help="comma-separated parameter values")
    sub.add_parser("gradcheck",
                   help="finite-difference check of all network gradients")
    return parser


def _parse_cfg(args):
    cfg = load_config(args.config) if args.config else default_config()
    seeds = None
    if args.seeds is not None:
        seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    solvers = None
    if args.solvers is not None:
        solvers = [s for s in args.solvers.split(",") if s != ""]
    return apply_overrides(cfg, out_dir=args.out, seeds=seeds,
                           epochs=args.epochs,
                           reward_mode=args.reward_mode, solvers=solvers)


def _cmd_run(args):
    cfg = _parse_cfg(args)
    result = run_experiment(cfg, echo=print)
    print()
    with open(f"{cfg.out_dir}/summary.txt", encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


def _cmd_oracle(args):
    cfg = _parse_cfg(args)
    _, text = run_oracle(cfg)
    print(text, end="")
    return 0


def _cmd_sweep(args):
    cfg = _parse_cfg(args)
    values = [float(v) for v in args.values.split(",") if v != ""]
    if not values:
        raise ValueError("--values must name at least one value")
    rows = run_sweep(cfg, args.parameter, values)
    for value, price, utility in rows:
        print(f"{args.parameter}={value:g}: price {price:.6f}, "
              f"utility {utility:.6f}")
    return 0


def _net_check(name, net, x, tolerance):
    """Compare reverse-mode gradients of sum(forward) with central FD."""
    def loss():
        return float(np.sum(nn.forward(net, x)))

    upstream = np.ones((x.shape[0], net.widths[-1]))
    grads, _ = nn.backward(net, x, upstream)
    analytic = nn.flatten_grads(grads)
    numeric = nn.numeric_gradients(loss, net.parameters())
    err = nn.max_relative_error(analytic, numeric)
    ok = err <= tolerance
    return f"{name}: max relative error {err:.3e} " \
           f"({'ok' if ok else f'EXCEEDS {tolerance}'})", ok


def _chain_check(tolerance):
    """FD check of d(pre-squash action)/d(params) through the reverse chain."""
    rng = np.random.default_rng(7)
    schedule = DiffusionSchedule.linear(steps=3)
    policy = init_policy(2, (6,), schedule, 0.01, 5.0, rng)
    features = rng.uniform(-1.0, 1.0, size=(1, 2))
    a_init, noises = draw_chain_noise(schedule.steps, 1, rng)

    def loss():
        action0, _ = chain_forward(policy, features, a_init, noises)
        return float(action0[0, 0])

    action0, caches = chain_forward(policy, features, a_init, noises)
    grads, _ = chain_backward(policy, caches, np.ones((1, 1)))
    analytic = nn.flatten_grads(grads)
    numeric = nn.numeric_gradients(loss, policy.denoiser.parameters())
    err = nn.max_relative_error(analytic, numeric)
    ok = err <= tolerance
    return f"reverse chain: max relative error {err:.3e} " \
           f"({'ok' if ok else f'EXCEEDS {tolerance}'})", ok


def _cmd_gradcheck(args):
    rng = np.random.default_rng(3)
    checks = []
    denoiser = nn.init_dense((7, 8, 1), ("silu", "identity"), rng)
    checks.append(_net_check("denoiser (silu)", denoiser,
                             rng.uniform(-1, 1, size=(4, 7)), 1e-4))
    critic = init_critic(3, (8,), rng).q_net
    checks.append(_net_check("critic (silu)", critic,
                             rng.uniform(-1, 1, size=(4, 4)), 1e-4))
    mean_net = nn.init_dense((3, 8, 1), ("tanh", "identity"), rng)
    checks.append(_net_check("policy mean (tanh)", mean_net,
                             rng.uniform(-1, 1, size=(4, 3)), 1e-4))
    value_net = nn.init_dense((3, 8, 1), ("tanh", "identity"), rng)
    checks.append(_net_check("value (tanh)", value_net,
                             rng.uniform(-1, 1, size=(4, 3)), 1e-4))
    checks.append(_chain_check(1e-3))
    all_ok = True
    for line, ok in checks:
        print(line)
        all_ok = all_ok and ok
    if not all_ok:
        raise ValueError("gradient check failed")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "oracle": _cmd_oracle,
        "sweep": _cmd_sweep,
        "gradcheck": _cmd_gradcheck,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
