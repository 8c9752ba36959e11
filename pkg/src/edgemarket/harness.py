"""Experiment orchestration: multi-seed multi-solver runs, CSVs, summaries.

A single scenario is sampled per experiment; the exact oracle is solved once
on it; every (solver, seed) pair then trains or searches with an isolated
generator seeded by (solver id, run seed). All artifacts are plain CSV or
text, written atomically, with floats in shortest round-trip form so a rerun
with the same config reproduces every file byte for byte. Wall-clock
durations are returned to the caller but never persisted, keeping artifacts
deterministic.
"""

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .baselines import (
    init_gaussian_policy,
    init_value_net,
    ppo_train,
    random_search,
)
from .diffusion import DiffusionSchedule, init_critic, init_policy, train
from .env import binary_reward, raw_reward, sample_scenario
from .game import (
    DeviceProfile,
    best_response_vector,
    grid_search_price,
    layer_cap,
    server_utility,
    stackelberg_oracle,
    switch_threshold,
)
from .logs import atomic_write_text, format_float, write_run_csv

SOLVER_IDS = {"gdm": 1, "ppo": 2, "random": 3}

SUMMARY_COLUMNS = ("solver", "final_utility_mean", "mean_utility_200_500",
                   "oracle_utility", "gap")

SWEEP_PARAMETERS = ("beta", "F", "alpha-scale", "W-scale", "l_max")

MEAN_WINDOW = (200, 500)


@dataclass(frozen=True)
class RunRecord:
    """One finished run plus how long it took (not persisted)."""

    solver: str
    seed: int
    log: object
    duration: float


@dataclass(frozen=True)
class SummaryRow:
    solver: str
    final_utility_mean: float
    mean_utility_200_500: float
    oracle_utility: float
    gap: float


@dataclass(frozen=True)
class ExperimentResult:
    scenario: object
    oracle: object
    records: tuple
    summary: tuple


def build_scenario(cfg):
    return sample_scenario(cfg.market, cfg.w_range, cfg.alpha_range,
                           cfg.scenario_seed)


def reward_mode_for(cfg):
    if cfg.reward_mode_name == "raw":
        return raw_reward(cfg.market.revenue_f)
    return binary_reward()


def run_rng(solver, seed):
    """Per-run generator; solver id and seed form the entropy sequence."""
    return np.random.default_rng([SOLVER_IDS[solver], seed])


def run_single(solver, seed, scenario, cfg):
    """Train or search one (solver, seed) pair on a prepared scenario."""
    if solver not in SOLVER_IDS:
        raise ValueError(f"unknown solver {solver!r}")
    rng = run_rng(solver, seed)
    mode = reward_mode_for(cfg)
    market = scenario.market
    n_features = market.n_devices + 1
    if solver == "gdm":
        schedule = DiffusionSchedule.linear(steps=cfg.gdm.diffusion_steps)
        policy = init_policy(n_features, cfg.gdm.denoiser_hidden, schedule,
                             market.price_min, market.price_max, rng)
        critic = init_critic(n_features, cfg.gdm.critic_hidden, rng)
        return train(policy, critic, scenario, mode, cfg.gdm, rng)
    if solver == "ppo":
        policy = init_gaussian_policy(n_features, cfg.ppo.hidden,
                                      market.price_min, market.price_max,
                                      rng, init_std=cfg.ppo.init_std)
        value_net = init_value_net(n_features, cfg.ppo.hidden, rng)
        return ppo_train(policy, value_net, scenario, mode, cfg.ppo, rng)
    return random_search(scenario, mode, cfg.epochs, rng)


def run_filename(solver, seed):
    return f"run_{solver}_seed{seed}.csv"


def build_summary(cfg, records, oracle_utility):
    """Seed-averaged final and windowed utilities per solver, plus gaps.

    The 200-500 window (1-based, inclusive) only exists when the run is long
    enough to contain it; shorter runs leave the column empty.
    """
    lo, hi = MEAN_WINDOW
    rows = []
    for solver in cfg.solvers:
        solver_logs = [r.log for r in records if r.solver == solver]
        finals = [log.server_utilities[-1] for log in solver_logs]
        final_mean = float(np.mean(finals))
        if cfg.epochs >= hi:
            window_mean = float(np.mean(
                [np.mean(log.server_utilities[lo - 1:hi])
                 for log in solver_logs]
            ))
        else:
            window_mean = None
        rows.append(SummaryRow(
            solver=solver,
            final_utility_mean=final_mean,
            mean_utility_200_500=window_mean,
            oracle_utility=oracle_utility,
            gap=oracle_utility - final_mean,
        ))
    return tuple(rows)


def summary_csv_text(rows):
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        window = ("" if row.mean_utility_200_500 is None
                  else format_float(row.mean_utility_200_500))
        lines.append(",".join((
            row.solver,
            format_float(row.final_utility_mean),
            window,
            format_float(row.oracle_utility),
            format_float(row.gap),
        )))
    return "\n".join(lines) + "\n"


def summary_table_text(rows, records):
    """Aligned human-readable table with the random best-so-far footnote."""
    header = list(SUMMARY_COLUMNS)
    body = []
    for row in rows:
        window = ("-" if row.mean_utility_200_500 is None
                  else f"{row.mean_utility_200_500:.6f}")
        body.append([row.solver, f"{row.final_utility_mean:.6f}", window,
                     f"{row.oracle_utility:.6f}", f"{row.gap:.6f}"])
    widths = [max(len(header[i]), *(len(r[i]) for r in body))
              for i in range(len(header))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in body:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(r)))
    best = best_so_far_footnote(records)
    if best is not None:
        lines.append("")
        lines.append(best)
    return "\n".join(lines) + "\n"


def best_so_far_footnote(records):
    """Random search fluctuates, so its running best is worth a footnote."""
    best = None
    for record in records:
        if record.solver != "random" or len(record.log) == 0:
            continue
        idx = int(np.argmax(record.log.server_utilities))
        value = float(record.log.server_utilities[idx])
        if best is None or value > best[0]:
            best = (value, int(record.log.epochs[idx]), record.seed)
    if best is None:
        return None
    return (f"random best-so-far: {best[0]:.6f} "
            f"at epoch {best[1]} (seed {best[2]})")


def run_experiment(cfg, echo=None):
    """Run every (solver, seed) pair and persist run CSVs plus summaries."""
    say = echo if echo is not None else (lambda *_: None)
    scenario = build_scenario(cfg)
    oracle = stackelberg_oracle(scenario.devices, cfg.market,
                                epsilon=cfg.oracle_epsilon)
    say(f"scenario seed {cfg.scenario_seed}: oracle price "
        f"{oracle.price:.6f}, utility {oracle.server_utility:.6f}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    records = []
    for solver in cfg.solvers:
        for seed in cfg.seeds:
            started = time.perf_counter()
            log = run_single(solver, seed, scenario, cfg)
            duration = time.perf_counter() - started
            records.append(RunRecord(solver, seed, log, duration))
            write_run_csv(os.path.join(cfg.out_dir,
                                       run_filename(solver, seed)), log)
            say(f"{solver} seed {seed}: final utility "
                f"{log.server_utilities[-1]:.6f} ({duration:.1f}s)")
    rows = build_summary(cfg, records, oracle.server_utility)
    atomic_write_text(os.path.join(cfg.out_dir, "summary.csv"),
                      summary_csv_text(rows))
    atomic_write_text(os.path.join(cfg.out_dir, "summary.txt"),
                      summary_table_text(rows, records))
    return ExperimentResult(scenario=scenario, oracle=oracle,
                            records=tuple(records), summary=rows)


def oracle_report_text(scenario, solution, epsilon):
    """Equilibrium report with the switch-threshold diagnostics behind it."""
    market = scenario.market
    lines = [
        f"devices: {market.n_devices}, l_max: {market.l_max}, "
        f"price bounds: [{market.price_min}, {market.price_max}]",
        f"oracle price: {format_float(solution.price)}",
        f"server utility: {format_float(solution.server_utility)}",
        f"layers: {' '.join(str(l) for l in solution.layers)}",
    ]
    taus = []
    for dev in scenario.devices:
        cap = layer_cap(dev, market)
        if cap > 0 and dev.alpha > 0:
            taus.append(switch_threshold(dev, 0, market))
            taus.append(switch_threshold(dev, cap - 1, market))
    if taus:
        lines.append(f"switch thresholds span [{min(taus):.6f}, "
                     f"{max(taus):.6f}] across devices")
    ties = count_optimal_ties(scenario, solution, epsilon)
    if ties > 1:
        lines.append(f"flat objective: {ties} candidate prices tie "
                     f"at the optimum (lowest reported)")
    return "\n".join(lines) + "\n"


def count_optimal_ties(scenario, solution, epsilon):
    """How many oracle candidate prices achieve the optimal utility exactly."""
    market = scenario.market
    candidates = {market.price_min, market.price_max}
    for dev in scenario.devices:
        for layers in range(layer_cap(dev, market)):
            tau = switch_threshold(dev, layers, market)
            candidates.add(min(market.price_max, max(market.price_min, tau)))
            candidates.add(min(market.price_max,
                               max(market.price_min, tau + epsilon)))
    ties = 0
    for price in candidates:
        layers = best_response_vector(scenario.devices, price, market)
        if server_utility(price, layers, market) == solution.server_utility:
            ties += 1
    return ties


def run_oracle(cfg, cross_check=False):
    """Solve the configured scenario exactly; optionally grid-verify it."""
    scenario = build_scenario(cfg)
    solution = stackelberg_oracle(scenario.devices, cfg.market,
                                  epsilon=cfg.oracle_epsilon)
    text = oracle_report_text(scenario, solution, cfg.oracle_epsilon)
    if cross_check:
        grid_price, grid_utility = grid_search_price(scenario.devices,
                                                     cfg.market)
        text += (f"grid check: price {grid_price:.6f}, "
                 f"utility {format_float(grid_utility)}\n")
    os.makedirs(cfg.out_dir, exist_ok=True)
    atomic_write_text(os.path.join(cfg.out_dir, "oracle.txt"), text)
    return solution, text


def sweep_scenario(base_scenario, parameter, value):
    """Apply one sweep setting to a copy of the base scenario."""
    market = base_scenario.market
    devices = base_scenario.devices
    if parameter == "beta":
        market = replace(market, beta=float(value))
    elif parameter == "F":
        market = replace(market, revenue_f=float(value))
    elif parameter == "l_max":
        market = replace(market, l_max=int(value))
    elif parameter == "alpha-scale":
        devices = tuple(DeviceProfile(d.capacity_w, d.alpha * float(value))
                        for d in devices)
    elif parameter == "W-scale":
        devices = tuple(DeviceProfile(d.capacity_w * float(value), d.alpha)
                        for d in devices)
    else:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"choose from {SWEEP_PARAMETERS}")
    return replace(base_scenario, market=market, devices=devices)


def run_sweep(cfg, parameter, values):
    """Oracle solve per parameter value; returns rows and writes the CSV."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"choose from {SWEEP_PARAMETERS}")
    base = build_scenario(cfg)
    rows = []
    for value in values:
        scenario = sweep_scenario(base, parameter, value)
        solution = stackelberg_oracle(scenario.devices, scenario.market,
                                      epsilon=cfg.oracle_epsilon)
        rows.append((float(value), solution.price, solution.server_utility))
    lines = ["value,price,utility"]
    for value, price, utility in rows:
        lines.append(",".join((format_float(value), format_float(price),
                               format_float(utility))))
    os.makedirs(cfg.out_dir, exist_ok=True)
    atomic_write_text(os.path.join(cfg.out_dir, f"sweep_{parameter}.csv"),
                      "\n".join(lines) + "\n")
    return rows
