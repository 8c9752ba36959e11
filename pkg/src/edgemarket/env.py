"""Round-based decision environment over the layer-pricing game.

The leader observes the previous round's price and the followers' layer
choices, posts a new price, and receives either the raw (scaled) server
utility or a binary improvement signal. Follower behavior is deterministic
best response, so a single step fully reveals the objective at the chosen
price; longer horizons are supported for iterative training schemes.
"""

from dataclasses import dataclass

import numpy as np

from .game import (
    DeviceProfile,
    MarketParams,
    best_response_vector,
    device_utility,
    server_utility,
)

RAW_UTILITY = "raw_utility"
BINARY_IMPROVEMENT = "binary_improvement"


@dataclass(frozen=True)
class Scenario:
    """A sampled market instance: leader constants plus follower population."""

    market: MarketParams
    devices: tuple
    seed: int

    def __post_init__(self):
        if len(self.devices) != self.market.n_devices:
            raise ValueError(
                f"scenario has {len(self.devices)} devices, "
                f"market expects {self.market.n_devices}"
            )


@dataclass(frozen=True)
class GameState:
    """Previous round's posted price and the followers' layer choices."""

    price_prev: float
    layer_prev: tuple


@dataclass(frozen=True)
class RewardMode:
    """Reward rule: scaled raw server utility, or binary improvement."""

    mode: str
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in (RAW_UTILITY, BINARY_IMPROVEMENT):
            raise ValueError(f"unknown reward mode {self.mode!r}")
        if not self.scale > 0:
            raise ValueError("reward scale must be positive")


def raw_reward(scale):
    return RewardMode(mode=RAW_UTILITY, scale=float(scale))


def binary_reward():
    return RewardMode(mode=BINARY_IMPROVEMENT)


def sample_scenario(market, w_range, alpha_range, seed):
    """Draw N devices with W and alpha uniform over the given ranges.

    All capacities are drawn first, then all tradeoff weights, from a single
    seeded generator, so the scenario is a pure function of the seed.
    """
    w_lo, w_hi = float(w_range[0]), float(w_range[1])
    a_lo, a_hi = float(alpha_range[0]), float(alpha_range[1])
    if w_lo > w_hi:
        raise ValueError(f"inverted capacity range [{w_lo}, {w_hi}]")
    if a_lo > a_hi:
        raise ValueError(f"inverted alpha range [{a_lo}, {a_hi}]")
    if a_lo < 0:
        raise ValueError("alpha range must be nonnegative")
    if w_lo <= market.coeff_b:
        raise ValueError(
            "capacity range must exceed the fixed compute cost "
            f"(W > {market.coeff_b})"
        )
    rng = np.random.default_rng(seed)
    capacities = rng.uniform(w_lo, w_hi, size=market.n_devices)
    alphas = rng.uniform(a_lo, a_hi, size=market.n_devices)
    devices = tuple(
        DeviceProfile(capacity_w=float(w), alpha=float(a))
        for w, a in zip(capacities, alphas)
    )
    return Scenario(market=market, devices=devices, seed=seed)


def reset(scenario, rng):
    """Initial state: a uniform random price and the best responses to it."""
    market = scenario.market
    price = float(rng.uniform(market.price_min, market.price_max))
    layers = best_response_vector(scenario.devices, price, market)
    return GameState(price_prev=price, layer_prev=layers)


def step(state, action, scenario, reward_mode):
    """Post a price, let followers best-respond, and score the outcome.

    Returns ``(next_state, reward, info)`` where info carries the raw server
    utility and the per-device utilities at the new price. Binary mode pays 1
    only on a strict improvement over the incoming state's server utility.
    """
    market = scenario.market
    action = float(action)
    if not market.price_min <= action <= market.price_max:
        raise ValueError(
            f"price {action} outside [{market.price_min}, {market.price_max}]"
        )
    layers = best_response_vector(scenario.devices, action, market)
    utility = server_utility(action, layers, market)
    device_utils = tuple(
        device_utility(dev, layer, action, market)
        for dev, layer in zip(scenario.devices, layers)
    )
    if reward_mode.mode == RAW_UTILITY:
        reward = utility / reward_mode.scale
    else:
        prev_utility = server_utility(state.price_prev, state.layer_prev, market)
        reward = 1.0 if utility > prev_utility else 0.0
    next_state = GameState(price_prev=action, layer_prev=layers)
    info = {"server_utility": utility, "device_utilities": device_utils}
    return next_state, reward, info


def state_features(state, scenario):
    """Normalized observation: price in [-1,1], then each L/l_max in [0,1]."""
    market = scenario.market
    span = market.price_max - market.price_min
    price_norm = 2.0 * (state.price_prev - market.price_min) / span - 1.0
    feats = np.empty(market.n_devices + 1, dtype=np.float64)
    feats[0] = price_norm
    feats[1:] = np.asarray(state.layer_prev, dtype=np.float64) / market.l_max
    return feats
