"""Stackelberg layer-pricing market for split edge inference.

An edge server (leader) posts a per-layer price; devices (followers) choose
how many transformer layers of a shared encoder to run locally. The package
solves the leader's problem four ways: an exact threshold-enumeration
oracle, a generative-diffusion policy trained against a learned critic, a
clipped-ratio actor-critic baseline, and random search, with a reproducible
experiment harness comparing them.
"""

from .baselines import GaussianPolicy, PpoConfig, ppo_train, random_search
from .config import ExperimentConfig, default_config, load_config
from .diffusion import (
    Critic,
    DiffusionPolicy,
    DiffusionSchedule,
    GdmConfig,
    ReplayBuffer,
    forward_noise,
    init_critic,
    init_policy,
    sample_action,
    train,
)
from .env import (
    GameState,
    RewardMode,
    Scenario,
    binary_reward,
    raw_reward,
    reset,
    sample_scenario,
    state_features,
    step,
)
from .game import (
    DeviceProfile,
    EquilibriumSolution,
    MarketParams,
    best_response,
    best_response_vector,
    device_utility,
    grid_search_price,
    layer_cap,
    server_utility,
    stackelberg_oracle,
    switch_threshold,
)
from .harness import run_experiment, run_oracle, run_sweep
from .partition import LayerCostProfile, fit_linear, split_cost, synthetic_profile

__version__ = "0.1.0"

__all__ = [
    "Critic",
    "DeviceProfile",
    "DiffusionPolicy",
    "DiffusionSchedule",
    "EquilibriumSolution",
    "ExperimentConfig",
    "GameState",
    "GaussianPolicy",
    "GdmConfig",
    "LayerCostProfile",
    "MarketParams",
    "PpoConfig",
    "ReplayBuffer",
    "RewardMode",
    "Scenario",
    "best_response",
    "best_response_vector",
    "binary_reward",
    "default_config",
    "device_utility",
    "fit_linear",
    "forward_noise",
    "grid_search_price",
    "init_critic",
    "init_policy",
    "layer_cap",
    "load_config",
    "ppo_train",
    "random_search",
    "raw_reward",
    "reset",
    "run_experiment",
    "run_oracle",
    "run_sweep",
    "sample_action",
    "sample_scenario",
    "server_utility",
    "split_cost",
    "stackelberg_oracle",
    "state_features",
    "step",
    "switch_threshold",
    "train",
    "__version__",
]
