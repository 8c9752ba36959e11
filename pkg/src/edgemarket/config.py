"""Experiment configuration: a flat TOML document with dotted keys.

The file carries a ``schema_version`` plus three groups: ``scenario.*``
(market constants and sampling ranges), ``experiment.*`` (solvers, seeds,
epochs, reward mode, output), and per-solver knobs under ``gdm.*`` and
``ppo.*``. Every key has a default, so any subset may be given; unknown keys
are rejected by name rather than silently ignored.
"""

import sys
from dataclasses import dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .baselines import PpoConfig
from .diffusion import GdmConfig
from .game import MarketParams

SCHEMA_VERSION = 1

SOLVER_NAMES = ("gdm", "ppo", "random")

REWARD_MODE_NAMES = ("raw", "binary")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full experiment needs, resolved and validated."""

    market: MarketParams
    w_range: tuple
    alpha_range: tuple
    scenario_seed: int
    solvers: tuple
    seeds: tuple
    epochs: int
    reward_mode_name: str
    out_dir: str
    oracle_epsilon: float
    gdm: GdmConfig
    ppo: PpoConfig

    def __post_init__(self):
        if len(self.solvers) < 1:
            raise ValueError("need at least one solver")
        for name in self.solvers:
            if name not in SOLVER_NAMES:
                raise ValueError(f"unknown solver {name!r}; "
                                 f"choose from {SOLVER_NAMES}")
        if len(set(self.solvers)) != len(self.solvers):
            raise ValueError("solver list contains duplicates")
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seed list contains duplicates")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.reward_mode_name not in REWARD_MODE_NAMES:
            raise ValueError(f"unknown reward mode {self.reward_mode_name!r}; "
                             f"choose from {REWARD_MODE_NAMES}")
        if self.oracle_epsilon <= 0:
            raise ValueError("oracle epsilon must be positive")


def _as_int(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"config key {key!r} must be an integer")
    return value


def _as_float(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"config key {key!r} must be a number")
    return float(value)


def _as_str(key, value):
    if not isinstance(value, str):
        raise ValueError(f"config key {key!r} must be a string")
    return value


def _as_int_list(key, value):
    if not isinstance(value, list) or not value:
        raise ValueError(f"config key {key!r} must be a nonempty list")
    return tuple(_as_int(key, v) for v in value)


def _as_str_list(key, value):
    if not isinstance(value, list) or not value:
        raise ValueError(f"config key {key!r} must be a nonempty list")
    return tuple(_as_str(key, v) for v in value)


SCHEMA = {
    "schema_version": _as_int,
    "scenario.n_devices": _as_int,
    "scenario.l_max": _as_int,
    "scenario.coeff_a": _as_float,
    "scenario.coeff_b": _as_float,
    "scenario.revenue_f": _as_float,
    "scenario.beta": _as_float,
    "scenario.price_min": _as_float,
    "scenario.price_max": _as_float,
    "scenario.w_min": _as_float,
    "scenario.w_max": _as_float,
    "scenario.alpha_min": _as_float,
    "scenario.alpha_max": _as_float,
    "scenario.seed": _as_int,
    "experiment.solvers": _as_str_list,
    "experiment.seeds": _as_int_list,
    "experiment.epochs": _as_int,
    "experiment.reward_mode": _as_str,
    "experiment.out_dir": _as_str,
    "experiment.oracle_epsilon": _as_float,
    "gdm.buffer_capacity": _as_int,
    "gdm.batch_size": _as_int,
    "gdm.actor_lr": _as_float,
    "gdm.critic_lr": _as_float,
    "gdm.critic_batch_size": _as_int,
    "gdm.critic_updates": _as_int,
    "gdm.actor_updates": _as_int,
    "gdm.denoiser_hidden": _as_int_list,
    "gdm.critic_hidden": _as_int_list,
    "gdm.diffusion_steps": _as_int,
    "gdm.explore_start": _as_float,
    "gdm.explore_end": _as_float,
    "gdm.horizon": _as_int,
    "gdm.discount": _as_float,
    "gdm.critic_warmup": _as_int,
    "ppo.batch_size": _as_int,
    "ppo.update_passes": _as_int,
    "ppo.clip_ratio": _as_float,
    "ppo.entropy_bonus": _as_float,
    "ppo.policy_lr": _as_float,
    "ppo.value_lr": _as_float,
    "ppo.hidden": _as_int_list,
    "ppo.init_std": _as_float,
    "ppo.horizon": _as_int,
}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "scenario.n_devices": 10,
    "scenario.l_max": 40,
    "scenario.coeff_a": 2.0,
    "scenario.coeff_b": 4.0,
    "scenario.revenue_f": 1000.0,
    "scenario.beta": 0.3,
    "scenario.price_min": 0.01,
    "scenario.price_max": 5.0,
    "scenario.w_min": 90.0,
    "scenario.w_max": 120.0,
    "scenario.alpha_min": 5.0,
    "scenario.alpha_max": 15.0,
    "scenario.seed": 0,
    "experiment.solvers": ("gdm", "ppo", "random"),
    "experiment.seeds": (0, 1, 2),
    "experiment.epochs": 500,
    "experiment.reward_mode": "raw",
    "experiment.out_dir": "results",
    "experiment.oracle_epsilon": 1e-6,
}


def _flatten(tree, prefix=""):
    flat = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def config_from_mapping(data):
    """Validate a flat dotted-key mapping and build the experiment config."""
    unknown = sorted(set(data) - set(SCHEMA))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    values = dict(DEFAULTS)
    for key, raw in data.items():
        values[key] = SCHEMA[key](key, raw)
    if values["schema_version"] != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {values['schema_version']}; "
            f"this build reads version {SCHEMA_VERSION}"
        )

    market = MarketParams(
        n_devices=values["scenario.n_devices"],
        l_max=values["scenario.l_max"],
        coeff_a=values["scenario.coeff_a"],
        coeff_b=values["scenario.coeff_b"],
        revenue_f=values["scenario.revenue_f"],
        beta=values["scenario.beta"],
        price_min=values["scenario.price_min"],
        price_max=values["scenario.price_max"],
    )
    epochs = values["experiment.epochs"]

    def group_kwargs(prefix):
        # Solver-group keys have no entry in DEFAULTS; the dataclass defaults
        # apply unless the file names them explicitly.
        return {key[len(prefix):]: values[key]
                for key in SCHEMA if key.startswith(prefix) and key in values}

    gdm = replace(GdmConfig(**group_kwargs("gdm.")), epochs=epochs)
    ppo = replace(PpoConfig(**group_kwargs("ppo.")), epochs=epochs)
    return ExperimentConfig(
        market=market,
        w_range=(values["scenario.w_min"], values["scenario.w_max"]),
        alpha_range=(values["scenario.alpha_min"], values["scenario.alpha_max"]),
        scenario_seed=values["scenario.seed"],
        solvers=tuple(values["experiment.solvers"]),
        seeds=tuple(values["experiment.seeds"]),
        epochs=epochs,
        reward_mode_name=values["experiment.reward_mode"],
        out_dir=values["experiment.out_dir"],
        oracle_epsilon=values["experiment.oracle_epsilon"],
        gdm=gdm,
        ppo=ppo,
    )


def load_config(path):
    """Parse a TOML config file into an ExperimentConfig."""
    with open(path, "rb") as fh:
        tree = tomllib.load(fh)
    return config_from_mapping(_flatten(tree))


def default_config():
    return config_from_mapping({})


def apply_overrides(cfg, out_dir=None, seeds=None, epochs=None,
                    reward_mode=None, solvers=None):
    """Command-line overrides on top of a loaded config."""
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if seeds is not None:
        cfg = replace(cfg, seeds=tuple(seeds))
    if epochs is not None:
        cfg = replace(cfg,
                      epochs=epochs,
                      gdm=replace(cfg.gdm, epochs=epochs),
                      ppo=replace(cfg.ppo, epochs=epochs))
    if reward_mode is not None:
        cfg = replace(cfg, reward_mode_name=reward_mode)
    if solvers is not None:
        cfg = replace(cfg, solvers=tuple(solvers))
    return cfg
