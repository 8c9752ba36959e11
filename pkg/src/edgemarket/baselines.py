"""Comparison solvers: a clipped-ratio actor-critic and random search.

The actor-critic follows the usual proximal-update recipe on a squashed
Gaussian policy. Probability ratios are formed in the pre-squash space,
where the old and new densities share the same deterministic squash and the
Jacobian terms cancel. Random search samples a fresh uniform price every
epoch and just records what happens.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import nn
from .env import reset, state_features, step
from .logs import make_log

STD_MIN = 1e-3
STD_MAX = 1.0


@dataclass
class GaussianPolicy:
    """Squashed Gaussian over prices: state-dependent mean, global std."""

    mean_net: nn.DenseNet
    log_std: np.ndarray
    price_min: float
    price_max: float

    def __post_init__(self):
        if self.mean_net.widths[-1] != 1:
            raise ValueError("mean net must emit a single pre-squash mean")
        if self.log_std.shape != (1,):
            raise ValueError("log_std must be a length-1 array")
        if not self.price_min < self.price_max:
            raise ValueError("need price_min < price_max")

    def std(self):
        """Exponentiated log_std, clamped; returns (value, grad_indicator)."""
        raw = math.exp(float(self.log_std[0]))
        if raw < STD_MIN:
            return STD_MIN, 0.0
        if raw > STD_MAX:
            return STD_MAX, 0.0
        return raw, 1.0

    def squash(self, u):
        span = self.price_max - self.price_min
        return self.price_min + span * (np.tanh(u) + 1.0) / 2.0


def init_gaussian_policy(n_features, hidden_widths, price_min, price_max,
                         rng, init_std=0.5):
    widths = (n_features, *hidden_widths, 1)
    activations = ("tanh",) * len(hidden_widths) + ("identity",)
    mean_net = nn.init_dense(widths, activations, rng)
    return GaussianPolicy(
        mean_net=mean_net,
        log_std=np.array([math.log(init_std)]),
        price_min=float(price_min),
        price_max=float(price_max),
    )


def init_value_net(n_features, hidden_widths, rng):
    widths = (n_features, *hidden_widths, 1)
    activations = ("tanh",) * len(hidden_widths) + ("identity",)
    return nn.init_dense(widths, activations, rng)


@dataclass(frozen=True)
class PpoConfig:
    """Training knobs for the clipped-ratio baseline."""

    epochs: int = 500
    batch_size: int = 64
    update_passes: int = 10
    clip_ratio: float = 0.2
    entropy_bonus: float = 0.01
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    hidden: tuple = (64, 64)
    init_std: float = 0.5
    horizon: int = 1

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.batch_size < 1 or self.update_passes < 1:
            raise ValueError("batch size and update passes must be positive")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip ratio must lie in (0, 1)")
        if self.entropy_bonus < 0:
            raise ValueError("entropy bonus must be nonnegative")
        if self.policy_lr <= 0 or self.value_lr <= 0:
            raise ValueError("learning rates must be positive")
        if not STD_MIN <= self.init_std <= STD_MAX:
            raise ValueError(f"init_std must lie in [{STD_MIN}, {STD_MAX}]")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


def gaussian_log_prob(u, mean, std):
    z = (u - mean) / std
    return -0.5 * z * z - math.log(std) - 0.5 * math.log(2.0 * math.pi)


def ppo_train(policy, value_net, scenario, reward_mode, config, rng):
    """Clipped-surrogate training; one environment step per epoch.

    Transitions accumulate into an on-policy batch; every full batch gets
    ``update_passes`` gradient passes of the clipped policy objective (with
    entropy bonus) and a value regression, then is discarded. The trailing
    partial batch at the end of training is never used.
    """
    log = make_log(config.epochs)
    if config.epochs == 0:
        return log
    market = scenario.market
    policy_params = policy.mean_net.parameters() + [policy.log_std]
    policy_opt = nn.adam_init(policy_params, lr=config.policy_lr)
    value_params = value_net.parameters()
    value_opt = nn.adam_init(value_params, lr=config.value_lr)

    batch_feats, batch_u, batch_rewards, batch_logp = [], [], [], []
    last_value_loss = 0.0
    state = None
    steps_left = 0
    for epoch in range(config.epochs):
        if steps_left == 0:
            state = reset(scenario, rng)
            steps_left = config.horizon
        feats = state_features(state, scenario)
        mean = float(nn.forward(policy.mean_net, feats.reshape(1, -1))[0, 0])
        std, _ = policy.std()
        u = mean + std * float(rng.standard_normal())
        price = float(policy.squash(u))
        state, reward, info = step(state, price, scenario, reward_mode)
        steps_left -= 1

        batch_feats.append(feats)
        batch_u.append(u)
        batch_rewards.append(reward)
        batch_logp.append(gaussian_log_prob(u, mean, std))

        if len(batch_feats) == config.batch_size:
            last_value_loss = _ppo_update(
                policy, value_net, config, policy_opt, policy_params,
                value_opt, value_params,
                np.stack(batch_feats),
                np.array(batch_u)[:, None],
                np.array(batch_rewards)[:, None],
                np.array(batch_logp)[:, None],
                epoch,
            )
            batch_feats, batch_u, batch_rewards, batch_logp = [], [], [], []

        log.prices[epoch] = price
        log.server_utilities[epoch] = info["server_utility"]
        log.rewards[epoch] = reward
        log.aux_losses[epoch] = last_value_loss
    return log


def _ppo_update(policy, value_net, config, policy_opt, policy_params,
                value_opt, value_params, feats, u, rewards, logp_old, epoch):
    batch = feats.shape[0]
    values, vcache = nn.forward_cached(value_net, feats)
    advantage = rewards - values

    vdiff = values - rewards
    value_loss = float(np.mean(vdiff * vdiff))
    if not math.isfinite(value_loss):
        raise FloatingPointError(f"value loss diverged at epoch {epoch + 1}")
    vgrads, _ = nn.backward(value_net, feats, (2.0 / batch) * vdiff, vcache)
    nn.adam_step(value_opt, value_params, nn.flatten_grads(vgrads))

    lo, hi = 1.0 - config.clip_ratio, 1.0 + config.clip_ratio
    for _ in range(config.update_passes):
        mean, mcache = nn.forward_cached(policy.mean_net, feats)
        std, std_grad_on = policy.std()
        logp = gaussian_log_prob(u, mean, std)
        ratio = np.exp(logp - logp_old)
        clipped = np.clip(ratio, lo, hi)
        surrogate = np.minimum(ratio * advantage, clipped * advantage)
        entropy = math.log(std) + 0.5 * math.log(2.0 * math.pi * math.e)
        objective = float(np.mean(surrogate)) + config.entropy_bonus * entropy
        if not math.isfinite(objective):
            raise FloatingPointError(
                f"policy objective diverged at epoch {epoch + 1}"
            )
        # Gradient flows through the unclipped term wherever it attains the
        # minimum; the clipped term is flat in the parameters there.
        unclipped_active = (ratio * advantage
                            <= clipped * advantage).astype(np.float64)
        d_logp = unclipped_active * ratio * advantage / batch
        d_mean = d_logp * (u - mean) / (std * std)
        z2 = ((u - mean) / std) ** 2
        d_log_std = float(np.sum(d_logp * (z2 - 1.0)))
        d_log_std += config.entropy_bonus
        d_log_std *= std_grad_on
        mgrads, _ = nn.backward(policy.mean_net, feats, -d_mean, mcache)
        grads = nn.flatten_grads(mgrads) + [np.array([-d_log_std])]
        nn.adam_step(policy_opt, policy_params, grads)
    return value_loss


def random_search(scenario, reward_mode, epochs, rng, horizon=1):
    """Uniform price sampling; the no-learning reference curve."""
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    log = make_log(epochs)
    market = scenario.market
    state = None
    steps_left = 0
    for epoch in range(epochs):
        if steps_left == 0:
            state = reset(scenario, rng)
            steps_left = horizon
        price = float(rng.uniform(market.price_min, market.price_max))
        state, reward, info = step(state, price, scenario, reward_mode)
        steps_left -= 1
        log.prices[epoch] = price
        log.server_utilities[epoch] = info["server_utility"]
        log.rewards[epoch] = reward
    return log
