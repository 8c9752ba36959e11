"""Diffusion policy for price generation, trained against a learned critic.

The action is produced by reverse diffusion: starting from a standard-normal
draw, a denoiser conditioned on the game state iteratively removes noise,
and the final value is squashed onto the price interval. Training is
deterministic-policy-gradient style: a critic regresses observed rewards,
and the denoiser ascends the critic by differentiating through the entire
reverse chain.

Pre-squash values live on an unbounded scale whose spread is set by the
schedule itself (see ``prior_std``); the squash divides by that spread so a
freshly initialized policy covers the price range without saturating.
"""

import collections
import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .env import reset, state_features, step
from .logs import make_log

EMBED_WIDTH = 3


@dataclass(frozen=True)
class DiffusionSchedule:
    """Noise schedule: betas[i] is the step-(i+1) variance increment."""

    betas: tuple
    alphas: np.ndarray = field(init=False, repr=False, compare=False)
    alpha_bars: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=np.float64)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("schedule needs at least one step")
        if not np.all((b > 0.0) & (b < 1.0)):
            raise ValueError("every beta must lie strictly inside (0, 1)")
        object.__setattr__(self, "betas", tuple(float(x) for x in b))
        object.__setattr__(self, "alphas", 1.0 - b)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - b))

    @property
    def steps(self):
        return len(self.betas)

    @classmethod
    def linear(cls, steps=5, beta_start=1e-4, beta_end=0.2,
               max_terminal_alpha_bar=0.05):
        """Linearly spaced betas, rescaled until alpha_bar_T is small enough.

        A short linear ramp keeps most of its signal (alpha_bar_T well above
        the target), so the whole ramp is multiplied by the smallest factor
        that pushes alpha_bar_T to ``max_terminal_alpha_bar``, found by
        bisection. The returned schedule always satisfies the bound.
        """
        if steps < 1:
            raise ValueError("steps must be at least 1")
        if not 0.0 < beta_start <= beta_end < 1.0:
            raise ValueError("need 0 < beta_start <= beta_end < 1")
        if not 0.0 < max_terminal_alpha_bar < 1.0:
            raise ValueError("terminal alpha_bar bound must be in (0, 1)")
        base = np.linspace(beta_start, beta_end, steps)

        def terminal(scale):
            return float(np.prod(1.0 - scale * base))

        if terminal(1.0) <= max_terminal_alpha_bar:
            return cls(betas=tuple(base))
        lo = 1.0
        hi = 0.999999 / float(base[-1])
        if terminal(hi) > max_terminal_alpha_bar:
            raise ValueError("schedule cannot reach the terminal noise target")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if terminal(mid) <= max_terminal_alpha_bar:
                hi = mid
            else:
                lo = mid
        return cls(betas=tuple(hi * base))


def forward_noise(schedule, action0, t, noise):
    """Noising step t applied to a clean action: closed-form marginal."""
    if not 1 <= t <= schedule.steps:
        raise ValueError(f"timestep {t} outside [1, {schedule.steps}]")
    ab = schedule.alpha_bars[t - 1]
    return math.sqrt(ab) * action0 + math.sqrt(1.0 - ab) * noise


def prior_std(schedule):
    """Pre-squash standard deviation of samples under a zero denoiser.

    Follows the reverse recursion variance: each step divides by alpha_t and
    adds beta_t of fresh noise, except the last, which adds none.
    """
    var = 1.0
    for t in range(schedule.steps, 0, -1):
        var /= schedule.alphas[t - 1]
        if t > 1:
            var += schedule.betas[t - 1]
    return math.sqrt(var)


def timestep_embedding(t, steps):
    """Normalized step index plus a sine/cosine pair to break symmetry."""
    frac = t / steps
    two_pi = 2.0 * math.pi
    return np.array([frac, math.sin(two_pi * frac), math.cos(two_pi * frac)])


@dataclass
class DiffusionPolicy:
    """Denoiser network plus schedule and the price interval it feeds."""

    denoiser: nn.DenseNet
    schedule: DiffusionSchedule
    price_min: float
    price_max: float
    squash_scale: float

    def __post_init__(self):
        if self.denoiser.widths[-1] != 1:
            raise ValueError("denoiser must emit a single noise estimate")
        if self.denoiser.widths[0] < 1 + EMBED_WIDTH + 1:
            raise ValueError("denoiser input must fit action, embedding, state")
        if not self.price_min < self.price_max:
            raise ValueError("need price_min < price_max")
        if not self.squash_scale > 0:
            raise ValueError("squash scale must be positive")

    @property
    def n_features(self):
        return self.denoiser.widths[0] - 1 - EMBED_WIDTH


def init_policy(n_features, hidden_widths, schedule, price_min, price_max,
                rng, squash_scale=None):
    """Seeded policy; hidden layers use the smooth sigmoid-weighted unit."""
    widths = (1 + EMBED_WIDTH + n_features, *hidden_widths, 1)
    activations = ("silu",) * len(hidden_widths) + ("identity",)
    denoiser = nn.init_dense(widths, activations, rng)
    if squash_scale is None:
        squash_scale = prior_std(schedule)
    return DiffusionPolicy(denoiser=denoiser, schedule=schedule,
                           price_min=float(price_min),
                           price_max=float(price_max),
                           squash_scale=float(squash_scale))


def squash(policy, presquash):
    """Affine-saturating map from the unbounded scale onto price bounds."""
    u = np.tanh(np.asarray(presquash, dtype=np.float64) / policy.squash_scale)
    span = policy.price_max - policy.price_min
    return policy.price_min + span * (u + 1.0) / 2.0


def draw_chain_noise(steps, batch, rng):
    """Terminal prior draw plus the per-step noises for t = T..2."""
    a_init = rng.standard_normal((batch, 1))
    noises = [rng.standard_normal((batch, 1)) for _ in range(steps - 1)]
    return a_init, noises


def chain_forward(policy, features, a_init, noises):
    """Run the reverse chain on a batch; keeps caches for chain_backward.

    ``noises[i]`` is the fresh noise injected after the step at t = T - i;
    none is injected at t = 1. Returns the clean pre-squash action batch and
    the per-step caches.
    """
    sched = policy.schedule
    steps = sched.steps
    if len(noises) != steps - 1:
        raise ValueError(f"need {steps - 1} noise draws, got {len(noises)}")
    batch, width = features.shape
    if width != policy.n_features:
        raise nn.ShapeError(
            f"feature width {width} != policy expectation {policy.n_features}"
        )
    a = np.asarray(a_init, dtype=np.float64).reshape(batch, 1)
    caches = []
    for i, t in enumerate(range(steps, 0, -1)):
        x = np.empty((batch, 1 + EMBED_WIDTH + width))
        x[:, 0:1] = a
        x[:, 1:1 + EMBED_WIDTH] = timestep_embedding(t, steps)
        x[:, 1 + EMBED_WIDTH:] = features
        eps, cache = nn.forward_cached(policy.denoiser, x)
        caches.append((t, x, cache))
        alpha = sched.alphas[t - 1]
        beta = sched.betas[t - 1]
        ab = sched.alpha_bars[t - 1]
        a = (a - (beta / math.sqrt(1.0 - ab)) * eps) / math.sqrt(alpha)
        if t > 1:
            a = a + math.sqrt(beta) * noises[i]
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(
                f"non-finite value in reverse diffusion at step t={t}"
            )
    return a, caches


def chain_backward(policy, caches, d_action0):
    """Backpropagate d(loss)/d(a_0) through every reverse step.

    Returns denoiser parameter gradients (summed over the chain) and the
    gradient with respect to the terminal noise draw.
    """
    sched = policy.schedule
    grads = [[np.zeros_like(w), np.zeros_like(b)]
             for w, b in zip(policy.denoiser.weights, policy.denoiser.biases)]
    d_a = np.asarray(d_action0, dtype=np.float64)
    for t, x, cache in reversed(caches):
        alpha = sched.alphas[t - 1]
        beta = sched.betas[t - 1]
        ab = sched.alpha_bars[t - 1]
        # a_{t-1} = (a_t - coeff * eps(a_t)) / sqrt(alpha) + const
        coeff = beta / math.sqrt(1.0 - ab)
        upstream = d_a * (-coeff / math.sqrt(alpha))
        step_grads, dx = nn.backward(policy.denoiser, x, upstream, cache)
        for acc, g in zip(grads, step_grads):
            acc[0] += g[0]
            acc[1] += g[1]
        d_a = d_a / math.sqrt(alpha) + dx[:, 0:1]
    return grads, d_a


def sample_presquash(policy, features, rng):
    """One reverse-chain sample before squashing; deterministic given rng."""
    feats = np.asarray(features, dtype=np.float64).reshape(1, -1)
    a_init, noises = draw_chain_noise(policy.schedule.steps, 1, rng)
    action0, _ = chain_forward(policy, feats, a_init, noises)
    return float(action0[0, 0])


def sample_action(policy, features, rng):
    """Generate a price for the given state features."""
    return float(squash(policy, sample_presquash(policy, features, rng)))


@dataclass
class Critic:
    """State-action value network; input is [features..., normalized action]."""

    q_net: nn.DenseNet

    def __post_init__(self):
        if self.q_net.widths[-1] != 1:
            raise ValueError("critic must emit a scalar value")
        if self.q_net.widths[0] < 2:
            raise ValueError("critic input must fit state features plus action")

    @property
    def n_features(self):
        return self.q_net.widths[0] - 1


def init_critic(n_features, hidden_widths, rng):
    widths = (n_features + 1, *hidden_widths, 1)
    activations = ("silu",) * len(hidden_widths) + ("identity",)
    return Critic(q_net=nn.init_dense(widths, activations, rng))


def critic_value(critic, features, actions_norm):
    x = np.hstack((features, actions_norm))
    return nn.forward(critic.q_net, x)


class ReplayBuffer:
    """Bounded FIFO store of transitions, sampled uniformly with replacement.

    Records carry the successor features and episode-end flag so bootstrap
    targets are possible when the horizon exceeds one step.
    """

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._records = collections.deque(maxlen=capacity)

    def __len__(self):
        return len(self._records)

    def push(self, features, action_norm, reward, next_features, done):
        self._records.append((
            np.array(features, dtype=np.float64),
            float(action_norm),
            float(reward),
            np.array(next_features, dtype=np.float64),
            bool(done),
        ))

    def sample(self, batch_size, rng):
        if not self._records:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._records), size=batch_size)
        feats = np.stack([self._records[i][0] for i in idx])
        actions = np.array([[self._records[i][1]] for i in idx])
        rewards = np.array([[self._records[i][2]] for i in idx])
        nxt = np.stack([self._records[i][3] for i in idx])
        done = np.array([[1.0 if self._records[i][4] else 0.0] for i in idx])
        return feats, actions, rewards, nxt, done


@dataclass(frozen=True)
class GdmConfig:
    """Training knobs for the diffusion policy.

    The leader objective is a narrow ridge near the lower price bound, so
    the critic needs far more regression work than the actor: large batches,
    a hot learning rate, many updates per epoch, and a warmup phase during
    which the actor stays frozen. With a timid critic the actor slides past
    the ridge into the squash's saturated corner and never recovers.
    """

    epochs: int = 500
    buffer_capacity: int = 2048
    batch_size: int = 128
    actor_lr: float = 3e-4
    critic_lr: float = 3e-3
    critic_batch_size: int = 256
    critic_updates: int = 16
    actor_updates: int = 4
    critic_warmup: int = 100
    denoiser_hidden: tuple = (64, 64)
    critic_hidden: tuple = (64, 64)
    diffusion_steps: int = 5
    explore_start: float = 0.2
    explore_end: float = 0.005
    horizon: int = 1
    discount: float = 0.95

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.buffer_capacity < 1 or self.batch_size < 1:
            raise ValueError("buffer capacity and batch size must be positive")
        if self.critic_batch_size < 1:
            raise ValueError("critic batch size must be positive")
        if self.critic_updates < 1 or self.actor_updates < 1:
            raise ValueError("per-epoch update counts must be positive")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.diffusion_steps < 1:
            raise ValueError("diffusion_steps must be at least 1")
        if self.explore_start < 0 or self.explore_end < 0:
            raise ValueError("exploration scales must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.critic_warmup < 0:
            raise ValueError("critic_warmup must be nonnegative")


def exploration_scale(config, epoch_index):
    """Linear anneal from explore_start to explore_end over the first half."""
    half = max(1, config.epochs // 2)
    frac = min(1.0, epoch_index / half)
    return config.explore_start + (config.explore_end - config.explore_start) * frac


def train(policy, critic, scenario, reward_mode, config, rng):
    """Actor-critic training loop; one environment step per epoch.

    Each epoch: act with annealed exploration noise, record the transition,
    regress the critic toward the (possibly bootstrapped) return, then push
    the denoiser up the critic's value by differentiating through the full
    reverse chain. Aborts with FloatingPointError if either loss diverges.
    """
    log = make_log(config.epochs)
    if config.epochs == 0:
        return log
    market = scenario.market
    span = market.price_max - market.price_min
    kappa = policy.squash_scale
    buffer = ReplayBuffer(config.buffer_capacity)
    actor_params = policy.denoiser.parameters()
    critic_params = critic.q_net.parameters()
    actor_opt = nn.adam_init(actor_params, lr=config.actor_lr)
    critic_opt = nn.adam_init(critic_params, lr=config.critic_lr)

    state = None
    steps_left = 0
    for epoch in range(config.epochs):
        if steps_left == 0:
            state = reset(scenario, rng)
            steps_left = config.horizon
        feats = state_features(state, scenario)

        action0 = sample_presquash(policy, feats, rng)
        noise = float(rng.standard_normal())
        explored = action0 + exploration_scale(config, epoch) * kappa * noise
        action_norm = math.tanh(explored / kappa)
        price = market.price_min + span * (action_norm + 1.0) / 2.0

        state, reward, info = step(state, price, scenario, reward_mode)
        steps_left -= 1
        done = steps_left == 0
        buffer.push(feats, action_norm, reward,
                    state_features(state, scenario), done)

        critic_loss = 0.0
        for _ in range(config.critic_updates):
            critic_loss = _critic_update(policy, critic, buffer, config,
                                         critic_opt, critic_params, rng, epoch)
        if epoch >= config.critic_warmup:
            for _ in range(config.actor_updates):
                _actor_update(policy, critic, buffer, config,
                              actor_opt, actor_params, rng, epoch)

        log.prices[epoch] = price
        log.server_utilities[epoch] = info["server_utility"]
        log.rewards[epoch] = reward
        log.aux_losses[epoch] = critic_loss
    return log


def _critic_update(policy, critic, buffer, config, opt, params, rng, epoch):
    batch = config.critic_batch_size
    feats, actions, rewards, next_feats, done = buffer.sample(batch, rng)
    if config.horizon > 1:
        a_init, noises = draw_chain_noise(policy.schedule.steps, batch, rng)
        next_a0, _ = chain_forward(policy, next_feats, a_init, noises)
        next_norm = np.tanh(next_a0 / policy.squash_scale)
        bootstrap = critic_value(critic, next_feats, next_norm)
        target = rewards + config.discount * (1.0 - done) * bootstrap
    else:
        target = rewards
    x = np.hstack((feats, actions))
    q, cache = nn.forward_cached(critic.q_net, x)
    diff = q - target
    loss = float(np.mean(diff * diff))
    if not math.isfinite(loss):
        raise FloatingPointError(f"critic loss diverged at epoch {epoch + 1}")
    upstream = (2.0 / batch) * diff
    grads, _ = nn.backward(critic.q_net, x, upstream, cache)
    nn.adam_step(opt, params, nn.flatten_grads(grads))
    return loss


def _actor_update(policy, critic, buffer, config, opt, params, rng, epoch):
    feats, _, _, _, _ = buffer.sample(config.batch_size, rng)
    a_init, noises = draw_chain_noise(policy.schedule.steps,
                                      config.batch_size, rng)
    action0, caches = chain_forward(policy, feats, a_init, noises)
    action_norm = np.tanh(action0 / policy.squash_scale)
    x = np.hstack((feats, action_norm))
    q, cache = nn.forward_cached(critic.q_net, x)
    actor_loss = -float(np.mean(q))
    if not math.isfinite(actor_loss):
        raise FloatingPointError(f"actor loss diverged at epoch {epoch + 1}")
    upstream = np.full((config.batch_size, 1), -1.0 / config.batch_size)
    _, dx = nn.backward(critic.q_net, x, upstream, cache)
    d_norm = dx[:, -1:]
    d_action0 = d_norm * (1.0 - action_norm * action_norm) / policy.squash_scale
    grads, _ = chain_backward(policy, caches, d_action0)
    nn.adam_step(opt, params, nn.flatten_grads(grads))
