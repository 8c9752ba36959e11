"""Synthetic per-layer cost profile for a split encoder and its linear fit.

A stack of identical transformer layers makes cumulative compute close to
linear in the split point; this module generates such profiles, fits the
A*L + B approximation the game model consumes, and reports the costs and
activation payload of any split.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LayerCostProfile:
    """Per-layer compute costs plus the front-end overhead and payload shape."""

    per_layer_cost: tuple
    fixed_cost: float
    token_count: int
    hidden_dim: int
    bytes_per_element: int

    def __post_init__(self):
        if len(self.per_layer_cost) < 1:
            raise ValueError("profile needs at least one layer")
        if any(c <= 0 for c in self.per_layer_cost):
            raise ValueError("per-layer costs must be positive")
        if self.fixed_cost <= 0:
            raise ValueError("fixed cost must be positive")
        if self.token_count < 1 or self.hidden_dim < 1 or self.bytes_per_element < 1:
            raise ValueError("payload shape fields must be positive")

    @property
    def l_max(self):
        return len(self.per_layer_cost)

    def cumulative(self):
        """C(L) for L = 0..l_max: fixed cost plus the first L layer costs."""
        return self.fixed_cost + np.concatenate(
            ([0.0], np.cumsum(self.per_layer_cost))
        )


def synthetic_profile(l_max, layer_cost, fixed_cost, token_count=50,
                      hidden_dim=768, bytes_per_element=4, jitter=0.0, seed=0):
    """Identical per-layer costs, optionally with seeded uniform jitter.

    ``jitter`` is the half-width of a uniform perturbation added to each
    layer's cost; it must stay below ``layer_cost`` so costs remain positive.
    """
    if jitter < 0 or jitter >= layer_cost:
        raise ValueError("jitter must be in [0, layer_cost)")
    costs = np.full(l_max, float(layer_cost))
    if jitter > 0:
        rng = np.random.default_rng(seed)
        costs = costs + rng.uniform(-jitter, jitter, size=l_max)
    return LayerCostProfile(
        per_layer_cost=tuple(costs),
        fixed_cost=float(fixed_cost),
        token_count=token_count,
        hidden_dim=hidden_dim,
        bytes_per_element=bytes_per_element,
    )


def fit_linear(profile):
    """Least-squares fit of cumulative cost against A*L + B over L = 0..l_max.

    Returns ``(coeff_a, coeff_b, max_residual)``. Degenerate profiles whose
    cumulative costs are all identical cannot be fit and raise.
    """
    if profile.l_max < 2:
        raise ValueError("need at least two layers to fit a slope")
    cumulative = profile.cumulative()
    if np.ptp(cumulative) == 0.0:
        raise ValueError("cumulative costs are all identical; fit is degenerate")
    levels = np.arange(profile.l_max + 1, dtype=np.float64)
    coeff_a, coeff_b = np.polyfit(levels, cumulative, 1)
    residuals = cumulative - (coeff_a * levels + coeff_b)
    return float(coeff_a), float(coeff_b), float(np.max(np.abs(residuals)))


def split_cost(profile, split_at):
    """Device-side cost, server-side cost, and transfer payload for a split.

    The payload is the intermediate activation, ``tokens * hidden * bytes``;
    it does not depend on the split point because identical layers preserve
    the token sequence shape (a modeling choice).
    """
    if not 0 <= split_at <= profile.l_max:
        raise ValueError(f"split point {split_at} outside [0, {profile.l_max}]")
    cumulative = profile.cumulative()
    device_cost = float(cumulative[split_at])
    server_cost = float(cumulative[-1] - cumulative[split_at])
    payload = profile.token_count * profile.hidden_dim * profile.bytes_per_element
    return device_cost, server_cost, payload
