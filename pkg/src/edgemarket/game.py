"""Layer-pricing game between an edge server and its devices.

The server posts a per-layer price; each device independently picks how many
transformer layers to run locally. Device utility is the payment for the
layers it runs plus a logarithmic satisfaction term in its leftover compute;
server utility is fixed revenue minus payments minus the cost of the layers
it still has to run itself.

Because device utilities have nonincreasing first differences in the layer
count, each device's optimal layer count is a step function of price whose
jump points (``switch_threshold``) fully describe the server's piecewise
affine objective. ``stackelberg_oracle`` exploits that structure for an
exact solve; ``grid_search_price`` is the dumb fine-grid reference used to
cross-check it.

All functions are pure and operate on immutable inputs.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DeviceProfile:
    """One follower: compute budget and its weight on leftover compute."""

    capacity_w: float
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.capacity_w) or self.capacity_w < 0:
            raise ValueError(f"capacity_w must be finite and nonnegative, got {self.capacity_w}")
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be finite and nonnegative, got {self.alpha}")


@dataclass(frozen=True)
class MarketParams:
    """Leader-side constants of the market."""

    n_devices: int
    l_max: int
    coeff_a: float
    coeff_b: float
    revenue_f: float
    beta: float
    price_min: float
    price_max: float

    def __post_init__(self):
        values = (self.coeff_a, self.coeff_b, self.revenue_f, self.beta,
                  self.price_min, self.price_max)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("market parameters must be finite")
        if self.n_devices < 1:
            raise ValueError("n_devices must be at least 1")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")
        if self.coeff_a <= 0:
            raise ValueError("coeff_a must be positive")
        if self.coeff_b < 0:
            raise ValueError("coeff_b must be nonnegative")
        if self.revenue_f <= 0:
            raise ValueError("revenue_f must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0 <= self.price_min < self.price_max:
            raise ValueError("need 0 <= price_min < price_max")


@dataclass(frozen=True)
class EquilibriumSolution:
    """Leader price, induced layer vector, and the resulting utilities."""

    price: float
    layers: tuple
    server_utility: float
    device_utilities: tuple


def layer_cap(dev, market):
    """Largest feasible local layer count: min(l_max, floor((W - B) / A)).

    Raises if the device cannot afford even the fixed overhead (W <= B).
    """
    if dev.capacity_w <= market.coeff_b:
        raise ValueError(
            f"device capacity {dev.capacity_w} does not cover fixed overhead "
            f"{market.coeff_b}"
        )
    return min(market.l_max,
               int(math.floor((dev.capacity_w - market.coeff_b) / market.coeff_a)))


def device_compute(layers, market):
    """Computation used by a device running ``layers`` layers: A*L + B."""
    if layers < 0:
        raise ValueError("layer count must be nonnegative")
    return market.coeff_a * layers + market.coeff_b


def device_utility(dev, layers, price, market):
    """Payment plus log satisfaction: P*L + alpha*ln(1 + W - (A*L + B))."""
    comp = device_compute(layers, market)
    if comp > dev.capacity_w:
        raise ValueError(
            f"infeasible layer count {layers}: compute {comp} exceeds capacity "
            f"{dev.capacity_w}"
        )
    return price * layers + dev.alpha * math.log1p(dev.capacity_w - comp)


def best_response(dev, price, market):
    """Utility-maximizing integer layer count at the given price.

    Clamps the continuous stationary point and compares its integer
    neighbours; ties break toward the smaller count. Callers keep the price
    within market bounds; any nonnegative price is accepted here.
    """
    if price < 0:
        raise ValueError("price must be nonnegative")
    cap = layer_cap(dev, market)
    if cap == 0 or price == 0.0:
        # At zero price utility is nonincreasing in L, so the smallest wins.
        return 0
    if dev.alpha == 0.0:
        return cap
    stationary = (dev.capacity_w - market.coeff_b + 1.0
                  - dev.alpha * market.coeff_a / price) / market.coeff_a
    lo = min(cap, max(0, int(math.floor(stationary))))
    hi = min(cap, max(0, int(math.ceil(stationary))))
    if lo == hi:
        return lo
    u_lo = device_utility(dev, lo, price, market)
    u_hi = device_utility(dev, hi, price, market)
    return hi if u_hi > u_lo else lo


def best_response_vector(devices, price, market):
    return tuple(best_response(dev, price, market) for dev in devices)


def switch_threshold(dev, layers, market):
    """Price above which ``layers + 1`` is strictly preferred to ``layers``.

    tau_L = alpha * [ln(1 + W - A*L - B) - ln(1 + W - A*(L+1) - B)];
    strictly increasing in L when alpha > 0.
    """
    cap = layer_cap(dev, market)
    if not 0 <= layers < cap:
        raise ValueError(f"layer count {layers} outside [0, {cap})")
    resid_here = 1.0 + dev.capacity_w - market.coeff_a * layers - market.coeff_b
    resid_next = resid_here - market.coeff_a
    return dev.alpha * (math.log(resid_here) - math.log(resid_next))


def server_utility(price, layers, market):
    """Fixed revenue minus payments minus cost of the layers left on the server."""
    if len(layers) != market.n_devices:
        raise ValueError("layer vector length must equal n_devices")
    paid = price * sum(layers)
    remaining = market.beta * market.coeff_a * sum(market.l_max - l for l in layers)
    return market.revenue_f - paid - remaining


def _clamp_price(p, market):
    return min(market.price_max, max(market.price_min, p))


def stackelberg_oracle(devices, market, epsilon=1e-6):
    """Exact leader solve over the follower switch-threshold candidates.

    On any price interval where no follower switches, server utility is
    affine and decreasing (whenever anyone offloads), so the optimum is
    attained at an interval edge: a bound, a threshold, or just above one.
    Evaluating {price_min, price_max} plus every clamped tau and tau+epsilon
    is therefore within epsilon * N * l_max of the supremum. Ties go to the
    lowest candidate price.
    """
    devices = tuple(devices)
    if not devices:
        raise ValueError("need at least one device")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    candidates = {market.price_min, market.price_max}
    for dev in devices:
        for layers in range(layer_cap(dev, market)):
            tau = switch_threshold(dev, layers, market)
            candidates.add(_clamp_price(tau, market))
            candidates.add(_clamp_price(tau + epsilon, market))
    best = None
    for price in sorted(candidates):
        layers = best_response_vector(devices, price, market)
        utility = server_utility(price, layers, market)
        if best is None or utility > best.server_utility:
            best = EquilibriumSolution(
                price=price,
                layers=layers,
                server_utility=utility,
                device_utilities=tuple(
                    device_utility(dev, l, price, market)
                    for dev, l in zip(devices, layers)
                ),
            )
    return best


def grid_search_price(devices, market, dp=1e-4):
    """Fine-grid reference solve: argmax of server utility over a price grid.

    Vectorized over the grid; used to validate ``stackelberg_oracle`` and for
    diagnostics. Returns ``(price, server_utility)`` at the best grid point
    (first grid point on ties).
    """
    devices = tuple(devices)
    if not devices:
        raise ValueError("need at least one device")
    if dp <= 0:
        raise ValueError("dp must be positive")
    n_points = int(round((market.price_max - market.price_min) / dp)) + 1
    prices = np.linspace(market.price_min, market.price_max, n_points)
    total = _grid_layer_totals(devices, market, prices)
    utilities = (market.revenue_f - prices * total
                 - market.beta * market.coeff_a
                 * (market.n_devices * market.l_max - total))
    i = int(np.argmax(utilities))
    return float(prices[i]), float(utilities[i])


def _grid_layer_totals(devices, market, prices):
    """Sum of follower best responses at each grid price, fully vectorized."""
    w = np.array([d.capacity_w for d in devices])[:, None]
    alpha = np.array([d.alpha for d in devices])[:, None]
    caps = np.array([layer_cap(d, market) for d in devices])[:, None]
    a, b = market.coeff_a, market.coeff_b
    safe = np.where(prices > 0, prices, 1.0)[None, :]
    stationary = (w - b + 1.0 - alpha * a / safe) / a
    lo = np.clip(np.floor(stationary), 0, caps)
    hi = np.clip(np.ceil(stationary), 0, caps)
    u_lo = prices[None, :] * lo + alpha * np.log1p(w - (a * lo + b))
    u_hi = prices[None, :] * hi + alpha * np.log1p(w - (a * hi + b))
    layers = np.where(u_hi > u_lo, hi, lo)
    # alpha == 0 rows ride the same formula (stationary point beyond the cap);
    # zero price forces L = 0 regardless.
    layers = np.where(prices[None, :] > 0, layers, 0.0)
    return layers.sum(axis=0)
