"""Scenario sampling, the round environment, and feature normalization."""

import json
import math
import pathlib

import numpy as np
import pytest

from edgemarket.env import (
    GameState,
    binary_reward,
    raw_reward,
    reset,
    sample_scenario,
    state_features,
    step,
)
from edgemarket.game import DeviceProfile, MarketParams

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

MARKET = MarketParams(n_devices=3, l_max=40, coeff_a=2.0, coeff_b=4.0,
                      revenue_f=1000.0, beta=0.3, price_min=0.01,
                      price_max=5.0)


def enum_best_response(dev, price, market):
    cap = min(market.l_max,
              math.floor((dev.capacity_w - market.coeff_b) / market.coeff_a))
    best_l, best_u = 0, -math.inf
    for layers in range(int(cap) + 1):
        residual = dev.capacity_w - (market.coeff_a * layers + market.coeff_b)
        utility = price * layers + dev.alpha * math.log1p(residual)
        if utility > best_u:
            best_l, best_u = layers, utility
    return best_l


def default_scenario():
    market = MarketParams(n_devices=10, l_max=40, coeff_a=2.0, coeff_b=4.0,
                          revenue_f=1000.0, beta=0.3, price_min=0.01,
                          price_max=5.0)
    return sample_scenario(market, (90.0, 120.0), (5.0, 15.0), seed=0)


class TestSampleScenario:
    def test_zero_width_ranges_give_identical_devices(self):
        scen = sample_scenario(MARKET, (90.0, 90.0), (10.0, 10.0), seed=5)
        assert len(scen.devices) == 3
        for dev in scen.devices:
            assert dev.capacity_w == 90.0
            assert dev.alpha == 10.0

    def test_same_seed_is_bit_identical(self):
        a = sample_scenario(MARKET, (90.0, 120.0), (5.0, 15.0), seed=3)
        b = sample_scenario(MARKET, (90.0, 120.0), (5.0, 15.0), seed=3)
        assert a == b

    def test_different_seeds_differ(self):
        a = sample_scenario(MARKET, (90.0, 120.0), (5.0, 15.0), seed=0)
        b = sample_scenario(MARKET, (90.0, 120.0), (5.0, 15.0), seed=1)
        assert a.devices != b.devices

    def test_inverted_ranges_rejected(self):
        with pytest.raises(ValueError):
            sample_scenario(MARKET, (120.0, 90.0), (5.0, 15.0), seed=0)
        with pytest.raises(ValueError):
            sample_scenario(MARKET, (90.0, 120.0), (15.0, 5.0), seed=0)

    def test_capacity_must_exceed_fixed_cost(self):
        with pytest.raises(ValueError):
            sample_scenario(MARKET, (2.0, 120.0), (5.0, 15.0), seed=0)


class TestReset:
    def test_reproducible(self):
        scen = default_scenario()
        s1 = reset(scen, np.random.default_rng(9))
        s2 = reset(scen, np.random.default_rng(9))
        assert s1 == s2

    def test_degenerate_bounds_pin_price(self):
        market = MarketParams(n_devices=2, l_max=40, coeff_a=2.0, coeff_b=4.0,
                              revenue_f=1000.0, beta=0.3, price_min=1.0,
                              price_max=1.0 + 1e-12)
        scen = sample_scenario(market, (100.0, 100.0), (10.0, 10.0), seed=0)
        state = reset(scen, np.random.default_rng(0))
        assert state.price_prev == pytest.approx(1.0, abs=1e-9)
        expected = enum_best_response(scen.devices[0], state.price_prev,
                                      market)
        assert state.layer_prev == (expected, expected)

    def test_golden_initial_state(self):
        fix = json.loads((FIXTURES / "initial_state_seed0.json").read_text())
        scen = default_scenario()
        state = reset(scen, np.random.default_rng(fix["reset_seed"]))
        assert state.price_prev == fix["price_prev"]
        assert list(state.layer_prev) == fix["layer_prev"]
        # cross-check the stored layers against enumeration
        for dev, layers in zip(scen.devices, state.layer_prev):
            assert layers == enum_best_response(dev, state.price_prev,
                                                scen.market)


class TestStep:
    def test_deterministic_and_best_responding(self):
        scen = default_scenario()
        state = reset(scen, np.random.default_rng(0))
        n1 = step(state, 1.0, scen, raw_reward(1000.0))
        n2 = step(state, 1.0, scen, raw_reward(1000.0))
        assert n1[0] == n2[0] and n1[1] == n2[1]
        for dev, layers in zip(scen.devices, n1[0].layer_prev):
            assert layers == enum_best_response(dev, 1.0, scen.market)

    def test_raw_reward_scaled_utility(self):
        # two devices at W=100, alpha=10 best-respond with 38 layers at P=1,
        # giving the worked server utility 921.6; scale F=1000
        market = MarketParams(n_devices=2, l_max=40, coeff_a=2.0, coeff_b=4.0,
                              revenue_f=1000.0, beta=0.3, price_min=0.01,
                              price_max=5.0)
        scen = sample_scenario(market, (100.0, 100.0), (10.0, 10.0), seed=0)
        state = GameState(price_prev=0.01, layer_prev=(0, 0))
        _, reward, info = step(state, 1.0, scen, raw_reward(1000.0))
        assert info["server_utility"] == pytest.approx(921.6)
        assert reward == pytest.approx(0.9216)

    def test_binary_reward_on_improvement(self):
        market = MarketParams(n_devices=2, l_max=40, coeff_a=2.0, coeff_b=4.0,
                              revenue_f=1000.0, beta=0.3, price_min=0.01,
                              price_max=5.0)
        scen = sample_scenario(market, (100.0, 100.0), (10.0, 10.0), seed=0)
        # incoming state worth 900: full offload at P=1.25 gives
        # 1000 - 1.25*80 - 0 = 900 (layers pinned by the stored state)
        low_state = GameState(price_prev=1.25, layer_prev=(40, 40))
        _, reward, info = step(low_state, 1.0, scen, binary_reward())
        assert info["server_utility"] == pytest.approx(921.6)
        assert reward == 1.0

    def test_binary_reward_on_decline_and_tie(self):
        market = MarketParams(n_devices=2, l_max=40, coeff_a=2.0, coeff_b=4.0,
                              revenue_f=1000.0, beta=0.3, price_min=0.01,
                              price_max=5.0)
        scen = sample_scenario(market, (100.0, 100.0), (10.0, 10.0), seed=0)
        good = GameState(price_prev=0.5, layer_prev=(33, 33))
        # a worse price earns 0
        _, reward, _ = step(good, 5.0, scen, binary_reward())
        assert reward == 0.0
        # replaying the identical price ties exactly and still earns 0
        nxt, _, _ = step(good, 0.5, scen, binary_reward())
        _, reward, _ = step(nxt, 0.5, scen, binary_reward())
        assert reward == 0.0

    def test_out_of_bounds_action_rejected(self):
        scen = default_scenario()
        state = reset(scen, np.random.default_rng(0))
        with pytest.raises(ValueError):
            step(state, 5.001, scen, raw_reward(1000.0))
        with pytest.raises(ValueError):
            step(state, 0.0, scen, raw_reward(1000.0))

    def test_rewards_finite_and_binary_in_unit_set(self):
        scen = default_scenario()
        state = reset(scen, np.random.default_rng(1))
        rng = np.random.default_rng(2)
        for _ in range(50):
            price = float(rng.uniform(0.01, 5.0))
            state, raw, _ = step(state, price, scen, raw_reward(1000.0))
            assert math.isfinite(raw)
            _, binary, _ = step(state, price, scen, binary_reward())
            assert binary in (0.0, 1.0)


class TestStateFeatures:
    def test_lower_boundary(self):
        scen = default_scenario()
        state = GameState(price_prev=0.01, layer_prev=(0,) * 10)
        feats = state_features(state, scen)
        assert feats.shape == (11,)
        assert feats[0] == pytest.approx(-1.0)
        assert np.all(feats[1:] == 0.0)

    def test_upper_boundary(self):
        scen = default_scenario()
        state = GameState(price_prev=5.0, layer_prev=(40,) * 10)
        feats = state_features(state, scen)
        assert feats[0] == pytest.approx(1.0)
        assert np.all(feats[1:] == 1.0)

    def test_midpoint(self):
        scen = default_scenario()
        state = GameState(price_prev=(0.01 + 5.0) / 2.0,
                          layer_prev=(20,) * 10)
        feats = state_features(state, scen)
        assert feats[0] == pytest.approx(0.0)
        assert np.all(feats[1:] == 0.5)

    def test_all_entries_bounded(self):
        scen = default_scenario()
        rng = np.random.default_rng(4)
        state = reset(scen, rng)
        for _ in range(25):
            price = float(rng.uniform(0.01, 5.0))
            state, _, _ = step(state, price, scen, raw_reward(1000.0))
            feats = state_features(state, scen)
            assert len(feats) == scen.market.n_devices + 1
            assert np.all(feats >= -1.0) and np.all(feats <= 1.0)
