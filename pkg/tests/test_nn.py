"""Dense layers, reverse-mode gradients against finite differences, Adam."""

import numpy as np
import pytest

from edgemarket import nn


def straight_line_forward(net, x):
    """Independent re-evaluation of the forward map with explicit loops."""
    act = {
        "identity": lambda z: z,
        "tanh": np.tanh,
        "relu": lambda z: np.maximum(z, 0.0),
        "silu": lambda z: z / (1.0 + np.exp(-z)),
    }
    out = np.asarray(x, dtype=np.float64)
    for w, b, name in zip(net.weights, net.biases, net.activations):
        out = act[name](out @ w + b)
    return out


def identity_net(width):
    return nn.DenseNet(
        widths=(width, width),
        activations=("identity",),
        weights=[np.eye(width)],
        biases=[np.zeros(width)],
    )


def scalar_net(weight, bias):
    return nn.DenseNet(
        widths=(1, 1),
        activations=("identity",),
        weights=[np.array([[float(weight)]])],
        biases=[np.array([float(bias)])],
    )


class TestForward:
    def test_identity_net_passes_input_through(self):
        net = identity_net(4)
        x = np.array([[0.5, -1.0, 2.0, 0.0]])
        assert np.array_equal(nn.forward(net, x), x)

    def test_affine_arithmetic(self):
        # 2*3 + 1 = 7
        net = scalar_net(2.0, 1.0)
        assert nn.forward(net, np.array([[3.0]]))[0, 0] == 7.0

    def test_matches_straight_line_reevaluation(self):
        rng = np.random.default_rng(0)
        net = nn.init_dense((5, 8, 7, 2), ("tanh", "silu", "identity"), rng)
        x = rng.normal(size=(6, 5))
        assert np.allclose(nn.forward(net, x), straight_line_forward(net, x),
                           rtol=1e-12, atol=1e-12)

    def test_repeated_calls_bit_identical(self):
        rng = np.random.default_rng(1)
        net = nn.init_dense((4, 6, 1), ("relu", "identity"), rng)
        x = rng.normal(size=(3, 4))
        assert np.array_equal(nn.forward(net, x), nn.forward(net, x))

    def test_shape_mismatch_rejected(self):
        net = identity_net(4)
        with pytest.raises(nn.ShapeError):
            nn.forward(net, np.zeros((2, 3)))
        with pytest.raises(nn.ShapeError):
            nn.forward(net, np.zeros(4))


class TestBackward:
    def test_hand_gradients_linear_net(self):
        # y = w*x + b with w=2, b=0, x=3, upstream 1:
        # dL/dw = x = 3, dL/db = 1, dL/dx = w = 2
        net = scalar_net(2.0, 0.0)
        grads, dx = nn.backward(net, np.array([[3.0]]), np.array([[1.0]]))
        assert grads[0][0][0, 0] == 3.0
        assert grads[0][1][0] == 1.0
        assert dx[0, 0] == 2.0

    def test_zero_upstream_zeroes_everything(self):
        rng = np.random.default_rng(2)
        net = nn.init_dense((3, 5, 2), ("tanh", "identity"), rng)
        x = rng.normal(size=(4, 3))
        grads, dx = nn.backward(net, x, np.zeros((4, 2)))
        assert np.all(dx == 0.0)
        for dw, db in grads:
            assert np.all(dw == 0.0) and np.all(db == 0.0)

    @pytest.mark.parametrize("activations", [
        ("tanh", "identity"),
        ("silu", "identity"),
        ("relu", "identity"),
        ("silu", "silu", "identity"),
        ("tanh", "tanh", "identity"),
    ])
    def test_finite_difference_agreement(self, activations):
        rng = np.random.default_rng(3)
        widths = (4,) + (6,) * (len(activations) - 1) + (1,)
        net = nn.init_dense(widths, activations, rng)
        x = rng.normal(size=(5, 4)) * 0.5

        def loss():
            return float(nn.forward(net, x).sum())

        grads, _ = nn.backward(net, x, np.ones((5, 1)))
        numeric = nn.numeric_gradients(loss, net.parameters(), h=1e-4)
        err = nn.max_relative_error(nn.flatten_grads(grads), numeric)
        assert err <= 1e-4

    def test_input_gradient_finite_difference(self):
        rng = np.random.default_rng(4)
        net = nn.init_dense((3, 6, 1), ("silu", "identity"), rng)
        x = rng.normal(size=(2, 3))

        def loss():
            return float(nn.forward(net, x).sum())

        _, dx = nn.backward(net, x, np.ones((2, 1)))
        numeric = nn.numeric_gradients(loss, [x], h=1e-4)
        assert nn.max_relative_error([dx], numeric) <= 1e-4

    def test_upstream_shape_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        net = nn.init_dense((3, 2), ("identity",), rng)
        with pytest.raises(nn.ShapeError):
            nn.backward(net, np.zeros((4, 3)), np.zeros((4, 3)))


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        params = [np.array([1.0, -2.0]), np.array([[3.0]])]
        before = [p.copy() for p in params]
        state = nn.adam_init(params, lr=0.1)
        nn.adam_step(state, params, [np.zeros_like(p) for p in params])
        for p, b in zip(params, before):
            assert np.array_equal(p, b)
        assert state.step == 1

    def test_constant_gradient_moves_against_it(self):
        params = [np.array([0.0])]
        state = nn.adam_init(params, lr=0.01)
        for _ in range(10):
            nn.adam_step(state, params, [np.array([2.5])])
        assert params[0][0] < 0.0

    def test_quadratic_bowl_converges(self):
        # minimize (w-3)^2; gradient 2(w-3); lr 1e-2, 2000 steps
        params = [np.array([0.0])]
        state = nn.adam_init(params, lr=1e-2)
        for _ in range(2000):
            nn.adam_step(state, params, [2.0 * (params[0] - 3.0)])
        assert abs(params[0][0] - 3.0) <= 1e-3

    def test_nonfinite_gradient_aborts(self):
        params = [np.array([0.0])]
        state = nn.adam_init(params, lr=0.01)
        with pytest.raises(FloatingPointError):
            nn.adam_step(state, params, [np.array([np.nan])])

    def test_mismatched_shapes_rejected(self):
        params = [np.array([0.0, 0.0])]
        state = nn.adam_init(params, lr=0.01)
        with pytest.raises(nn.ShapeError):
            nn.adam_step(state, params, [np.array([1.0])])


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        net = nn.init_dense((4, 7, 2), ("silu", "identity"), rng)
        path = tmp_path / "net.npz"
        nn.save_params(net, path)
        loaded = nn.load_params(path)
        assert loaded.widths == net.widths
        assert loaded.activations == net.activations
        for a, b in zip(loaded.parameters(), net.parameters()):
            assert np.array_equal(a, b)

    def test_version_gate(self, tmp_path):
        rng = np.random.default_rng(7)
        net = nn.init_dense((2, 2), ("identity",), rng)
        path = tmp_path / "net.npz"
        nn.save_params(net, path)
        data = dict(np.load(path, allow_pickle=False))
        data["format_version"] = np.array(99)
        np.savez(path, **data)
        with pytest.raises(ValueError):
            nn.load_params(path)


class TestInit:
    def test_seeded_and_fan_in_bounded(self):
        net1 = nn.init_dense((8, 4), ("identity",), np.random.default_rng(8))
        net2 = nn.init_dense((8, 4), ("identity",), np.random.default_rng(8))
        assert np.array_equal(net1.weights[0], net2.weights[0])
        bound = 1.0 / np.sqrt(8)
        assert np.max(np.abs(net1.weights[0])) <= bound
        assert np.max(np.abs(net1.biases[0])) <= bound

    def test_rejects_bad_architecture(self):
        rng = np.random.default_rng(9)
        with pytest.raises(ValueError):
            nn.init_dense((3, 3), ("identity", "identity"), rng)
        with pytest.raises(ValueError):
            nn.init_dense((3, 3), ("warp",), rng)
        with pytest.raises(ValueError):
            nn.init_dense((3, 0), ("identity",), rng)
