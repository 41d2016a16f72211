"""Network engine: forward values, Jacobians, training, serialization.

Frozen expected values come from tools/oracles/o03_mlp_values.py, which
computes them with standalone numpy code (no package imports).
"""

import math

import numpy as np
import pytest

from elastonet.errors import (DimensionMismatchError, InvalidParameterError,
                              TrainingDivergedError)
from elastonet.mlpcore import (MlpNet, TrainConfig, forward, jacobian,
                               make_net, net_from_text, net_to_text, train)


def _frozen_tiny_net():
    # identical draw order to tools/oracles/o03_mlp_values.py, seed 777
    rng = np.random.default_rng(777)
    w1 = rng.uniform(-0.5, 0.5, size=(4, 3))
    b1 = rng.uniform(-0.1, 0.1, size=4)
    w2 = rng.uniform(-0.5, 0.5, size=(2, 4))
    b2 = rng.uniform(-0.1, 0.1, size=2)
    return MlpNet([3, 4, 2], ("tanh", "logistic"), [w1, w2], [b1, b2])


def test_single_tanh_node_value():
    net = MlpNet([1, 1], ("tanh",), [np.array([[1.0]])], [np.zeros(1)])
    # tools/oracles/o03_mlp_values.py: tanh(0.5) = 0.46211715726000974
    assert forward(net, np.array([0.5]))[0] == pytest.approx(
        0.46211715726000974, abs=1e-15)
    assert forward(net, np.array([0.5]))[0] == math.tanh(0.5)


def test_forward_matches_frozen_oracle():
    net = _frozen_tiny_net()
    out = forward(net, np.array([0.3, -0.2, 0.1]))
    # tools/oracles/o03_mlp_values.py: forward(x0)
    assert np.allclose(out, [0.529973581259, 0.47367212575], atol=1e-12)


def test_forward_batch_matches_single():
    net = _frozen_tiny_net()
    xs = np.array([[0.3, -0.2, 0.1], [0.0, 0.0, 0.0], [-0.4, 0.2, 0.3]])
    batch = forward(net, xs)
    assert batch.shape == (3, 2)
    for i in range(3):
        assert np.allclose(batch[i], forward(net, xs[i]))


def test_forward_rejects_wrong_width_and_rank():
    net = _frozen_tiny_net()
    with pytest.raises(DimensionMismatchError):
        forward(net, np.zeros(4))
    with pytest.raises(DimensionMismatchError):
        forward(net, np.zeros((2, 2, 3)))


def test_jacobian_matches_fd_oracle():
    net = _frozen_tiny_net()
    jac = jacobian(net, np.array([0.3, -0.2, 0.1]))
    # tools/oracles/o03_mlp_values.py: central finite differences, h=1e-6
    expected = np.array([
        [0.041855793165, 0.032403665917, 0.006257578122],
        [-0.004948469606, 0.050753848818, 0.016121466107]])
    assert np.allclose(jac, expected, atol=1e-5)


def test_jacobian_fresh_fd_cross_check():
    net = make_net([3, 6, 6, 3], ("tanh", "tanh", "tanh"), init="uniform",
                   init_range=0.3, seed=5)
    x0 = np.array([0.05, -0.1, 0.02])
    jac = jacobian(net, x0)
    h = 1e-6
    for j in range(3):
        xp, xm = x0.copy(), x0.copy()
        xp[j] += h
        xm[j] -= h
        fd = (forward(net, xp) - forward(net, xm)) / (2 * h)
        assert np.allclose(jac[:, j], fd, atol=1e-6)


def test_train_linear_fit_rprop():
    # tools/oracles/o03_mlp_values.py: least-squares fit of y = 2.5x - 0.7
    # over 60 uniform points gives slope/intercept (2.5, -0.7) exactly.
    rng = np.random.default_rng(1234)
    x = rng.uniform(-1.0, 1.0, size=60)[:, None]
    y = (2.5 * x - 0.7)
    net = make_net([1, 1], ("linear",), init="uniform", init_range=0.1,
                   seed=0)
    cfg = TrainConfig(optimizer="rprop", epochs=300)
    trained, trace = train(net, x, y, cfg)
    assert trained.weights[0][0, 0] == pytest.approx(2.5, abs=1e-3)
    assert trained.biases[0][0] == pytest.approx(-0.7, abs=1e-3)
    assert trace[-1] < trace[0]


def test_train_adam_decreases_loss():
    rng = np.random.default_rng(2)
    x = rng.uniform(-0.5, 0.5, size=(80, 2))
    y = np.column_stack([x[:, 0] * x[:, 1], x.sum(axis=1)])
    net = make_net([2, 8, 2], ("tanh", "linear"), seed=3)
    cfg = TrainConfig(optimizer="adam", epochs=200, learning_rate=0.03)
    _trained, trace = train(net, x, y, cfg)
    assert trace[-1] < trace[0] * 0.2


def test_train_iterations_concatenate_trace():
    rng = np.random.default_rng(4)
    x = rng.uniform(-0.5, 0.5, size=(30, 1))
    y = 0.5 * x
    net = make_net([1, 4, 1], ("tanh", "linear"), seed=0)
    one, trace_one = train(net.copy(),
                           x, y, TrainConfig("rprop", epochs=60))
    two, trace_two = train(net.copy(),
                           x, y, TrainConfig("rprop", epochs=30,
                                             iterations=2))
    assert len(trace_one) == 60 and len(trace_two) == 60
    # weights persist across the iteration break: same effective schedule
    for wa, wb in zip(one.weights, two.weights):
        assert np.allclose(wa, wb)


def test_train_freeze_biases():
    rng = np.random.default_rng(5)
    x = rng.uniform(-0.5, 0.5, size=(40, 2))
    y = x.copy()
    net = make_net([2, 5, 2], ("tanh", "tanh"), seed=1)
    trained, _ = train(net, x, y,
                       TrainConfig("rprop", epochs=50, freeze_biases=True))
    for b in trained.biases:
        assert np.all(b == 0.0)


def test_train_determinism():
    rng = np.random.default_rng(6)
    x = rng.uniform(-0.5, 0.5, size=(25, 2))
    y = x[:, :1] * 0.3
    a, ta = train(make_net([2, 4, 1], ("tanh", "linear"), seed=9), x, y,
                  TrainConfig("adam", epochs=40))
    b, tb = train(make_net([2, 4, 1], ("tanh", "linear"), seed=9), x, y,
                  TrainConfig("adam", epochs=40))
    assert np.array_equal(ta, tb)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_train_nan_aborts():
    # squared residuals of order 1e400 overflow to inf on the first epoch
    x = np.array([[1e200], [-1e200]])
    y = np.array([[1e200], [-1e200]])
    net = make_net([1, 1], ("linear",), init="uniform", init_range=0.2,
                   seed=0)
    with np.errstate(over="ignore"), pytest.raises(TrainingDivergedError):
        train(net, x, y, TrainConfig("adam", epochs=200))


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(epochs=-1)
    with pytest.raises(InvalidParameterError):
        TrainConfig(iterations=0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(optimizer="sgd-magic")
    with pytest.raises(InvalidParameterError):
        make_net([2, 2], ("tanh",), init="xavier")


def test_net_validation():
    with pytest.raises(InvalidParameterError):
        make_net([3], ())                      # needs >= 2 layers
    with pytest.raises(DimensionMismatchError):
        make_net([3, 4], ("tanh", "tanh"))     # activation count mismatch
    with pytest.raises(InvalidParameterError):
        make_net([3, 4], ("softmax",))         # unknown activation


def test_serialization_roundtrip_exact():
    net = make_net([3, 6, 6, 3], ("tanh", "tanh", "tanh"), seed=11)
    text = net_to_text(net)
    back = net_from_text(text)
    assert net_to_text(back) == text
    x = np.array([0.07, -0.03, 0.01])
    assert np.array_equal(forward(net, x), forward(back, x))


def test_save_load_file(tmp_path):
    from elastonet.mlpcore import load_net, save_net
    net = make_net([2, 3, 1], ("tanh", "linear"), seed=2)
    path = tmp_path / "net.txt"
    save_net(net, path)
    back = load_net(path)
    assert np.array_equal(forward(net, np.array([0.1, 0.2])),
                          forward(back, np.array([0.1, 0.2])))
