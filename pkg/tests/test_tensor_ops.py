"""Elementwise ops, log-softmax, loss, and the SGD update rule."""

import numpy as np
import pytest

from subsevo.nn import (FullyConnected, LogSoftMax, NetworkSpec, TrainConfig,
                        TrainedModel, forward, learning_rate_at, log_softmax,
                        nll_loss, relu, sgd_step)

# frozen from a 60-digit evaluation of x_i - ln(sum_j exp(x_j)) at [1, 2, 3]
LOGSOFTMAX_123 = [-2.4076059644443803, -1.4076059644443803,
                  -0.4076059644443803]
LN2 = 0.6931471805599453


def identity_fc_model(k=2, in_shape=None):
    """FullyConnected with identity weights feeding LogSoftMax."""
    spec = NetworkSpec(
        layers=(FullyConnected(k, k, activation=None), LogSoftMax()),
        input_shape=in_shape or (1, 1, k))
    weights = [{"weight": np.eye(k), "bias": np.zeros(k)}, {}]
    return TrainedModel(spec, weights)


class TestRelu:
    def test_mixed(self):
        np.testing.assert_array_equal(relu([-1.0, 0.0, 2.0]), [0.0, 0.0, 2.0])

    def test_all_negative(self):
        assert np.all(relu(-np.arange(1, 10, dtype=float)) == 0.0)

    def test_all_positive_is_identity(self):
        x = np.arange(1, 10, dtype=float).reshape(3, 3)
        np.testing.assert_array_equal(relu(x), x)


class TestLogSoftmax:
    def test_symmetric_two_way(self):
        np.testing.assert_allclose(log_softmax([0.0, 0.0]), [-LN2, -LN2],
                                   atol=1e-15)

    def test_frozen_high_precision_oracle(self):
        np.testing.assert_allclose(log_softmax([1.0, 2.0, 3.0]),
                                   LOGSOFTMAX_123, atol=1e-15)

    def test_rows_normalize(self, rng):
        x = rng.normal(scale=100.0, size=(32, 10))
        out = log_softmax(x)
        np.testing.assert_allclose(np.exp(out).sum(axis=1), 1.0, atol=1e-9)

    def test_shift_invariance(self, rng):
        x = rng.normal(size=(4, 7))
        np.testing.assert_allclose(log_softmax(x + 123.456), log_softmax(x),
                                   atol=1e-9)

    def test_large_magnitude_stable(self):
        out = log_softmax([1e6, 1e6 + 1.0])
        assert np.isfinite(out).all()
        np.testing.assert_allclose(np.exp(out).sum(), 1.0, atol=1e-9)


class TestForward:
    def test_identity_network_passes_input_through(self):
        spec = NetworkSpec(layers=(FullyConnected(2, 2, activation=None),),
                           input_shape=(1, 1, 2))
        model = TrainedModel(spec, [{"weight": np.eye(2), "bias": np.zeros(2)}])
        out = forward(model, np.array([3.0, -1.0]).reshape(1, 1, 1, 2))
        np.testing.assert_allclose(out, [[3.0, -1.0]], atol=1e-15)

    def test_logsoftmax_layer_on_equal_logits(self):
        model = identity_fc_model(2)
        out = forward(model, np.zeros((1, 1, 1, 2)))
        np.testing.assert_allclose(out, [[-LN2, -LN2]], atol=1e-15)

    def test_logsoftmax_layer_frozen_oracle(self):
        model = identity_fc_model(3)
        out = forward(model, np.array([1.0, 2.0, 3.0]).reshape(1, 1, 1, 3))
        np.testing.assert_allclose(out[0], LOGSOFTMAX_123, atol=1e-15)

    def test_rejects_wrong_input_shape(self):
        model = identity_fc_model(2)
        with pytest.raises(ValueError, match="layer 0"):
            forward(model, np.zeros((1, 1, 1, 3)))


class TestNllLoss:
    def test_certain_prediction_zero_loss(self):
        assert nll_loss(np.array([[0.0]]), [0]) == 0.0

    def test_symmetric_pair(self):
        logp = np.array([[-LN2, -LN2], [-LN2, -LN2]])
        assert np.isclose(nll_loss(logp, [0, 1]), LN2)

    def test_matches_direct_indexing_oracle(self, rng):
        logp = log_softmax(rng.normal(size=(16, 5)))
        targets = rng.integers(0, 5, size=16)
        expected = np.mean([-logp[i, targets[i]] for i in range(16)])
        assert np.isclose(nll_loss(logp, targets), expected, atol=1e-15)

    def test_rejects_out_of_range_target(self):
        with pytest.raises(ValueError, match="range"):
            nll_loss(np.zeros((2, 3)), [0, 3])


class TestSgd:
    def test_initial_learning_rate(self):
        assert learning_rate_at(TrainConfig(), 0) == 0.1

    def test_decay_at_hundred_thousand_updates(self):
        config = TrainConfig(learning_rate=0.1, learning_rate_decay=1e-5)
        assert np.isclose(learning_rate_at(config, 100_000), 0.05)

    def test_plain_update(self):
        model = identity_fc_model(2)
        model.weights[0]["weight"][:] = 1.0
        grads = [{"weight": np.full((2, 2), 2.0), "bias": np.zeros(2)}, {}]
        cfg = TrainConfig(learning_rate=0.1, learning_rate_decay=0.0)
        sgd_step(model, grads, cfg, update_count=0)
        np.testing.assert_allclose(model.weights[0]["weight"], 0.8)

    def test_decay_schedule_monotone(self):
        decayed = TrainConfig(learning_rate_decay=1e-3)
        rates = [learning_rate_at(decayed, t) for t in range(50)]
        assert all(a > b for a, b in zip(rates, rates[1:]))
        flat = TrainConfig(learning_rate_decay=0.0)
        assert len({learning_rate_at(flat, t) for t in range(50)}) == 1

    def test_l2_term(self):
        model = identity_fc_model(2)
        model.weights[0]["weight"][:] = 1.0
        grads = [{"weight": np.zeros((2, 2)), "bias": np.zeros(2)}, {}]
        cfg = TrainConfig(learning_rate=0.1, learning_rate_decay=0.0,
                          l2_coeff=0.5)
        sgd_step(model, grads, cfg, update_count=0)
        # w <- w - lr * l2 * w = 1 - 0.1*0.5
        np.testing.assert_allclose(model.weights[0]["weight"], 0.95)

    def test_momentum_accumulates(self):
        from subsevo.nn import SgdState
        model = identity_fc_model(2)
        model.weights[0]["weight"][:] = 0.0
        grads = [{"weight": np.ones((2, 2)), "bias": np.zeros(2)}, {}]
        cfg = TrainConfig(learning_rate=0.1, learning_rate_decay=0.0,
                          momentum=0.9)
        state = SgdState()
        sgd_step(model, grads, cfg, 0, state)    # v=1,    w=-0.1
        sgd_step(model, grads, cfg, 1, state)    # v=1.9,  w=-0.29
        np.testing.assert_allclose(model.weights[0]["weight"], -0.29)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(momentum=-0.1)
