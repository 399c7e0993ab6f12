"""Analytic backprop against the central finite-difference oracle."""

import numpy as np
import pytest
from conftest import tiny_net_config

from vimu.net import Network, init_params
from vimu.net.gradcheck import check_joint_loss_gradients
from vimu.net.training import one_hot


def toy_case(seed, penalty_weight=0.5):
    cfg = tiny_net_config(penalty_weight)
    params = init_params(cfg, seed=seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1000)
    x = rng.standard_normal((3, cfg.frames, cfg.dims))
    z = one_hot(rng.integers(0, cfg.classes, size=3), cfg.classes)
    return params, x, z


class TestAgainstFiniteDifferences:
    # seeds chosen so no rectifier pre-activation sits within the eps=1e-4
    # step of its kink; there the difference quotient is a valid oracle
    # (the acceptance sweep covers 10 seeds with a smooth activation)
    @pytest.mark.parametrize("seed", [0, 2, 4])
    @pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
    def test_all_parameters_match(self, seed, lam):
        params, x, z = toy_case(seed)
        worst, errors = check_joint_loss_gradients(params, x, z, lam)
        assert worst < 1e-3, max(errors, key=errors.get)

    def test_linear_classifier_output_mode(self):
        cfg = tiny_net_config()
        from vimu.net import NetworkConfig

        cfg = NetworkConfig(**{**cfg.to_dict(), "classifier_output": "linear"})
        params = init_params(cfg, seed=9, dtype=np.float64)
        rng = np.random.default_rng(99)
        x = rng.standard_normal((2, cfg.frames, cfg.dims))
        z = one_hot([0, 2], 3)
        worst, _ = check_joint_loss_gradients(params, x, z, 0.5)
        assert worst < 1e-3

    def test_tanh_activation(self):
        from vimu.net import NetworkConfig

        cfg = NetworkConfig(**{**tiny_net_config().to_dict(), "activation": "tanh"})
        params = init_params(cfg, seed=3, dtype=np.float64)
        rng = np.random.default_rng(33)
        x = rng.standard_normal((2, cfg.frames, cfg.dims))
        z = one_hot([1, 2], 3)
        worst, _ = check_joint_loss_gradients(params, x, z, 0.3)
        assert worst < 1e-3


class TestGradientStructure:
    def test_zero_penalty_zeroes_decoder_gradients_exactly(self):
        params, x, z = toy_case(4)
        grads, _ = Network(params).backward(x, z, penalty_weight=0.0)
        for lp in grads.decoder:
            np.testing.assert_array_equal(lp.weight, 0.0)
            np.testing.assert_array_equal(lp.bias, 0.0)
        assert any(np.abs(lp.weight).max() > 0 for lp in grads.encoder)

    def test_doubling_penalty_doubles_decoder_gradients(self):
        params, x, z = toy_case(5)
        net = Network(params)
        g1, _ = net.backward(x, z, penalty_weight=0.4)
        g2, _ = net.backward(x, z, penalty_weight=0.8)
        for a, b in zip(g1.decoder, g2.decoder):
            np.testing.assert_allclose(2.0 * a.weight, b.weight, rtol=1e-12)
            np.testing.assert_allclose(2.0 * a.bias, b.bias, rtol=1e-12)

    def test_encoder_sees_both_loss_paths(self):
        params, x, z = toy_case(6)
        net = Network(params)
        g0, _ = net.backward(x, z, penalty_weight=0.0)
        g1, _ = net.backward(x, z, penalty_weight=1.0)
        diff = max(
            np.abs(a.weight - b.weight).max()
            for a, b in zip(g0.encoder, g1.encoder)
        )
        assert diff > 0  # the penalty path reaches the encoder

    def test_classifier_only_updates_nothing_else(self):
        params, x, z = toy_case(7)
        grads, lb = Network(params).backward(x, z, classifier_only=True)
        for group in (grads.encoder, grads.decoder):
            for lp in group:
                np.testing.assert_array_equal(lp.weight, 0.0)
        assert any(np.abs(lp.weight).max() > 0 for lp in grads.classifier)
        assert lb.recon_loss > 0  # loss is still fully reported

    def test_classifier_gradients_unaffected_by_penalty(self):
        params, x, z = toy_case(8)
        net = Network(params)
        g0, _ = net.backward(x, z, penalty_weight=0.0)
        g1, _ = net.backward(x, z, penalty_weight=2.0)
        for a, b in zip(g0.classifier, g1.classifier):
            np.testing.assert_array_equal(a.weight, b.weight)

    def test_backward_loss_matches_joint_loss(self):
        params, x, z = toy_case(9)
        net = Network(params)
        _, lb = net.backward(x, z, penalty_weight=0.7)
        direct = net.joint_loss(x, z, penalty_weight=0.7)
        assert lb == direct
