"""Optimizer update rules: exact small cases and the Adam first-step closed form."""

import numpy as np
import pytest

from moodtunes.nn import ops, optim


def adam_first_step_oracle(lr, beta1, beta2, eps, g):
    """Closed-form |update| after one Adam step from zeroed state."""
    m_hat = g  # (1-beta1)*g / (1-beta1)
    v_hat = g * g  # (1-beta2)*g^2 / (1-beta2)
    return lr * m_hat / (np.sqrt(v_hat) + eps)


class TestSGD:
    def test_basic_step(self):
        params = {"w": np.array([1.0])}
        grads = {"w": np.array([1.0])}
        optim.SGD(0.1).step(params, grads)
        assert params["w"][0] == pytest.approx(0.9)

    def test_zero_gradient_no_change(self):
        params = {"w": np.array([1.0, 2.0])}
        optim.SGD(0.5).step(params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"], [1.0, 2.0])

    def test_updates_in_place(self):
        w = np.array([1.0])
        params = {"w": w}
        optim.SGD(0.1).step(params, {"w": np.array([1.0])})
        assert params["w"] is w

    def test_shape_mismatch(self):
        with pytest.raises(ops.ShapeError):
            optim.SGD(0.1).step({"w": np.zeros(3)}, {"w": np.zeros(4)})


class TestAdam:
    def test_zero_gradient_from_fresh_state(self):
        params = {"w": np.array([1.0, -2.0])}
        optim.Adam(0.01).step(params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    @pytest.mark.parametrize("scale", [1e-4, 1.0, 1e4])
    def test_first_step_magnitude_is_lr(self, scale):
        # step size is ~lr per coordinate regardless of gradient scale
        lr = 0.001
        params = {"w": np.zeros(3)}
        g = np.full(3, scale)
        optim.Adam(lr).step(params, {"w": g})
        np.testing.assert_allclose(np.abs(params["w"]), lr, atol=1e-6)

    @pytest.mark.parametrize("seed", range(3))
    def test_first_step_matches_closed_form(self, seed):
        lr, b1, b2, eps = 0.002, 0.9, 0.999, 1e-8
        g = np.random.default_rng(seed).standard_normal(5)
        params = {"w": np.zeros(5)}
        optim.Adam(lr, b1, b2, eps).step(params, {"w": g.copy()})
        expected = -adam_first_step_oracle(lr, b1, b2, eps, g)
        np.testing.assert_allclose(params["w"], expected, atol=1e-6)

    def test_state_accumulates_across_steps(self):
        params = {"w": np.zeros(1)}
        opt = optim.Adam(0.1)
        opt.step(params, {"w": np.array([1.0])})
        after_one = params["w"].copy()
        opt.step(params, {"w": np.array([1.0])})
        # second step continues descending, not a reset
        assert params["w"][0] < after_one[0] < 0.0

    def test_deterministic(self):
        def run():
            params = {"w": np.linspace(-1, 1, 4)}
            opt = optim.Adam(0.05)
            for i in range(10):
                opt.step(params, {"w": params["w"] * 0.3 + i * 0.01})
            return params["w"]

        np.testing.assert_array_equal(run(), run())


class TestFactory:
    def test_known_kinds(self):
        assert isinstance(optim.make_optimizer("sgd", 0.1), optim.SGD)
        assert isinstance(optim.make_optimizer("adam", 0.1), optim.Adam)

    def test_unknown_kind(self):
        with pytest.raises(ops.ParameterError):
            optim.make_optimizer("rmsprop", 0.1)
