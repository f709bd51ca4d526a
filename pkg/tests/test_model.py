import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scalar_model
from empowerment import (NoiseSpec, NonFiniteState, finite_diff_jacobian,
                         pendulum_model, step_deterministic, step_stochastic,
                         wrap_angle, wrap_state)


class TestStepDeterministic:
    def test_null_dynamics(self):
        m = scalar_model()
        assert step_deterministic(m, [0.0], [0.0], 1e-3)[0] == 0.0

    def test_zero_gain_euler_step(self):
        m = scalar_model(f=lambda x: x, df=lambda x: 1.0 + 0 * x, g=0.0)
        assert step_deterministic(m, [1.0], [123.0], 0.5)[0] == 1.5

    def test_pendulum_hand_step(self):
        out = step_deterministic(pendulum_model(), [np.pi / 2, 0.0], [0.0], 1e-3)
        np.testing.assert_allclose(out, [np.pi / 2, 0.00981], rtol=0, atol=1e-15)

    def test_linear_in_action(self, rng):
        m = pendulum_model()
        x = rng.normal(size=2)
        a1, a2 = rng.normal(size=1), rng.normal(size=1)
        base = step_deterministic(m, x, [0.0], 0.01)
        d1 = step_deterministic(m, x, a1, 0.01) - base
        d2 = step_deterministic(m, x, a2, 0.01) - base
        d12 = step_deterministic(m, x, 2 * a1 - 3 * a2, 0.01) - base
        np.testing.assert_allclose(d12, 2 * d1 - 3 * d2, atol=1e-14)

    def test_batched_matches_single(self, rng):
        m = pendulum_model()
        X = rng.normal(size=(5, 2))
        A = rng.normal(size=(5, 1))
        batch = step_deterministic(m, X, A, 1e-3)
        for k in range(5):
            np.testing.assert_array_equal(batch[k], step_deterministic(m, X[k], A[k], 1e-3))

    def test_blowup_raises(self):
        m = scalar_model(f=lambda x: x ** 3, df=lambda x: 3 * x ** 2, g=0.0)
        with pytest.raises(NonFiniteState):
            step_deterministic(m, [1e200], [0.0], 1.0)

    def test_rejects_bad_inputs(self):
        m = pendulum_model()
        with pytest.raises(ValueError):
            step_deterministic(m, [0.0], [0.0], 1e-3)
        with pytest.raises(NonFiniteState):
            step_deterministic(m, [np.nan, 0.0], [0.0], 1e-3)
        with pytest.raises(ValueError):
            step_deterministic(m, [0.0, 0.0], [0.0], 0.0)


class TestStepStochastic:
    def test_zero_noise_equals_deterministic(self, rng):
        m = pendulum_model()
        x = rng.normal(size=2)
        out = step_stochastic(m, x, [0.3], 1e-2, NoiseSpec(0.0), rng)
        np.testing.assert_array_equal(out, step_deterministic(m, x, [0.3], 1e-2))

    def test_seeded_is_bitwise_reproducible(self):
        m = pendulum_model()
        a = step_stochastic(m, [1.0, 0.5], [0.1], 1e-3, NoiseSpec(0.5), np.random.default_rng(7))
        b = step_stochastic(m, [1.0, 0.5], [0.1], 1e-3, NoiseSpec(0.5), np.random.default_rng(7))
        assert a.tobytes() == b.tobytes()

    def test_wiener_scaling(self):
        m = scalar_model()
        rng = np.random.default_rng(2024)
        X = np.zeros((100_000, 1))
        out = step_stochastic(m, X, np.zeros((100_000, 1)), 1.0, NoiseSpec(1.0), rng)
        assert abs(out.std() - 1.0) < 0.02

    def test_noise_enters_through_gain(self, rng):
        m = pendulum_model()
        out = step_stochastic(m, [0.0, 0.0], [0.0], 1e-3, NoiseSpec(1.0), rng)
        assert out[0] == 0.0 and out[1] != 0.0

    def test_noise_spec_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(-1.0)
        with pytest.raises(ValueError):
            NoiseSpec(0.0, 0.0)


class TestFiniteDiffJacobian:
    def test_identity(self, rng):
        x = rng.normal(size=3)
        np.testing.assert_allclose(finite_diff_jacobian(lambda v: v, x), np.eye(3), atol=1e-9)

    def test_rotation(self):
        J = finite_diff_jacobian(lambda v: np.array([v[1], -v[0]]), np.array([1.0, 1.0]))
        np.testing.assert_allclose(J, [[0, 1], [-1, 0]], atol=1e-9)

    def test_pendulum_upright(self):
        J = finite_diff_jacobian(pendulum_model().drift, np.zeros(2))
        np.testing.assert_allclose(J, [[0, 1], [9.81, 0]], atol=1e-6)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            finite_diff_jacobian(lambda v: v, np.zeros(2), h=0.0)


class TestWrap:
    def test_half_open_interval(self):
        np.testing.assert_allclose(wrap_angle([np.pi, -np.pi, 3 * np.pi, 0.5]),
                                   [np.pi, np.pi, np.pi, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1e3, 1e3))
    def test_range_and_congruence(self, theta):
        w = float(wrap_angle(theta))
        assert -np.pi < w <= np.pi
        k = (theta - w) / (2 * np.pi)
        assert abs(k - round(k)) < 1e-9

    def test_wrap_state_touches_angles_only(self):
        m = pendulum_model()
        np.testing.assert_allclose(wrap_state(m, [2 * np.pi + 0.1, 10.0]), [0.1, 10.0])
