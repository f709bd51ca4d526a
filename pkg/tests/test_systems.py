import numpy as np
import pytest
from scipy.optimize import root

from empowerment import (CartPoleParams, DoublePendulumParams, PendulumParams,
                         SingularMassMatrix, cartpole_model, double_pendulum_model,
                         energy_function, finite_diff_jacobian, linear_test_model,
                         pendulum_model, scale_gain, step_deterministic)

MODELS = {
    "pendulum": pendulum_model(),
    "double_pendulum": double_pendulum_model(),
    "cartpole": cartpole_model(),
    "linear": linear_test_model(0.7),
}


def random_states(model, n, rng):
    X = rng.uniform(-np.pi, np.pi, size=(n, model.d_x))
    half = model.d_x // 2
    if model.d_x > 1:
        X[:, half:] = rng.uniform(-2 * np.pi, 2 * np.pi, size=(n, model.d_x - half))
    return X


@pytest.mark.parametrize("name", sorted(MODELS))
class TestAllModels:
    def test_jacobian_matches_finite_differences(self, name):
        model = MODELS[name]
        rng = np.random.default_rng(1)
        for x in random_states(model, 100, rng):
            J = model.drift_jacobian(x)
            Jfd = finite_diff_jacobian(model.drift, x)
            err = np.linalg.norm(J - Jfd) / max(np.linalg.norm(J), 1e-12)
            assert err < 1e-4

    def test_gain_shape(self, name):
        model = MODELS[name]
        x = np.zeros(model.d_x)
        assert model.gain(x).shape == (model.d_x, model.d_a)

    def test_batched_callables(self, name):
        model = MODELS[name]
        X = random_states(model, 6, np.random.default_rng(2))
        np.testing.assert_allclose(model.drift(X)[3], model.drift(X[3]), rtol=0, atol=0)
        np.testing.assert_allclose(model.drift_jacobian(X)[3], model.drift_jacobian(X[3]))
        np.testing.assert_allclose(model.gain(X)[3], model.gain(X[3]))


class TestPendulum:
    def test_equilibria(self):
        m = pendulum_model()
        np.testing.assert_allclose(m.drift(np.array([0.0, 0.0])), [0, 0])
        np.testing.assert_allclose(m.drift(np.array([np.pi, 0.0])), [0, 0], atol=1e-14)

    def test_gain_unit_params(self):
        np.testing.assert_array_equal(pendulum_model().gain(np.array([0.3, 1.0])), [[0.0], [1.0]])

    def test_gain_scales_with_inertia(self):
        m = pendulum_model(PendulumParams(m=2.0, l=0.5))
        assert m.gain(np.zeros(2))[1, 0] == pytest.approx(2.0)

    def test_drift_odd_symmetry(self):
        m = pendulum_model()
        X = random_states(m, 50, np.random.default_rng(3))
        np.testing.assert_allclose(m.drift(-X), -m.drift(X), atol=1e-14)

    def test_params_validated(self):
        with pytest.raises(ValueError):
            PendulumParams(m=0.0)


def _energy_drift(model, x0, dt=1e-5, seconds=1.0):
    energy = energy_function(model)
    x = np.asarray(x0, dtype=float)
    e0 = float(energy(x))
    for _ in range(int(round(seconds / dt))):
        x = x + model.drift(x) * dt
    scale = max(abs(e0), 1.0)
    return abs(float(energy(x)) - e0) / scale


class TestDoublePendulum:
    def test_hanging_equilibrium(self):
        m = double_pendulum_model()
        np.testing.assert_allclose(m.drift(np.array([np.pi, 0, 0, 0.0])), 0, atol=1e-14)

    def test_upright_equilibrium(self):
        np.testing.assert_allclose(double_pendulum_model().drift(np.zeros(4)), 0)

    def test_gain_rows(self):
        G = double_pendulum_model().gain(np.array([0.3, -0.2, 0.1, 0.5]))
        assert G[0, 0] == 0 and G[1, 0] == 0
        assert G[2, 0] != 0 and G[3, 0] != 0

    def test_energy_conservation(self):
        m = double_pendulum_model()
        assert _energy_drift(m, [np.pi - 0.5, 0.3, 0.0, 0.0]) < 1e-3

    def test_equilibrium_is_energy_stationary(self):
        # gradient of the potential vanishes where the drift has zero acceleration
        energy = energy_function(double_pendulum_model())
        grad = finite_diff_jacobian(lambda q: np.atleast_1d(energy(np.r_[q, 0, 0])),
                                    np.array([np.pi, 0.0]))
        np.testing.assert_allclose(grad, 0, atol=1e-8)

    def test_lc_bound(self):
        with pytest.raises(ValueError):
            DoublePendulumParams(lc1=2.0)

    def test_singular_mass_matrix_guard(self):
        p = DoublePendulumParams()
        object.__setattr__(p, "I1", -10.0)  # bypass validation to reach the guard
        with pytest.raises(SingularMassMatrix):
            double_pendulum_model(p).drift(np.zeros(4))


class TestCartPole:
    def test_gain_at_upright(self):
        G = cartpole_model(CartPoleParams(M=2.0)).gain(np.zeros(4))
        assert G[2, 0] == pytest.approx(1 / 2.0)

    def test_hanging_equilibrium_by_root_finding(self):
        m = cartpole_model()
        sol = root(lambda th: m.drift(np.array([0.0, th[0], 0.0, 0.0]))[3], [3.0])
        assert sol.success
        assert sol.x[0] == pytest.approx(np.pi, abs=1e-10)

    def test_energy_conservation(self):
        assert _energy_drift(cartpole_model(), [0.0, np.pi - 0.5, 0.0, 0.0]) < 1e-3

    def test_cart_position_does_not_enter(self):
        m = cartpole_model()
        x = np.array([0.0, 0.4, 0.2, -0.3])
        np.testing.assert_array_equal(m.drift(x), m.drift(x + [5.0, 0, 0, 0]))


class TestLinearAndScaling:
    def test_linear_sensitivity_oracle(self):
        m = linear_test_model(1.0)
        x = np.array([0.0])
        J = 1 + m.drift_jacobian(x)[0, 0] * 0.1
        assert J ** 2 * 0.1 == pytest.approx(0.121)

    def test_zero_gain(self):
        m = scale_gain(pendulum_model(), 0.0)
        assert not np.any(m.gain(np.array([0.1, 0.2])))
        out = step_deterministic(m, [0.1, 0.2], [1.0], 1e-2)
        np.testing.assert_array_equal(out, step_deterministic(pendulum_model(), [0.1, 0.2], [0.0], 1e-2))

    def test_energy_function_rejects_linear(self):
        with pytest.raises(ValueError):
            energy_function(linear_test_model())
