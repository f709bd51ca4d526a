import numpy as np
import pytest

from empowerment import (ChannelSpec, GridSpec, HorizonSpec, classic_empowerment,
                         convergence_study, default_grid, double_pendulum_model,
                         evaluate_landscape, linear_test_model, pendulum_model,
                         scale_gain, SystemModel)

SPEC = HorizonSpec.for_variant("classic", 100, 5e-3)


def small_grid(n=11):
    return GridSpec((0, 1), ((-np.pi, np.pi), (-2 * np.pi, 2 * np.pi)), (n, n))


class TestGridSpec:
    def test_states_row_major(self):
        g = GridSpec((0, 1), ((0, 1), (10, 20)), (2, 3))
        X = g.states(2)
        np.testing.assert_allclose(X, [[0, 10], [0, 15], [0, 20], [1, 10], [1, 15], [1, 20]])

    def test_fixed_values_fill_other_axes(self):
        g = GridSpec((1, 3), ((0, 1), (0, 1)), (2, 2), (7.0, 8.0))
        X = g.states(4)
        assert np.all(X[:, 0] == 7.0) and np.all(X[:, 2] == 8.0)

    @pytest.mark.parametrize("kw", [dict(axis_indices=(0, 0)), dict(axis_ranges=((1, 0), (0, 1))),
                                    dict(resolution=(1, 5))])
    def test_invalid(self, kw):
        base = dict(axis_indices=(0, 1), axis_ranges=((0, 1), (0, 1)), resolution=(3, 3))
        base.update(kw)
        with pytest.raises(ValueError):
            GridSpec(**base)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            GridSpec((0, 1), ((0, 1), (0, 1)), (3, 3)).states(4)

    def test_default_grid(self):
        g = default_grid(double_pendulum_model())
        assert g.axis_indices == (0, 2) and g.fixed_values == (0.0, 0.0)
        assert g.resolution == (101, 101)


class TestEvaluateLandscape:
    def test_zero_gain_uniformly_zero(self):
        land = evaluate_landscape(scale_gain(pendulum_model(), 0.0), small_grid(), "classic", SPEC)
        assert land.values.shape == (11, 11)
        assert not np.any(land.values) and not land.failed.any()

    def test_matches_pointwise(self):
        grid = small_grid(5)
        land = evaluate_landscape(pendulum_model(), grid, "classic", SPEC)
        X = grid.states(2)
        for k in (0, 7, 12, 24):
            ref = classic_empowerment(pendulum_model(), X[k], 100, 5e-3).value_nats
            assert land.values.ravel()[k] == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("variant", ["classic", "kicked_cef", "controlled_lyapunov"])
    def test_symmetry_and_upright_maximum(self, variant):
        spec = HorizonSpec.for_variant(variant, 100, 5e-3)
        land = evaluate_landscape(pendulum_model(), small_grid(21), variant, spec)
        np.testing.assert_allclose(land.values, land.values[::-1, ::-1], atol=1e-8)
        theta = land.argmax_state(2)[0]
        assert abs(theta) < 0.2

    def test_worker_count_does_not_change_values(self):
        a = evaluate_landscape(pendulum_model(), small_grid(15), "kicked_cef",
                               HorizonSpec.for_variant("kicked_cef", 100, 5e-3), chunk=16)
        b = evaluate_landscape(pendulum_model(), small_grid(15), "kicked_cef",
                               HorizonSpec.for_variant("kicked_cef", 100, 5e-3),
                               workers=4, chunk=16)
        assert a.values.tobytes() == b.values.tobytes()

    def test_divergent_points_flagged(self):
        def drift(x):
            return np.stack([x[..., 0] ** 3, np.zeros_like(x[..., 0])], axis=-1)

        def jac(x):
            J = np.zeros(np.shape(x)[:-1] + (2, 2))
            J[..., 0, 0] = 3 * x[..., 0] ** 2
            return J

        def gain(x):
            G = np.zeros(np.shape(x)[:-1] + (2, 1))
            G[..., 1, 0] = 1.0
            return G

        model = SystemModel(2, 1, drift, gain, jac)
        grid = GridSpec((0, 1), ((-2, 2), (-1, 1)), (3, 2))
        land = evaluate_landscape(model, grid, "classic", HorizonSpec(1.0, 10, 10))
        np.testing.assert_array_equal(land.failed[:, 0], [True, False, True])
        assert np.all(np.isnan(land.values[land.failed]))
        assert np.all(land.values[~land.failed] >= 0)

    def test_variant_horizon_mismatch(self):
        with pytest.raises(ValueError):
            evaluate_landscape(pendulum_model(), small_grid(), "kicked_cef", SPEC)


class TestConvergence:
    def test_linear_limit(self):
        alpha, t_e = 0.5, 1.0
        limit = 0.5 * np.log1p(np.sqrt(np.expm1(2 * alpha * t_e) / (2 * alpha)))
        rows = convergence_study(linear_test_model(alpha), [0.0], "classic", t_e,
                                 [4e-2, 1e-2, 2.5e-3])
        errors = [abs(r.value_nats - limit) for r in rows]
        assert errors[0] > errors[1] > errors[2]
        assert np.isnan(rows[0].delta_prev)
        assert rows[1].delta_prev == pytest.approx(rows[1].value_nats - rows[0].value_nats)
        # first-order convergence: error shrinks about fourfold per refinement
        assert 3.0 < errors[0] / errors[1] < 5.0

    def test_repeated_dt_identical(self):
        rows = convergence_study(pendulum_model(), [0.0, 0.0], "classic", 0.5, [1e-3, 1e-3])
        assert rows[1].delta_prev == 0.0

    def test_dt_must_divide_horizon(self):
        with pytest.raises(ValueError):
            convergence_study(pendulum_model(), [0.0, 0.0], "classic", 0.5, [3e-3])

    def test_pendulum_differences_shrink(self):
        rows = convergence_study(pendulum_model(), [0.0, 0.0], "classic", 0.5,
                                 [4e-3, 1e-3, 2.5e-4], ChannelSpec())
        d = [abs(r.delta_prev) for r in rows[1:]]
        assert d[1] < d[0]
