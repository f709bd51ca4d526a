"""scikit-learn style wrappers around the functional API."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .capacity import ChannelSpec, empowerment_batch
from .config import SYSTEM_NAMES
from .controller import VARIANT_DEFAULTS, ControlPolicySpec, greedy_action
from .sensitivity import VARIANTS, HorizonSpec
from .systems import SYSTEMS, linear_test_model


def _build_model(system, system_params):
    if system not in SYSTEM_NAMES:
        raise ValueError(f"system must be one of {SYSTEM_NAMES}")
    params = dict(system_params or {})
    if system == "linear":
        return linear_test_model(**params)
    factory, params_cls = SYSTEMS[system]
    return factory(params_cls(**params))


class EmpowermentTransformer(TransformerMixin, BaseEstimator):
    """Map states to their empowerment in nats.

    Parameters
    ----------
    system : str
        One of ``pendulum``, ``double_pendulum``, ``cartpole``, ``linear``.
    variant : str
        ``classic``, ``kicked_cef`` or ``controlled_lyapunov``.
    horizon_seconds, dt : float
        Physical horizon and Euler step.
    power, noise_std : float
        Channel power budget and effective noise.
    convention : str
        Capacity convention, ``paper`` or ``squared``.
    system_params : dict, optional
        Keyword arguments for the plant's parameter class.

    Attributes
    ----------
    model_ : SystemModel
    horizon_ : HorizonSpec
    channel_ : ChannelSpec
    n_features_in_ : int
    failed_ : ndarray of bool
        Rows of the last ``transform`` call whose rollout diverged.
    """

    def __init__(self, system="pendulum", variant="classic", horizon_seconds=0.5,
                 dt=1e-3, power=1.0, noise_std=1.0, convention="paper",
                 system_params=None):
        self.system = system
        self.variant = variant
        self.horizon_seconds = horizon_seconds
        self.dt = dt
        self.power = power
        self.noise_std = noise_std
        self.convention = convention
        self.system_params = system_params

    def fit(self, X=None, y=None):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (self.dt > 0 and self.horizon_seconds >= self.dt):
            raise ValueError("need dt > 0 and horizon_seconds >= dt")
        self.model_ = _build_model(self.system, self.system_params)
        steps = int(round(self.horizon_seconds / self.dt))
        self.horizon_ = HorizonSpec.for_variant(self.variant, steps, self.dt)
        self.channel_ = ChannelSpec(self.power, self.noise_std, self.convention)
        self.n_features_in_ = self.model_.d_x
        if X is not None:
            check_array(X, ensure_all_finite=True)
        return self

    def score_samples(self, X):
        """Empowerment of each row of ``X``; NaN where the rollout diverged."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        values, failed = empowerment_batch(self.model_, X, self.horizon_, self.channel_)
        self.failed_ = failed
        return values

    def transform(self, X):
        return self.score_samples(X)[:, None]


class EmpowermentController(BaseEstimator):
    """Greedy empowerment-maximising policy; ``predict`` returns actions.

    ``decision_dt=None`` and ``power=None`` take the per-variant defaults.
    """

    def __init__(self, system="pendulum", variant="classic", horizon_seconds=0.5,
                 dt=1e-3, power=None, noise_std=1.0, convention="paper",
                 action_bound=1.0, action_grid_size=21, decision_dt=None,
                 system_params=None):
        self.system = system
        self.variant = variant
        self.horizon_seconds = horizon_seconds
        self.dt = dt
        self.power = power
        self.noise_std = noise_std
        self.convention = convention
        self.action_bound = action_bound
        self.action_grid_size = action_grid_size
        self.decision_dt = decision_dt
        self.system_params = system_params

    def fit(self, X=None, y=None):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        base = VARIANT_DEFAULTS[self.variant]
        power = base["power"] if self.power is None else self.power
        decision_dt = base["decision_dt"] if self.decision_dt is None else self.decision_dt
        self.model_ = _build_model(self.system, self.system_params)
        self.policy_ = ControlPolicySpec.for_variant(
            self.variant, self.horizon_seconds, self.dt,
            channel=ChannelSpec(power, self.noise_std, self.convention),
            action_bound=self.action_bound, action_grid_size=self.action_grid_size,
            decision_dt=decision_dt, sim_dt=min(self.dt, decision_dt))
        self.n_features_in_ = self.model_.d_x
        return self

    def predict(self, X):
        """Greedy action for every row of ``X``, shape ``(n, d_a)``."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.array([greedy_action(self.model_, x, self.policy_)[0] for x in X])
