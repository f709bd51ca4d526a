"""Controlled stochastic systems ``dx = f(x) dt + g(x) da + d(eta)`` and their
explicit Euler / Euler-Maruyama discretisation.

All model callables are vectorised over leading axes: ``drift`` maps
``(..., d_x) -> (..., d_x)``, ``gain`` maps ``(..., d_x) -> (..., d_x, d_a)``
and ``drift_jacobian`` maps ``(..., d_x) -> (..., d_x, d_x)``.  Batching is
what makes landscapes and candidate-action sweeps affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import NonFiniteState

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SystemModel:
    """A controlled dynamical system.

    Parameters
    ----------
    d_x, d_a : int
        State and action dimensions.
    drift : callable
        Deterministic vector field ``f``.
    gain : callable
        Control gain ``g`` returning a ``(d_x, d_a)`` matrix per state.
    drift_jacobian : callable
        Analytic Jacobian of ``drift``.
    state_names, action_names : tuple of str
        Column labels used by the serialisers.
    name : str
        Short identifier (``pendulum``, ``cartpole`` ...).
    angle_indices : tuple of int
        State components that are angles; they are wrapped to ``(-pi, pi]``
        for landscape indexing and success tests.
    """

    d_x: int
    d_a: int
    drift: ArrayFn
    gain: ArrayFn
    drift_jacobian: ArrayFn
    state_names: tuple = ()
    action_names: tuple = ()
    name: str = "model"
    angle_indices: tuple = ()
    params: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.d_x < 1 or self.d_a < 1:
            raise ValueError("d_x and d_a must be positive")
        if not self.state_names:
            object.__setattr__(
                self, "state_names", tuple(f"x{i}" for i in range(self.d_x)))
        if not self.action_names:
            object.__setattr__(
                self, "action_names", tuple(f"a{i}" for i in range(self.d_a)))
        if len(self.state_names) != self.d_x:
            raise ValueError("state_names must have d_x entries")
        if len(self.action_names) != self.d_a:
            raise ValueError("action_names must have d_a entries")

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.d_x,):
            raise ValueError(
                f"state has trailing dimension {x.shape[-1:]} but model "
                f"'{self.name}' expects {self.d_x}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteState("state contains non-finite components")
        return x

    def check_action(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1)
        if a.shape[-1:] != (self.d_a,):
            raise ValueError(
                f"action has trailing dimension {a.shape[-1:]} but model "
                f"'{self.name}' expects {self.d_a}")
        if not np.all(np.isfinite(a)):
            raise ValueError("action contains non-finite components")
        return a


@dataclass(frozen=True)
class NoiseSpec:
    """Process and observation noise levels.

    ``process_std`` scales the Wiener increment (per square-root second) that
    enters through the control gain; ``obs_std`` is the standard deviation of
    the Gaussian observation noise on the observed states.
    """

    process_std: float = 0.0
    obs_std: float = 1.0

    def __post_init__(self):
        if not self.process_std >= 0 or not np.isfinite(self.process_std):
            raise ValueError("process_std must be finite and >= 0")
        if not self.obs_std > 0 or not np.isfinite(self.obs_std):
            raise ValueError("obs_std must be finite and > 0")


def _apply_gain(G, a):
    return np.einsum("...ij,...j->...i", G, a)


def _finite_or_raise(x):
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(
            "integration produced a non-finite state; reduce dt")
    return x


def step_deterministic(model: SystemModel, x, a, dt: float) -> np.ndarray:
    """One explicit Euler step ``x + f(x) dt + g(x) a dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = model.check_state(x)
    a = model.check_action(a)
    with np.errstate(over="ignore", invalid="ignore"):
        out = x + model.drift(x) * dt + _apply_gain(model.gain(x), a) * dt
    return _finite_or_raise(out)


def step_stochastic(model: SystemModel, x, a, dt: float, noise: NoiseSpec,
                    rng: np.random.Generator) -> np.ndarray:
    """One Euler-Maruyama step.

    The Wiener increment has standard deviation ``process_std * sqrt(dt)``
    per action channel and is routed through the same gain ``g(x)`` as the
    control.  With ``process_std == 0`` no random numbers are drawn and the
    result equals :func:`step_deterministic` exactly.
    """
    out = step_deterministic(model, x, a, dt)
    if noise.process_std == 0:
        return out
    x = np.asarray(x, dtype=float)
    xi = rng.normal(0.0, noise.process_std * np.sqrt(dt),
                    size=x.shape[:-1] + (model.d_a,))
    with np.errstate(over="ignore", invalid="ignore"):
        out = out + _apply_gain(model.gain(x), xi)
    return _finite_or_raise(out)


def finite_diff_jacobian(fn: ArrayFn, x, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of ``fn`` at a single point ``x``.

    ``h`` defaults to ``1e-6 * max(1, |x|)``.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    if not h > 0:
        raise ValueError("h must be positive")
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def wrap_angle(theta):
    """Map angles to the half-open interval ``(-pi, pi]``."""
    theta = np.asarray(theta, dtype=float)
    wrapped = np.mod(theta + np.pi, 2 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def wrap_state(model: SystemModel, x) -> np.ndarray:
    x = np.array(x, dtype=float, copy=True)
    for i in model.angle_indices:
        x[..., i] = wrap_angle(x[..., i])
    return x
