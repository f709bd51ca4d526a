"""Linear response of future states to past actions along the autonomous
(zero-action) Euler trajectory.

For the Euler map ``F(x) = x + f(x) dt`` the step Jacobian is
``J_t = I + grad f(x_t) dt`` and a unit action at step ``r`` moves the next
state by ``G_r = g(x_r) dt``.  The response of state ``s`` to action ``r`` is
``J_{s-1} ... J_{r+1} G_r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import IndexOutOfRange, NonFiniteState
from .model import SystemModel


@dataclass(frozen=True)
class HorizonSpec:
    """Index triple selecting a generalised empowerment, plus the time step.

    ``horizon_steps`` is the index of the last observed state, actions are
    applied at steps ``0 .. action_steps - 1`` and observation starts
    ``gap_steps`` steps after the last action, at index
    ``action_steps + gap_steps``.
    """

    dt: float
    horizon_steps: int
    action_steps: int
    gap_steps: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        for name in ("horizon_steps", "action_steps", "gap_steps"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be an integer")
            object.__setattr__(self, name, int(v))
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if self.action_steps < 1:
            raise ValueError("action_steps must be >= 1")
        if self.gap_steps < 0:
            raise ValueError("gap_steps must be >= 0")
        if self.action_steps + self.gap_steps > self.horizon_steps:
            raise ValueError(
                "action_steps + gap_steps must not exceed horizon_steps")

    @property
    def observed_steps(self) -> int:
        """Number of observed states ``s``; ``s + n + r - 1 == T_e``."""
        return self.horizon_steps - self.action_steps - self.gap_steps + 1

    @property
    def first_observed(self) -> int:
        return self.action_steps + self.gap_steps

    @property
    def horizon_seconds(self) -> float:
        return self.horizon_steps * self.dt

    @classmethod
    def for_variant(cls, variant: str, horizon_steps: int, dt: float) -> "HorizonSpec":
        """Index triple of a named empowerment variant.

        ``classic``: all actions, final state only.  ``kicked_cef``: a single
        action, whole trajectory observed.  ``controlled_lyapunov``: a single
        action, final state only.
        """
        if variant == "classic":
            return cls(dt, horizon_steps, horizon_steps, 0)
        if variant == "kicked_cef":
            return cls(dt, horizon_steps, 1, 0)
        if variant == "controlled_lyapunov":
            return cls(dt, horizon_steps, 1, horizon_steps - 1)
        raise ValueError(f"unknown empowerment variant '{variant}'")


VARIANTS = ("classic", "kicked_cef", "controlled_lyapunov")


@dataclass(frozen=True)
class AutonomousRollout:
    states: np.ndarray          # (T_e + 1, d_x)
    step_jacobians: np.ndarray  # (T_e, d_x, d_x)
    gains: np.ndarray           # (T_e, d_x, d_a), already multiplied by dt
    spec: HorizonSpec


@dataclass(frozen=True)
class SensitivityMatrix:
    """Block response matrix in reverse-time order.

    Row block ``i`` belongs to state ``horizon_steps - i`` and column block
    ``j`` to action ``action_steps - 1 - j``.
    """

    entries: np.ndarray
    spec: HorizonSpec
    d_x: int
    d_a: int

    def block(self, state_index: int, action_index: int) -> np.ndarray:
        spec = self.spec
        if not (spec.first_observed <= state_index <= spec.horizon_steps
                and 0 <= action_index < spec.action_steps):
            raise IndexOutOfRange(
                f"block (s={state_index}, r={action_index}) outside matrix")
        i = spec.horizon_steps - state_index
        j = spec.action_steps - 1 - action_index
        return self.entries[i * self.d_x:(i + 1) * self.d_x,
                            j * self.d_a:(j + 1) * self.d_a]


def rollout_autonomous(model: SystemModel, x0, spec: HorizonSpec) -> AutonomousRollout:
    x = model.check_state(x0)
    if x.ndim != 1:
        raise ValueError("rollout_autonomous takes a single state")
    dt = spec.dt
    eye = np.eye(model.d_x)
    n = spec.horizon_steps
    states = np.empty((n + 1, model.d_x))
    jacs = np.empty((n, model.d_x, model.d_x))
    gains = np.empty((n, model.d_x, model.d_a))
    states[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(n):
            jacs[t] = eye + model.drift_jacobian(x) * dt
            gains[t] = model.gain(x) * dt
            x = x + model.drift(x) * dt
            if not np.all(np.isfinite(x)):
                raise NonFiniteState(f"autonomous rollout diverged at step {t + 1}")
            states[t + 1] = x
    return AutonomousRollout(states, jacs, gains, spec)


def action_sensitivity(rollout: AutonomousRollout, s: int, r: int) -> np.ndarray:
    """Response ``d x_s / d a_r`` of state ``s`` to the action at step ``r``."""
    n = rollout.spec.horizon_steps
    if not (0 <= r < s <= n):
        raise IndexOutOfRange(f"need 0 <= r < s <= {n}, got r={r}, s={s}")
    out = rollout.gains[r].copy()
    for tau in range(r + 1, s):
        out = rollout.step_jacobians[tau] @ out
    return out


def sensitivity_entries(model: SystemModel, X0, spec: HorizonSpec) -> np.ndarray:
    """Batched response matrices for states ``X0`` of shape ``(B, d_x)``.

    Returns ``(B, d_x * s, d_a * r)``.  Rows whose rollout leaves the finite
    reals contain NaN/Inf instead of raising, so callers can flag them.

    Three accumulation orders, all linear in the horizon:

    * one observed state (``s == 1``): backward product ``J_{T-1} ... J_{k}``;
    * one action (``r == 1``): forward propagation of ``G_0``;
    * otherwise: the full ``d_x x (d_a r)`` response is pushed forward with
      one matrix product per step and each new action appends a block.
    """
    X0 = np.asarray(X0, dtype=float)
    B = X0.shape[0]
    d_x, d_a = model.d_x, model.d_a
    dt = spec.dt
    T = spec.horizon_steps
    Ta = spec.action_steps
    s_obs = spec.observed_steps
    first = spec.first_observed
    eye = np.eye(d_x)

    with np.errstate(over="ignore", invalid="ignore"):
        # autonomous trajectory, Jacobians and gains; only what is needed
        x = X0.copy()
        if s_obs == 1 and Ta > 1:
            jacs = np.empty((T, B, d_x, d_x))
            gains = np.empty((Ta, B, d_x, d_a))
            for t in range(T):
                jacs[t] = eye + model.drift_jacobian(x) * dt
                if t < Ta:
                    gains[t] = model.gain(x) * dt
                x = x + model.drift(x) * dt
            out = np.empty((B, d_x, Ta * d_a))
            P = np.broadcast_to(eye, (B, d_x, d_x)).copy()
            for t in range(T - 1, Ta - 1, -1):
                P = P @ jacs[t]
            # column block j belongs to action Ta - 1 - j
            for r in range(Ta - 1, -1, -1):
                j = Ta - 1 - r
                out[:, :, j * d_a:(j + 1) * d_a] = P @ gains[r]
                P = P @ jacs[r]
            return out

        out = np.empty((B, d_x * s_obs, d_a * Ta))
        V = np.zeros((B, d_x, d_a * Ta))
        for t in range(T):
            J = eye + model.drift_jacobian(x) * dt
            if t < Ta:
                G = model.gain(x) * dt
            if t > 0:
                V = J @ V
            if t < Ta:
                j = Ta - 1 - t
                V[:, :, j * d_a:(j + 1) * d_a] = G
            # V now holds d x_{t+1} / d a
            k = t + 1
            if k >= first:
                i = T - k
                out[:, i * d_x:(i + 1) * d_x, :] = V
            x = x + model.drift(x) * dt
    return out


def build_sensitivity_matrix(model: SystemModel, x0, spec: HorizonSpec) -> SensitivityMatrix:
    x0 = model.check_state(x0)
    if x0.ndim != 1:
        raise ValueError("build_sensitivity_matrix takes a single state")
    entries = sensitivity_entries(model, x0[None, :], spec)[0]
    if not np.all(np.isfinite(entries)):
        raise NonFiniteState("sensitivity matrix is not finite; reduce dt or horizon")
    return SensitivityMatrix(entries, spec, model.d_x, model.d_a)
