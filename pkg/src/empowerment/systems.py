"""Benchmark plants: single pendulum, double pendulum (torque at the middle
joint), cart-pole, and a scalar linear system with closed-form answers.

Every angle is measured from the upright vertical, so the upright
configuration is the origin of the state space for all three pendula and the
hanging configuration sits at an angle of pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SingularMassMatrix
from .model import SystemModel

_MASS_EPS = 1e-12


def _require_positive(obj):
    for name, value in vars(obj).items():
        if not (np.isfinite(value) and value > 0):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0
    l: float = 1.0
    gravity: float = 9.81

    def __post_init__(self):
        _require_positive(self)


@dataclass(frozen=True)
class DoublePendulumParams:
    """Link masses, lengths, centre-of-mass offsets and inertias.

    The defaults describe two uniform unit rods (``I = m l^2 / 12``).
    """

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    lc1: float = 0.5
    lc2: float = 0.5
    I1: float = 1.0 / 12.0
    I2: float = 1.0 / 12.0
    gravity: float = 9.81

    def __post_init__(self):
        _require_positive(self)
        if self.lc1 > self.l1 or self.lc2 > self.l2:
            raise ValueError("centre-of-mass offsets must not exceed link lengths")


@dataclass(frozen=True)
class CartPoleParams:
    M: float = 1.0
    m: float = 0.1
    l: float = 1.0
    gravity: float = 9.81

    def __post_init__(self):
        _require_positive(self)


# --------------------------------------------------------------------------
# single pendulum

def pendulum_model(p: PendulumParams = PendulumParams()) -> SystemModel:
    """Pendulum with torque input; state ``(theta, theta_dot)``."""
    w2 = p.gravity / p.l
    b = 1.0 / (p.m * p.l ** 2)

    def drift(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 1], w2 * np.sin(x[..., 0])], axis=-1)

    def gain(x):
        x = np.asarray(x, dtype=float)
        G = np.zeros(x.shape[:-1] + (2, 1))
        G[..., 1, 0] = b
        return G

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = w2 * np.cos(x[..., 0])
        return J

    return SystemModel(
        d_x=2, d_a=1, drift=drift, gain=gain, drift_jacobian=jacobian,
        state_names=("theta", "theta_dot"), action_names=("torque",),
        name="pendulum", angle_indices=(0,), params=p)


def pendulum_energy(p: PendulumParams, x):
    """Mechanical energy, zero at the upright rest state."""
    x = np.asarray(x, dtype=float)
    return (0.5 * p.m * p.l ** 2 * x[..., 1] ** 2
            + p.m * p.gravity * p.l * (np.cos(x[..., 0]) - 1.0))


# --------------------------------------------------------------------------
# two degree-of-freedom mechanical systems  M(q) q'' = b(q, q') + B u

def _solve2(M11, M12, M22, r1, r2):
    det = M11 * M22 - M12 * M12
    return (M22 * r1 - M12 * r2) / det, (M11 * r2 - M12 * r1) / det


def _mechanical_model(parts, actuation, **meta):
    """Assemble a :class:`SystemModel` for ``M(q) q'' = b(q, q') + B u``.

    ``parts(x)`` returns the mass-matrix entries, their derivatives with
    respect to the state, the bias force ``b`` and its derivatives.  The
    Jacobian of ``q'' = M^{-1} b`` follows from
    ``d(q'') = M^{-1} (db - dM q'')``.
    """
    B1, B2 = actuation

    def drift(x):
        x = np.asarray(x, dtype=float)
        M11, M12, M22, _, b1, b2, _ = parts(x)
        q1dd, q2dd = _solve2(M11, M12, M22, b1, b2)
        return np.stack([x[..., 2], x[..., 3], q1dd, q2dd], axis=-1)

    def gain(x):
        x = np.asarray(x, dtype=float)
        M11, M12, M22, _, _, _, _ = parts(x)
        g1, g2 = _solve2(M11, M12, M22, B1, B2)
        G = np.zeros(x.shape[:-1] + (4, 1))
        G[..., 2, 0] = g1
        G[..., 3, 0] = g2
        return G

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        M11, M12, M22, dM, b1, b2, db = parts(x)
        q1dd, q2dd = _solve2(M11, M12, M22, b1, b2)
        J = np.zeros(x.shape[:-1] + (4, 4))
        J[..., 0, 2] = 1.0
        J[..., 1, 3] = 1.0
        for k in range(4):
            dM11, dM12, dM22 = dM[k]
            r1 = db[0][k] - (dM11 * q1dd + dM12 * q2dd)
            r2 = db[1][k] - (dM12 * q1dd + dM22 * q2dd)
            J[..., 2, k], J[..., 3, k] = _solve2(M11, M12, M22, r1, r2)
        return J

    return SystemModel(d_x=4, d_a=1, drift=drift, gain=gain,
                       drift_jacobian=jacobian, **meta)


def double_pendulum_model(p: DoublePendulumParams = DoublePendulumParams()) -> SystemModel:
    """Double pendulum actuated only at the joint between the links.

    State ``(theta1, theta2, theta1_dot, theta2_dot)`` where ``theta1`` is
    the first link's angle from upright and ``theta2`` the second link's
    angle relative to the first.  Both links up is the origin; both links
    down is ``(pi, 0, 0, 0)``.
    """
    c = p.m2 * p.l1 * p.lc2
    A = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity
    Bg = p.m2 * p.lc2 * p.gravity
    M22c = p.m2 * p.lc2 ** 2 + p.I2
    M11c = p.m1 * p.lc1 ** 2 + p.m2 * (p.l1 ** 2 + p.lc2 ** 2) + p.I1 + p.I2
    M12c = p.m2 * p.lc2 ** 2 + p.I2

    def parts(x):
        t1, t2, w1, w2 = (x[..., i] for i in range(4))
        s1, c1 = np.sin(t1), np.cos(t1)
        s2, c2 = np.sin(t2), np.cos(t2)
        s12, c12 = np.sin(t1 + t2), np.cos(t1 + t2)
        d1 = M11c + 2 * c * c2
        d2 = M12c + c * c2
        M22 = np.full_like(d1, M22c)
        if np.any(d1 < _MASS_EPS) or np.any(M22 - d2 ** 2 / d1 < _MASS_EPS):
            raise SingularMassMatrix("double pendulum mass matrix is singular")
        zero = np.zeros_like(d1)
        # derivative of (M11, M12, M22) w.r.t. (t1, t2, w1, w2)
        dM = [(zero, zero, zero), (-2 * c * s2, -c * s2, zero),
              (zero, zero, zero), (zero, zero, zero)]
        b1 = c * (w2 ** 2 + 2 * w1 * w2) * s2 + A * s1 + Bg * s12
        b2 = -c * w1 ** 2 * s2 + Bg * s12
        db1 = [A * c1 + Bg * c12,
               c * (w2 ** 2 + 2 * w1 * w2) * c2 + Bg * c12,
               2 * c * w2 * s2,
               2 * c * (w1 + w2) * s2]
        db2 = [Bg * c12,
               -c * w1 ** 2 * c2 + Bg * c12,
               -2 * c * w1 * s2,
               zero]
        return d1, d2, M22, dM, b1, b2, (db1, db2)

    return _mechanical_model(
        parts, (0.0, 1.0),
        state_names=("theta1", "theta2", "theta1_dot", "theta2_dot"),
        action_names=("torque",), name="double_pendulum",
        angle_indices=(0, 1), params=p)


def double_pendulum_energy(p: DoublePendulumParams, x):
    """Kinetic plus potential energy, zero with both links upright at rest."""
    x = np.asarray(x, dtype=float)
    t1, t2, w1, w2 = (x[..., i] for i in range(4))
    d1 = p.m1 * p.lc1 ** 2 + p.m2 * (p.l1 ** 2 + p.lc2 ** 2 + 2 * p.l1 * p.lc2 * np.cos(t2)) + p.I1 + p.I2
    d2 = p.m2 * (p.lc2 ** 2 + p.l1 * p.lc2 * np.cos(t2)) + p.I2
    M22 = p.m2 * p.lc2 ** 2 + p.I2
    kinetic = 0.5 * (d1 * w1 ** 2 + 2 * d2 * w1 * w2 + M22 * w2 ** 2)
    A = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity
    Bg = p.m2 * p.lc2 * p.gravity
    potential = A * (np.cos(t1) - 1) + Bg * (np.cos(t1 + t2) - 1)
    return kinetic + potential


def cartpole_model(p: CartPoleParams = CartPoleParams()) -> SystemModel:
    """Cart-pole with a horizontal force on the cart.

    State ``(x, theta, x_dot, theta_dot)``; ``theta`` is the pole angle from
    upright.  The accelerations are

    ``x'' = (u + m sin(th) (g cos(th) - l th'^2)) / (M + m sin(th)^2)``

    ``th'' = (u cos(th) - m l th'^2 sin(th) cos(th) + (M + m) g sin(th))
    / (l (M + m sin(th)^2))``
    """
    M, m, l, g = p.M, p.m, p.l, p.gravity

    def parts(x):
        th, w = x[..., 1], x[..., 3]
        s, co = np.sin(th), np.cos(th)
        M11 = np.full_like(th, M + m)
        M12 = -m * l * co
        M22 = np.full_like(th, m * l ** 2)
        zero = np.zeros_like(th)
        dM = [(zero, zero, zero), (zero, m * l * s, zero),
              (zero, zero, zero), (zero, zero, zero)]
        b1 = -m * l * w ** 2 * s
        b2 = m * g * l * s
        db1 = [zero, -m * l * w ** 2 * co, zero, -2 * m * l * w * s]
        db2 = [zero, m * g * l * co, zero, zero]
        return M11, M12, M22, dM, b1, b2, (db1, db2)

    return _mechanical_model(
        parts, (1.0, 0.0),
        state_names=("x", "theta", "x_dot", "theta_dot"),
        action_names=("force",), name="cartpole",
        angle_indices=(1,), params=p)


def cartpole_energy(p: CartPoleParams, x):
    x = np.asarray(x, dtype=float)
    th, v, w = x[..., 1], x[..., 2], x[..., 3]
    kinetic = (0.5 * (p.M + p.m) * v ** 2 - p.m * p.l * v * w * np.cos(th)
               + 0.5 * p.m * p.l ** 2 * w ** 2)
    return kinetic + p.m * p.gravity * p.l * (np.cos(th) - 1)


# --------------------------------------------------------------------------
# analytic oracle

def linear_test_model(alpha: float = 0.0, gain: float = 1.0) -> SystemModel:
    """Scalar system ``dx = alpha x dt + gain da``.

    The Euler sensitivities are ``(1 + alpha dt)^(s - r - 1) * gain * dt``.
    """
    alpha = float(alpha)
    gain = float(gain)

    def drift(x):
        return alpha * np.asarray(x, dtype=float)

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] + (1, 1), gain)

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] + (1, 1), alpha)

    return SystemModel(d_x=1, d_a=1, drift=drift, gain=g,
                       drift_jacobian=jacobian, state_names=("x",),
                       action_names=("u",), name="linear",
                       params={"alpha": alpha, "gain": gain})


def scale_gain(model: SystemModel, factor: float) -> SystemModel:
    """Copy of ``model`` whose control gain is multiplied by ``factor``.

    ``factor = 0`` yields an uncontrollable plant with the same drift, which
    has zero empowerment everywhere.
    """
    factor = float(factor)
    if factor == 1.0:
        return model
    base = model.gain
    return SystemModel(
        d_x=model.d_x, d_a=model.d_a, drift=model.drift,
        gain=lambda x: factor * base(x), drift_jacobian=model.drift_jacobian,
        state_names=model.state_names, action_names=model.action_names,
        name=model.name, angle_indices=model.angle_indices,
        params=model.params)


SYSTEMS = {
    "pendulum": (pendulum_model, PendulumParams),
    "double_pendulum": (double_pendulum_model, DoublePendulumParams),
    "cartpole": (cartpole_model, CartPoleParams),
}

# Rest state hanging straight down, the start of every swing-up experiment.
HANGING_STATES = {
    "pendulum": (np.pi, 0.0),
    "double_pendulum": (np.pi, 0.0, 0.0, 0.0),
    "cartpole": (0.0, np.pi, 0.0, 0.0),
    "linear": (0.0,),
}


def energy_function(model: SystemModel):
    """Return ``x -> energy`` for the mechanical benchmark models."""
    p = model.params
    if isinstance(p, PendulumParams):
        return lambda x: pendulum_energy(p, x)
    if isinstance(p, DoublePendulumParams):
        return lambda x: double_pendulum_energy(p, x)
    if isinstance(p, CartPoleParams):
        return lambda x: cartpole_energy(p, x)
    raise ValueError(f"no energy function for model '{model.name}'")
