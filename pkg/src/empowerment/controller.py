"""Greedy empowerment-maximising control.

At each decision step the controller tries every action on a grid, predicts
the successor state one decision interval ahead, and applies the action whose
successor has the largest empowerment.  The action is then held while the
plant is integrated stochastically at the finer simulation step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .capacity import ChannelSpec, empowerment_batch
from .exceptions import GridTooLarge, NonFiniteState
from .model import NoiseSpec, SystemModel, step_deterministic, step_stochastic
from .sensitivity import VARIANTS, HorizonSpec

MAX_CANDIDATES = 100_000

# Per-variant settings under which the single pendulum swings up and holds
# upright (action bound 1, 0.5 s horizon, dt 1e-3).  A variant's decision
# interval sets how far ahead the successor state is predicted.
VARIANT_DEFAULTS = {
    "classic": {"decision_dt": 0.02, "power": 100.0},
    "kicked_cef": {"decision_dt": 0.05, "power": 1.0},
    "controlled_lyapunov": {"decision_dt": 0.1, "power": 1.0},
}


@dataclass(frozen=True)
class ControlPolicySpec:
    """Everything the greedy controller needs besides the plant.

    ``horizon`` must carry the index triple of ``variant``; use
    :meth:`for_variant` to build a consistent pair.
    """

    variant: str = "classic"
    horizon: HorizonSpec = field(
        default_factory=lambda: HorizonSpec.for_variant("classic", 500, 1e-3))
    channel: ChannelSpec = ChannelSpec()
    action_bound: float = 1.0
    action_grid_size: int = 21
    decision_dt: float = 0.02
    sim_dt: float = 1e-3
    expectation_samples: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        expected = HorizonSpec.for_variant(
            self.variant, self.horizon.horizon_steps, self.horizon.dt)
        if expected != self.horizon:
            raise ValueError(
                f"horizon {self.horizon} does not match variant '{self.variant}'")
        if not (np.isfinite(self.action_bound) and self.action_bound > 0):
            raise ValueError("action_bound must be positive")
        if self.action_grid_size < 3 or self.action_grid_size % 2 == 0:
            raise ValueError("action_grid_size must be an odd integer >= 3")
        if not (self.sim_dt > 0 and self.decision_dt > 0):
            raise ValueError("decision_dt and sim_dt must be positive")
        if self.decision_dt < self.sim_dt:
            raise ValueError("decision_dt must be >= sim_dt")
        if self.expectation_samples < 1:
            raise ValueError("expectation_samples must be >= 1")

    @classmethod
    def for_variant(cls, variant="classic", horizon_seconds=0.5, dt=1e-3, **kwargs):
        steps = int(round(horizon_seconds / dt))
        return cls(variant=variant,
                   horizon=HorizonSpec.for_variant(variant, steps, dt), **kwargs)

    @property
    def substeps(self) -> int:
        return int(round(self.decision_dt / self.sim_dt))


@dataclass
class Rollout:
    """Closed-loop record, one row per decision step.

    ``states[k]`` is the state at ``times[k]`` when ``actions[k]`` was chosen
    and ``empowerment_trace[k]`` is the value of the predicted successor.
    """

    times: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    empowerment_trace: np.ndarray
    final_time: float
    final_state: np.ndarray
    failed: bool = False
    message: str = ""

    @property
    def all_states(self) -> np.ndarray:
        """Decision-time states followed by the final state."""
        return np.vstack([self.states, self.final_state[None, :]])

    @property
    def all_times(self) -> np.ndarray:
        return np.append(self.times, self.final_time)


def candidate_actions(spec: ControlPolicySpec, d_a: int) -> np.ndarray:
    """Uniform grid over ``[-bound, bound]^d_a`` as an ``(n, d_a)`` array."""
    n = spec.action_grid_size
    if n < 3 or n % 2 == 0:
        raise ValueError("action_grid_size must be an odd integer >= 3")
    if n ** d_a > MAX_CANDIDATES:
        raise GridTooLarge(
            f"{n}^{d_a} candidate actions exceeds the limit of {MAX_CANDIDATES}")
    axis = np.linspace(-spec.action_bound, spec.action_bound, n)
    axis[n // 2] = 0.0
    return np.array(list(itertools.product(axis, repeat=d_a)), dtype=float)


def _argmax_with_ties(values, candidates):
    """Largest value; ties go to the smaller-norm action, then lexicographic."""
    values = np.where(np.isfinite(values), values, -np.inf)
    norms = np.linalg.norm(candidates, axis=1)
    keys = [candidates[:, j] for j in range(candidates.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys + [norms, -values])
    return int(order[0])


def successor_values(model: SystemModel, x, spec: ControlPolicySpec,
                     candidates=None, noise: NoiseSpec | None = None, rng=None):
    """Empowerment of the predicted successor for every candidate action."""
    x = model.check_state(x)
    if candidates is None:
        candidates = candidate_actions(spec, model.d_a)
    X = np.broadcast_to(x, (len(candidates), model.d_x))
    samples = spec.expectation_samples
    if samples == 1 or noise is None or noise.process_std == 0:
        succ = step_deterministic(model, X, candidates, spec.decision_dt)
        values, _ = empowerment_batch(model, succ, spec.horizon, spec.channel)
        return values
    if rng is None:
        raise ValueError("expectation_samples > 1 needs a random generator")
    total = np.zeros(len(candidates))
    for _ in range(samples):
        succ = step_stochastic(model, X, candidates, spec.decision_dt, noise, rng)
        values, _ = empowerment_batch(model, succ, spec.horizon, spec.channel)
        total += values
    return total / samples


def greedy_action(model: SystemModel, x, spec: ControlPolicySpec,
                  noise: NoiseSpec | None = None, rng=None):
    """Return ``(action, value_nats)`` maximising successor empowerment."""
    candidates = candidate_actions(spec, model.d_a)
    values = successor_values(model, x, spec, candidates, noise, rng)
    best = _argmax_with_ties(values, candidates)
    return candidates[best].copy(), float(values[best])


def run_rollout(model: SystemModel, x0, duration_s: float, spec: ControlPolicySpec,
                noise: NoiseSpec = NoiseSpec(process_std=0.01), seed: int = 0,
                callback=None) -> Rollout:
    """Closed-loop simulation under the greedy policy.

    ``duration_s`` must be a whole number of decision intervals and
    ``decision_dt`` a whole number of simulation steps.  A non-finite state
    stops the simulation and returns the partial record with ``failed`` set.
    """
    n_dec = int(round(duration_s / spec.decision_dt))
    if n_dec < 1 or not np.isclose(n_dec * spec.decision_dt, duration_s, rtol=0, atol=1e-9):
        raise ValueError("duration_s must be a positive multiple of decision_dt")
    sub = spec.substeps
    if not np.isclose(sub * spec.sim_dt, spec.decision_dt, rtol=0, atol=1e-12):
        raise ValueError("decision_dt must be a multiple of sim_dt")
    rng = np.random.default_rng(seed)
    candidates = candidate_actions(spec, model.d_a)
    x = model.check_state(x0).astype(float).copy()

    times, states, actions, trace = [], [], [], []
    failed, message = False, ""
    t = 0.0
    for k in range(n_dec):
        t = k * spec.decision_dt
        try:
            values = successor_values(model, x, spec, candidates, noise, rng)
            best = _argmax_with_ties(values, candidates)
            a = candidates[best]
            times.append(t)
            states.append(x.copy())
            actions.append(a.copy())
            trace.append(float(values[best]))
            for _ in range(sub):
                x = step_stochastic(model, x, a, spec.sim_dt, noise, rng)
        except NonFiniteState as exc:
            failed, message = True, str(exc)
            break
        if callback is not None:
            callback(k, x)
    final_time = len(times) * spec.decision_dt
    return Rollout(
        times=np.asarray(times, dtype=float),
        states=np.asarray(states, dtype=float).reshape(-1, model.d_x),
        actions=np.asarray(actions, dtype=float).reshape(-1, model.d_a),
        empowerment_trace=np.asarray(trace, dtype=float),
        final_time=float(final_time), final_state=x, failed=failed,
        message=message)


def upright_mask(model: SystemModel, states, angle_tol=0.2, rate_tol=0.5):
    """True where every angle is within ``angle_tol`` of upright and every
    angular rate below ``rate_tol``.
    """
    from .model import wrap_angle

    states = np.atleast_2d(np.asarray(states, dtype=float))
    ok = np.ones(states.shape[0], dtype=bool)
    d = model.d_x // 2
    for i in model.angle_indices:
        ok &= np.abs(wrap_angle(states[:, i])) < angle_tol
        ok &= np.abs(states[:, i + d]) < rate_tol
    return ok


def first_crossing_time(model: SystemModel, rollout: Rollout, angle_tol=0.2):
    """Time the (first) angle first comes within ``angle_tol`` of upright."""
    from .model import wrap_angle

    idx = model.angle_indices[0]
    near = np.abs(wrap_angle(rollout.all_states[:, idx])) < angle_tol
    hits = np.nonzero(near)[0]
    return float(rollout.all_times[hits[0]]) if hits.size else None


def longest_hold(model: SystemModel, rollout: Rollout, **tol):
    """Start time and duration of the longest run inside the upright band."""
    mask = upright_mask(model, rollout.all_states, **tol)
    times = rollout.all_times
    best_start, best_len, start = None, 0.0, None
    for k, inside in enumerate(mask):
        if inside and start is None:
            start = k
        if start is not None and (not inside or k == len(mask) - 1):
            end = k if inside else k - 1
            length = times[end] - times[start]
            if length > best_len or best_start is None:
                best_start, best_len = float(times[start]), float(length)
            start = None
    return best_start, best_len
