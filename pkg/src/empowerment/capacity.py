"""Gaussian channel capacity of the linear response, water-filling, and
controlled Lyapunov exponents.

Channel normalisation
---------------------
Actions are held constant over each step of length ``dt``.  The power
budget ``P`` is the energy ``sum_r |a_r|^2 dt`` of that piecewise-constant
control signal, so the channel seen by the unit-energy input
``u_r = a_r sqrt(dt)`` is ``F / sqrt(dt)``.  With this normalisation the
singular values, and hence the capacity, converge to a finite continuous-time
value as ``dt -> 0``.  Singular values are further divided by the
observation-noise standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonFiniteState, NumericalFailure
from .model import SystemModel
from .sensitivity import HorizonSpec, SensitivityMatrix, sensitivity_entries

CONVENTIONS = ("paper", "squared")
_TRUNCATE = 1e-12


@dataclass(frozen=True)
class ChannelSpec:
    """Power budget and effective noise of the action-to-state channel.

    ``convention='paper'`` evaluates ``1/2 sum ln(1 + rho_i sigma_i)`` with
    ``rho_i`` the noise-scaled singular values; ``'squared'`` uses
    ``rho_i**2`` (the textbook Gaussian-channel gain).
    """

    power: float = 1.0
    noise_std: float = 1.0
    convention: str = "paper"

    def __post_init__(self):
        if not (np.isfinite(self.power) and self.power >= 0):
            raise ValueError("power must be finite and >= 0")
        if not (np.isfinite(self.noise_std) and self.noise_std > 0):
            raise ValueError("noise_std must be finite and > 0")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")


@dataclass(frozen=True)
class PowerAllocation:
    channel_powers: np.ndarray
    water_level: float
    active_count: int


@dataclass(frozen=True)
class EmpowermentResult:
    value_nats: float
    singular_values: np.ndarray
    allocation: PowerAllocation
    spec: HorizonSpec | None = None
    state: np.ndarray | None = field(default=None, compare=False)


def _as_matrix(F):
    return F.entries if isinstance(F, SensitivityMatrix) else np.asarray(F, dtype=float)


def _truncate(sv):
    top = sv[..., :1]
    return np.where(sv < _TRUNCATE * top, 0.0, sv)


def scaled_singular_values(F, noise_std: float) -> np.ndarray:
    """Singular values of ``F`` divided by ``noise_std``, descending.

    Values below ``1e-12`` times the largest are set to zero.
    """
    M = _as_matrix(F)
    if not np.all(np.isfinite(M)):
        raise NonFiniteState("sensitivity matrix is not finite")
    if not noise_std > 0:
        raise ValueError("noise_std must be positive")
    try:
        sv = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    return _truncate(sv / noise_std)


def _water_fill_rows(rho, power):
    """Vectorised sorted-prefix water-filling over the rows of ``rho``.

    ``rho`` is ``(B, k)`` and sorted descending along each row.  Returns
    channel powers, water levels and active counts.
    """
    rho = np.asarray(rho, dtype=float)
    B, k = rho.shape
    sigma = np.zeros_like(rho)
    level = np.zeros(B)
    active = np.zeros(B, dtype=int)
    with np.errstate(divide="ignore", over="ignore"):
        inv = 1.0 / np.where(rho > 0, rho, 0.0)
    # a gain whose reciprocal overflows carries no usable information
    positive = np.isfinite(inv)
    inv = np.where(positive, inv, np.inf)
    with np.errstate(over="ignore"):
        csum = np.cumsum(np.where(positive, inv, 0.0), axis=1)
    counts = np.arange(1, k + 1)
    # slack_k = k (mu_k - 1/rho_k); grouping keeps P exact when gains are tiny
    with np.errstate(invalid="ignore", over="ignore"):
        slack = power + (csum - counts * inv)
    feasible = positive & (slack >= 0)
    has = feasible.any(axis=1)
    # feasibility is a prefix property, so the last feasible index is the count
    kk = np.where(has, k - np.argmax(feasible[:, ::-1], axis=1), 0)
    rows = np.nonzero(has)[0]
    level[rows] = (power + csum[rows, kk[rows] - 1]) / kk[rows]
    mask = (np.arange(k)[None, :] < kk[:, None]) & has[:, None]
    ksafe = np.maximum(kk, 1)[:, None]
    csum_k = np.take_along_axis(csum, (ksafe - 1), axis=1)
    with np.errstate(invalid="ignore", over="ignore"):
        share = (power + (csum_k - ksafe * inv)) / ksafe
    sigma = np.where(mask, np.maximum(share, 0.0), 0.0)
    active = np.count_nonzero(sigma > 0, axis=1)
    return sigma, level, active


def water_fill(rho, power: float) -> PowerAllocation:
    """Optimal split of ``power`` across parallel channels with gains ``rho``.

    Maximises ``1/2 sum ln(1 + rho_i sigma_i)`` subject to ``sigma_i >= 0``
    and ``sum sigma_i = power``.  The solution is ``sigma_i = max(0, mu -
    1/rho_i)``; the level ``mu`` is found exactly by trying ``k`` active
    channels in order of decreasing gain.  Channels with zero gain, or a
    gain so small that its reciprocal overflows, never get power; if every gain is zero the allocation is all zeros with water level
    ``0``.

    Examples
    --------
    >>> a = water_fill([4.0, 1.0], 1.0)
    >>> a.channel_powers.tolist(), a.water_level
    ([0.875, 0.125], 1.125)
    """
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.size == 0:
        return PowerAllocation(np.zeros(0), 0.0, 0)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("channel gains must be finite and non-negative")
    if np.any(np.diff(rho) > 0):
        raise ValueError("channel gains must be sorted in descending order")
    if not (np.isfinite(power) and power >= 0):
        raise ValueError("power must be finite and non-negative")
    sigma, level, active = _water_fill_rows(rho[None, :], float(power))
    return PowerAllocation(sigma[0], float(level[0]), int(active[0]))


def capacity_nats(rho, sigma) -> float:
    """``1/2 sum ln(1 + rho_i sigma_i)`` in nats."""
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(0.5 * np.sum(np.log1p(rho * sigma)))


def _effective_gains(sv, channel: ChannelSpec):
    return sv ** 2 if channel.convention == "squared" else sv


def channel_singular_values(F, spec: HorizonSpec, channel: ChannelSpec) -> np.ndarray:
    """Noise-scaled singular values of the unit-energy channel ``F / sqrt(dt)``."""
    return scaled_singular_values(_as_matrix(F) / np.sqrt(spec.dt), channel.noise_std)


def empowerment_from_matrix(F, spec: HorizonSpec, channel: ChannelSpec,
                            state=None) -> EmpowermentResult:
    sv = channel_singular_values(F, spec, channel)
    gains = _effective_gains(sv, channel)
    alloc = water_fill(gains, channel.power)
    value = capacity_nats(gains, alloc.channel_powers)
    return EmpowermentResult(max(value, 0.0), sv, alloc, spec,
                             None if state is None else np.asarray(state, float))


def generalized_empowerment(model: SystemModel, x0, spec: HorizonSpec,
                            channel: ChannelSpec = ChannelSpec()) -> EmpowermentResult:
    """Capacity between ``action_steps`` actions and the observed states.

    Builds the response matrix about the autonomous trajectory from ``x0``,
    takes its singular values and water-fills the power budget over them.
    """
    x0 = model.check_state(x0)
    if x0.ndim != 1:
        raise ValueError("generalized_empowerment takes a single state")
    entries = sensitivity_entries(model, x0[None, :], spec)[0]
    if not np.all(np.isfinite(entries)):
        raise NonFiniteState("sensitivity matrix is not finite; reduce dt or horizon")
    return empowerment_from_matrix(entries, spec, channel, x0)


def classic_empowerment(model, x0, t_e: int, dt: float,
                        channel: ChannelSpec = ChannelSpec()) -> EmpowermentResult:
    """Actions over the whole horizon, only the final state observed."""
    return generalized_empowerment(
        model, x0, HorizonSpec.for_variant("classic", t_e, dt), channel)


def kicked_cef(model, x0, t_e: int, dt: float,
               channel: ChannelSpec = ChannelSpec()) -> EmpowermentResult:
    """A single initial action, every subsequent state up to ``t_e`` observed."""
    return generalized_empowerment(
        model, x0, HorizonSpec.for_variant("kicked_cef", t_e, dt), channel)


def empowerment_batch(model: SystemModel, X, spec: HorizonSpec,
                      channel: ChannelSpec = ChannelSpec(), chunk: int = 1024):
    """Empowerment at many states at once.

    Returns ``(values, failed)``; ``values`` is NaN where the autonomous
    rollout or the decomposition was not finite.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.d_x:
        raise ValueError(f"X must have shape (n, {model.d_x})")
    n = X.shape[0]
    values = np.full(n, np.nan)
    failed = np.zeros(n, dtype=bool)
    scale = 1.0 / (np.sqrt(spec.dt) * channel.noise_std)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        entries = sensitivity_entries(model, X[lo:hi], spec)
        ok = np.all(np.isfinite(entries), axis=(1, 2))
        entries = np.where(ok[:, None, None], entries, 0.0)
        try:
            sv = np.linalg.svd(entries * scale, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(str(exc)) from exc
        gains = _effective_gains(_truncate(sv), channel)
        sigma, _, _ = _water_fill_rows(gains, channel.power)
        vals = np.maximum(0.5 * np.sum(np.log1p(gains * sigma), axis=1), 0.0)
        ok &= np.isfinite(vals)
        values[lo:hi] = np.where(ok, vals, np.nan)
        failed[lo:hi] = ~ok
    return values, failed


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Controlled Lyapunov exponents in 1/s, one per controllable direction.

    ``degenerate`` is set when the gain has no controllable direction;
    ``reliable`` is cleared when a direction collapsed numerically.
    """

    exponents: np.ndarray
    horizon_seconds: float
    reliable: bool
    degenerate: bool


def controlled_lyapunov(model: SystemModel, x0, horizon_steps: int, dt: float,
                        channel: ChannelSpec = ChannelSpec()):
    """Empowerment of the single block ``d x_T / d a_0`` and the growth rates
    of its singular values.

    The exponents are ``ln(s_i) / (T dt)`` with ``s_i`` the singular values
    of ``J_{T-1} ... J_1 Q`` where ``Q`` is an orthonormal basis of the range
    of ``g(x0)``.  The product is re-orthonormalised (QR) at every step, so
    long horizons do not overflow.  Dropping the constant factor ``g(x0) dt``
    removes an ``O(1/T)`` bias that would otherwise vanish only in the limit.
    """
    spec = HorizonSpec.for_variant("controlled_lyapunov", horizon_steps, dt)
    result = generalized_empowerment(model, x0, spec, channel)

    x = model.check_state(x0).copy()
    G = model.gain(x)
    U, svals, _ = np.linalg.svd(G, full_matrices=False)
    rank = int(np.count_nonzero(svals > _TRUNCATE * max(svals.max(initial=0.0), 1e-300)))
    if rank == 0:
        spectrum = LyapunovSpectrum(np.zeros(0), horizon_steps * dt, True, True)
        return result, spectrum
    Q = U[:, :rank]
    logs = np.zeros(rank)
    eye = np.eye(model.d_x)
    reliable = True
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x = x + model.drift(x) * dt
        for _ in range(1, horizon_steps):
            J = eye + model.drift_jacobian(x) * dt
            Q, R = np.linalg.qr(J @ Q)
            d = np.abs(np.diag(R))
            if np.any(d == 0) or not np.all(np.isfinite(d)):
                reliable = False
                d = np.where(d > 0, d, np.finfo(float).tiny)
            logs += np.log(d)
            x = x + model.drift(x) * dt
            if not np.all(np.isfinite(x)):
                raise NonFiniteState("rollout diverged while computing exponents")
    exps = np.sort(logs / (horizon_steps * dt))[::-1]
    return result, LyapunovSpectrum(exps, horizon_steps * dt, reliable, False)
