"""Empowerment over two-dimensional slices of state space, and the
time-step convergence study."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import ChannelSpec, empowerment_batch, generalized_empowerment
from .model import SystemModel
from .sensitivity import VARIANTS, HorizonSpec


@dataclass(frozen=True)
class GridSpec:
    """A rectangular slice through state space.

    ``fixed_values`` lists the values of the non-axis components in
    increasing index order.
    """

    axis_indices: tuple
    axis_ranges: tuple
    resolution: tuple
    fixed_values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "axis_indices", tuple(int(i) for i in self.axis_indices))
        object.__setattr__(self, "axis_ranges",
                           tuple((float(lo), float(hi)) for lo, hi in self.axis_ranges))
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        object.__setattr__(self, "fixed_values", tuple(float(v) for v in self.fixed_values))
        if len(self.axis_indices) != 2 or self.axis_indices[0] == self.axis_indices[1]:
            raise ValueError("a grid needs two distinct axis indices")
        if len(self.axis_ranges) != 2 or len(self.resolution) != 2:
            raise ValueError("axis_ranges and resolution need one entry per axis")
        for lo, hi in self.axis_ranges:
            if not lo < hi:
                raise ValueError("each axis range needs min < max")
        if min(self.resolution) < 2:
            raise ValueError("resolution must be >= 2 on both axes")

    def validate_for(self, d_x: int):
        if max(self.axis_indices) >= d_x or min(self.axis_indices) < 0:
            raise ValueError(f"axis index out of range for a {d_x}-dimensional state")
        if len(self.fixed_values) != d_x - 2:
            raise ValueError(
                f"fixed_values needs {d_x - 2} entries for a {d_x}-dimensional state")

    def axes(self):
        return [np.linspace(lo, hi, n)
                for (lo, hi), n in zip(self.axis_ranges, self.resolution)]

    def states(self, d_x: int) -> np.ndarray:
        """All grid states, row-major over (axis1, axis2)."""
        self.validate_for(d_x)
        a1, a2 = self.axes()
        A1, A2 = np.meshgrid(a1, a2, indexing="ij")
        X = np.empty((A1.size, d_x))
        others = [i for i in range(d_x) if i not in self.axis_indices]
        for i, v in zip(others, self.fixed_values):
            X[:, i] = v
        X[:, self.axis_indices[0]] = A1.ravel()
        X[:, self.axis_indices[1]] = A2.ravel()
        return X


def default_grid(model: SystemModel, resolution=(101, 101)) -> GridSpec:
    """First angle against its rate over one full swing, other components zero."""
    i = model.angle_indices[0] if model.angle_indices else 0
    j = i + model.d_x // 2 if model.angle_indices else (1 if model.d_x > 1 else 0)
    return GridSpec((i, j), ((-np.pi, np.pi), (-2 * np.pi, 2 * np.pi)),
                    resolution, (0.0,) * (model.d_x - 2))


@dataclass
class LandscapeGrid:
    grid: GridSpec
    values: np.ndarray
    failed: np.ndarray
    variant: str
    horizon: HorizonSpec
    channel: ChannelSpec = field(default_factory=ChannelSpec)

    def argmax_state(self, d_x: int) -> np.ndarray:
        """State at the largest non-failed value."""
        vals = np.where(self.failed, -np.inf, self.values)
        k = int(np.argmax(vals))
        return self.grid.states(d_x)[k]


def evaluate_landscape(model: SystemModel, grid: GridSpec, variant: str,
                       horizon: HorizonSpec, channel: ChannelSpec = ChannelSpec(),
                       workers: int = 1, chunk: int = 512) -> LandscapeGrid:
    """Empowerment of ``variant`` at every grid point.

    ``horizon`` supplies the time step and ``horizon_steps``; its action and
    gap indices must match ``variant``.  Points whose autonomous rollout is
    not finite are flagged in ``failed`` and carry NaN.  Results do not
    depend on ``workers``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if HorizonSpec.for_variant(variant, horizon.horizon_steps, horizon.dt) != horizon:
        raise ValueError(f"horizon {horizon} does not match variant '{variant}'")
    X = grid.states(model.d_x)
    pieces = [(lo, min(lo + chunk, len(X))) for lo in range(0, len(X), chunk)]

    def run(bounds):
        lo, hi = bounds
        return empowerment_batch(model, X[lo:hi], horizon, channel, chunk=chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, pieces))
    else:
        parts = [run(b) for b in pieces]
    values = np.concatenate([p[0] for p in parts]).reshape(grid.resolution)
    failed = np.concatenate([p[1] for p in parts]).reshape(grid.resolution)
    return LandscapeGrid(grid, values, failed, variant, horizon, channel)


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    value_nats: float
    delta_prev: float  # NaN for the first row


def convergence_study(model: SystemModel, x0, variant: str, t_e_seconds: float,
                      dt_list, channel: ChannelSpec = ChannelSpec()):
    """Empowerment at a fixed physical horizon for a sequence of time steps.

    Each ``dt`` must divide ``t_e_seconds`` into a whole number of steps.
    Returns one :class:`ConvergenceRow` per ``dt`` with the difference to the
    previous row.
    """
    rows = []
    prev = None
    for dt in dt_list:
        dt = float(dt)
        steps = int(round(t_e_seconds / dt))
        if steps < 1 or abs(steps * dt - t_e_seconds) > 1e-9 * max(1.0, t_e_seconds):
            raise ValueError(f"dt={dt} does not divide t_e={t_e_seconds}")
        spec = HorizonSpec.for_variant(variant, steps, dt)
        value = generalized_empowerment(model, x0, spec, channel).value_nats
        rows.append(ConvergenceRow(dt, value, np.nan if prev is None else value - prev))
        prev = value
    return rows
