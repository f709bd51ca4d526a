"""Serialisation of landscapes, rollouts and convergence tables.

Floats are written with ``repr``, the shortest text that parses back to the
same double, so files round-trip bit for bit.  JSON encodes non-finite
numbers as ``null``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .controller import Rollout
from .landscape import ConvergenceRow, LandscapeGrid
from .model import SystemModel

LANDSCAPE_HEADER = ("axis1", "axis2", "value_nats", "failed")
CONVERGENCE_HEADER = ("dt_s", "value_nats", "delta_prev")


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_rows(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def rollout_header(model: SystemModel):
    return ("t_s",) + tuple(model.state_names) + tuple(model.action_names) + ("empowerment_nats",)


def write_landscape_csv(path, land: LandscapeGrid, d_x: int):
    X = land.grid.states(d_x)
    i, j = land.grid.axis_indices
    rows = ((fmt_float(x[i]), fmt_float(x[j]), fmt_float(v), str(int(f)))
            for x, v, f in zip(X, land.values.ravel(), land.failed.ravel()))
    _write_rows(path, LANDSCAPE_HEADER, rows)


def write_rollout_csv(path, model: SystemModel, rollout: Rollout):
    rows = ([fmt_float(t)] + [fmt_float(v) for v in x] + [fmt_float(v) for v in a]
            + [fmt_float(e)]
            for t, x, a, e in zip(rollout.times, rollout.states, rollout.actions,
                                  rollout.empowerment_trace))
    _write_rows(path, rollout_header(model), rows)


def write_convergence_csv(path, rows):
    _write_rows(path, CONVERGENCE_HEADER,
                ((fmt_float(r.dt), fmt_float(r.value_nats), fmt_float(r.delta_prev))
                 for r in rows))


def read_csv(path):
    """Return ``(header, rows)`` with every cell parsed as float."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = tuple(lines[0].split(","))
    data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, data.reshape(len(lines) - 1, len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps_json(obj) -> str:
    """Canonical JSON text: sorted keys, NaN and infinities as ``null``."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- SVG -------------------------------------------------------------------

_STOPS = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98],
                   [253, 231, 37]], dtype=float)


def _colour(t):
    """Piecewise-linear colour ramp on ``t`` in [0, 1]."""
    t = min(max(t, 0.0), 1.0) * (len(_STOPS) - 1)
    k = min(int(t), len(_STOPS) - 2)
    c = _STOPS[k] + (t - k) * (_STOPS[k + 1] - _STOPS[k])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def heatmap_svg(land: LandscapeGrid, trajectory=None, size=400, margin=40) -> str:
    """Heatmap of a landscape; axis 1 runs right and axis 2 up.

    ``trajectory`` is an optional ``(n, 2)`` array of (axis1, axis2) points
    drawn as a white polyline; points outside the grid are clipped.
    """
    (x0, x1), (y0, y1) = land.grid.axis_ranges
    n1, n2 = land.grid.resolution
    vals = np.where(land.failed, np.nan, land.values)
    finite = vals[np.isfinite(vals)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    cw, ch = size / n1, size / n2
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 2 * margin}" '
           f'height="{size + 2 * margin}">']
    for a in range(n1):
        for b in range(n2):
            v = vals[a, b]
            fill = "#808080" if not np.isfinite(v) else _colour((v - lo) / span)
            x = margin + a * cw
            y = margin + (n2 - 1 - b) * ch
            out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{cw + 0.01:.3f}" '
                       f'height="{ch + 0.01:.3f}" fill="{fill}"/>')
    if trajectory is not None and len(trajectory):
        pts = np.asarray(trajectory, dtype=float)
        px = margin + (np.clip(pts[:, 0], x0, x1) - x0) / (x1 - x0) * size
        py = margin + size - (np.clip(pts[:, 1], y0, y1) - y0) / (y1 - y0) * size
        path = " ".join(f"{u:.2f},{v:.2f}" for u, v in zip(px, py))
        out.append(f'<polyline points="{path}" fill="none" stroke="white" stroke-width="1"/>')
    out.append(f'<text x="{margin}" y="{margin + size + 25}" font-size="12">'
               f'axis1 [{x0:.3g}, {x1:.3g}]  axis2 [{y0:.3g}, {y1:.3g}]  '
               f'value [{lo:.4g}, {hi:.4g}] nats</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def timeseries_svg(times, series: dict, width=600, height=120, margin=40) -> str:
    """One stacked panel per named series, sharing the time axis."""
    times = np.asarray(times, dtype=float)
    total_h = len(series) * (height + margin) + margin
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 2 * margin}" '
           f'height="{total_h}">']
    t0, t1 = (float(times[0]), float(times[-1])) if times.size > 1 else (0.0, 1.0)
    tspan = t1 - t0 if t1 > t0 else 1.0
    for k, (name, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=float)
        top = margin + k * (height + margin)
        finite = ys[np.isfinite(ys)]
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        span = hi - lo if hi > lo else 1.0
        out.append(f'<rect x="{margin}" y="{top}" width="{width}" height="{height}" '
                   'fill="none" stroke="black"/>')
        out.append(f'<text x="{margin}" y="{top - 5}" font-size="12">{name} '
                   f'[{lo:.4g}, {hi:.4g}]</text>')
        ok = np.isfinite(ys)
        px = margin + (times[ok] - t0) / tspan * width
        py = top + height - (ys[ok] - lo) / span * height
        path = " ".join(f"{u:.2f},{v:.2f}" for u, v in zip(px, py))
        out.append(f'<polyline points="{path}" fill="none" stroke="steelblue" '
                   'stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
