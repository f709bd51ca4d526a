"""Run configuration: an INI document with a fixed set of sections and keys.

Every key is optional.  Unknown sections or keys, malformed values and
violated cross-field constraints raise :class:`ParseError` carrying the key
and the 1-based line number.  Environment variables named
``EMPOWERMENT_<SECTION>_<KEY>`` override the document.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .capacity import CONVENTIONS, ChannelSpec
from .controller import VARIANT_DEFAULTS, ControlPolicySpec
from .exceptions import ParseError
from .landscape import GridSpec, default_grid
from .model import NoiseSpec, SystemModel
from .sensitivity import VARIANTS, HorizonSpec
from .systems import (HANGING_STATES, SYSTEMS, linear_test_model, scale_gain)

ENV_PREFIX = "EMPOWERMENT_"

SYSTEM_NAMES = ("pendulum", "double_pendulum", "cartpole", "linear")
_PARAM_KEYS = {
    "pendulum": ("m", "l", "gravity"),
    "double_pendulum": ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2", "gravity"),
    "cartpole": ("M", "m", "l", "gravity"),
    "linear": ("alpha", "gain"),
}

# section -> key -> kind
SCHEMA = {
    "system": {"name": "str", "gain_scale": "float",
               **{k: "float" for keys in _PARAM_KEYS.values() for k in keys}},
    "empowerment": {"variant": "str", "dt": "float", "horizon_steps": "int",
                    "action_steps": "int", "gap_steps": "int", "power": "float",
                    "noise_std": "float", "capacity_convention": "str"},
    "control": {"action_bound": "float", "action_grid_size": "int",
                "decision_dt": "float", "sim_dt": "float",
                "expectation_samples": "int", "duration_s": "float",
                "process_std": "float", "initial_state": "floats"},
    "run": {"seed": "int", "workers": "int"},
    "landscape": {"axis_indices": "ints", "axis1_range": "floats",
                  "axis2_range": "floats", "resolution": "ints",
                  "fixed_values": "floats", "trajectory": "bool"},
    "convergence": {"t_e_seconds": "float", "dt_list": "floats", "state": "floats"},
    "lyapunov": {"horizon_steps": "int", "dt": "float", "state": "floats"},
}


@dataclass
class RunConfig:
    """Validated settings for every CLI subcommand.

    Defaults reproduce the single-pendulum experiments: a 0.5 s horizon at
    ``dt = 1e-3``, a 1 N m torque bound and a hanging start.  ``power`` and
    ``decision_dt`` left unset take the per-variant values of
    :data:`empowerment.controller.VARIANT_DEFAULTS` when parsed.
    """

    system: str = "pendulum"
    system_params: dict = field(default_factory=dict)
    gain_scale: float = 1.0
    variant: str = "classic"
    dt: float = 1e-3
    horizon_steps: int = 500
    action_steps: int | None = None
    gap_steps: int | None = None
    power: float | None = None
    noise_std: float = 1.0
    capacity_convention: str = "paper"
    process_std: float = 0.01
    action_bound: float = 1.0
    action_grid_size: int = 21
    decision_dt: float | None = None
    sim_dt: float = 1e-3
    expectation_samples: int = 1
    duration_s: float = 30.0
    initial_state: tuple | None = None
    seed: int = 0
    workers: int = 1
    axis_indices: tuple | None = None
    axis1_range: tuple | None = None
    axis2_range: tuple | None = None
    resolution: tuple = (101, 101)
    fixed_values: tuple | None = None
    trajectory: bool = False
    convergence_t_e: float = 0.5
    convergence_dt_list: tuple = (4e-3, 1e-3, 2.5e-4, 6.25e-5)
    convergence_state: tuple | None = None
    lyapunov_horizon_steps: int = 10_000
    lyapunov_dt: float = 1e-3
    lyapunov_state: tuple | None = None

    # -- builders ---------------------------------------------------------
    def build_model(self) -> SystemModel:
        if self.system == "linear":
            model = linear_test_model(**self.system_params)
        else:
            factory, params_cls = SYSTEMS[self.system]
            model = factory(params_cls(**self.system_params))
        return scale_gain(model, self.gain_scale)

    def horizon(self) -> HorizonSpec:
        if self.variant == "generalized":
            return HorizonSpec(self.dt, self.horizon_steps,
                               self.action_steps if self.action_steps is not None else self.horizon_steps,
                               self.gap_steps or 0)
        return HorizonSpec.for_variant(self.variant, self.horizon_steps, self.dt)

    def _variant_default(self, key):
        value = getattr(self, key)
        if value is None:
            value = VARIANT_DEFAULTS.get(self.variant, VARIANT_DEFAULTS["classic"])[key]
        return value

    def channel(self) -> ChannelSpec:
        return ChannelSpec(self._variant_default("power"), self.noise_std,
                           self.capacity_convention)

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.process_std, self.noise_std)

    def policy(self) -> ControlPolicySpec:
        return ControlPolicySpec(
            variant=self.variant, horizon=self.horizon(), channel=self.channel(),
            action_bound=self.action_bound, action_grid_size=self.action_grid_size,
            decision_dt=self._variant_default("decision_dt"), sim_dt=self.sim_dt,
            expectation_samples=self.expectation_samples)

    def start_state(self) -> np.ndarray:
        if self.initial_state is not None:
            return np.asarray(self.initial_state, dtype=float)
        return np.asarray(HANGING_STATES[self.system], dtype=float)

    def grid(self, model: SystemModel) -> GridSpec:
        base = default_grid(model, self.resolution)
        return GridSpec(
            self.axis_indices if self.axis_indices is not None else base.axis_indices,
            (self.axis1_range if self.axis1_range is not None else base.axis_ranges[0],
             self.axis2_range if self.axis2_range is not None else base.axis_ranges[1]),
            self.resolution,
            self.fixed_values if self.fixed_values is not None else base.fixed_values)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out


_PI_TERM = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi$")


def _to_float(text: str) -> float:
    t = text.strip().lower()
    if t in ("pi", "+pi"):
        return math.pi
    if t == "-pi":
        return -math.pi
    m = _PI_TERM.match(t)
    if m and m.group(1):
        return float(m.group(1)) * math.pi
    value = float(t)
    if not math.isfinite(value):
        raise ValueError("value must be finite")
    return value


def _to_int(text: str) -> int:
    t = text.strip()
    if not re.fullmatch(r"[+-]?\d+", t):
        raise ValueError(f"expected an integer, got '{t}'")
    return int(t)


def _convert(kind: str, text: str):
    if kind == "str":
        return text.strip()
    if kind == "float":
        return _to_float(text)
    if kind == "int":
        return _to_int(text)
    if kind == "bool":
        t = text.strip().lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got '{text.strip()}'")
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if kind == "floats":
        return tuple(_to_float(p) for p in parts)
    if kind == "ints":
        return tuple(_to_int(p) for p in parts)
    raise AssertionError(kind)


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to source line numbers."""
    index = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            index.setdefault((section, None), lineno)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        index.setdefault((section, key), lineno)
    return index


def _raw_values(text: str, env) -> tuple:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ParseError("duplicate key", key=exc.option, line=exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ParseError("duplicate section", key=exc.section, line=exc.lineno) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any [section]", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line=line) from exc
    lines = _line_index(text)
    raw = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ParseError(f"unknown section [{section}]", line=lines.get((sec, None)))
        for key, value in parser.items(section):
            if key not in SCHEMA[sec]:
                raise ParseError(f"unknown key in [{sec}]", key=key,
                                 line=lines.get((sec, key)))
            raw[(sec, key)] = (value, lines.get((sec, key)))
    for name, value in (env or {}).items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        for sec in SCHEMA:
            if rest.lower().startswith(sec + "_"):
                key = rest[len(sec) + 1:]
                match = [k for k in SCHEMA[sec] if k.lower() == key.lower()]
                if not match:
                    raise ParseError(f"unknown key in environment variable {name}", key=key)
                raw[(sec, match[0])] = (value, None)
                break
        else:
            raise ParseError(f"environment variable {name} names no known section")
    return raw


def parse_config(text: str = "", env=None) -> RunConfig:
    """Parse and validate a configuration document.

    Parameters
    ----------
    text : str
        INI-formatted configuration; an empty string yields all defaults.
    env : mapping, optional
        Environment variables; only names starting with ``EMPOWERMENT_``
        are consulted.
    """
    raw = _raw_values(text, env)
    values = {}
    for (sec, key), (value, line) in raw.items():
        try:
            values[(sec, key)] = (_convert(SCHEMA[sec][key], value), line)
        except ValueError as exc:
            raise ParseError(f"invalid value '{value.strip()}': {exc}", key=key, line=line) from exc

    def get(sec, key, default=None):
        return values[(sec, key)][0] if (sec, key) in values else default

    def line_of(sec, key):
        return values[(sec, key)][1] if (sec, key) in values else None

    def fail(reason, sec, key):
        raise ParseError(reason, key=key, line=line_of(sec, key))

    cfg = RunConfig()
    system = get("system", "name", cfg.system)
    if system not in SYSTEM_NAMES:
        fail(f"system must be one of {SYSTEM_NAMES}", "system", "name")
    params = {}
    for (sec, key) in values:
        if sec == "system" and key not in ("name", "gain_scale"):
            if key not in _PARAM_KEYS[system]:
                fail(f"parameter not used by system '{system}'", sec, key)
            params[key] = get(sec, key)
    cfg.system = system
    cfg.system_params = params
    cfg.gain_scale = get("system", "gain_scale", cfg.gain_scale)
    if cfg.gain_scale < 0:
        fail("gain_scale must be >= 0", "system", "gain_scale")
    try:
        cfg.build_model()
    except ValueError as exc:
        raise ParseError(str(exc), key="name", line=line_of("system", "name")) from exc

    for key in ("variant", "dt", "horizon_steps", "action_steps", "gap_steps",
                "power", "noise_std", "capacity_convention"):
        setattr(cfg, key, get("empowerment", key, getattr(cfg, key)))
    if cfg.variant not in VARIANTS + ("generalized",):
        fail(f"variant must be one of {VARIANTS + ('generalized',)}", "empowerment", "variant")
    if cfg.variant != "generalized":
        for key in ("action_steps", "gap_steps"):
            if (("empowerment", key) in values
                    and getattr(cfg, key) != getattr(cfg.horizon(), key)):
                fail(f"{key} is fixed by variant '{cfg.variant}'; use variant = generalized",
                     "empowerment", key)
    base = VARIANT_DEFAULTS.get(cfg.variant, VARIANT_DEFAULTS["classic"])
    if cfg.power is None:
        cfg.power = base["power"]
    if not cfg.dt > 0:
        fail("dt must be positive", "empowerment", "dt")
    if cfg.horizon_steps < 1:
        fail("horizon_steps must be >= 1", "empowerment", "horizon_steps")
    a_steps = cfg.action_steps if cfg.action_steps is not None else cfg.horizon_steps
    g_steps = cfg.gap_steps or 0
    if cfg.variant == "generalized":
        if a_steps < 1:
            fail("action_steps must be >= 1", "empowerment", "action_steps")
        if g_steps < 0:
            fail("gap_steps must be >= 0", "empowerment", "gap_steps")
        if a_steps + g_steps > cfg.horizon_steps:
            key = "gap_steps" if ("empowerment", "gap_steps") in values else "action_steps"
            fail("constraint action_steps + gap_steps <= horizon_steps violated",
                 "empowerment", key)
    if not cfg.power >= 0:
        fail("power must be >= 0", "empowerment", "power")
    if not cfg.noise_std > 0:
        fail("noise_std must be > 0", "empowerment", "noise_std")
    if cfg.capacity_convention not in CONVENTIONS:
        fail(f"capacity_convention must be one of {CONVENTIONS}",
             "empowerment", "capacity_convention")

    for key in ("action_bound", "action_grid_size", "decision_dt", "sim_dt",
                "expectation_samples", "duration_s", "process_std", "initial_state"):
        setattr(cfg, key, get("control", key, getattr(cfg, key)))
    if cfg.decision_dt is None:
        cfg.decision_dt = base["decision_dt"]
    if not cfg.action_bound > 0:
        fail("action_bound must be > 0", "control", "action_bound")
    if cfg.action_grid_size < 3 or cfg.action_grid_size % 2 == 0:
        fail("action_grid_size must be an odd integer >= 3", "control", "action_grid_size")
    if not cfg.sim_dt > 0:
        fail("sim_dt must be > 0", "control", "sim_dt")
    if not cfg.decision_dt >= cfg.sim_dt:
        fail("constraint decision_dt >= sim_dt violated", "control", "decision_dt")
    sub = round(cfg.decision_dt / cfg.sim_dt)
    if abs(sub * cfg.sim_dt - cfg.decision_dt) > 1e-12:
        fail("decision_dt must be a whole multiple of sim_dt", "control", "decision_dt")
    n_dec = round(cfg.duration_s / cfg.decision_dt)
    if n_dec < 1 or abs(n_dec * cfg.decision_dt - cfg.duration_s) > 1e-9:
        fail("duration_s must be a positive multiple of decision_dt", "control", "duration_s")
    if cfg.expectation_samples < 1:
        fail("expectation_samples must be >= 1", "control", "expectation_samples")
    if not cfg.process_std >= 0:
        fail("process_std must be >= 0", "control", "process_std")
    model = cfg.build_model()
    if cfg.initial_state is not None and len(cfg.initial_state) != model.d_x:
        fail(f"initial_state needs {model.d_x} components", "control", "initial_state")

    cfg.seed = get("run", "seed", cfg.seed)
    if not 0 <= cfg.seed < 2 ** 64:
        fail("seed must be an unsigned 64-bit integer", "run", "seed")
    cfg.workers = get("run", "workers", cfg.workers)
    if cfg.workers < 1:
        fail("workers must be >= 1", "run", "workers")

    for key in ("axis_indices", "axis1_range", "axis2_range", "resolution",
                "fixed_values", "trajectory"):
        setattr(cfg, key, get("landscape", key, getattr(cfg, key)))
    for key, n in (("axis_indices", 2), ("axis1_range", 2), ("axis2_range", 2),
                   ("resolution", 2)):
        v = getattr(cfg, key)
        if v is not None and len(v) != n:
            fail(f"{key} needs exactly {n} values", "landscape", key)
    if model.d_x >= 2:
        try:
            cfg.grid(model).validate_for(model.d_x)
        except ValueError as exc:
            key = next((k for k in ("axis1_range", "axis2_range", "resolution",
                                    "axis_indices", "fixed_values")
                        if ("landscape", k) in values), "axis_indices")
            fail(str(exc), "landscape", key)

    cfg.convergence_t_e = get("convergence", "t_e_seconds", cfg.convergence_t_e)
    cfg.convergence_dt_list = get("convergence", "dt_list", cfg.convergence_dt_list)
    cfg.convergence_state = get("convergence", "state", cfg.convergence_state)
    if not cfg.convergence_t_e > 0:
        fail("t_e_seconds must be > 0", "convergence", "t_e_seconds")
    if not cfg.convergence_dt_list:
        fail("dt_list must not be empty", "convergence", "dt_list")
    for dt in cfg.convergence_dt_list:
        steps = round(cfg.convergence_t_e / dt) if dt > 0 else 0
        if steps < 1 or abs(steps * dt - cfg.convergence_t_e) > 1e-9 * max(1.0, cfg.convergence_t_e):
            fail(f"dt {dt!r} does not divide t_e_seconds", "convergence", "dt_list")
    if cfg.convergence_state is not None and len(cfg.convergence_state) != model.d_x:
        fail(f"state needs {model.d_x} components", "convergence", "state")

    cfg.lyapunov_horizon_steps = get("lyapunov", "horizon_steps", cfg.lyapunov_horizon_steps)
    cfg.lyapunov_dt = get("lyapunov", "dt", cfg.lyapunov_dt)
    cfg.lyapunov_state = get("lyapunov", "state", cfg.lyapunov_state)
    if cfg.lyapunov_horizon_steps < 1:
        fail("horizon_steps must be >= 1", "lyapunov", "horizon_steps")
    if not cfg.lyapunov_dt > 0:
        fail("dt must be > 0", "lyapunov", "dt")
    if cfg.lyapunov_state is not None and len(cfg.lyapunov_state) != model.d_x:
        fail(f"state needs {model.d_x} components", "lyapunov", "state")
    return cfg


def config_fields():
    return [f.name for f in fields(RunConfig)]
