"""Flat key = value configuration files and the scenario schema.

The format is line oriented: ``section.key = value``, ``#`` comments, blank
lines ignored. Values are scalars; this keeps scenario files diff-friendly
and the parser dependency-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def parse_kv_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse flat key = value lines into an ordered mapping of strings."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}", "empty key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


def _as_float(path: str, s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(path, f"not a number: {s!r}") from None
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _as_int(path: str, s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ConfigError(path, f"not an integer: {s!r}") from None


def _as_bool(path: str, s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(path, f"not a boolean: {s!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything one deterministic run needs, resolved and validated."""

    name: str
    horizon: float
    transient_fraction: float = 0.3
    decimation: int = 10

    dt: float = 1e-3
    crossing_tol: float = 1e-8
    max_bisections: int = 60

    tau_f: float = 0.01
    tau_s: float = 0.3
    tau_us: float = 7.0
    g_f_minus: float = 1.5
    g_s_plus: float = 0.8
    g_s_minus: float = 1.55
    g_us_plus: float = 2.25
    i_nominal: float = -1.0

    configuration: str = "ANTI_PHASE"   # IN_PHASE | ANTI_PHASE
    g_hco: float = 1.5
    g_cross: float = 0.3
    isolated: bool = False              # drop the inter-HCO synapses

    alpha: float = 1.4
    i_mag: float = 0.4
    v_th: float = 0.0
    q0: float = 0.0
    qdot0: float = 0.0

    kick_neuron: str = "A1"             # "none" disables
    kick_time: float = 1.0
    kick_amplitude: float = 3.0
    kick_duration: float = 1.0

    zero_level: float = 0.0
    amp_level: float = 0.5
    phase_level: float = -1.0

    phase_enabled: bool = False
    phase_P: float = 0.3
    phase_w: float = 0.05

    adaptive_enabled: bool = False
    omega_ref: float = 0.9642
    A_ref: float = 0.5
    k_omega: float = 0.04
    k_A: float = 0.25
    p_A_fixed: float = 0.001
    g_us_min: float = 1.9
    g_us_max: float = 2.6
    g_s_min: float = 1.2
    g_s_max: float = 1.9

    step_time: Optional[float] = None   # one mid-run parameter step
    step_param: str = "neuron.g_s_minus"
    step_value: float = 0.0
    switch_time: Optional[float] = None  # mid-run configuration switch

    def validate(self) -> None:
        if not self.name:
            raise ConfigError("scenario.name", "must be nonempty")
        if self.horizon <= 0.0:
            raise ConfigError("run.horizon", "must be > 0")
        if not (0.0 <= self.transient_fraction < 1.0):
            raise ConfigError("run.transient_fraction", "must be in [0, 1)")
        if self.decimation < 1:
            raise ConfigError("trace.decimation", "must be >= 1")
        if self.dt <= 0.0:
            raise ConfigError("stepper.dt", "must be > 0")
        if not (0.0 < self.crossing_tol < self.dt):
            raise ConfigError("stepper.crossing_tol", "must be in (0, dt)")
        if self.max_bisections < 1:
            raise ConfigError("stepper.max_bisections", "must be >= 1")
        if not (0.0 < self.tau_f < self.tau_s < self.tau_us):
            raise ConfigError("neuron.tau_f", "need 0 < tau_f < tau_s < tau_us")
        for nm in ("g_f_minus", "g_s_plus", "g_s_minus", "g_us_plus"):
            if getattr(self, nm) < 0.0:
                raise ConfigError(f"neuron.{nm}", "must be >= 0")
        if self.configuration not in ("IN_PHASE", "ANTI_PHASE"):
            raise ConfigError("net.configuration",
                              "must be IN_PHASE or ANTI_PHASE")
        if self.g_hco <= 0.0:
            raise ConfigError("net.g_hco", "must be > 0")
        if self.g_cross <= 0.0 and not self.isolated:
            raise ConfigError("net.g_cross", "must be > 0 unless net.isolated")
        if self.alpha < 0.0:
            raise ConfigError("plant.alpha", "must be >= 0")
        if self.i_mag < 0.0:
            raise ConfigError("plant.i_mag", "must be >= 0")
        if self.kick_neuron not in ("none", "A1", "B1", "A2", "B2"):
            raise ConfigError("kick.neuron", f"unknown neuron {self.kick_neuron!r}")
        if self.kick_neuron != "none" and self.kick_duration <= 0.0:
            raise ConfigError("kick.duration", "must be > 0")
        if self.phase_enabled:
            if self.phase_w <= 0.0:
                raise ConfigError("phase_control.w", "must be > 0")
            if self.phase_P < 0.0:
                raise ConfigError("phase_control.P", "must be >= 0")
        if self.adaptive_enabled:
            if self.omega_ref <= 0.0:
                raise ConfigError("adaptive.omega_ref", "must be > 0")
            if not (0.0 < self.A_ref < math.pi):
                raise ConfigError("adaptive.A_ref", "must be in (0, pi)")
            if not self.g_us_min < self.g_us_max:
                raise ConfigError("adaptive.g_us_min", "empty clamp interval")
            if not self.g_s_min < self.g_s_max:
                raise ConfigError("adaptive.g_s_min", "empty clamp interval")
        if self.step_time is not None and not (0.0 <= self.step_time < self.horizon):
            raise ConfigError("schedule.step_time", "must lie inside the run")
        if self.switch_time is not None and not (0.0 < self.switch_time < self.horizon):
            raise ConfigError("schedule.switch_time", "must lie inside the run")


# key path -> (attribute, parser)
_KEYMAP = {
    "scenario.name": ("name", str),
    "run.horizon": ("horizon", _as_float),
    "run.transient_fraction": ("transient_fraction", _as_float),
    "trace.decimation": ("decimation", _as_int),
    "stepper.dt": ("dt", _as_float),
    "stepper.crossing_tol": ("crossing_tol", _as_float),
    "stepper.max_bisections": ("max_bisections", _as_int),
    "neuron.tau_f": ("tau_f", _as_float),
    "neuron.tau_s": ("tau_s", _as_float),
    "neuron.tau_us": ("tau_us", _as_float),
    "neuron.g_f_minus": ("g_f_minus", _as_float),
    "neuron.g_s_plus": ("g_s_plus", _as_float),
    "neuron.g_s_minus": ("g_s_minus", _as_float),
    "neuron.g_us_plus": ("g_us_plus", _as_float),
    "neuron.i_nominal": ("i_nominal", _as_float),
    "net.configuration": ("configuration", str),
    "net.g_hco": ("g_hco", _as_float),
    "net.g_cross": ("g_cross", _as_float),
    "net.isolated": ("isolated", _as_bool),
    "plant.alpha": ("alpha", _as_float),
    "plant.i_mag": ("i_mag", _as_float),
    "plant.v_th": ("v_th", _as_float),
    "plant.q0": ("q0", _as_float),
    "plant.qdot0": ("qdot0", _as_float),
    "kick.neuron": ("kick_neuron", str),
    "kick.time": ("kick_time", _as_float),
    "kick.amplitude": ("kick_amplitude", _as_float),
    "kick.duration": ("kick_duration", _as_float),
    "sensors.zero_level": ("zero_level", _as_float),
    "sensors.amp_level": ("amp_level", _as_float),
    "sensors.phase_level": ("phase_level", _as_float),
    "phase_control.enabled": ("phase_enabled", _as_bool),
    "phase_control.P": ("phase_P", _as_float),
    "phase_control.w": ("phase_w", _as_float),
    "adaptive.enabled": ("adaptive_enabled", _as_bool),
    "adaptive.omega_ref": ("omega_ref", _as_float),
    "adaptive.A_ref": ("A_ref", _as_float),
    "adaptive.k_omega": ("k_omega", _as_float),
    "adaptive.k_A": ("k_A", _as_float),
    "adaptive.p_A_fixed": ("p_A_fixed", _as_float),
    "adaptive.g_us_min": ("g_us_min", _as_float),
    "adaptive.g_us_max": ("g_us_max", _as_float),
    "adaptive.g_s_min": ("g_s_min", _as_float),
    "adaptive.g_s_max": ("g_s_max", _as_float),
    "schedule.step_time": ("step_time", _as_float),
    "schedule.step_param": ("step_param", str),
    "schedule.step_value": ("step_value", _as_float),
    "schedule.switch_time": ("switch_time", _as_float),
}


def scenario_from_mapping(kv: Dict[str, str]) -> Scenario:
    values = {}
    for key, raw in kv.items():
        if key not in _KEYMAP:
            raise ConfigError(key, "unknown configuration key")
        attr, parse = _KEYMAP[key]
        values[attr] = parse(key, raw) if parse is not str else raw
    if "name" not in values:
        raise ConfigError("scenario.name", "missing required key")
    if "horizon" not in values:
        raise ConfigError("run.horizon", "missing required key")
    sc = Scenario(**values)
    # the amplitude detector is the adaptive reference detector
    if sc.adaptive_enabled:
        sc = replace(sc, amp_level=sc.A_ref)
    sc.validate()
    return sc


def scenario_from_text(text: str, source: str = "<config>") -> Scenario:
    return scenario_from_mapping(parse_kv_text(text, source))


def apply_overrides(kv: Dict[str, str], overrides: Dict[str, str]) -> Dict[str, str]:
    out = dict(kv)
    for key, value in overrides.items():
        if key not in _KEYMAP:
            raise ConfigError(key, "unknown configuration key")
        out[key] = value
    return out


# --- sweep grids --------------------------------------------------------------


@dataclass(frozen=True)
class SweepGrid:
    """Either the cartesian product of axes or an explicit point list."""

    axes: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    points: Tuple[Dict[str, str], ...] = ()

    def override_list(self) -> List[Dict[str, str]]:
        if self.points:
            return [dict(p) for p in self.points]
        out: List[Dict[str, str]] = [{}]
        for key, values in self.axes:
            nxt = []
            for base in out:
                for v in values:
                    item = dict(base)
                    item[key] = v
                    nxt.append(item)
            out = nxt
        return out


def parse_grid_text(text: str, source: str = "<grid>") -> SweepGrid:
    axes: List[Tuple[str, Tuple[str, ...]]] = []
    points: List[Dict[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("axis "):
            body = line[len("axis "):]
            if "=" not in body:
                raise ConfigError(where, "axis needs 'axis key = v1 v2 ...'")
            key, values = body.split("=", 1)
            key = key.strip()
            vals = tuple(values.split())
            if key not in _KEYMAP:
                raise ConfigError(key, "unknown configuration key")
            if not vals:
                raise ConfigError(where, "axis needs at least one value")
            axes.append((key, vals))
        elif line.startswith("point "):
            body = line[len("point "):]
            entry: Dict[str, str] = {}
            for part in body.split(";"):
                part = part.strip()
                if not part:
                    continue
                if "=" not in part:
                    raise ConfigError(where, f"expected 'key = value', got {part!r}")
                key, value = part.split("=", 1)
                key = key.strip()
                if key not in _KEYMAP:
                    raise ConfigError(key, "unknown configuration key")
                entry[key] = value.strip()
            if not entry:
                raise ConfigError(where, "empty point")
            points.append(entry)
        else:
            raise ConfigError(where, f"expected 'axis' or 'point', got {raw!r}")
    if axes and points:
        raise ConfigError(source, "grid cannot mix axis and point lines")
    if not axes and not points:
        raise ConfigError(source, "grid is empty")
    return SweepGrid(axes=tuple(axes), points=tuple(points))
