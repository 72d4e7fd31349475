"""Fixed-step RK4 integration and bisection-based localization of threshold crossings.

The integrator is deliberately plain: classical fourth-order Runge-Kutta on a
fixed grid. Crossings of scalar observables are detected by sign change across
one step and refined by bisection, re-integrating sub-steps from the left
bracket state, so the reported time is consistent with the integrator's own
flow rather than with an interpolant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .statevec import is_wrapped, observable_value

DerivativeFn = Callable[[float, np.ndarray], np.ndarray]


class SimulationFault(RuntimeError):
    """State left the finite domain. Carries the time of the offending step."""

    def __init__(self, time: float, message: str | None = None):
        super().__init__(message or f"non-finite state at t={time:.9g}")
        self.time = time


class Direction(Enum):
    RISING = "rising"
    FALLING = "falling"
    BOTH = "both"


@dataclass(frozen=True)
class StepperConfig:
    """Grid step and event-localization tolerances."""

    dt: float = 1e-3
    crossing_tol: float = 1e-8
    max_bisections: int = 60

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if not (0.0 < self.crossing_tol < self.dt):
            raise ValueError("crossing_tol must be in (0, dt)")
        if self.max_bisections < 1:
            raise ValueError("max_bisections must be >= 1")


@dataclass(frozen=True)
class CrossingSpec:
    """A scalar observable, a level, and which sign changes count."""

    observable: str
    level: float
    direction: Direction = Direction.BOTH


@dataclass(frozen=True)
class Crossing:
    """A localized crossing: refined time, observable value there, precision flag."""

    time: float
    value: float
    reduced_precision: bool = False


def rk4_step(state: np.ndarray, derivative_fn: DerivativeFn, dt: float,
             t0: float = 0.0) -> np.ndarray:
    """One classical RK4 step from t0 over dt. Deterministic for identical inputs."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(derivative_fn(t0, y))
    k2 = np.asarray(derivative_fn(t0 + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(derivative_fn(t0 + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(derivative_fn(t0 + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationFault(t0 + dt)
    return out


def _crossed(f0: float, f1: float, direction: Direction) -> bool:
    if direction is Direction.RISING:
        return f0 < 0.0 <= f1
    if direction is Direction.FALLING:
        return f0 > 0.0 >= f1
    return (f0 < 0.0 <= f1) or (f0 > 0.0 >= f1)


def locate_crossing(state_before: np.ndarray, state_after: np.ndarray,
                    t0: float, dt: float, spec: CrossingSpec,
                    derivative_fn: DerivativeFn,
                    config: StepperConfig) -> Optional[Crossing]:
    """Localize a crossing of ``spec`` inside the step [t0, t0+dt], if any.

    Returns None when the observable does not cross the level in the requested
    direction within the step. Otherwise bisects, re-integrating from the left
    bracket state, until the bracket is narrower than ``config.crossing_tol``;
    if ``config.max_bisections`` is exhausted first, the bracket midpoint is
    returned with ``reduced_precision`` set.

    At most one crossing is reported per step per spec; a step containing an
    even number of crossings of the same level shows no endpoint sign change
    and is deliberately not resolved (the step size must be small enough).
    """
    g0 = observable_value(spec.observable, state_before)
    g1 = observable_value(spec.observable, state_after)
    if is_wrapped(spec.observable) and abs(g1 - g0) > math.pi:
        # wrap seam inside the step, not a physical crossing of the level
        return None
    f0 = g0 - spec.level
    f1 = g1 - spec.level
    if not _crossed(f0, f1, spec.direction):
        return None

    lo, hi = 0.0, dt
    y_lo = np.asarray(state_before, dtype=float)
    f_lo = f0
    reduced = False
    n = 0
    while (hi - lo) > config.crossing_tol:
        if n >= config.max_bisections:
            reduced = True
            break
        mid = 0.5 * (lo + hi)
        y_mid = rk4_step(y_lo, derivative_fn, mid - lo, t0 + lo)
        f_mid = observable_value(spec.observable, y_mid) - spec.level
        if f_lo < 0.0 <= f_mid or f_lo > 0.0 >= f_mid:
            hi = mid
        else:
            lo, y_lo, f_lo = mid, y_mid, f_mid
        n += 1

    t_mid = 0.5 * (lo + hi)
    if t_mid > lo:
        y_mid = rk4_step(y_lo, derivative_fn, t_mid - lo, t0 + lo)
    else:
        y_mid = y_lo
    value = observable_value(spec.observable, y_mid)
    return Crossing(time=t0 + t_mid, value=value, reduced_precision=reduced)
