"""Pendulum dynamics, the two-motor actuation rule, and energy/steady-state analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class PlantParams:
    """Damping, per-motor torque magnitude, gate threshold and motor signs."""

    alpha: float = 1.4
    i_mag: float = 0.4
    v_th: float = 0.0
    motor_signs: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.i_mag < 0.0:
            raise ValueError("i_mag must be >= 0")
        if tuple(abs(s) for s in self.motor_signs) != (1.0, 1.0):
            raise ValueError("motor_signs must be +-1")


@dataclass(frozen=True)
class PendulumState:
    """Angle (unwrapped, so rotations are countable) and angular velocity."""

    q: float
    q_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.q_dot)):
            raise ValueError("pendulum state must be finite")


class SteadyState(Enum):
    LOW_ENERGY = "LOW_ENERGY"
    HIGH_ENERGY = "HIGH_ENERGY"
    NONPERIODIC = "NONPERIODIC"
    INDETERMINATE = "INDETERMINATE"


def pendulum_rhs(state: PendulumState, alpha: float,
                 torque: float) -> Tuple[float, float]:
    """(dq, dq_dot) for q'' + alpha q' + sin q = I."""
    return state.q_dot, torque - alpha * state.q_dot - math.sin(state.q)


def motor_torque(v_a1: float, v_a2: float, params: PlantParams) -> float:
    """Total torque: each motor contributes while its A neuron is above threshold."""
    s1, s2 = params.motor_signs
    torque = 0.0
    if v_a1 > params.v_th:
        torque += params.i_mag * s1
    if v_a2 > params.v_th:
        torque += params.i_mag * s2
    return torque


def mechanical_energy(q: float, q_dot: float) -> float:
    """Kinetic plus potential energy, zero at the hanging rest state."""
    return 0.5 * q_dot * q_dot + (1.0 - math.cos(q))


TWO_PI = 2.0 * math.pi


def _segment_views(t: np.ndarray, q: np.ndarray,
                   onsets: Sequence[float]):
    for a, b in zip(onsets[:-1], onsets[1:]):
        seg = q[(t >= a) & (t <= b)]
        if seg.size >= 2:
            yield seg


def rotations_per_segment(t: Sequence[float], q: Sequence[float],
                          onsets: Sequence[float]) -> np.ndarray:
    """Net whole rotations between consecutive actuation onsets (unwrapped q)."""
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.array([round(abs(seg[-1] - seg[0]) / TWO_PI)
                     for seg in _segment_views(t, q, onsets)])


def classify_steady_state(t: Sequence[float], q: Sequence[float],
                          onsets: Sequence[float],
                          min_events: int = 10) -> SteadyState:
    """Two-state classification of a post-transient window.

    HIGH_ENERGY: every inter-onset segment sweeps at least one full rotation.
    LOW_ENERGY: every segment stays within a swing, max |q - 2*pi*k| < pi with
    k the nearest whole turn of the segment mean. Anything else: NONPERIODIC.
    Fewer than ``min_events`` onsets: INDETERMINATE.
    """
    if len(onsets) < min_events:
        return SteadyState.INDETERMINATE
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    segs = list(_segment_views(t, q, onsets))
    if not segs:
        return SteadyState.INDETERMINATE
    all_rotating = True
    all_small = True
    for seg in segs:
        sweep = seg.max() - seg.min()
        if sweep < TWO_PI:
            all_rotating = False
        centered = seg - TWO_PI * round(float(seg.mean()) / TWO_PI)
        if np.abs(centered).max() >= math.pi:
            all_small = False
    if all_rotating:
        return SteadyState.HIGH_ENERGY
    if all_small:
        return SteadyState.LOW_ENERGY
    return SteadyState.NONPERIODIC


def burst_energy(t: Sequence[float], q_dot: Sequence[float],
                 torque: Sequence[float],
                 onsets: Sequence[float]) -> List[float]:
    """Energy transferred by the motors per inter-onset window.

    Trapezoidal quadrature of q_dot * I over the sampled trace, with the
    window endpoints interpolated onto the onset times.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(q_dot, dtype=float) * np.asarray(torque, dtype=float)
    if len(onsets) < 2:
        return []
    out = []
    for a, b in zip(onsets[:-1], onsets[1:]):
        mask = (t > a) & (t < b)
        tt = np.concatenate(([a], t[mask], [b]))
        ww = np.concatenate(([np.interp(a, t, w)], w[mask], [np.interp(b, t, w)]))
        out.append(float(np.trapezoid(ww, tt)))
    return out
