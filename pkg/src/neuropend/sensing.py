"""Event-based angle sensing and event-log analytics.

Three detectors watch the wrapped pendulum angle, mirroring photodetectors at
fixed physical angles: a zero detector (both directions, segments the swing
into half-periods), an amplitude detector at A_ref (fires while |q| grows),
and a phase detector at q_p (falling, one event per low-state swing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .numerics import (CrossingSpec, Direction, StepperConfig,
                       locate_crossing)

# event kinds, the closed set used throughout logs and CSV output
KIND_ZERO = "zero"
KIND_AMP = "amp"
KIND_PHASE = "phase"
KIND_BURST_ONSET = "burst-onset"
KIND_BURST_OFFSET = "burst-offset"
KIND_CONTROL_PULSE = "control-pulse"
KIND_ADAPTIVE = "adaptive-correction"

EVENT_KINDS = frozenset({KIND_ZERO, KIND_AMP, KIND_PHASE, KIND_BURST_ONSET,
                         KIND_BURST_OFFSET, KIND_CONTROL_PULSE, KIND_ADAPTIVE})


@dataclass(frozen=True)
class Event:
    """A timestamped discrete occurrence with a small scalar payload."""

    time: float
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


class EventLog:
    """Append-only, time-ordered event record."""

    def __init__(self):
        self._events: List[Event] = []

    def append(self, event: Event) -> None:
        if self._events and event.time < self._events[-1].time - 1e-12:
            raise ValueError("events must be appended in nondecreasing time order")
        self._events.append(event)

    def extend(self, events: Iterable[Event]) -> None:
        for e in events:
            self.append(e)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def __getitem__(self, idx):
        return self._events[idx]

    def of_kind(self, *kinds: str) -> List[Event]:
        return [e for e in self._events if e.kind in kinds]

    def times(self, kind: str) -> np.ndarray:
        return np.array([e.time for e in self._events if e.kind == kind])


@dataclass(frozen=True)
class SensorBank:
    """The three angle detectors; individual detectors can be disabled."""

    zero_level: float = 0.0
    amp_level: float = 0.5
    phase_level: float = -1.0
    zero_enabled: bool = True
    amp_enabled: bool = True
    phase_enabled: bool = True

    def detectors(self) -> List[Tuple[str, CrossingSpec]]:
        """(kind, CrossingSpec) pairs; the amplitude detector expands to the
        two crossings of |q| = amp_level with |q| rising."""
        out: List[Tuple[str, CrossingSpec]] = []
        if self.zero_enabled:
            out.append((KIND_ZERO, CrossingSpec("q_wrapped", self.zero_level,
                                                Direction.BOTH)))
        if self.amp_enabled:
            out.append((KIND_AMP, CrossingSpec("q_wrapped", abs(self.amp_level),
                                               Direction.RISING)))
            out.append((KIND_AMP, CrossingSpec("q_wrapped", -abs(self.amp_level),
                                               Direction.FALLING)))
        if self.phase_enabled:
            out.append((KIND_PHASE, CrossingSpec("q_wrapped", self.phase_level,
                                                 Direction.FALLING)))
        return out


def _direction_of(crossing_value_before: float, crossing_value_after: float) -> int:
    return 1 if crossing_value_after >= crossing_value_before else -1


def scan_events(state_before: np.ndarray, state_after: np.ndarray,
                t0: float, dt: float, sensors: SensorBank,
                derivative_fn, config: StepperConfig) -> List[Event]:
    """Detect and localize all sensor crossings inside one integrator step."""
    from .statevec import observable_value

    found: List[Event] = []
    for kind, spec in sensors.detectors():
        hit = locate_crossing(state_before, state_after, t0, dt, spec,
                              derivative_fn, config)
        if hit is None:
            continue
        g0 = observable_value(spec.observable, state_before)
        g1 = observable_value(spec.observable, state_after)
        found.append(Event(time=hit.time, kind=kind, payload={
            "value": hit.value,
            "level": spec.level,
            "direction": _direction_of(g0, g1),
        }))
    found.sort(key=lambda e: e.time)
    return found


def estimate_frequency(zero_times: Sequence[float],
                       window: Optional[Tuple[float, float]] = None
                       ) -> Optional[float]:
    """Angular frequency from zero-crossing spacing: omega = pi / mean gap.

    Consecutive crossings alternate direction for an oscillation about zero,
    so the mean gap is half the period. Returns None when fewer than five
    crossings fall in the window (at least three per direction are needed
    for a stable estimate).
    """
    t = np.asarray(sorted(zero_times), dtype=float)
    if window is not None:
        t = t[(t >= window[0]) & (t <= window[1])]
    if t.size < 5:
        return None
    gaps = np.diff(t)
    if gaps.mean() <= 0.0:
        return None
    return math.pi / float(gaps.mean())


def estimate_amplitude(times: Sequence[float], q: Sequence[float],
                       zero_times: Sequence[float],
                       window: Optional[Tuple[float, float]] = None
                       ) -> Optional[float]:
    """Mean over half-periods of max |q| between consecutive zero crossings."""
    t = np.asarray(times, dtype=float)
    x = np.abs(np.asarray(q, dtype=float))
    z = np.asarray(sorted(zero_times), dtype=float)
    if window is not None:
        z = z[(z >= window[0]) & (z <= window[1])]
    if z.size < 2 or t.size == 0:
        return None
    peaks = []
    for a, b in zip(z[:-1], z[1:]):
        seg = x[(t >= a) & (t <= b)]
        if seg.size:
            peaks.append(seg.max())
    if not peaks:
        return None
    return float(np.mean(peaks))
