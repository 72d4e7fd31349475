"""Feedback layers: proportional phase control, event-triggered adaptation, PRC.

Sign conventions, fixed by the calibrated monotone maps (see decisions in the
default config): burst frequency increases with g_us_plus and entrained
amplitude increases with g_s_minus. A zero crossing arriving later than
predicted therefore raises g_us_plus; an amplitude crossing arriving early
(oscillation overshooting the reference) lowers g_s_minus, and a missed
amplitude crossing applies the fixed increase p_A_fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .engine import GainUpdate, PulseCommand, Simulator, rest_state
from .neurons import (CurrentSchedule, NetworkSpec, NeuronParams, SynapseSpec,
                      Coupling, kick_start)
from .numerics import StepperConfig
from .plant import PlantParams
from .sensing import (KIND_AMP, KIND_BURST_OFFSET, KIND_BURST_ONSET,
                      KIND_PHASE, KIND_ZERO, Event)


@dataclass(frozen=True)
class PhaseControlConfig:
    """Trigger angle, pulse amplitude (inhibitory magnitude) and duration."""

    q_p: float = -1.0
    P: float = 0.3
    w: float = 0.05
    enabled: bool = True

    def __post_init__(self):
        if self.w <= 0.0:
            raise ValueError("pulse duration w must be > 0")
        if self.P < 0.0:
            raise ValueError("P is the pulse magnitude and must be >= 0")


@dataclass
class PulseScheduler:
    """Alternation bookkeeping for the phase-control pulses.

    Pulses go alternately to the A pair and the B pair; overlapping requests
    for the same pair are merged by extending the active window (applied by
    the engine).
    """

    next_target: str = "A"
    issued: List[PulseCommand] = field(default_factory=list)

    def schedule(self, time: float, duration: float,
                 amplitude: float) -> PulseCommand:
        cmd = PulseCommand(pair=self.next_target, start=time,
                           duration=duration, amplitude=amplitude)
        self.next_target = "B" if self.next_target == "A" else "A"
        self.issued.append(cmd)
        return cmd


class PhaseController:
    """Injects an inhibitory pulse into the alternating pair at each q_p event."""

    def __init__(self, cfg: PhaseControlConfig,
                 scheduler: Optional[PulseScheduler] = None):
        self.cfg = cfg
        self.scheduler = scheduler or PulseScheduler()

    def on_event(self, event: Event) -> List[PulseCommand]:
        if not self.cfg.enabled or event.kind != KIND_PHASE:
            return []
        return [self.scheduler.schedule(event.time, self.cfg.w, -self.cfg.P)]


@dataclass(frozen=True)
class AdaptiveConfig:
    """References, proportional gains, miss correction and clamp intervals."""

    omega_ref: float
    A_ref: float
    k_omega: float = 0.04
    k_A: float = 0.25
    p_A_fixed: float = 0.001
    g_us_range: Tuple[float, float] = (1.9, 2.6)
    g_s_range: Tuple[float, float] = (1.2, 1.9)
    enabled: bool = True

    def __post_init__(self):
        if self.omega_ref <= 0.0:
            raise ValueError("omega_ref must be > 0")
        if not (0.0 < self.A_ref < math.pi):
            raise ValueError("A_ref must lie in (0, pi)")
        for name in ("g_us_range", "g_s_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be a nonempty interval")


def _clamp(value: float, lo: float, hi: float) -> Tuple[float, bool]:
    if value < lo:
        return lo, True
    if value > hi:
        return hi, True
    return value, False


class AdaptiveController:
    """Event-triggered integral corrections of g_us_plus and g_s_minus.

    Frequency law: at each zero crossing the next one is predicted
    pi/omega_ref later; the prediction error moves g_us_plus proportionally.
    Amplitude law: each zero crossing arms a predicted |q| = A_ref crossing a
    quarter reference period later; the timing error moves g_s_minus, and a
    half-period without any such crossing applies the fixed p_A_fixed.
    Gains are piecewise constant between events and confined to their clamps.
    """

    def __init__(self, cfg: AdaptiveConfig, g_us_plus: float, g_s_minus: float):
        self.cfg = cfg
        self.g_us_plus = g_us_plus
        self.g_s_minus = g_s_minus
        self._pred_zero: Optional[float] = None
        self._amp_pred: Optional[float] = None

    def _freq_update(self, t: float) -> Optional[GainUpdate]:
        if self._pred_zero is None:
            return None
        err = t - self._pred_zero
        target = self.g_us_plus + self.cfg.k_omega * err
        new, sat = _clamp(target, *self.cfg.g_us_range)
        delta = new - self.g_us_plus
        self.g_us_plus = new
        return GainUpdate(gain="g_us_plus", value=new, delta=delta,
                          saturated=sat, law="freq")

    def _amp_update(self, t: float, law: str, err: float = 0.0) -> GainUpdate:
        if law == "amp-miss":
            target = self.g_s_minus + self.cfg.p_A_fixed
        else:
            target = self.g_s_minus + self.cfg.k_A * err
        new, sat = _clamp(target, *self.cfg.g_s_range)
        delta = new - self.g_s_minus
        self.g_s_minus = new
        return GainUpdate(gain="g_s_minus", value=new, delta=delta,
                          saturated=sat, law=law)

    def on_event(self, event: Event) -> List[GainUpdate]:
        if not self.cfg.enabled:
            return []
        out: List[GainUpdate] = []
        if event.kind == KIND_ZERO:
            if self._amp_pred is not None:
                out.append(self._amp_update(event.time, "amp-miss"))
            upd = self._freq_update(event.time)
            if upd is not None:
                out.append(upd)
            self._pred_zero = event.time + math.pi / self.cfg.omega_ref
            self._amp_pred = event.time + 0.5 * math.pi / self.cfg.omega_ref
        elif event.kind == KIND_AMP and self._amp_pred is not None:
            out.append(self._amp_update(event.time, "amp",
                                        err=event.time - self._amp_pred))
            self._amp_pred = None
        return out


# --- phase response curve ----------------------------------------------------


@dataclass(frozen=True)
class PrcSample:
    phase: float
    shift: float
    valid: bool


@dataclass(frozen=True)
class PrcResult:
    period: float
    P: float
    w: float
    samples: Tuple[PrcSample, ...]
    # phase at which the pulsed neuron's burst ends; pulses landing after it
    # probe the inter-burst (escape) segment, the controller's working range
    # and the interval over which the curve is monotone
    interburst_start: float = 0.0

    def interburst_samples(self) -> Tuple[PrcSample, ...]:
        return tuple(s for s in self.samples
                     if s.valid and s.phase >= self.interburst_start)


def build_isolated_pair(params: NeuronParams, g_hco: float) -> NetworkSpec:
    """A single half-centre pair (A1-B1 plus a mirrored quiescent A2-B2)."""
    syn = (
        SynapseSpec("A1", "B1", -g_hco),
        SynapseSpec("B1", "A1", -g_hco),
        SynapseSpec("A2", "B2", -g_hco),
        SynapseSpec("B2", "A2", -g_hco),
    )
    return NetworkSpec(params=params, synapses=syn,
                       configuration=Coupling.IN_PHASE,
                       g_hco=g_hco, g_cross=0.0)


def _onsets_of(result, neuron: str = "A1") -> np.ndarray:
    return np.array([e.time for e in result.events
                     if e.kind == KIND_BURST_ONSET
                     and e.payload["neuron"] == neuron])


def compute_prc(params: NeuronParams, g_hco: float, P: float, w: float,
                n_phases: int, stepper: Optional[StepperConfig] = None,
                k_periods: int = 5, settle_time: float = 120.0,
                kick_amplitude: float = 3.0, kick_duration: float = 1.0,
                kick_time: float = 1.0) -> PrcResult:
    """Sampled phase response of an isolated half-centre pair to one pulse.

    For each of n_phases equally spaced onsets within one period, a fresh
    simulation receives a single inhibitory pulse (-P for w) into neuron A1
    and runs k_periods beyond it; the shift is the offset of the k-th
    subsequent burst onset against the unperturbed run, in periods, reduced
    to (-0.5, 0.5], positive meaning a phase advance.
    """
    if n_phases < 8:
        raise ValueError("n_phases must be >= 8")
    if w <= 0.0:
        raise ValueError("pulse duration w must be > 0")
    stepper = stepper or StepperConfig()
    network = build_isolated_pair(params, g_hco)
    plant = PlantParams(alpha=1.4, i_mag=0.0, v_th=0.0)
    base = CurrentSchedule(params.i_nominal)
    base = kick_start(base, "A1", kick_amplitude, kick_duration, kick_time)

    def run_once(pulse_time=None, horizon=None):
        sched = base
        if pulse_time is not None:
            sched = kick_start(sched, "A1", -P, w, pulse_time)
        sim = Simulator(network=network, plant=plant, stepper=stepper,
                        horizon=horizon, schedule=sched, sensors=None,
                        initial_state=rest_state(), decimation=50)
        return sim.run()

    # reference run to measure the period and fix the pulse anchor
    probe = run_once(horizon=settle_time)
    onsets = _onsets_of(probe)
    offsets = np.array([e.time for e in probe.events
                        if e.kind == KIND_BURST_OFFSET
                        and e.payload["neuron"] == "A1"])
    tail = onsets[onsets >= 0.5 * settle_time]
    if tail.size < 4:
        raise RuntimeError("isolated pair did not reach steady bursting")
    period = float(np.mean(np.diff(tail)))
    sizes = []
    for on in tail[:-1]:
        nxt = offsets[offsets > on]
        if nxt.size:
            sizes.append(nxt[0] - on)
    duty = float(np.mean(sizes)) / period if sizes else 0.0
    t_ref = float(tail[-2])
    horizon = t_ref + (k_periods + 3) * period

    reference = run_once(horizon=horizon)
    ref_onsets = _onsets_of(reference)

    samples = []
    for i in range(n_phases):
        phase = i / n_phases
        t_pulse = t_ref + phase * period
        n_before = int(np.sum(ref_onsets <= t_pulse))
        pert = run_once(pulse_time=t_pulse, horizon=horizon)
        pert_onsets = _onsets_of(pert)
        idx = n_before + k_periods - 1
        if idx >= len(ref_onsets) or idx >= len(pert_onsets):
            samples.append(PrcSample(phase=phase, shift=float("nan"),
                                     valid=False))
            continue
        raw = (ref_onsets[idx] - pert_onsets[idx]) / period
        shift = raw - round(raw)
        if shift <= -0.5:
            shift += 1.0
        samples.append(PrcSample(phase=phase, shift=float(shift), valid=True))
    return PrcResult(period=period, P=P, w=w, samples=tuple(samples),
                     interburst_start=duty)
