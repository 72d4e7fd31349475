"""The four-neuron controller: single-neuron dynamics, synapses, network wiring.

Each neuron carries three voltages (v, v_s, v_us) filtered at separated
timescales. The rhythm generator is a pair of half-centre oscillators
(A1-B1 and A2-B2, mutual inhibition) coupled A1-A2 and B1-B2 with a sign
that selects the in-phase or anti-phase relation between the two halves.

Default numeric values are calibrated so that, with the pendulum's
dimensionless natural frequency of 1, the free-running burst rhythm sits
within a few percent of it (see the shipped ``calibration-tau`` sweep).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .statevec import NEURON_IDS

# offset of the slow/ultra-slow tanh nonlinearities
TANH_SHIFT = 0.9

I_NOMINAL_DEFAULT = -1.0


@dataclass(frozen=True)
class NeuronParams:
    """Timescales and conductance gains, shared by all four neurons."""

    tau_f: float = 0.01
    tau_s: float = 0.3
    tau_us: float = 7.0
    g_f_minus: float = 1.5
    g_s_plus: float = 0.8
    g_s_minus: float = 1.55
    g_us_plus: float = 2.25
    i_nominal: float = I_NOMINAL_DEFAULT

    def __post_init__(self):
        if not (0.0 < self.tau_f < self.tau_s < self.tau_us):
            raise ValueError("timescales must satisfy 0 < tau_f < tau_s < tau_us")
        for name in ("g_f_minus", "g_s_plus", "g_s_minus", "g_us_plus"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NeuronState:
    v: float
    v_s: float
    v_us: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.v, self.v_s, self.v_us))):
            raise ValueError("neuron state must be finite")


@dataclass(frozen=True)
class SynapseSpec:
    """Directed synapse; g_syn > 0 excitatory, g_syn < 0 inhibitory."""

    pre: str
    post: str
    g_syn: float

    def __post_init__(self):
        if self.pre == self.post:
            raise ValueError("self-synapses are not allowed")
        for nid in (self.pre, self.post):
            if nid not in NEURON_IDS:
                raise ValueError(f"unknown neuron id {nid!r} in synapse")


class Coupling(Enum):
    IN_PHASE = "IN_PHASE"
    ANTI_PHASE = "ANTI_PHASE"


@dataclass(frozen=True)
class NetworkSpec:
    """Four neurons with shared params plus the signed synapse graph."""

    params: NeuronParams
    synapses: Tuple[SynapseSpec, ...]
    configuration: Coupling
    g_hco: float
    g_cross: float

    def __post_init__(self):
        intra = {("A1", "B1"), ("B1", "A1"), ("A2", "B2"), ("B2", "A2")}
        inter = {("A1", "A2"), ("A2", "A1"), ("B1", "B2"), ("B2", "B1")}
        for s in self.synapses:
            key = (s.pre, s.post)
            if key in intra and s.g_syn >= 0.0:
                raise ValueError(f"intra-HCO synapse {key} must be inhibitory")
            if key in inter:
                want_exc = self.configuration is Coupling.IN_PHASE
                if want_exc and s.g_syn <= 0.0:
                    raise ValueError(f"inter-HCO synapse {key} must be excitatory in IN_PHASE")
                if not want_exc and s.g_syn >= 0.0:
                    raise ValueError(f"inter-HCO synapse {key} must be inhibitory in ANTI_PHASE")

    def gain_matrix(self) -> np.ndarray:
        """4x4 matrix G with G[post, pre] = synaptic gain."""
        g = np.zeros((4, 4))
        for s in self.synapses:
            g[NEURON_IDS.index(s.post), NEURON_IDS.index(s.pre)] += s.g_syn
        return g


def build_network(configuration: Coupling, params: NeuronParams,
                  g_hco: float, g_cross: float) -> NetworkSpec:
    """Wire the standard 8-synapse graph for the requested configuration."""
    if g_hco <= 0.0 or g_cross <= 0.0:
        raise ValueError("g_hco and g_cross are magnitudes and must be > 0")
    sign = 1.0 if configuration is Coupling.IN_PHASE else -1.0
    syn = [
        SynapseSpec("A1", "B1", -g_hco),
        SynapseSpec("B1", "A1", -g_hco),
        SynapseSpec("A2", "B2", -g_hco),
        SynapseSpec("B2", "A2", -g_hco),
        SynapseSpec("A1", "A2", sign * g_cross),
        SynapseSpec("A2", "A1", sign * g_cross),
        SynapseSpec("B1", "B2", sign * g_cross),
        SynapseSpec("B2", "B1", sign * g_cross),
    ]
    return NetworkSpec(params=params, synapses=tuple(syn),
                       configuration=configuration, g_hco=g_hco, g_cross=g_cross)


def switch_configuration(spec: NetworkSpec) -> NetworkSpec:
    """Flip the inter-HCO synapse signs (IN_PHASE <-> ANTI_PHASE)."""
    other = (Coupling.ANTI_PHASE if spec.configuration is Coupling.IN_PHASE
             else Coupling.IN_PHASE)
    return build_network(other, spec.params, spec.g_hco, spec.g_cross)


def synapse_current(g_syn: float, v_s_pre: float) -> float:
    """Sigmoidal synaptic current, half-activated at the nominal rest v_s = -1."""
    return g_syn / (1.0 + math.exp(-2.0 * (v_s_pre + 1.0)))


def neuron_rhs(state: NeuronState, params: NeuronParams,
               i_syn: float, i_app: float) -> Tuple[float, float, float]:
    """Time derivatives (dv, dv_s, dv_us) of one neuron."""
    v, v_s, v_us = state.v, state.v_s, state.v_us
    dv = (-v
          + params.g_f_minus * math.tanh(v)
          - params.g_s_plus * math.tanh(v_s)
          + params.g_s_minus * math.tanh(v_s + TANH_SHIFT)
          - params.g_us_plus * math.tanh(v_us + TANH_SHIFT)
          + i_syn + i_app) / params.tau_f
    dv_s = (v - v_s) / params.tau_s
    dv_us = (v - v_us) / params.tau_us
    return dv, dv_s, dv_us


def network_rhs(states: Mapping[str, NeuronState], spec: NetworkSpec,
                i_app: Mapping[str, float]) -> dict:
    """Derivative triples for all four neurons, synaptic currents summed per target."""
    for s in spec.synapses:
        if s.pre not in states or s.post not in states:
            raise KeyError(f"synapse references unknown neuron {s.pre}->{s.post}")
    out = {}
    for nid in NEURON_IDS:
        isyn = 0.0
        for s in spec.synapses:
            if s.post == nid:
                isyn += synapse_current(s.g_syn, states[s.pre].v_s)
        out[nid] = neuron_rhs(states[nid], spec.params, isyn, i_app[nid])
    return out


@dataclass(frozen=True)
class CurrentPulse:
    neuron: str
    start: float
    duration: float
    amplitude: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("pulse duration must be > 0")
        if self.neuron not in NEURON_IDS:
            raise ValueError(f"unknown neuron id {self.neuron!r}")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class CurrentSchedule:
    """Piecewise-constant applied currents: nominal baseline plus pulses."""

    i_nominal: float = I_NOMINAL_DEFAULT
    pulses: Tuple[CurrentPulse, ...] = ()

    def currents_at(self, t: float) -> dict:
        cur = {nid: self.i_nominal for nid in NEURON_IDS}
        for p in self.pulses:
            if p.start <= t < p.end:
                cur[p.neuron] += p.amplitude
        return cur

    def change_times(self) -> List[float]:
        times = set()
        for p in self.pulses:
            times.add(p.start)
            times.add(p.end)
        return sorted(times)


def kick_start(schedule: CurrentSchedule, neuron_id: str,
               pulse_amplitude: float, pulse_duration: float,
               start_time: float = 0.0) -> CurrentSchedule:
    """Add the rhythm-starting current pulse for one neuron to a schedule."""
    pulse = CurrentPulse(neuron=neuron_id, start=start_time,
                         duration=pulse_duration, amplitude=pulse_amplitude)
    return CurrentSchedule(i_nominal=schedule.i_nominal,
                           pulses=schedule.pulses + (pulse,))


def detect_bursts(times: Sequence[float], v: Sequence[float],
                  v_th: float = 0.0) -> List[Tuple[float, float]]:
    """Maximal intervals with v > v_th on a sampled voltage trace.

    Crossing times are linearly interpolated between samples, so the
    resolution is the trace sampling interval. Only complete bursts (both
    onset and offset inside the trace) are returned.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(v, dtype=float)
    if t.size == 0:
        return []
    if t.size != x.size:
        raise ValueError("times and v must have equal length")
    if np.any(np.diff(t) < 0.0):
        raise ValueError("trace must be time-ordered")

    above = x > v_th
    bursts: List[Tuple[float, float]] = []
    onset = None
    for k in range(1, t.size):
        if above[k] and not above[k - 1]:
            f0, f1 = x[k - 1] - v_th, x[k] - v_th
            onset = t[k - 1] + (t[k] - t[k - 1]) * (-f0) / (f1 - f0)
        elif not above[k] and above[k - 1] and onset is not None:
            f0, f1 = x[k - 1] - v_th, x[k] - v_th
            offset = t[k - 1] + (t[k] - t[k - 1]) * (-f0) / (f1 - f0)
            bursts.append((onset, offset))
            onset = None
    return bursts


def burst_sizes(bursts: Iterable[Tuple[float, float]]) -> np.ndarray:
    return np.array([off - on for on, off in bursts])


def burst_periods(bursts: Sequence[Tuple[float, float]]) -> np.ndarray:
    onsets = np.array([on for on, _ in bursts])
    return np.diff(onsets)
