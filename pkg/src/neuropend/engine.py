"""Coupled simulation engine: fused 14-state stepping with event handling.

The hot loop is a numba kernel that advances the full state on the fixed RK4
grid, latches the motor torque at each step boundary, accumulates exact work
and dissipation, and stops at the first step whose endpoints bracket a
registered crossing. Localization, logging and control actions then run in
Python; their effects on applied currents, gains and coupling take hold at
the step boundary following the event, and the kernel resumes.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from . import statevec
from .neurons import (Coupling, CurrentSchedule, NetworkSpec,
                      switch_configuration)
from .numerics import (CrossingSpec, Direction, SimulationFault, StepperConfig,
                       locate_crossing)
from .plant import PlantParams, mechanical_energy
from .sensing import (KIND_ADAPTIVE, KIND_BURST_OFFSET, KIND_BURST_ONSET,
                      KIND_CONTROL_PULSE, Event, EventLog, SensorBank)

# parameter vector layout for the kernel
P_TAU_F, P_TAU_S, P_TAU_US = 0, 1, 2
P_G_F, P_G_SP, P_G_SM, P_G_USP = 3, 4, 5, 6
P_ALPHA, P_I_MAG, P_V_TH, P_S1, P_S2 = 7, 8, 9, 10, 11
N_PARAMS = 12

# observable codes used by the kernel's crossing scan
OBS_Q_WRAPPED = 0
OBS_Q = 1
OBS_QDOT = 2
OBS_V_BASE = 10   # 10 + neuron index
OBS_VS_BASE = 20

_PI = math.pi
_TWO_PI = 2.0 * math.pi


def _observable_code(name: str) -> int:
    if name == "q_wrapped":
        return OBS_Q_WRAPPED
    if name == "q":
        return OBS_Q
    if name == "q_dot":
        return OBS_QDOT
    if name.startswith("v:"):
        return OBS_V_BASE + statevec.neuron_index(name[2:])
    if name.startswith("vs:"):
        return OBS_VS_BASE + statevec.neuron_index(name[3:])
    raise KeyError(f"observable {name!r} not supported by the engine")


@njit(cache=True)
def _rhs(y, p, gsyn, iapp, torque, out):
    out[0] = y[1]
    out[1] = torque - p[7] * y[1] - math.sin(y[0])
    tau_f, tau_s, tau_us = p[0], p[1], p[2]
    gf, gsp, gsm, gusp = p[3], p[4], p[5], p[6]
    for i in range(4):
        b = 2 + 3 * i
        v = y[b]
        vs = y[b + 1]
        vus = y[b + 2]
        isyn = 0.0
        for j in range(4):
            g = gsyn[i, j]
            if g != 0.0:
                isyn += g / (1.0 + math.exp(-2.0 * (y[3 + 3 * j] + 1.0)))
        out[b] = (-v + gf * math.tanh(v) - gsp * math.tanh(vs)
                  + gsm * math.tanh(vs + 0.9) - gusp * math.tanh(vus + 0.9)
                  + isyn + iapp[i]) / tau_f
        out[b + 1] = (v - vs) / tau_s
        out[b + 2] = (v - vus) / tau_us


@njit(cache=True)
def _rk4_inplace(y, dt, p, gsyn, iapp, torque, k1, k2, k3, k4, tmp, out):
    n = y.shape[0]
    _rhs(y, p, gsyn, iapp, torque, k1)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * dt * k1[i]
    _rhs(tmp, p, gsyn, iapp, torque, k2)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * dt * k2[i]
    _rhs(tmp, p, gsyn, iapp, torque, k3)
    for i in range(n):
        tmp[i] = y[i] + dt * k3[i]
    _rhs(tmp, p, gsyn, iapp, torque, k4)
    for i in range(n):
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])


@njit(cache=True)
def _observe(y, code):
    if code == OBS_Q_WRAPPED:
        return (y[0] + _PI) % _TWO_PI - _PI
    if code == OBS_Q:
        return y[0]
    if code == OBS_QDOT:
        return y[1]
    if code >= OBS_VS_BASE:
        return y[3 + 3 * (code - OBS_VS_BASE)]
    return y[2 + 3 * (code - OBS_V_BASE)]


@njit(cache=True)
def _advance(y, y_prev, step0, n_target, dt, p, gsyn, iapp,
             obs_code, obs_level, obs_dir, fired,
             trace, rec_state, decim, acc):
    """Advance up to n_target steps; return (code, steps_done).

    code 0: target reached; 1: crossing detected in the last step;
    2: non-finite state after the last step.
    Trace rows are written at global steps that are multiples of decim
    (tracked via rec_state = [next_record_step, next_row]); the torque
    column holds the value latched for the step starting at the row time.
    """
    n_specs = obs_code.shape[0]
    k1 = np.empty(14)
    k2 = np.empty(14)
    k3 = np.empty(14)
    k4 = np.empty(14)
    tmp = np.empty(14)
    ynew = np.empty(14)
    steps_done = 0
    while steps_done < n_target:
        s_global = step0 + steps_done
        gate1 = 1.0 if y[2] > p[9] else 0.0
        gate2 = 1.0 if y[8] > p[9] else 0.0
        torque = p[8] * (p[10] * gate1 + p[11] * gate2)
        if s_global == rec_state[0] and rec_state[1] < trace.shape[0]:
            r = rec_state[1]
            trace[r, 0] = y[0]
            trace[r, 1] = y[1]
            trace[r, 2] = torque
            for i in range(4):
                trace[r, 3 + i] = y[2 + 3 * i]
                trace[r, 7 + i] = y[3 + 3 * i]
            rec_state[0] += decim
            rec_state[1] += 1
        for i in range(14):
            y_prev[i] = y[i]
        _rk4_inplace(y, dt, p, gsyn, iapp, torque, k1, k2, k3, k4, tmp, ynew)
        acc[0] += torque * (ynew[0] - y[0])
        acc[1] += p[7] * 0.5 * (y[1] * y[1] + ynew[1] * ynew[1]) * dt
        ok = True
        for i in range(14):
            y[i] = ynew[i]
            if not math.isfinite(ynew[i]):
                ok = False
        steps_done += 1
        if not ok:
            return 2, steps_done
        any_fired = False
        for k in range(n_specs):
            fired[k] = 0
            g0 = _observe(y_prev, obs_code[k])
            g1 = _observe(y, obs_code[k])
            if obs_code[k] == OBS_Q_WRAPPED and abs(g1 - g0) > _PI:
                continue
            f0 = g0 - obs_level[k]
            f1 = g1 - obs_level[k]
            hit = False
            if obs_dir[k] >= 0 and f0 < 0.0 <= f1:
                hit = True
            if obs_dir[k] <= 0 and f0 > 0.0 >= f1:
                hit = True
            if hit:
                fired[k] = 1
                any_fired = True
        if any_fired:
            return 1, steps_done
    return 0, steps_done


_DIR_TO_INT = {Direction.RISING: 1, Direction.FALLING: -1, Direction.BOTH: 0}

_BURST_PREFIX = "__burst__"


@dataclass(frozen=True)
class PulseCommand:
    """Control request: add `amplitude` to i_app of a neuron pair for `duration`."""

    pair: str            # "A" or "B"
    start: float
    duration: float
    amplitude: float


@dataclass(frozen=True)
class GainUpdate:
    """Control request: set an adapted gain to `value` (delta already clamped)."""

    gain: str            # "g_s_minus" or "g_us_plus"
    value: float
    delta: float
    saturated: bool
    law: str             # "freq", "amp" or "amp-miss"


@dataclass
class SimulationTrace:
    """Uniformly decimated record of the continuous states and applied torque."""

    dt: float
    decimation: int
    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    torque: np.ndarray
    v: Dict[str, np.ndarray]
    v_s: Dict[str, np.ndarray]

    def __len__(self) -> int:
        return self.t.size


@dataclass
class RunResult:
    trace: SimulationTrace
    events: EventLog
    gain_rows: List[tuple]          # (time, g_us_plus, g_s_minus, correction, saturated)
    work: float
    dissipation: float
    energy_start: float
    energy_end: float
    # (time, cumulative work, mechanical energy, cumulative dissipation)
    # sampled at each burst onset of the reference neuron
    work_snapshots: List[Tuple[float, float, float, float]]
    final_state: np.ndarray
    final_gains: Dict[str, float]
    status: str = "ok"


class Simulator:
    """One deterministic run of the coupled controller/pendulum system."""

    def __init__(self, network: NetworkSpec, plant: PlantParams,
                 stepper: StepperConfig, horizon: float,
                 schedule: Optional[CurrentSchedule] = None,
                 sensors: Optional[SensorBank] = None,
                 initial_state: Optional[np.ndarray] = None,
                 decimation: int = 10,
                 phase_controller=None,
                 adaptive_controller=None,
                 param_steps: Sequence[Tuple[float, str, float]] = (),
                 config_switch_time: Optional[float] = None,
                 reference_neuron: str = "A1",
                 log_bursts: bool = True):
        if horizon <= 0.0:
            raise ValueError("horizon must be > 0")
        if decimation < 1:
            raise ValueError("decimation must be >= 1")
        self.network = network
        self.plant = plant
        self.stepper = stepper
        self.horizon = float(horizon)
        self.schedule = schedule or CurrentSchedule(network.params.i_nominal)
        self.sensors = sensors
        self.decimation = int(decimation)
        self.phase_controller = phase_controller
        self.adaptive_controller = adaptive_controller
        self.param_steps = sorted(param_steps)
        self.config_switch_time = config_switch_time
        self.reference_neuron = reference_neuron
        self.log_bursts = log_bursts

        self.y = (np.array(initial_state, dtype=float).copy()
                  if initial_state is not None else rest_state())
        if self.y.shape != (statevec.STATE_DIM,):
            raise ValueError("initial state must have 14 components")

        self.p = np.zeros(N_PARAMS)
        np_ = network.params
        self.p[P_TAU_F], self.p[P_TAU_S], self.p[P_TAU_US] = np_.tau_f, np_.tau_s, np_.tau_us
        self.p[P_G_F], self.p[P_G_SP] = np_.g_f_minus, np_.g_s_plus
        self.p[P_G_SM], self.p[P_G_USP] = np_.g_s_minus, np_.g_us_plus
        self.p[P_ALPHA], self.p[P_I_MAG], self.p[P_V_TH] = plant.alpha, plant.i_mag, plant.v_th
        self.p[P_S1], self.p[P_S2] = plant.motor_signs
        self.gsyn = network.gain_matrix()

        # registered crossings: sensor detectors plus the burst gates
        self._specs: List[Tuple[str, CrossingSpec]] = []
        if sensors is not None:
            self._specs.extend(sensors.detectors())
        if log_bursts:
            for nid in statevec.NEURON_IDS:
                self._specs.append((_BURST_PREFIX + nid,
                                    CrossingSpec(f"v:{nid}", plant.v_th,
                                                 Direction.BOTH)))
        self._obs_code = np.array([_observable_code(s.observable)
                                   for _, s in self._specs], dtype=np.int64)
        self._obs_level = np.array([s.level for _, s in self._specs])
        self._obs_dir = np.array([_DIR_TO_INT[s.direction]
                                  for _, s in self._specs], dtype=np.int64)

        # control pulse windows per pair: pair -> (end_time, amplitude)
        self._active_pulses: Dict[str, Tuple[float, float]] = {}
        self._action_steps: List[int] = []

    # -- applied currents --------------------------------------------------

    def _iapp_at(self, t: float) -> np.ndarray:
        cur = self.schedule.currents_at(t)
        vec = np.array([cur[nid] for nid in statevec.NEURON_IDS])
        for pair, (end, amp) in self._active_pulses.items():
            if t < end - 1e-12:
                for i, nid in enumerate(statevec.NEURON_IDS):
                    if nid.startswith(pair):
                        vec[i] += amp
        return vec

    def _boundary_step(self, t: float) -> int:
        return max(0, int(math.ceil(t / self.stepper.dt - 1e-9)))

    def _add_action_step(self, step: int) -> None:
        i = bisect.bisect_left(self._action_steps, step)
        if i == len(self._action_steps) or self._action_steps[i] != step:
            self._action_steps.insert(i, step)

    # -- run -----------------------------------------------------------------

    def run(self) -> RunResult:
        dt = self.stepper.dt
        n_steps = int(round(self.horizon / dt))
        if n_steps < 1:
            raise ValueError("horizon shorter than one step")
        decim = self.decimation
        n_rows = n_steps // decim + 1
        trace_buf = np.zeros((n_rows, 11))
        rec_state = np.array([0, 0], dtype=np.int64)
        acc = np.zeros(2)
        fired = np.zeros(max(1, len(self._specs)), dtype=np.int8)
        y_prev = np.zeros(statevec.STATE_DIM)

        events = EventLog()
        gain_rows: List[tuple] = []
        work_snapshots: List[Tuple[float, float, float, float]] = []
        energy_start = mechanical_energy(self.y[0], self.y[1])

        for t in self.schedule.change_times():
            self._add_action_step(self._boundary_step(t))
        for t, _, _ in self.param_steps:
            self._add_action_step(self._boundary_step(t))
        if self.config_switch_time is not None:
            self._add_action_step(self._boundary_step(self.config_switch_time))
        pending_param_steps = list(self.param_steps)
        switch_done = self.config_switch_time is None

        step = 0
        fault_time = None
        iapp = self._iapp_at(0.0)

        while step < n_steps:
            i = bisect.bisect_right(self._action_steps, step)
            next_stop = self._action_steps[i] if i < len(self._action_steps) else n_steps
            next_stop = min(next_stop, n_steps)
            code, done = _advance(self.y, y_prev, step, next_stop - step, dt,
                                  self.p, self.gsyn, iapp,
                                  self._obs_code, self._obs_level,
                                  self._obs_dir, fired,
                                  trace_buf, rec_state, decim, acc)
            step += done
            t_boundary = step * dt
            if code == 2:
                fault_time = t_boundary
                break
            if code == 1:
                self._handle_crossings(y_prev, step, dt, iapp, fired, events,
                                       gain_rows, work_snapshots, acc)
            while pending_param_steps and \
                    self._boundary_step(pending_param_steps[0][0]) <= step:
                _, name, value = pending_param_steps.pop(0)
                self._set_param(name, value)
            if not switch_done and \
                    self._boundary_step(self.config_switch_time) <= step:
                self.network = switch_configuration(self.network)
                self.gsyn = self.network.gain_matrix()
                # the second motor's sign follows the configuration
                in_phase = self.network.configuration is Coupling.IN_PHASE
                self.p[P_S2] = self.p[P_S1] if in_phase else -self.p[P_S1]
                switch_done = True
            self._expire_pulses(t_boundary)
            iapp = self._iapp_at(t_boundary)

        if fault_time is not None:
            raise SimulationFault(fault_time)

        # final trace row lands exactly on the last grid multiple of decim
        if rec_state[0] == n_steps and rec_state[1] < trace_buf.shape[0]:
            r = rec_state[1]
            gate1 = 1.0 if self.y[2] > self.p[P_V_TH] else 0.0
            gate2 = 1.0 if self.y[8] > self.p[P_V_TH] else 0.0
            trace_buf[r, 0] = self.y[0]
            trace_buf[r, 1] = self.y[1]
            trace_buf[r, 2] = self.p[P_I_MAG] * (self.p[P_S1] * gate1
                                                 + self.p[P_S2] * gate2)
            for i in range(4):
                trace_buf[r, 3 + i] = self.y[2 + 3 * i]
                trace_buf[r, 7 + i] = self.y[3 + 3 * i]
            rec_state[1] += 1

        trace_buf = trace_buf[:rec_state[1]]
        t_col = np.arange(trace_buf.shape[0]) * (decim * dt)
        trace = SimulationTrace(
            dt=dt, decimation=decim, t=t_col,
            q=trace_buf[:, 0].copy(), q_dot=trace_buf[:, 1].copy(),
            torque=trace_buf[:, 2].copy(),
            v={nid: trace_buf[:, 3 + i].copy()
               for i, nid in enumerate(statevec.NEURON_IDS)},
            v_s={nid: trace_buf[:, 7 + i].copy()
                 for i, nid in enumerate(statevec.NEURON_IDS)},
        )
        return RunResult(
            trace=trace, events=events, gain_rows=gain_rows,
            work=float(acc[0]), dissipation=float(acc[1]),
            energy_start=energy_start,
            energy_end=mechanical_energy(self.y[0], self.y[1]),
            work_snapshots=work_snapshots,
            final_state=self.y.copy(),
            final_gains={"g_s_minus": float(self.p[P_G_SM]),
                         "g_us_plus": float(self.p[P_G_USP])},
        )

    # -- event handling ------------------------------------------------------

    def _derivative_fn(self, iapp: np.ndarray, torque: float) -> Callable:
        p, gsyn = self.p, self.gsyn

        def f(t, yy):
            out = np.empty(statevec.STATE_DIM)
            _rhs(np.asarray(yy, dtype=float), p, gsyn, iapp, torque, out)
            return out

        return f

    def _handle_crossings(self, y_prev, step, dt, iapp, fired, events,
                          gain_rows, work_snapshots, acc) -> None:
        t0 = (step - 1) * dt
        gate1 = 1.0 if y_prev[2] > self.p[P_V_TH] else 0.0
        gate2 = 1.0 if y_prev[8] > self.p[P_V_TH] else 0.0
        torque = self.p[P_I_MAG] * (self.p[P_S1] * gate1 + self.p[P_S2] * gate2)
        deriv = self._derivative_fn(iapp, torque)

        found = []
        for k in range(len(self._specs)):
            if not fired[k]:
                continue
            kind, spec = self._specs[k]
            hit = locate_crossing(y_prev, self.y, t0, dt, spec, deriv,
                                  self.stepper)
            if hit is None:
                continue
            found.append((hit.time, kind, spec, hit))
        found.sort(key=lambda item: item[0])

        for t_ev, kind, spec, hit in found:
            g0 = statevec.observable_value(spec.observable, y_prev)
            g1 = statevec.observable_value(spec.observable, self.y)
            rising = g1 >= g0
            if kind.startswith(_BURST_PREFIX):
                nid = kind[len(_BURST_PREFIX):]
                events.append(Event(
                    time=t_ev,
                    kind=KIND_BURST_ONSET if rising else KIND_BURST_OFFSET,
                    payload={"neuron": nid}))
                if rising and nid == self.reference_neuron:
                    work_snapshots.append((t_ev, float(acc[0]),
                                           mechanical_energy(self.y[0], self.y[1]),
                                           float(acc[1])))
                continue
            ev = Event(time=t_ev, kind=kind, payload={
                "value": hit.value, "level": spec.level,
                "direction": 1 if rising else -1,
            })
            events.append(ev)
            self._dispatch_sensor_event(ev, events, gain_rows)

    def _dispatch_sensor_event(self, event: Event, events: EventLog,
                               gain_rows: List[tuple]) -> None:
        if self.phase_controller is not None:
            for cmd in self.phase_controller.on_event(event):
                end = cmd.start + cmd.duration
                if cmd.pair in self._active_pulses:
                    prev_end, _ = self._active_pulses[cmd.pair]
                    if cmd.start < prev_end:
                        end = max(prev_end, end)
                self._active_pulses[cmd.pair] = (end, cmd.amplitude)
                self._add_action_step(self._boundary_step(end))
                events.append(Event(time=event.time, kind=KIND_CONTROL_PULSE,
                                    payload={"target": cmd.pair,
                                             "amplitude": cmd.amplitude,
                                             "duration": cmd.duration}))
        if self.adaptive_controller is not None:
            for upd in self.adaptive_controller.on_event(event):
                self._set_param("neuron." + upd.gain, upd.value)
                events.append(Event(time=event.time, kind=KIND_ADAPTIVE,
                                    payload={"gain": upd.gain,
                                             "delta": upd.delta,
                                             "saturated": int(upd.saturated),
                                             "law": upd.law}))
                gain_rows.append((event.time, float(self.p[P_G_USP]),
                                  float(self.p[P_G_SM]), upd.delta,
                                  int(upd.saturated)))

    def _expire_pulses(self, t: float) -> None:
        for pair in list(self._active_pulses):
            end, _ = self._active_pulses[pair]
            if t >= end - 1e-12:
                del self._active_pulses[pair]

    def _set_param(self, name: str, value: float) -> None:
        table = {
            "neuron.g_s_minus": P_G_SM,
            "neuron.g_us_plus": P_G_USP,
            "neuron.g_f_minus": P_G_F,
            "neuron.g_s_plus": P_G_SP,
            "plant.i_mag": P_I_MAG,
        }
        if name not in table:
            raise KeyError(f"parameter {name!r} cannot be stepped at run time")
        self.p[table[name]] = value


def rest_state(q: float = 0.0, q_dot: float = 0.0,
               v_rest: float = -1.0) -> np.ndarray:
    """All neurons at the nominal rest triple, pendulum at (q, q_dot)."""
    y = np.zeros(statevec.STATE_DIM)
    y[statevec.Q] = q
    y[statevec.QDOT] = q_dot
    for i in range(statevec.N_NEURONS):
        y[2 + 3 * i] = v_rest
        y[3 + 3 * i] = v_rest
        y[4 + 3 * i] = v_rest
    return y


def reference_full_rhs(y: np.ndarray, network: NetworkSpec, plant: PlantParams,
                       iapp: Dict[str, float], torque: float) -> np.ndarray:
    """Pure-Python composition of the module-level dynamics, for cross-checks."""
    from .neurons import NeuronState, network_rhs
    from .plant import PendulumState, pendulum_rhs

    states = {nid: NeuronState(v=y[2 + 3 * i], v_s=y[3 + 3 * i],
                               v_us=y[4 + 3 * i])
              for i, nid in enumerate(statevec.NEURON_IDS)}
    dq, dqd = pendulum_rhs(PendulumState(q=y[0], q_dot=y[1]),
                           plant.alpha, torque)
    dn = network_rhs(states, network, iapp)
    out = np.empty(statevec.STATE_DIM)
    out[0], out[1] = dq, dqd
    for i, nid in enumerate(statevec.NEURON_IDS):
        out[2 + 3 * i], out[3 + 3 * i], out[4 + 3 * i] = dn[nid]
    return out
