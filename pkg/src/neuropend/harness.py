"""Scenario execution, analysis summaries, parameter sweeps and CSV output."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import (ConfigError, Scenario, SweepGrid, apply_overrides,
                     parse_grid_text, parse_kv_text, scenario_from_mapping)
from .control import (AdaptiveConfig, AdaptiveController, PhaseControlConfig,
                      PhaseController, PrcResult, build_isolated_pair,
                      compute_prc)
from .engine import RunResult, Simulator, rest_state
from .neurons import (Coupling, CurrentSchedule, NeuronParams,
                      build_network, kick_start)
from .numerics import StepperConfig
from .plant import (PlantParams, classify_steady_state,
                    rotations_per_segment)
from .sensing import (KIND_ADAPTIVE, KIND_BURST_OFFSET, KIND_BURST_ONSET,
                      KIND_ZERO, EventLog, SensorBank, estimate_amplitude,
                      estimate_frequency)
from .statevec import NEURON_IDS

TRACE_COLUMNS = ("t", "q", "q_dot", "I",
                 "v_A1", "v_B1", "v_A2", "v_B2",
                 "vs_A1", "vs_B1", "vs_A2", "vs_B2")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


@dataclass
class ScenarioResult:
    scenario: Scenario
    run: RunResult
    summary: Dict[str, object]


def build_simulator(sc: Scenario) -> Simulator:
    """Assemble the engine pieces for one validated scenario."""
    params = NeuronParams(tau_f=sc.tau_f, tau_s=sc.tau_s, tau_us=sc.tau_us,
                          g_f_minus=sc.g_f_minus, g_s_plus=sc.g_s_plus,
                          g_s_minus=sc.g_s_minus, g_us_plus=sc.g_us_plus,
                          i_nominal=sc.i_nominal)
    if sc.isolated:
        network = build_isolated_pair(params, sc.g_hco)
    else:
        network = build_network(Coupling[sc.configuration], params,
                                sc.g_hco, sc.g_cross)
    signs = (1.0, 1.0) if sc.configuration == "IN_PHASE" else (1.0, -1.0)
    plant = PlantParams(alpha=sc.alpha, i_mag=sc.i_mag, v_th=sc.v_th,
                        motor_signs=signs)
    stepper = StepperConfig(dt=sc.dt, crossing_tol=sc.crossing_tol,
                            max_bisections=sc.max_bisections)
    schedule = CurrentSchedule(sc.i_nominal)
    if sc.kick_neuron != "none":
        schedule = kick_start(schedule, sc.kick_neuron, sc.kick_amplitude,
                              sc.kick_duration, sc.kick_time)
    sensors = SensorBank(zero_level=sc.zero_level, amp_level=sc.amp_level,
                         phase_level=sc.phase_level)
    phase_ctl = None
    if sc.phase_enabled:
        phase_ctl = PhaseController(PhaseControlConfig(
            q_p=sc.phase_level, P=sc.phase_P, w=sc.phase_w, enabled=True))
    adaptive_ctl = None
    if sc.adaptive_enabled:
        adaptive_ctl = AdaptiveController(
            AdaptiveConfig(omega_ref=sc.omega_ref, A_ref=sc.A_ref,
                           k_omega=sc.k_omega, k_A=sc.k_A,
                           p_A_fixed=sc.p_A_fixed,
                           g_us_range=(sc.g_us_min, sc.g_us_max),
                           g_s_range=(sc.g_s_min, sc.g_s_max)),
            g_us_plus=sc.g_us_plus, g_s_minus=sc.g_s_minus)
    param_steps = []
    if sc.step_time is not None:
        param_steps.append((sc.step_time, sc.step_param, sc.step_value))
    return Simulator(network=network, plant=plant, stepper=stepper,
                     horizon=sc.horizon, schedule=schedule, sensors=sensors,
                     initial_state=rest_state(q=sc.q0, q_dot=sc.qdot0),
                     decimation=sc.decimation,
                     phase_controller=phase_ctl,
                     adaptive_controller=adaptive_ctl,
                     param_steps=param_steps,
                     config_switch_time=sc.switch_time)


def _burst_pairs(events: EventLog, neuron: str,
                 window: Tuple[float, float]) -> List[Tuple[float, float]]:
    onsets = [e.time for e in events if e.kind == KIND_BURST_ONSET
              and e.payload["neuron"] == neuron
              and window[0] <= e.time <= window[1]]
    offsets = [e.time for e in events if e.kind == KIND_BURST_OFFSET
               and e.payload["neuron"] == neuron
               and window[0] <= e.time <= window[1]]
    pairs = []
    j = 0
    for on in onsets:
        while j < len(offsets) and offsets[j] <= on:
            j += 1
        if j < len(offsets):
            pairs.append((on, offsets[j]))
    return pairs


def analyze(sc: Scenario, run: RunResult) -> Dict[str, object]:
    """Post-run summary: classification, estimates, burst stats, bookkeeping."""
    t0_win = sc.transient_fraction * sc.horizon
    window = (t0_win, sc.horizon)
    tr = run.trace
    s: Dict[str, object] = {}
    s["scenario"] = sc.name
    s["status"] = run.status
    s["horizon"] = sc.horizon
    s["dt"] = sc.dt
    s["decimation"] = sc.decimation
    s["transient_fraction"] = sc.transient_fraction
    s["configuration"] = sc.configuration
    if sc.switch_time is not None:
        s["switch_time"] = sc.switch_time
    if sc.step_time is not None:
        s["step_time"] = sc.step_time
        s["step_param"] = sc.step_param
        s["step_value"] = sc.step_value
    s["n_events"] = len(run.events)

    # burst statistics per neuron, from refined event times
    period_ref = None
    onset_lists: Dict[str, np.ndarray] = {}
    for nid in NEURON_IDS:
        pairs = _burst_pairs(run.events, nid, window)
        onsets = np.array([a for a, _ in pairs])
        onset_lists[nid] = onsets
        s[f"burst_count_{nid}"] = len(pairs)
        if pairs:
            sizes = np.array([b - a for a, b in pairs])
            s[f"mean_burst_size_{nid}"] = float(sizes.mean())
        if len(onsets) >= 2:
            periods = np.diff(onsets)
            s[f"mean_burst_period_{nid}"] = float(periods.mean())
            if nid == "A1":
                period_ref = float(periods.mean())

    # phase offset between the two halves, as a fraction of the period
    if period_ref and len(onset_lists["A1"]) >= 3 and len(onset_lists["A2"]) >= 3:
        offs = []
        for a in onset_lists["A1"]:
            d = onset_lists["A2"] - a
            d = d[np.abs(d) <= period_ref]
            if d.size:
                offs.append(abs(d[np.argmin(np.abs(d))]) / period_ref)
        if offs:
            s["onset_offset_frac"] = float(np.mean(offs))

    # steady-state classification over actuation events of the reference neuron
    onsets_ref = onset_lists["A1"]
    cls = classify_steady_state(tr.t, tr.q, onsets_ref, min_events=10)
    s["classification"] = cls.value
    rots = rotations_per_segment(tr.t, tr.q, onsets_ref)
    if rots.size:
        s["rotations_per_event"] = float(np.median(rots))

    # frequency and amplitude from the zero-detector events
    zero_times = [e.time for e in run.events if e.kind == KIND_ZERO]
    freq = estimate_frequency(zero_times, window)
    if freq is not None:
        s["frequency"] = freq
    # amplitude on the wrapped angle: pi means a complete swing
    q_wrapped = np.mod(tr.q + np.pi, 2.0 * np.pi) - np.pi
    amp = estimate_amplitude(tr.t, q_wrapped, zero_times, window)
    if amp is not None:
        s["amplitude"] = amp

    # exact per-event energy bookkeeping from the engine accumulators
    snaps = [w for w in run.work_snapshots if w[0] >= t0_win]
    if len(snaps) >= 2:
        w_vals = np.array([w[1] for w in snaps])
        e_vals = np.array([w[2] for w in snaps])
        d_vals = np.array([w[3] for w in snaps])
        e_series = np.diff(w_vals)
        s["E_count"] = int(e_series.size)
        s["E_sum"] = float(e_series.sum())
        s["E_mean"] = float(e_series.mean())
        if e_series.size >= 10:
            last = e_series[-10:]
            denom = abs(last.mean())
            if denom > 0.0:
                s["E_last10_range_rel"] = float((last.max() - last.min()) / denom)
        delta_e = float(e_vals[-1] - e_vals[0])
        diss = float(d_vals[-1] - d_vals[0])
        s["delta_E_mech_window"] = delta_e
        s["dissipation_window"] = diss
        denom = max(abs(e_series.sum()), abs(diss), 1e-12)
        s["energy_balance_rel_err"] = float(
            abs(e_series.sum() - (delta_e + diss)) / denom)
        for k, val in enumerate(e_series):
            s[f"E_i.{k}"] = float(val)

    s["work_total"] = run.work
    s["dissipation_total"] = run.dissipation
    s["final_g_s_minus"] = run.final_gains["g_s_minus"]
    s["final_g_us_plus"] = run.final_gains["g_us_plus"]

    # adaptive diagnostics
    if sc.adaptive_enabled:
        s["omega_ref"] = sc.omega_ref
        s["A_ref"] = sc.A_ref
        if freq is not None:
            s["freq_rel_err"] = abs(freq - sc.omega_ref) / sc.omega_ref
        if amp is not None:
            s["amp_rel_err"] = abs(amp - sc.A_ref) / sc.A_ref
        deltas: Dict[str, List[float]] = {"g_us_plus": [], "g_s_minus": []}
        n_sat = 0
        for e in run.events:
            if e.kind != KIND_ADAPTIVE:
                continue
            deltas[e.payload["gain"]].append(abs(e.payload["delta"]))
            n_sat += int(e.payload["saturated"])
        s["n_corrections_g_us_plus"] = len(deltas["g_us_plus"])
        s["n_corrections_g_s_minus"] = len(deltas["g_s_minus"])
        s["n_saturated"] = n_sat
        for gain, vals in deltas.items():
            if len(vals) >= 20:
                s[f"corr_initial_{gain}"] = float(np.mean(vals[:10]))
                s[f"corr_last_{gain}"] = float(np.mean(vals[-10:]))
    return s


def run_scenario(sc: Scenario) -> ScenarioResult:
    """Deterministic run plus summary; invalid scenarios are rejected upfront."""
    sc.validate()
    sim = build_simulator(sc)
    run = sim.run()
    return ScenarioResult(scenario=sc, run=run, summary=analyze(sc, run))


# --- shipped scenarios ---------------------------------------------------------


def _scenario_dir():
    return resources.files("neuropend") / "scenarios"


def list_scenarios() -> List[str]:
    names = []
    for entry in _scenario_dir().iterdir():
        if entry.name.endswith(".cfg"):
            names.append(entry.name[:-len(".cfg")])
    return sorted(names)


def list_grids() -> List[str]:
    names = []
    for entry in _scenario_dir().iterdir():
        if entry.name.endswith(".grid"):
            names.append(entry.name[:-len(".grid")])
    return sorted(names)


def load_scenario_mapping(name_or_path: str) -> Dict[str, str]:
    if os.path.exists(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return parse_kv_text(fh.read(), source=name_or_path)
    candidate = _scenario_dir() / (name_or_path + ".cfg")
    if candidate.is_file():
        return parse_kv_text(candidate.read_text(encoding="utf-8"),
                             source=name_or_path)
    raise ConfigError("scenario", f"no scenario named or at {name_or_path!r}")


def load_scenario(name_or_path: str) -> Scenario:
    return scenario_from_mapping(load_scenario_mapping(name_or_path))


def load_grid(name_or_path: str) -> SweepGrid:
    if os.path.exists(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return parse_grid_text(fh.read(), source=name_or_path)
    candidate = _scenario_dir() / (name_or_path + ".grid")
    if candidate.is_file():
        return parse_grid_text(candidate.read_text(encoding="utf-8"),
                               source=name_or_path)
    raise ConfigError("grid", f"no grid named or at {name_or_path!r}")


# --- sweeps ---------------------------------------------------------------------

SWEEP_SUMMARY_COLUMNS = ("classification", "amplitude", "frequency",
                         "rotations_per_event", "mean_burst_size_A1",
                         "mean_burst_period_A1", "E_sum",
                         "energy_balance_rel_err")


def _sweep_point(args):
    index, base_kv, overrides, out_dir = args
    try:
        sc = scenario_from_mapping(apply_overrides(base_kv, overrides))
        result = run_scenario(sc)
        if out_dir is not None:
            write_outputs(result, out_dir)
        row = {"index": index, "error": ""}
        row.update(overrides)
        for col in SWEEP_SUMMARY_COLUMNS:
            row[col] = result.summary.get(col, "")
        return index, row
    except Exception as exc:  # per-point failures recorded, sweep continues
        row = {"index": index, "error": f"{type(exc).__name__}: {exc}"}
        row.update(overrides)
        return index, row


def run_sweep(base_kv: Dict[str, str], grid: SweepGrid, jobs: int = 1,
              out_dir: Optional[str] = None) -> List[Dict[str, object]]:
    """One independent simulation per grid point; rows ordered by grid index."""
    overrides_list = grid.override_list()
    if not overrides_list:
        raise ConfigError("grid", "grid produced no points")
    tasks = []
    for i, ov in enumerate(overrides_list):
        point_dir = None
        if out_dir is not None:
            point_dir = os.path.join(out_dir, f"point_{i:03d}")
        tasks.append((i, base_kv, ov, point_dir))
    rows: List[Optional[Dict[str, object]]] = [None] * len(tasks)
    if jobs <= 1:
        for task in tasks:
            i, row = _sweep_point(task)
            rows[i] = row
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, row in pool.map(_sweep_point, tasks):
                rows[i] = row
    out = [r for r in rows if r is not None]
    if out_dir is not None:
        keys: List[str] = ["index"]
        for ov in overrides_list:
            for k in ov:
                if k not in keys:
                    keys.append(k)
        keys += list(SWEEP_SUMMARY_COLUMNS) + ["error"]
        lines = [",".join(keys)]
        for row in out:
            lines.append(",".join(_fmt(row.get(k, "")) for k in keys))
        _write_text(os.path.join(out_dir, "sweep.csv"), lines)
    return out


# --- output files -----------------------------------------------------------------


def _write_text(path: str, lines: Sequence[str]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _payload_str(payload: Dict[str, object]) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in payload.items())


def write_outputs(result: ScenarioResult, out_dir: str) -> List[str]:
    """Emit trace.csv, events.csv, gains.csv and summary.csv."""
    tr = result.run.trace
    lines = [",".join(TRACE_COLUMNS)]
    for i in range(len(tr)):
        row = [tr.t[i], tr.q[i], tr.q_dot[i], tr.torque[i]]
        row += [tr.v[nid][i] for nid in NEURON_IDS]
        row += [tr.v_s[nid][i] for nid in NEURON_IDS]
        lines.append(",".join(f"{x:.9g}" for x in row))
    _write_text(os.path.join(out_dir, "trace.csv"), lines)

    lines = ["time,kind,payload"]
    for e in result.run.events:
        lines.append(f"{e.time:.9g},{e.kind},{_payload_str(e.payload)}")
    _write_text(os.path.join(out_dir, "events.csv"), lines)

    lines = ["time,g_us_plus,g_s_minus,correction,saturated"]
    for row in result.run.gain_rows:
        t, gus, gsm, corr, sat = row
        lines.append(f"{t:.9g},{gus:.9g},{gsm:.9g},{corr:.9g},{sat:d}")
    _write_text(os.path.join(out_dir, "gains.csv"), lines)

    lines = ["key,value"]
    for k, v in result.summary.items():
        lines.append(f"{k},{_fmt(v)}")
    _write_text(os.path.join(out_dir, "summary.csv"), lines)
    return ["trace.csv", "events.csv", "gains.csv", "summary.csv"]


def parse_summary_csv(text: str) -> Dict[str, object]:
    """Inverse of the summary writer (floats where they parse as floats)."""
    out: Dict[str, object] = {}
    lines = text.strip().splitlines()
    for line in lines[1:]:
        key, value = line.split(",", 1)
        try:
            num = float(value)
            out[key] = int(num) if num.is_integer() and "." not in value \
                and "e" not in value.lower() else num
        except ValueError:
            out[key] = value
    return out


# --- PRC -------------------------------------------------------------------------


def run_prc(P: float, w: float, n_phases: int,
            base: Optional[Scenario] = None) -> PrcResult:
    sc = base or load_scenario("prc")
    params = NeuronParams(tau_f=sc.tau_f, tau_s=sc.tau_s, tau_us=sc.tau_us,
                          g_f_minus=sc.g_f_minus, g_s_plus=sc.g_s_plus,
                          g_s_minus=sc.g_s_minus, g_us_plus=sc.g_us_plus,
                          i_nominal=sc.i_nominal)
    stepper = StepperConfig(dt=sc.dt, crossing_tol=sc.crossing_tol,
                            max_bisections=sc.max_bisections)
    return compute_prc(params, sc.g_hco, P, w, n_phases, stepper=stepper,
                       kick_amplitude=sc.kick_amplitude,
                       kick_duration=sc.kick_duration, kick_time=sc.kick_time)


def write_prc_outputs(prc: PrcResult, out_dir: str) -> List[str]:
    lines = ["phase,shift,valid"]
    for sm in prc.samples:
        shift = f"{sm.shift:.9g}" if sm.valid else "nan"
        lines.append(f"{sm.phase:.9g},{shift},{int(sm.valid)}")
    _write_text(os.path.join(out_dir, "prc.csv"), lines)
    summary = {
        "period": prc.period, "P": prc.P, "w": prc.w,
        "n_phases": len(prc.samples),
        "n_valid": sum(1 for sm in prc.samples if sm.valid),
        "interburst_start": prc.interburst_start,
    }
    lines = ["key,value"]
    for k, v in summary.items():
        lines.append(f"{k},{_fmt(v)}")
    _write_text(os.path.join(out_dir, "summary.csv"), lines)
    return ["prc.csv", "summary.csv"]
