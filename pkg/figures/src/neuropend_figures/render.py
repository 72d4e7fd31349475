"""Render figure analogues from the simulator's CSV outputs.

Each figure id maps to a fixed set of input files (see INPUT_SIGNATURES) and
produces one deterministic SVG: fixed styling, a fixed hash salt for element
ids and no embedded timestamps, so re-rendering identical inputs yields a
byte-identical file.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "neuropend-figures"
plt.rcParams["figure.dpi"] = 100

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8",
              "fig9", "fig10")

# figure id -> (minimum input count, human-readable signature)
INPUT_SIGNATURES = {
    "fig2": (3, "trace.csv events.csv summary.csv of the free-pair run"),
    "fig3": (2, "trace.csv summary.csv of the configuration-switch run"),
    "fig4": (0, "no inputs (static architecture schematic)"),
    "fig5": (3, "trace.csv of the small, medium and large entrainment runs"),
    "fig6": (1, "sweep.csv of the gain sweep"),
    "fig7": (2, "summary.csv of the rotation run and of the libration run"),
    "fig8": (1, "prc.csv"),
    "fig9": (3, "trace.csv events.csv summary.csv of the phase-control run"),
    "fig10": (2, "gains.csv summary.csv pairs, one pair per run"),
}


class SchemaError(ValueError):
    """An input file does not match the expected column schema."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    inputs: Tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")
        need, sig = INPUT_SIGNATURES[self.figure_id]
        if len(self.inputs) < need:
            raise ValueError(
                f"{self.figure_id} needs at least {need} inputs: {sig}")
        for path in self.inputs:
            if not os.path.isfile(path):
                raise FileNotFoundError(path)


def _read_columns(path: str, required: Sequence[str]) -> Dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = list(reader)
    out: Dict[str, List[float]] = {c: [] for c in header}
    for row in rows:
        for c, value in zip(header, row):
            out[c].append(value)
    numeric: Dict[str, np.ndarray] = {}
    for c, values in out.items():
        try:
            numeric[c] = np.array([float(v) for v in values])
        except ValueError:
            numeric[c] = np.array(values, dtype=object)
    return numeric


def _read_summary(path: str) -> Dict[str, str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["key", "value"]:
            raise SchemaError(f"{path}: missing column 'key' or 'value'")
        return {row[0]: row[1] for row in reader if len(row) >= 2}


def _read_events(path: str):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header != ["time", "kind", "payload"]:
            raise SchemaError(f"{path}: missing column 'time', 'kind' or 'payload'")
        events = []
        for row in reader:
            payload = {}
            if len(row) > 2 and row[2]:
                for item in row[2].split(";"):
                    if "=" in item:
                        k, v = item.split("=", 1)
                        payload[k] = v
            events.append((float(row[0]), row[1], payload))
    return events


def _energy_series(summary: Dict[str, str]) -> np.ndarray:
    pairs = []
    for key, value in summary.items():
        if key.startswith("E_i."):
            pairs.append((int(key.split(".", 1)[1]), float(value)))
    pairs.sort()
    return np.array([v for _, v in pairs])


TRACE_REQUIRED = ("t", "q", "q_dot", "I", "v_A1", "v_B1", "v_A2", "v_B2")


def _save(fig, output: str) -> None:
    os.makedirs(os.path.dirname(output) or ".", exist_ok=True)
    fig.savefig(output, format="svg", metadata={"Date": None})
    plt.close(fig)


def _fig2(spec: FigureSpec) -> None:
    tr = _read_columns(spec.inputs[0], TRACE_REQUIRED)
    events = _read_events(spec.inputs[1])
    summary = _read_summary(spec.inputs[2])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 4.2), sharex=True)
    ax1.plot(tr["t"], tr["v_A1"], lw=0.7, label="v A")
    ax1.plot(tr["t"], tr["v_B1"], lw=0.7, label="v B")
    ax1.axhline(0.0, color="k", ls="--", lw=0.7)
    if "step_time" in summary:
        ax1.axvline(float(summary["step_time"]), color="k", ls=":", lw=0.8)
    ax1.set_ylabel("voltage")
    ax1.legend(loc="upper right", fontsize=8)
    ax2.plot(tr["t"], tr["I"], lw=0.8, color="tab:green")
    onsets = [t for t, kind, p in events
              if kind == "burst-onset" and p.get("neuron") == "A1"]
    if onsets:
        ax2.plot(onsets, [0.0] * len(onsets), "|", color="tab:red", ms=8)
    ax2.set_xlabel("time")
    ax2.set_ylabel("torque")
    ax1.set_title("free half-centre rhythm, burst size stepped mid-run")
    _save(fig, spec.output)


def _fig3(spec: FigureSpec) -> None:
    tr = _read_columns(spec.inputs[0], TRACE_REQUIRED)
    summary = _read_summary(spec.inputs[1])
    fig, axes = plt.subplots(3, 1, figsize=(7, 5.4), sharex=True)
    axes[0].plot(tr["t"], tr["I"], lw=0.7, color="tab:green")
    axes[0].set_ylabel("torque")
    axes[1].plot(tr["t"], tr["v_A1"], lw=0.7, label="v A1")
    axes[1].plot(tr["t"], tr["v_B1"], lw=0.7, label="v B1")
    axes[1].set_ylabel("pair 1")
    axes[2].plot(tr["t"], tr["v_A2"], lw=0.7, label="v A2")
    axes[2].plot(tr["t"], tr["v_B2"], lw=0.7, label="v B2")
    axes[2].set_ylabel("pair 2")
    axes[2].set_xlabel("time")
    if "switch_time" in summary:
        for ax in axes:
            ax.axvline(float(summary["switch_time"]), color="k", ls="--",
                       lw=0.8)
    axes[0].set_title("coupling sign switch: anti-phase to in-phase")
    _save(fig, spec.output)


def _fig4(spec: FigureSpec) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.0))
    ax.axis("off")

    def box(x, y, w, h, label):
        ax.add_patch(plt.Rectangle((x, y), w, h, fill=False, lw=1.0))
        ax.text(x + w / 2, y + h / 2, label, ha="center", va="center",
                fontsize=9)

    def arrow(x0, y0, x1, y1, label="", dashed=False):
        ax.annotate("", xy=(x1, y1), xytext=(x0, y0),
                    arrowprops=dict(arrowstyle="->", lw=0.9,
                                    ls="--" if dashed else "-"))
        if label:
            ax.text((x0 + x1) / 2, (y0 + y1) / 2 + 0.02, label,
                    ha="center", fontsize=8)

    box(0.04, 0.55, 0.2, 0.3, "half-centre\npair 1 (A1,B1)")
    box(0.04, 0.10, 0.2, 0.3, "half-centre\npair 2 (A2,B2)")
    box(0.38, 0.33, 0.16, 0.3, "motors\n(torque while\nv_A > v_th)")
    box(0.66, 0.33, 0.3, 0.3, "pendulum\nq'' + a q' + sin q = I")
    box(0.38, 0.72, 0.26, 0.22, "phase controller\n(pulses at q = q_p)")
    box(0.38, 0.02, 0.26, 0.22, "adaptive gains\n(events at q = 0, A_ref)")
    arrow(0.24, 0.70, 0.38, 0.52)
    arrow(0.24, 0.25, 0.38, 0.42)
    arrow(0.54, 0.48, 0.66, 0.48, "I")
    arrow(0.81, 0.63, 0.64, 0.80, "q = q_p", dashed=True)
    arrow(0.81, 0.33, 0.64, 0.16, "q = 0, A_ref", dashed=True)
    arrow(0.38, 0.78, 0.16, 0.58, "-P pulses", dashed=True)
    arrow(0.38, 0.10, 0.16, 0.38, "g adjust", dashed=True)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title("event-based control architecture")
    _save(fig, spec.output)


def _fig5(spec: FigureSpec) -> None:
    fig, axes = plt.subplots(3, 1, figsize=(7, 5.4), sharex=True)
    labels = ("small bursts", "medium bursts", "large bursts")
    for ax, path, label in zip(axes, spec.inputs, labels):
        tr = _read_columns(path, TRACE_REQUIRED)
        ax.plot(tr["t"], tr["q"], lw=0.8, label="q")
        ax.plot(tr["t"], tr["I"], lw=0.6, color="tab:green", alpha=0.7,
                label="I")
        ax.set_ylabel(label)
        ax.legend(loc="upper right", fontsize=7)
    axes[2].set_xlabel("time")
    axes[0].set_title("overdamped entrainment at three burst sizes")
    _save(fig, spec.output)


def _fig6(spec: FigureSpec) -> None:
    rows = _read_columns(spec.inputs[0],
                         ("neuron.g_s_minus", "neuron.g_us_plus", "amplitude"))
    gs = rows["neuron.g_s_minus"].astype(float)
    gu = rows["neuron.g_us_plus"].astype(float)
    amp = rows["amplitude"].astype(float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.4))
    for b in sorted(set(gu)):
        mask = gu == b
        order = np.argsort(gs[mask])
        ax1.plot(gs[mask][order], amp[mask][order], "o-", ms=3,
                 label=f"g_us+ = {b:g}")
    ax1.set_xlabel("g_s-")
    ax1.set_ylabel("amplitude (rad)")
    ax1.legend(fontsize=7)
    for a in sorted(set(gs)):
        mask = gs == a
        order = np.argsort(gu[mask])
        ax2.plot(gu[mask][order], amp[mask][order], "o-", ms=3,
                 label=f"g_s- = {a:g}")
    ax2.set_xlabel("g_us+")
    ax2.legend(fontsize=7)
    ax1.set_title("entrained amplitude over the gain grid")
    _save(fig, spec.output)


def _fig7(spec: FigureSpec) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.4), sharey=True)
    titles = ("rotation start", "libration start")
    for ax, path, title in zip(axes, spec.inputs, titles):
        summary = _read_summary(path)
        series = _energy_series(summary)
        if series.size == 0:
            raise SchemaError(f"{path}: missing column 'E_i.0'")
        ax.plot(np.arange(series.size), series, "o-", ms=3)
        amp = summary.get("amplitude")
        cls = summary.get("classification", "?")
        label = f"{cls}" + (f", amplitude {float(amp):.2f} rad" if amp else "")
        ax.set_title(f"{title}\n{label}", fontsize=9)
        ax.set_xlabel("event index")
    axes[0].set_ylabel("energy per event")
    _save(fig, spec.output)


def _fig8(spec: FigureSpec) -> None:
    rows = _read_columns(spec.inputs[0], ("phase", "shift", "valid"))
    phase = rows["phase"].astype(float)
    shift = rows["shift"].astype(float)
    valid = rows["valid"].astype(float) > 0.5
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(phase[valid], shift[valid], "o-", ms=4)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("pulse phase (fraction of period)")
    ax.set_ylabel("phase shift (periods, + = advance)")
    ax.set_title("phase response to one inhibitory pulse")
    _save(fig, spec.output)


def _fig9(spec: FigureSpec) -> None:
    tr = _read_columns(spec.inputs[0], TRACE_REQUIRED)
    events = _read_events(spec.inputs[1])
    summary = _read_summary(spec.inputs[2])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.4))
    ax1.plot(tr["t"], tr["q_dot"], lw=0.6, label="q'")
    pulses = [t for t, kind, _ in events if kind == "control-pulse"]
    if pulses:
        ax1.plot(pulses, [0.0] * len(pulses), "v", color="tab:purple", ms=5,
                 label="pulses")
    onsets = [t for t, kind, p in events
              if kind == "burst-onset" and p.get("neuron") == "A1"]
    if onsets:
        ax1.plot(onsets, [-0.4] * len(onsets), "|", color="tab:pink", ms=7,
                 label="actuation")
    ax1.set_xlabel("time")
    ax1.set_ylabel("angular velocity")
    ax1.legend(fontsize=7)
    series = _energy_series(summary)
    ax2.plot(np.arange(series.size), series, "o-", ms=3, color="tab:red")
    ax2.set_xlabel("event index")
    ax2.set_ylabel("energy per event")
    ax1.set_title("phase control capturing the rotation")
    _save(fig, spec.output)


def _fig10(spec: FigureSpec) -> None:
    if len(spec.inputs) % 2 != 0:
        raise ValueError("fig10 expects gains.csv/summary.csv pairs")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 4.6), sharex=True)
    for k in range(0, len(spec.inputs), 2):
        rows = _read_columns(spec.inputs[k],
                             ("time", "g_us_plus", "g_s_minus"))
        summary = _read_summary(spec.inputs[k + 1])
        label = summary.get("A_ref", f"run {k // 2}")
        if "A_ref" in summary:
            label = f"A_ref = {float(summary['A_ref']):g}"
        t = rows["time"].astype(float)
        ax1.step(t, rows["g_us_plus"].astype(float), where="post", lw=0.9,
                 label=label)
        ax2.step(t, rows["g_s_minus"].astype(float), where="post", lw=0.9,
                 label=label)
    ax1.set_ylabel("g_us+")
    ax2.set_ylabel("g_s-")
    ax2.set_xlabel("time")
    ax1.legend(fontsize=8)
    ax1.set_title("gains tuned by the adaptive regulator")
    _save(fig, spec.output)


_RENDERERS = {
    "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
    "fig6": _fig6, "fig7": _fig7, "fig8": _fig8, "fig9": _fig9,
    "fig10": _fig10,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    _RENDERERS[spec.figure_id](spec)
    return spec.output
