"""Layout of the coupled state vector and named observables over it.

The full state is a flat float64 vector of length 14:

    index 0      q       pendulum angle (unwrapped)
    index 1      q_dot   angular velocity
    index 2+3*i  v       neuron i membrane voltage
    index 3+3*i  v_s     neuron i slow filtered voltage
    index 4+3*i  v_us    neuron i ultra-slow filtered voltage

with neurons ordered A1, B1, A2, B2.
"""
from __future__ import annotations

import math

import numpy as np

Q = 0
QDOT = 1
NEURON_IDS = ("A1", "B1", "A2", "B2")
N_NEURONS = 4
STATE_DIM = 2 + 3 * N_NEURONS


def neuron_index(neuron_id: str) -> int:
    try:
        return NEURON_IDS.index(neuron_id)
    except ValueError:
        raise KeyError(f"unknown neuron id {neuron_id!r}") from None


def v_index(neuron_id: str) -> int:
    return 2 + 3 * neuron_index(neuron_id)


def vs_index(neuron_id: str) -> int:
    return 3 + 3 * neuron_index(neuron_id)


def vus_index(neuron_id: str) -> int:
    return 4 + 3 * neuron_index(neuron_id)


def wrap_angle(q: float) -> float:
    """Map an unwrapped angle onto [-pi, pi)."""
    return (q + math.pi) % (2.0 * math.pi) - math.pi


def observable_value(name: str, state: np.ndarray) -> float:
    """Evaluate a named scalar observable on a state vector.

    Recognized names: ``q``, ``q_dot``, ``q_wrapped``, ``v:<id>``,
    ``vs:<id>``, ``vus:<id>`` and generic ``x<k>`` coordinate access.
    """
    if name == "q":
        return float(state[Q])
    if name == "q_dot":
        return float(state[QDOT])
    if name == "q_wrapped":
        return wrap_angle(float(state[Q]))
    if name.startswith("v:"):
        return float(state[v_index(name[2:])])
    if name.startswith("vs:"):
        return float(state[vs_index(name[3:])])
    if name.startswith("vus:"):
        return float(state[vus_index(name[4:])])
    if name.startswith("x") and name[1:].isdigit():
        return float(state[int(name[1:])])
    raise KeyError(f"unknown observable {name!r}")


def is_wrapped(name: str) -> bool:
    return name == "q_wrapped"
