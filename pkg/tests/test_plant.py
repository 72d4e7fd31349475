import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuropend.numerics import rk4_step
from neuropend.plant import (PendulumState, PlantParams, SteadyState,
                             burst_energy, classify_steady_state,
                             mechanical_energy, motor_torque, pendulum_rhs,
                             rotations_per_segment)


def test_rhs_stable_equilibrium():
    assert pendulum_rhs(PendulumState(0.0, 0.0), 1.4, 0.0) == (0.0, 0.0)


def test_rhs_gravity_at_quarter_turn():
    dq, dqd = pendulum_rhs(PendulumState(math.pi / 2, 0.0), 1.4, 0.0)
    assert dq == 0.0
    assert dqd == pytest.approx(-1.0)


def test_rhs_hand_evaluated_point():
    dq, dqd = pendulum_rhs(PendulumState(0.0, 1.0), 0.14, 0.5)
    assert dq == 1.0
    assert dqd == pytest.approx(0.36)


def test_motor_torque_table():
    in_phase = PlantParams(motor_signs=(1.0, 1.0))
    anti = PlantParams(motor_signs=(1.0, -1.0))
    assert motor_torque(-1.0, -1.0, in_phase) == 0.0
    assert motor_torque(0.5, 0.5, in_phase) == pytest.approx(0.8)
    assert motor_torque(0.5, 0.5, anti) == pytest.approx(0.0)
    assert motor_torque(0.5, -1.0, anti) == pytest.approx(0.4)


def test_motor_torque_takes_at_most_four_values():
    params = PlantParams(motor_signs=(1.0, -1.0))
    values = {motor_torque(va, vb, params)
              for va in (-2.0, 1.0) for vb in (-2.0, 1.0)}
    assert len(values) <= 4


@settings(max_examples=60, deadline=None)
@given(q=st.floats(-3.0, 3.0), qd=st.floats(-2.5, 2.5),
       alpha=st.floats(0.0, 2.0))
def test_unforced_step_never_gains_energy(q, qd, alpha):
    # passivity: one RK4 step of the unforced plant, within tolerance
    def f(t, y):
        dq, dqd = pendulum_rhs(PendulumState(y[0], y[1]), alpha, 0.0)
        return np.array([dq, dqd])

    y0 = np.array([q, qd])
    y1 = rk4_step(y0, f, 1e-3)
    e0 = mechanical_energy(y0[0], y0[1])
    e1 = mechanical_energy(y1[0], y1[1])
    assert e1 <= e0 + 1e-8


def _uniform_onsets(t0, t1, n):
    return list(np.linspace(t0, t1, n))


def test_classify_small_oscillation():
    t = np.linspace(0, 100, 5001)
    q = 0.5 * np.sin(t)
    onsets = _uniform_onsets(5, 95, 15)
    assert classify_steady_state(t, q, onsets) is SteadyState.LOW_ENERGY


def test_classify_steady_rotation():
    t = np.linspace(0, 100, 5001)
    q = 1.3 * t
    onsets = _uniform_onsets(5, 95, 15)
    assert classify_steady_state(t, q, onsets) is SteadyState.HIGH_ENERGY


def test_classify_mixed_is_nonperiodic():
    t = np.linspace(0, 100, 5001)
    q = np.where(t < 50, 1.3 * t, 1.3 * 50 + 0.5 * np.sin(t))
    onsets = _uniform_onsets(5, 95, 15)
    assert classify_steady_state(t, q, onsets) is SteadyState.NONPERIODIC


def test_classify_insufficient_events_flagged():
    t = np.linspace(0, 10, 501)
    q = 0.5 * np.sin(t)
    assert classify_steady_state(t, q, [1.0, 2.0]) is SteadyState.INDETERMINATE


def test_classify_sign_flip_invariance():
    t = np.linspace(0, 100, 5001)
    onsets = _uniform_onsets(5, 95, 15)
    for q in (0.6 * np.sin(t), 1.1 * t):
        a = classify_steady_state(t, q, onsets)
        b = classify_steady_state(t, -q, onsets)
        assert a is b


def test_rotations_per_segment_counts_net_turns():
    t = np.linspace(0, 100, 10001)
    q = (4.0 * math.pi / 10.0) * t   # two turns every 10 time units
    onsets = _uniform_onsets(0, 100, 11)
    rots = rotations_per_segment(t, q, onsets)
    assert np.all(rots == 2)


def test_burst_energy_zero_torque():
    t = np.linspace(0, 10, 1001)
    out = burst_energy(t, np.ones_like(t), np.zeros_like(t), [1.0, 4.0, 7.0])
    assert out == [pytest.approx(0.0), pytest.approx(0.0)]


def test_burst_energy_constant_integrand():
    t = np.linspace(0, 10, 1001)
    out = burst_energy(t, np.ones_like(t), np.ones_like(t), [2.0, 5.5])
    assert out[0] == pytest.approx(3.5, abs=1e-9)


def test_burst_energy_sine_closed_form():
    t = np.arange(0.0, math.pi + 1e-9, 1e-3)
    out = burst_energy(t, np.sin(t), np.ones_like(t), [0.0, math.pi])
    assert out[0] == pytest.approx(2.0, abs=1e-4)


def test_burst_energy_needs_two_onsets():
    t = np.linspace(0, 10, 101)
    assert burst_energy(t, np.ones_like(t), np.ones_like(t), [3.0]) == []


def test_plant_params_validation():
    with pytest.raises(ValueError):
        PlantParams(alpha=-0.1)
    with pytest.raises(ValueError):
        PlantParams(motor_signs=(1.0, 0.5))
