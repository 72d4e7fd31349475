import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuropend.neurons import (Coupling, CurrentSchedule, NetworkSpec,
                               NeuronParams, NeuronState, SynapseSpec,
                               build_network, burst_periods, burst_sizes,
                               detect_bursts, kick_start, network_rhs,
                               neuron_rhs, switch_configuration,
                               synapse_current)

DEFAULTS = NeuronParams()


# --- synapse_current ----------------------------------------------------------


def test_synapse_midpoint():
    assert synapse_current(1.0, -1.0) == pytest.approx(0.5)


def test_synapse_saturation():
    assert synapse_current(-2.0, 60.0) == pytest.approx(-2.0, abs=1e-12)


def test_synapse_high_precision_point():
    # 1 / (1 + e^-2), evaluated independently at high precision
    assert synapse_current(1.0, 0.0) == pytest.approx(0.8807970779778823,
                                                      abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(v=st.floats(-10, 8), dv=st.floats(1e-3, 5.0))
def test_synapse_strictly_increasing_for_excitatory(v, dv):
    # domain bounded where the sigmoid's growth is resolvable in float64
    assert synapse_current(1.3, v + dv) > synapse_current(1.3, v)


@settings(max_examples=100, deadline=None)
@given(g=st.floats(-3, 3), v=st.floats(-50, 50))
def test_synapse_bounded_and_sign_respecting(g, v):
    cur = synapse_current(g, v)
    lo, hi = sorted((0.0, g))
    assert lo <= cur <= hi


# --- neuron_rhs ---------------------------------------------------------------


def test_offset_terms_cancel_at_equal_gains():
    params = NeuronParams(g_s_minus=1.7, g_us_plus=1.7)
    state = NeuronState(v=0.0, v_s=0.0, v_us=0.0)
    dv, _, _ = neuron_rhs(state, params, i_syn=0.0, i_app=-1.0)
    assert dv == pytest.approx(-1.0 / params.tau_f)


def test_slow_filter_definition():
    state = NeuronState(v=1.0, v_s=0.0, v_us=0.0)
    _, dvs, _ = neuron_rhs(state, DEFAULTS, 0.0, -1.0)
    assert dvs == pytest.approx(1.0 / DEFAULTS.tau_s)


def test_full_rhs_against_frozen_oracle():
    # independent high-precision evaluation of the three formulas at the
    # default gains, state (0.2, -0.5, -0.8), i_syn = 0, i_app = -1
    state = NeuronState(v=0.2, v_s=-0.5, v_us=-0.8)
    dv, dvs, dvus = neuron_rhs(state, DEFAULTS, 0.0, -1.0)
    assert dv == pytest.approx(-16.957539026518821, rel=1e-12)
    assert dvs == pytest.approx(2.3333333333333333, rel=1e-12)
    assert dvus == pytest.approx(0.14285714285714286, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        NeuronParams(tau_f=0.5, tau_s=0.3)
    with pytest.raises(ValueError):
        NeuronParams(g_s_minus=-0.1)


# --- network wiring -----------------------------------------------------------


def test_in_phase_topology_counts():
    net = build_network(Coupling.IN_PHASE, DEFAULTS, 1.5, 0.3)
    signs = [s.g_syn for s in net.synapses]
    assert len(signs) == 8
    assert sum(1 for g in signs if g < 0) == 4
    assert sum(1 for g in signs if g > 0) == 4


def test_anti_phase_topology_counts():
    net = build_network(Coupling.ANTI_PHASE, DEFAULTS, 1.5, 0.3)
    assert all(s.g_syn < 0 for s in net.synapses)


def test_intra_pairs_identical_between_configurations():
    def intra(net):
        return {(s.pre, s.post, s.g_syn) for s in net.synapses
                if {s.pre[0], s.post[0]} == {"A", "B"}}
    a = build_network(Coupling.IN_PHASE, DEFAULTS, 1.5, 0.3)
    b = build_network(Coupling.ANTI_PHASE, DEFAULTS, 1.5, 0.3)
    assert intra(a) == intra(b)


def test_switch_configuration_flips_and_restores():
    net = build_network(Coupling.ANTI_PHASE, DEFAULTS, 1.5, 0.3)
    flipped = switch_configuration(net)
    assert flipped.configuration is Coupling.IN_PHASE
    assert switch_configuration(flipped) == net


def test_network_spec_rejects_wrong_signs():
    syn = (SynapseSpec("A1", "B1", 0.5),)
    with pytest.raises(ValueError):
        NetworkSpec(params=DEFAULTS, synapses=syn,
                    configuration=Coupling.IN_PHASE, g_hco=0.5, g_cross=0.3)


def test_synapse_spec_rejects_self_and_unknown():
    with pytest.raises(ValueError):
        SynapseSpec("A1", "A1", 0.5)
    with pytest.raises(ValueError):
        SynapseSpec("A1", "C3", 0.5)


def _rest_states(v=-1.0):
    return {nid: NeuronState(v, v, v) for nid in ("A1", "B1", "A2", "B2")}


def test_network_rhs_decouples_without_synapses():
    net = NetworkSpec(params=DEFAULTS, synapses=(),
                      configuration=Coupling.IN_PHASE, g_hco=1.0, g_cross=0.3)
    states = {"A1": NeuronState(0.1, -0.2, -0.4),
              "B1": NeuronState(-1.0, -1.0, -1.0),
              "A2": NeuronState(0.5, 0.2, -0.1),
              "B2": NeuronState(-2.0, -1.5, -1.2)}
    iapp = {nid: -1.0 for nid in states}
    out = network_rhs(states, net, iapp)
    for nid, state in states.items():
        assert out[nid] == neuron_rhs(state, DEFAULTS, 0.0, -1.0)


def test_network_rhs_mirror_symmetry():
    net = build_network(Coupling.IN_PHASE, DEFAULTS, 1.5, 0.3)
    states = {"A1": NeuronState(0.3, -0.1, -0.6),
              "B1": NeuronState(-1.7, -1.2, -0.9),
              "A2": NeuronState(0.3, -0.1, -0.6),
              "B2": NeuronState(-1.7, -1.2, -0.9)}
    iapp = {nid: -1.0 for nid in states}
    out = network_rhs(states, net, iapp)
    assert out["A1"] == out["A2"]
    assert out["B1"] == out["B2"]


def test_network_rhs_singleton_synapse_current():
    syn = (SynapseSpec("A1", "B1", -0.7),)
    net = NetworkSpec(params=DEFAULTS, synapses=syn,
                      configuration=Coupling.IN_PHASE, g_hco=0.7, g_cross=0.3)
    states = _rest_states()
    states["A1"] = NeuronState(0.2, 0.4, -0.3)
    iapp = {nid: -1.0 for nid in states}
    out = network_rhs(states, net, iapp)
    expected_syn = synapse_current(-0.7, 0.4)
    assert out["B1"] == neuron_rhs(states["B1"], DEFAULTS, expected_syn, -1.0)


# --- current schedule ---------------------------------------------------------


def test_kick_start_zero_amplitude_is_nominal_everywhere():
    sched = kick_start(CurrentSchedule(-1.0), "A1", 0.0, 1.0, 2.0)
    for t in (0.0, 2.5, 10.0):
        assert all(v == -1.0 for v in sched.currents_at(t).values())


def test_kick_start_window_and_return_to_nominal():
    sched = kick_start(CurrentSchedule(-1.0), "B2", 2.5, 0.5, 1.0)
    during = sched.currents_at(1.2)
    assert during["B2"] == pytest.approx(-1.0 + 2.5)
    assert during["A1"] == -1.0
    after = sched.currents_at(1.6)
    assert all(v == -1.0 for v in after.values())
    assert sched.change_times() == [1.0, 1.5]


# --- burst detection ----------------------------------------------------------


def test_detect_bursts_empty_and_flat():
    assert detect_bursts([], [], 0.0) == []
    t = np.linspace(0, 10, 101)
    assert detect_bursts(t, np.full_like(t, -1.0), 0.0) == []


def test_detect_bursts_square_wave():
    # +-1 square wave, 2 time units per half period
    t = np.linspace(0, 16, 1601)
    v = np.where((t // 2) % 2 == 1, 1.0, -1.0)
    bursts = detect_bursts(t, v, 0.0)
    sizes = burst_sizes(bursts)
    assert len(bursts) == 4
    assert np.allclose(sizes, 2.0, atol=0.02)
    assert np.allclose(burst_periods(bursts), 4.0, atol=0.02)


def test_detect_bursts_requires_ordered_trace():
    with pytest.raises(ValueError):
        detect_bursts([0.0, 1.0, 0.5], [0.0, 1.0, 0.0], 0.0)
