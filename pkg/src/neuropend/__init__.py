"""neuropend: event-based neuromorphic control of a damped pendulum.

A four-neuron controller (two half-centre oscillators) drives two motors
that kick a damped pendulum; photodetector-style angle sensors feed a
proportional phase controller and an event-triggered adaptive regulator.
"""

from .config import ConfigError, Scenario
from .control import (AdaptiveConfig, AdaptiveController, PhaseControlConfig,
                      PhaseController, PulseScheduler, compute_prc)
from .engine import SimulationTrace, Simulator, rest_state
from .harness import (list_scenarios, load_scenario, run_prc, run_scenario,
                      run_sweep, write_outputs)
from .neurons import (Coupling, CurrentSchedule, NetworkSpec, NeuronParams,
                      NeuronState, SynapseSpec, build_network, detect_bursts,
                      kick_start, network_rhs, neuron_rhs, synapse_current)
from .numerics import (Crossing, CrossingSpec, Direction, SimulationFault,
                       StepperConfig, locate_crossing, rk4_step)
from .plant import (PendulumState, PlantParams, SteadyState, burst_energy,
                    classify_steady_state, mechanical_energy, motor_torque,
                    pendulum_rhs)
from .sensing import (Event, EventLog, SensorBank, estimate_amplitude,
                      estimate_frequency, scan_events)

__version__ = "0.1.0"
