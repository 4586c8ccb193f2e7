"""Event-triggered Kalman estimation of a network average over a simulated,
delay-injecting message bus."""
from ._backend import BACKEND
from .consensus import (ConsensusState, averaging_matrix, consensus_step, integrate,
                        steady_state_gain)
from .estimator import (EtkfModel, EtkfState, consensus_realization,
                        discretize_process_noise, inflate_measurement_covariance,
                        initial_state, matrix_exponential, measurement_update, project_ahead)
from .graph import (CommGraph, build_graph, degrees, is_balanced, is_connected, laplacian,
                    ring_graph)
from .netsim import MessageBus
from .scenario import ScenarioConfig, paper_scenario, run_scenario
from .sod import EventMessage, SodGate, evaluate, held_value_bounds
from .trace import TraceLog, compute_metrics, measurement_error_series

__version__ = "0.1.0"
