"""Failure-inducing test-input minimization workbench for elevator dispatching.

A deterministic multi-car elevator simulator with seedable dispatcher
faults serves as the system under test; reduction algorithms shrink
failing passenger traces under a severity-threshold oracle.
"""

__version__ = "0.1.0"

from .trace import Passenger, TestInput, TrafficSpec, generate_trace, load_test_input, save_test_input  # noqa: F401
from .sim import BuildingConfig, CarSpec, Checkpoint, FaultConfig, SimOutcome, execute_test, detect_static_states, checkpoint_from  # noqa: F401
from .oracle import OracleConfig, Requirement, Verdict, judge, make_reference, severity  # noqa: F401
from .reduce import ReductionContext, ReductionResult, backward, dd_event, dd_time, ewdd, prepare_context, run_algorithm  # noqa: F401
from .metrics import Scenario, TirrReport, a12, run_comparison, tirr_ft  # noqa: F401
