"""Trust-weighted secure LQR control of a sensor-networked linear plant.

A bank of leave-one-out Kalman filters cross-checks every sensor against
the others' predictions, Bayesian suspicious levels accumulate the
evidence, and the LQR controller drives the plant from a trust-weighted
state estimate.  The cli module reproduces the detection and cost
experiments from shipped recipe specs.
"""

__version__ = "0.1.0"

from .controller import LqrConfig, LqrSolution, act, running_cost, solve_dare, weighted_estimate
from .estimator import FilterBank, FilterState, PredictiveDistribution, predict, predictive_for_sensor, update
from .linsys import (
    ContinuousCaseStudy,
    LinearSystemModel,
    PlantState,
    build_case_study,
    load_model,
    observe,
    save_model,
    step,
)
from .sim import ExperimentResult, SimConfig, SlotRecord, run, run_batch
from .threat import AttackerConfig, corrupt
from .trust import TrustState, compute_pi, detect, slot_update

__all__ = [
    "__version__",
    "AttackerConfig",
    "ContinuousCaseStudy",
    "ExperimentResult",
    "FilterBank",
    "FilterState",
    "LinearSystemModel",
    "LqrConfig",
    "LqrSolution",
    "PlantState",
    "PredictiveDistribution",
    "SimConfig",
    "SlotRecord",
    "TrustState",
    "act",
    "build_case_study",
    "compute_pi",
    "corrupt",
    "detect",
    "load_model",
    "observe",
    "predict",
    "predictive_for_sensor",
    "run",
    "run_batch",
    "running_cost",
    "save_model",
    "slot_update",
    "solve_dare",
    "step",
    "update",
    "weighted_estimate",
]
