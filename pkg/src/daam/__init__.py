"""Capacity-aware control allocation for redundant propeller vehicles.

The package evaluates a drag-aware manipulability geometry on the rotor
spin-rate space, minimizes its log-det barrier cost along allocation fibers,
traces optimal sections over task grids with transition classification, and
verifies the invariance properties of the construction.
"""

from .errors import (
    AllSingularError,
    DaamError,
    InfeasibleDemandError,
    ModelParseError,
    ModelValidationError,
    SingularDaamError,
    SliceSpecError,
)
from .fiber import (
    FeasibleRegion,
    FiberChart,
    achievable_range,
    analytic_fiber_3x2,
    build_chart,
    chart_point,
    feasible_t_region,
)
from .invariance import (
    ArgminInvarianceReport,
    SingularSetReport,
    TaskTransform,
    expected_shift,
    transformed_cost,
    transformed_model,
    verify_argmin_invariance,
    verify_singular_set_invariance,
)
from .model import (
    DET_FLOOR,
    DaamEvaluation,
    RotorParams,
    VehicleModel,
    allocate,
    authority_rank,
    critical_spin,
    daam,
    effective_set,
    evaluate_spin_grid,
    grad_cost,
    gradient_sign_threshold,
    jacobian,
    sac,
    sac_vector,
    spin_to_thrust,
    thrust_to_spin,
    weight_matrix,
)
from .modelio import load_model, save_model
from .optimizer import (
    KktResult,
    Minimizer,
    SolveOptions,
    brute_force_on_fiber,
    kkt_check,
    minimize_on_fiber,
)
from .presets import CASE_A_SWEEPS, PRESETS, preset
from .section import (
    SectionTrace,
    SmoothnessProbe,
    TransitionEvent,
    classify_transition,
    smoothness_probe,
    trace_section,
)

__version__ = "0.1.0"

__all__ = [
    "AllSingularError",
    "ArgminInvarianceReport",
    "CASE_A_SWEEPS",
    "DET_FLOOR",
    "DaamError",
    "DaamEvaluation",
    "FeasibleRegion",
    "FiberChart",
    "InfeasibleDemandError",
    "KktResult",
    "Minimizer",
    "ModelParseError",
    "ModelValidationError",
    "PRESETS",
    "RotorParams",
    "SectionTrace",
    "SingularDaamError",
    "SingularSetReport",
    "SliceSpecError",
    "SmoothnessProbe",
    "SolveOptions",
    "TaskTransform",
    "TransitionEvent",
    "VehicleModel",
    "achievable_range",
    "allocate",
    "analytic_fiber_3x2",
    "authority_rank",
    "brute_force_on_fiber",
    "build_chart",
    "chart_point",
    "classify_transition",
    "critical_spin",
    "daam",
    "effective_set",
    "evaluate_spin_grid",
    "expected_shift",
    "feasible_t_region",
    "grad_cost",
    "gradient_sign_threshold",
    "jacobian",
    "kkt_check",
    "load_model",
    "minimize_on_fiber",
    "preset",
    "sac",
    "sac_vector",
    "save_model",
    "smoothness_probe",
    "spin_to_thrust",
    "thrust_to_spin",
    "trace_section",
    "transformed_cost",
    "transformed_model",
    "verify_argmin_invariance",
    "verify_singular_set_invariance",
    "weight_matrix",
]
