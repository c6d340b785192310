"""stabkit: simulate adaptive-control benchmark systems, falsification-check
their Lyapunov-like certificates, and measure output-stability notions
empirically."""

from .ode_core import (
    DisturbanceSignal,
    IntegratorConfig,
    Trajectory,
    integrate,
    evaluate_signal,
    sup_norm,
)
from .systems import (
    DynamicalSystem,
    ClosedFormAdaptiveScalar,
    closed_form_solution,
    build_system,
    system_ids,
)
from .certificates import (
    CertificateReport,
    ComparisonFunction,
    Region,
    SamplingPlan,
    ScalarField,
    comparison,
    scalar_field,
)
from .controllers import (
    AdaptiveController,
    ClosedLoop,
    build_loop,
    make_deadzone_controller_loop,
    make_high_gain_loop,
    make_matching_condition_loop,
    make_sigma_mod_loop,
    sigma_mod_equilibria,
)
from .estimators import (
    EnsembleSpec,
    StabilityEstimate,
    detect_gain_drift,
    estimate_gain_curve,
    estimate_output_envelope,
    estimate_settling_table,
    estimate_state_bound,
    estimate_tail_limsup,
)

__version__ = "0.1.0"
