"""Stability experiments for flows of rough vector fields.

Thin wrapper around the compiled ``_core`` module.
"""

from ._core import (  # noqa: F401
    ExperimentSettings,
    FlowEnsemble,
    GridFunction,
    Integrator,
    LabError,
    VectorField,
    check_maximal_lp_bound,
    check_pointwise_bv,
    check_trajectory_confinement,
    compute_delta,
    constant_field,
    contraction_field,
    estimate_compressibility,
    flow_lp_difference,
    integrate_ensemble,
    integrate_points,
    load_sampled_field,
    local_maximal_function,
    log_functional_g,
    lp_norm_weighted,
    make_perturbation,
    rotation_field,
    shear_field,
    sweep_epsilon,
    verify_main_estimate,
)

__version__ = "0.1.0"
