"""Thermodynamics with multiple conserved charges."""
from .core import (
    ChargeSet,
    DensityMatrix,
    HermitianOperator,
    commutator_norm,
    entropy,
    expectation,
    gge_state,
    gibbs_state,
    log_partition,
    mutual_information,
    partial_trace,
    relative_entropy,
    spin_operators,
    tensor,
    trace_distance,
)
from .errors import (
    DegenerateChargesError,
    GGEThermoError,
    InfeasibleTargetsError,
    MaxIterationsError,
    SolverError,
)
from .landauer import (
    analytic_erasure_costs,
    discrete_spin_bath_cost,
    simulate_erasure_protocol,
    tradeoff_curve,
    verify_landauer,
)
from .maxent import BlochMapSpec, GGESolution, choi, cp_boundary_scan, is_completely_positive, maxent_project, solve_gge
from .passivity import (
    check_cmu_complete_passivity,
    commutant_intersection,
    ergotropy,
    free_energy,
    is_n_copy_passive,
    is_passive,
    n_copy_ergotropy,
)
from .thermal_ops import ThermalOpSpec, apply_thermal_operation, conservation_residuals, is_member

__version__ = "0.1.0"
