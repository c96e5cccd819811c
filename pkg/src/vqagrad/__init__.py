"""Exact π-shift gradients for variational quantum circuits.

Circuits are built from Pauli-string rotations ``exp(-i t P / 2)`` and fixed
gates.  Derivatives of the circuit unitary come from shifting one angle by π,
which gives exact gradients for any cost written in terms of ``U`` and ``U†``.
"""
__version__ = "0.1.0"

from .circuit import (  # noqa: E402
    ParamCircuit,
    PauliString,
    build_unitary,
    controlled,
    fixed_gate_library,
    load_circuit,
    rot,
    rotation_matrix,
    shift,
)
from .gradients import (  # noqa: E402
    CostFunctional,
    GradientReport,
    du_dtheta,
    dudag_dtheta,
    finite_difference,
    general_cost_gradient,
    gradient_descent,
    hs_cost,
    hs_exact_gradient,
    vqe_cost,
    vqe_parameter_shift,
)
from .subroutines import (  # noqa: E402
    EstimatorResult,
    ShotConfig,
    hadamard_test_term,
    hst_cost_and_gradient,
    hst_probability,
    ht_trace,
    one_design_trace,
)
