"""Forward and inverse quantum scattering on the half-line.

Forward direction: sampled potential -> Jost field, bound states, norming
constants, S-matrix, phase shift, transformation kernel.  Inverse direction:
scattering data -> Marchenko input F -> transformation kernel A -> potential,
together with every reverse arrow (A -> F, F -> data, A -> data), a scalar
Riemann-problem reconstruction of the Jost function from S(k), and a
validator for the characterization conditions on scattering data.
"""

from .characterize import ConditionThresholds, full_report
from .forward import ForwardResult, jost_boundary, kernel_from_potential, s_matrix
from .marchenko import (
    InversionConfig,
    build_F,
    data_from_kernel,
    extract_data_from_F,
    f_from_kernel,
    invert,
    solve_marchenko,
)
from .model import (
    BoundState,
    ConditionEntry,
    JostField,
    MarchenkoInput,
    MomentumGrid,
    Potential,
    RadialGrid,
    ScatteringData,
    TransformationKernel,
    UniformGrid,
    ValidationReport,
    l11_moment,
    validate_scattering_data,
)
from .riemann import RiemannSolution, solve_riemann, verify_factorization

__all__ = [
    "BoundState",
    "ConditionEntry",
    "ConditionThresholds",
    "ForwardResult",
    "InversionConfig",
    "JostField",
    "MarchenkoInput",
    "MomentumGrid",
    "Potential",
    "RadialGrid",
    "RiemannSolution",
    "ScatteringData",
    "TransformationKernel",
    "UniformGrid",
    "ValidationReport",
    "build_F",
    "data_from_kernel",
    "extract_data_from_F",
    "f_from_kernel",
    "full_report",
    "invert",
    "jost_boundary",
    "kernel_from_potential",
    "l11_moment",
    "s_matrix",
    "solve_marchenko",
    "solve_riemann",
    "validate_scattering_data",
    "verify_factorization",
]

__version__ = "0.1.0"
