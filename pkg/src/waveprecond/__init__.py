"""Wavelet-preconditioned linear systems for periodic elliptic PDEs, plus a
small statevector simulator for the corresponding quantum solution-state
circuits."""

from waveprecond.fdm import (
    OperatorSpec,
    DiscretizedSystem,
    discretize_1d,
    discretize_2d_laplacian,
    rescale_to_unit_norm,
    build_rhs,
    discretize,
)
from waveprecond.dwt import (
    WaveletSpec,
    TransformMatrix,
    filter_coefficients,
    build_transform_matrix,
    transform_dD,
    wavelet_from_name,
)
from waveprecond.precond import (
    Preconditioner,
    PreconditionedSystem,
    build_preconditioner,
    precondition,
    condition_number,
    sweep_condition_numbers,
)

from waveprecond.qsim import Circuit, Gate, StateVector
from waveprecond.blockenc import BlockEncoding
from waveprecond.qmi import QmiConfig, build_qmi
from waveprecond.solver import amplify, build_solution_pipeline, end_to_end_expectation, pipeline_problem
from waveprecond.observable import SparseObservable, ExtendedObservable, expectation, extend
from waveprecond.polyapprox import inverse_series, matrix_inverse_polynomial, step_polynomial

__version__ = "0.1.0"
