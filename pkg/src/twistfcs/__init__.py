"""Full counting statistics of spin operators in the twisted XXX chain.

The FCS ``<psi| exp(Q^(ell)) |psi>`` is computed as a sum of determinant form
factors between eigenstates of two transfer matrices with different twists,
and checked against exact diagonalization.
"""
from .bethe import RapiditySet, SpectralLine, enumerate_spectrum, refine, solve_line, tq_solve
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    DimensionError,
    LinkingError,
    NonGenericError,
    NotOnShellError,
    SingularMatrixError,
    TQInconsistentError,
    TwistFCSError,
)
from .formfactor import FcsTable, fcs_sum, fcs_term, lambda_jacobian, lambda_eigenvalue, norm, norm_jacobian, slavnov_overlap
from .oracle import ChainConfig, fcs_direct, fcs_direct_values, transfer_eigen_data, transfer_matrix
from .twist import CountingSpec, MabaTwist, RhoData, Twist, solve_rho_link, tilde_twist

__all__ = [
    "ChainConfig",
    "ConfigError",
    "CountingSpec",
    "DimensionError",
    "FcsTable",
    "LinkingError",
    "MabaTwist",
    "NonGenericError",
    "NotOnShellError",
    "RapiditySet",
    "RhoData",
    "RunConfig",
    "SingularMatrixError",
    "SpectralLine",
    "TQInconsistentError",
    "Twist",
    "TwistFCSError",
    "enumerate_spectrum",
    "fcs_direct",
    "fcs_direct_values",
    "fcs_sum",
    "fcs_term",
    "lambda_eigenvalue",
    "lambda_jacobian",
    "load_config",
    "norm",
    "norm_jacobian",
    "refine",
    "slavnov_overlap",
    "solve_line",
    "solve_rho_link",
    "tilde_twist",
    "transfer_eigen_data",
    "transfer_matrix",
    "tq_solve",
]
