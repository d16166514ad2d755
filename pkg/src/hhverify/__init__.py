"""Numerical verification of operator Hermite-Hadamard inequalities for
operator preinvex functions, on finite-dimensional Hermitian matrices."""

from .functions import ScalarFunction, SignError, parse_function
from .hermitian import (ConvergenceError, DimensionError, DomainError, HermitianMatrix, Interval,
                        LoewnerVerdict, NotHermitianError, SpectralDecomposition, apply_function,
                        decompose, jacobi_eigh, loewner_leq, operator_norm, spectrum_in)
from .hh import (classical_reductions, corollary_gap, hh_chain, operator_line_integral,
                 product_ineq_left, product_ineq_right, trapezoid_bound)
from .invex import (EtaMap, EtaPath, OperatorSet, check_condition_c, check_invex_closure, eta_path,
                    eval_eta, path_point, random_hermitian_in, random_unitary)
from .preinvex import (PreinvexityReport, SamplingError, check_operator_preinvex, check_phi_convex,
                       equivalence_check, phi_scalar)
from .quadrature import QuadratureError, QuadratureScheme

__version__ = "0.1.0"

__all__ = ["__version__", "ScalarFunction", "SignError", "parse_function", "ConvergenceError",
           "DimensionError", "DomainError", "HermitianMatrix", "Interval", "LoewnerVerdict",
           "NotHermitianError", "SpectralDecomposition", "apply_function", "decompose",
           "jacobi_eigh", "loewner_leq", "operator_norm", "spectrum_in", "classical_reductions",
           "corollary_gap", "hh_chain", "operator_line_integral", "product_ineq_left",
           "product_ineq_right", "trapezoid_bound", "EtaMap", "EtaPath", "OperatorSet",
           "check_condition_c", "check_invex_closure", "eta_path", "eval_eta", "path_point",
           "random_hermitian_in", "random_unitary", "PreinvexityReport", "SamplingError",
           "check_operator_preinvex", "check_phi_convex", "equivalence_check", "phi_scalar",
           "QuadratureError", "QuadratureScheme"]
