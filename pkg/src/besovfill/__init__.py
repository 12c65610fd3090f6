"""Hyperbolic fillings, Besov norms and Calderon products on sampled metric spaces."""

from ._validation import DomainError, FillingWarning, ParseError
from .calculus import (ConvergenceDiagnostics, discrete_convolution, edge_derivative,
                       integrate_edges, level_integral, poisson_extend, t_operator,
                       trace, vertex_derivative)
from .estimator import FillingTransformer
from .filling import (HyperbolicFilling, PartitionOfUnity, StructureReport,
                      build_filling, check_filling, greedy_net, load_filling,
                      partition_of_unity, save_filling)
from .interp import (FactorizationCertificate, calderon_factorize, calderon_verify,
                     factorization_error, interp_params)
from .norms import (HajlaszCheck, HajlaszGradient, NormParams, besov_norm,
                    dilated_measure, hajlasz_explicit_gradient, hajlasz_norm,
                    hajlasz_validate, quasi_triangle_constant, seq_norm_E, seq_norm_X,
                    tail_norm)
from .space import (DoublingEstimate, PointCloudSpace, ball_measure, estimate_doubling,
                    generate_space, load_point_cloud, parse_space_spec)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "FillingWarning", "ParseError",
    "PointCloudSpace", "DoublingEstimate", "load_point_cloud", "generate_space",
    "parse_space_spec", "ball_measure", "estimate_doubling",
    "HyperbolicFilling", "PartitionOfUnity", "StructureReport", "greedy_net",
    "build_filling", "check_filling", "partition_of_unity", "save_filling", "load_filling",
    "poisson_extend", "vertex_derivative", "edge_derivative", "discrete_convolution",
    "ConvergenceDiagnostics", "trace", "t_operator", "level_integral", "integrate_edges",
    "NormParams", "seq_norm_X", "seq_norm_E", "dilated_measure", "besov_norm",
    "tail_norm", "quasi_triangle_constant", "HajlaszGradient", "HajlaszCheck",
    "hajlasz_explicit_gradient", "hajlasz_validate", "hajlasz_norm",
    "FactorizationCertificate", "interp_params", "calderon_factorize",
    "calderon_verify", "factorization_error",
    "FillingTransformer",
]
