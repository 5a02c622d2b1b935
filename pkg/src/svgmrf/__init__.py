"""Sparse spatially-varying Gaussian Markov random field estimation.

Per-cluster precision matrices are estimated jointly by a decomposable
objective: squared deviation from a thresholded-inverse backward mapping,
an l1 sparsity penalty, and a weighted lq fusion penalty across cluster
pairs.  Every matrix coordinate solves independently, so the whole fit is a
batch of K-dimensional convex problems.
"""

from .covariance import (BackwardMapping, ClusterDataset, backward_mapping,
                         backward_mappings, sample_covariance,
                         sample_covariances, soft_threshold,
                         threshold_from_constant)
from .errors import (FormatError, InvalidArgumentError, NoValidModelError,
                     NotPositiveDefiniteError, SingularBackwardMappingError,
                     SolverFailureError, SvgmrfError)
from .evaluation import (IcDiagnostics, SupportMetrics,
                         check_irrepresentability, check_mutual_incoherence,
                         difference_support_metrics, estimation_errors,
                         incoherence_sweep, irrepresentability_sweep,
                         support_metrics)
from .pairs import (PairLabeling, StackedCoordinate, WeightGraph,
                    build_incidence, build_weight_diag, make_labeling,
                    stack_coordinate)
from .solver import (CoordinateProblem, PrecisionEstimate, batch_solve_q1,
                     batch_solve_q2, kkt_residual, solve_coordinate,
                     solve_coordinate_q1, solve_coordinate_q2, solve_svgmrf)
from .synthetic import (GroundTruth, SynthConfig, barabasi_albert_module,
                        build_cluster_tree, generate_ground_truth,
                        generate_instance, module_precision, perturb_child,
                        sample_dataset, sample_gaussian)
from .tuning import (BicReport, BicResult, HyperParams, bic_score,
                     estimate_weights, tune_parameters)

__version__ = "0.1.0"
