"""Matrix-barrier safety filtering: LMI constraint builders, the minimal-deviation
conic-program filter, and a connectivity-maintenance / obstacle-avoidance simulator."""

from .barrier import (ClassKe, LmiConstraint, MatrixBarrierEval, ScalarBarrierEval,
                      build_exponential_sd, build_general, build_indefinite,
                      build_smallest_eig, diag_from_scalars, restrict_lmi,
                      scalar_to_halfspace)
from .config import RunConfig, from_dict, load_config, validate_dict
from .errors import (ConfigError, DimensionError, DuplicatePinError, EmptyCompositionError,
                     EmptyTraceError, NumericalFailure, PortInUse, SolverHalt,
                     ZeroGradientError)
from .scenarios import (ConnectivityParams, ObstacleSpec, SwarmState, adjacency,
                        baseline_eigenvalue_filter, collision_barriers,
                        connectivity_barrier, connectivity_scenario, five_agent_references,
                        in_range_pairs, laplacian, nominal_tracking, obstacle_barrier,
                        obstacle_scenario, ones_complement_basis)
from .sdp import (FilterProblem, FilterSolution, ResidualReport, SolveStatus,
                  SolverSettings, assemble, closed_form_single_scalar, solve,
                  verify_solution)
from .sim import SimConfig, Trace, TraceRecord, metrics, run, step
from .symmat import EigenDecomposition, SymMatrix, apply_classK_matrix, eig_sym, frobenius, is_psd

__version__ = "0.1.0"
