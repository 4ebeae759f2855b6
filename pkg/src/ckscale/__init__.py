"""Cauchy-Kowalewski problems on scales of weighted power-series spaces."""
from .constants import (ConstantsEstimate, ConvexityReport, SamplingPlan,
                        check_convexity, estimate_constants, estimate_K,
                        estimate_M)
from .errors import (ConfigurationError, DomainError, FrameViolation,
                     StructuralError)
from .operators import (ARG_U, ARG_V, Add, ArgU, ArgV, Const, Dx, Mul,
                        OperatorExpr, ProblemSpec, TimeScale, evaluate_A,
                        evaluate_h)
from .oracles import TimeTaylorSolution, exact_transport, heat_probe, taylor_ck
from .problemfile import (ProblemFile, ProblemFileError, RunSettings,
                          parse_problem, serialize_problem)
from .scale import (AnalyticElement, ScaleIndex, cauchy_product, derivative,
                    norm, truncate)
from .solver import (ExistenceFrame, ScalePath, SeminormGrid, SetSReport,
                     SolverConfig, SolverReport, apply_F, bound_kn,
                     build_frame, check_S, compute_a, kn_integral, solve_picard,
                     tau_max, verify_kn)

__version__ = "0.1.0"
