"""Two-stage active-set method for bound-constrained minimization."""

from .activeset import (
    ActiveSetPartition,
    EpsilonState,
    MultiplierEstimates,
    active_set_step,
    epsilon_safeguard,
    estimate,
    multipliers,
    partition_stationarity_check,
    stationarity_measure,
)
from .bench import MetricsTable, ProfileCurve, performance_profile, projected_gradient_solve, run_suite
from .direction import DirectionInfo, ForcingSchedule, enforce_gradient_related, reduced_newton
from .driver import SolveReport, SolverConfig, Status, solve
from .nonmonotone import ReferenceMemory, armijo_nonmonotone, init_memory, push_checkpoint
from .problem import BoxBounds, EvalCounters, ObjectiveModel, ProblemInstance, hessvec_fd, project
from .problems import builtin, generate_random_qp, load_qp

__version__ = "0.1.0"
