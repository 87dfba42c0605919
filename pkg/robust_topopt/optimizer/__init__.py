from .events import OptimizationEventListener
from .mma import MmaOptimizer, MmaState, mma_step
from .nominal import NominalResult, NominalSolver, OuterSettings, nominal_solve
from .problem import TopologyProblem
from .report import evaluate_report, relative_increase
from .robust import (
    CONTINUATION_MODES,
    RobustOptimizer,
    StageError,
    StaleInnerSolutionError,
    marginal_gradient,
    optimize,
)
