from .barrier import (
    BarrierAdversaryImpl,
    BarrierConfig,
    InnerSolverError,
    KktResidual,
    WorstCaseAdversary,
    kkt_residual,
    solve_worst_case,
    solve_worst_case_tikhonov,
)
from .continuation import ContinuationResult, RampContinuationAdversary, direct_linear_worst_case, ramp_continuation
from .probe import ProbeResult, concavity_probe, hessian_form
