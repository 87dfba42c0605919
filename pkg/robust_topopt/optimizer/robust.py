import logging
from dataclasses import replace
from typing import List, Optional

import numpy as np

from robust_topopt.adversary.barrier import (
    TIKHONOV_MU_FLOOR,
    BarrierAdversaryImpl,
    BarrierConfig,
    WorstCaseAdversary,
)
from robust_topopt.adversary.continuation import RampContinuationAdversary
from robust_topopt.fe.solver import FeModel
from robust_topopt.filtering import FilterSpec
from robust_topopt.material import MaterialParams
from robust_topopt.models import DesignField, InnerSolution, OuterIteration, RunResult
from robust_topopt.optimizer.events import OptimizationEventListener
from robust_topopt.optimizer.mma import MmaOptimizer
from robust_topopt.optimizer.nominal import NominalResult, NominalSolver, OuterSettings
from robust_topopt.optimizer.problem import TopologyProblem
from robust_topopt.uncertainty.sets import UncertaintySet

log = logging.getLogger(__name__)

CONTINUATION_MODES = ("off", "check", "optimize")


class StaleInnerSolutionError(ValueError):
    """The adversary solution is not accurate enough to differentiate the marginal function"""


class StageError(RuntimeError):
    """
    A stage of the optimization failed; ``design`` is the last good iterate
    """

    def __init__(self, stage: str, design: Optional[DesignField], cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.design = design
        self.cause = cause


def marginal_gradient(design: DesignField, inner: InnerSolution, uncertainty_set: UncertaintySet,
                      params: MaterialParams, filter_spec: FilterSpec, model: FeModel,
                      tolerance: Optional[float] = 1e-6) -> np.ndarray:
    """
    Gradient of the worst-case compliance with respect to the unfiltered density.

    At an optimal adversary solution the state and degradation sensitivities vanish, so
    only the explicit dependence on the filtered density remains:
    ``-p rho~^(p-1) E(delta*) u*^T K_e u* - multipliers @ dg/drho~``, then the filter transpose.

    Parameters
    ----------
    tolerance:
        Largest accepted stationarity or feasibility residual of ``inner``,
        None skips the check (local maxima of the continuation)
    """
    if tolerance is not None:
        worst = max(inner.residuals.stationarity, inner.residuals.primal)
        if not (inner.converged or inner.acceptable) or worst > tolerance:
            raise StaleInnerSolutionError(f"inner residual {worst:.3e} above tolerance {tolerance:.1e} "
                                          f"(converged={inner.converged}, acceptable={inner.acceptable})")
    rho_filtered = design.rho_filtered
    if inner.delta.shape != rho_filtered.shape:
        raise ValueError("inner solution and design have different sizes")

    p = params.p
    energies = model.element_energies(inner.u)
    grad = -p * np.power(rho_filtered, p - 1) * inner.law.young(inner.delta) * energies
    if np.any(inner.multipliers != 0):
        grad -= inner.multipliers @ uncertainty_set.budget_grad_rho(rho_filtered, inner.delta)
    return filter_spec.chain_transpose(grad)


class RobustOptimizer:
    """
    Minimizes the worst-case compliance: every design update is preceded by an adversary solve
    on the current design, warm-started from the previous one.
    """

    log = logging.getLogger("RobustOptimizer")

    def __init__(self, problem: TopologyProblem, uncertainty_set: UncertaintySet, barrier: BarrierConfig,
                 settings: OuterSettings, continuation_mode: str = "off", continuation_steps: int = 10,
                 epsilon: Optional[float] = None, listeners: Optional[List[OptimizationEventListener]] = None):
        """
        Parameters
        ----------
        continuation_mode:
            ``optimize`` runs the ramp continuation inside every outer iteration and differentiates
            its linear-law stage; ``off`` and ``check`` use the inverse law
        epsilon:
            Tikhonov weight of the adversary objective, None for the plain problem
        """
        if continuation_mode not in CONTINUATION_MODES:
            raise ValueError(f"Unknown continuation mode: {continuation_mode}")
        if epsilon is not None and not epsilon > 0:
            raise ValueError(f"Tikhonov weight must be > 0, got {epsilon}")
        self.problem = problem
        self.uncertainty_set = uncertainty_set
        self.barrier = barrier
        self.settings = settings
        self.continuation_mode = continuation_mode
        self.continuation_steps = continuation_steps
        self.epsilon = epsilon
        self.listeners = listeners if listeners is not None else []
        self.adversary = self._make_adversary()

    def _make_adversary(self) -> WorstCaseAdversary:
        epsilon = self.epsilon or 0.0
        barrier = self.barrier
        if self.epsilon is not None:
            barrier = replace(barrier, mu_target=min(barrier.mu_target, TIKHONOV_MU_FLOOR))
        if self.continuation_mode == "optimize":
            return RampContinuationAdversary(self.problem.model, self.uncertainty_set, self.problem.params,
                                             barrier, self.continuation_steps, epsilon=epsilon)
        return BarrierAdversaryImpl(self.problem.model, self.uncertainty_set, self.problem.params, barrier,
                                    epsilon=epsilon)

    @property
    def _gradient_tolerance(self) -> Optional[float]:
        return None if self.continuation_mode == "optimize" else self.barrier.acceptable_tol

    def optimize(self, nominal: NominalResult) -> RunResult:
        problem = self.problem
        if self.uncertainty_set.is_empty_budget():
            self.log.info("Empty uncertainty budget, the robust design is the nominal design")
            inner = self._solve_inner(nominal.design, None)
            return RunResult(history=[], design=nominal.design, inner=inner, nominal_design=nominal.design,
                             nominal_compliance=nominal.compliance, converged=True)

        rho = nominal.design.rho.copy()
        last_good = nominal.design
        mma = MmaOptimizer(problem.rho_min, 1.0, self.settings.move)
        dvol = problem.volume_gradient()
        warm = None
        scale = None
        history = []
        converged = False

        self.log.info(f"Worst-case loop: {self.uncertainty_set.describe()}, continuation={self.continuation_mode}")
        for k in range(1, self.settings.max_iter + 1):
            design = problem.design(rho)
            inner = self._solve_inner(design, warm, last_good)
            for listener in self.listeners:
                listener.on_inner_solve(inner)

            try:
                grad = marginal_gradient(design, inner, self.uncertainty_set, problem.params, problem.filter,
                                         problem.model, self._gradient_tolerance)
            except Exception as e:
                raise StageError("gradient", last_good, e) from e
            last_good = design

            if scale is None:
                scale = inner.compliance
            try:
                rho_new = mma.step(rho, grad / scale, problem.volume_constraint(rho), dvol)
            except Exception as e:
                raise StageError("mma", last_good, e) from e
            change = float(np.max(np.abs(rho_new - rho)))

            record = OuterIteration(iteration=k, objective=inner.compliance, volume=problem.volume(rho),
                                    change=change, inner_iterations=inner.iterations)
            history.append(record)
            self.log.info(f"Outer it. {k:4d}: worst-case compliance {inner.compliance:.6e}, "
                          f"volume {record.volume:.4f}, change {change:.3e}, inner {inner.iterations}")
            for listener in self.listeners:
                listener.on_outer_iteration(record)

            rho = rho_new
            warm = inner
            if change < self.settings.change_tol:
                converged = True
                break

        if not converged:
            self.log.warning(f"Worst-case loop stopped after {self.settings.max_iter} iterations")
        design = problem.design(rho)
        inner = self._solve_inner(design, warm, last_good)
        self.log.info(f"Robust design: worst-case compliance {inner.compliance:.6e}")
        return RunResult(history=history, design=design, inner=inner, nominal_design=nominal.design,
                         nominal_compliance=nominal.compliance, converged=converged)

    def _solve_inner(self, design: DesignField, warm: Optional[InnerSolution],
                     last_good: Optional[DesignField] = None) -> InnerSolution:
        try:
            return self.adversary.solve(design.rho_filtered, warm)
        except Exception as e:
            raise StageError("adversary", last_good if last_good is not None else design, e) from e


def optimize(problem: TopologyProblem, uncertainty_set: UncertaintySet, barrier: BarrierConfig,
             settings: OuterSettings, continuation_mode: str = "off", continuation_steps: int = 10,
             epsilon: Optional[float] = None, nominal: Optional[NominalResult] = None,
             listeners: Optional[List[OptimizationEventListener]] = None) -> RunResult:
    """
    Nominal SIMP solve (unless given) followed by the worst-case loop
    """
    if nominal is None:
        try:
            nominal = NominalSolver(problem, settings, listeners).solve()
        except Exception as e:
            raise StageError("nominal", None, e) from e
    optimizer = RobustOptimizer(problem, uncertainty_set, barrier, settings, continuation_mode,
                                continuation_steps, epsilon, listeners)
    return optimizer.optimize(nominal)
