import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from robust_topopt.models import DesignField, OuterIteration
from robust_topopt.optimizer.events import OptimizationEventListener
from robust_topopt.optimizer.mma import MmaOptimizer
from robust_topopt.optimizer.problem import TopologyProblem


@dataclass(frozen=True)
class OuterSettings:
    max_iter: int = 500
    change_tol: float = 1e-3
    move: float = 0.2

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.change_tol > 0:
            raise ValueError(f"change_tol must be > 0, got {self.change_tol}")
        if not 0 < self.move <= 1:
            raise ValueError(f"move must lie in (0, 1], got {self.move}")


@dataclass
class NominalResult:
    design: DesignField
    compliance: float
    history: List[OuterIteration] = field(default_factory=list)
    converged: bool = False


class NominalSolver:
    """
    Plain SIMP compliance minimization with pristine material, run to convergence.
    Its design is the nominal topology and its compliance the reference of every report.
    """

    log = logging.getLogger("NominalSolver")

    def __init__(self, problem: TopologyProblem, settings: OuterSettings,
                 listeners: Optional[List[OptimizationEventListener]] = None):
        self.problem = problem
        self.settings = settings
        self.listeners = listeners if listeners is not None else []

    def solve(self, start: Optional[DesignField] = None) -> NominalResult:
        problem = self.problem
        design = start if start is not None else problem.initial_design()
        rho = design.rho.copy()
        mma = MmaOptimizer(problem.rho_min, 1.0, self.settings.move)
        dvol = problem.volume_gradient()
        zero = np.zeros(problem.mesh.n_elements)
        scale = None
        history = []
        converged = False

        self.log.info(f"Nominal solve: V={problem.volume_fraction}, p={problem.params.p}, "
                      f"{problem.mesh.n_elements} elements")
        for k in range(1, self.settings.max_iter + 1):
            design = problem.design(rho)
            u, value = problem.model.solve(problem.moduli(design.rho_filtered))
            grad = problem.filter.chain_transpose(problem.compliance_sensitivity(design.rho_filtered, zero, u))
            if scale is None:
                scale = value
            rho_new = mma.step(rho, grad / scale, problem.volume_constraint(rho), dvol)
            change = float(np.max(np.abs(rho_new - rho)))

            record = OuterIteration(iteration=k, objective=value, volume=problem.volume(rho), change=change,
                                    inner_iterations=0)
            history.append(record)
            self.log.info(f"Nominal it. {k:4d}: compliance {value:.6e}, volume {record.volume:.4f}, "
                          f"change {change:.3e}")
            for listener in self.listeners:
                listener.on_nominal_iteration(record)

            rho = rho_new
            if change < self.settings.change_tol:
                converged = True
                break

        if not converged:
            self.log.warning(f"Nominal solve stopped after {self.settings.max_iter} iterations")
        design = problem.design(rho)
        value = problem.compliance(design.rho_filtered)
        self.log.info(f"Nominal compliance {value:.6e} at volume {problem.volume(rho):.6f}")
        return NominalResult(design=design, compliance=value, history=history, converged=converged)


def nominal_solve(problem: TopologyProblem, settings: OuterSettings) -> DesignField:
    return NominalSolver(problem, settings).solve().design
