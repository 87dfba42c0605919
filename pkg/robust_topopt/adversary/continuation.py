import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from robust_topopt.adversary.barrier import BarrierAdversaryImpl, BarrierConfig, WorstCaseAdversary
from robust_topopt.fe.solver import FeModel
from robust_topopt.material import InverseLaw, MaterialParams, RampLaw, linear_law
from robust_topopt.models import InnerSolution
from robust_topopt.uncertainty.sets import UncertaintySet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContinuationResult:
    """
    Adversary solutions along q from the inverse law down to the linear law.

    The first stage (inverse law) bounds the true worst case from above, the last
    stage (linear law, local maximum) from below.
    """

    stages: List[InnerSolution]
    q_values: np.ndarray

    @property
    def final(self) -> InnerSolution:
        return self.stages[-1]

    @property
    def lower_bound(self) -> float:
        return self.stages[-1].compliance

    @property
    def upper_bound(self) -> float:
        return self.stages[0].compliance


class RampContinuationAdversary(WorstCaseAdversary):
    """
    Runs the continuation at every call; the final linear-law stage is the answer
    """

    log = logging.getLogger("RampContinuationAdversary")

    def __init__(self, model: FeModel, uncertainty_set: UncertaintySet, params: MaterialParams,
                 config: BarrierConfig, steps: int, epsilon: float = 0.0):
        if steps < 2:
            raise ValueError(f"continuation needs at least 2 steps, got {steps}")
        self.model = model
        self.uncertainty_set = uncertainty_set
        self.params = params
        self.config = config
        self.steps = steps
        self.epsilon = epsilon
        self.last_result: Optional[ContinuationResult] = None

    def run(self, rho_filtered: np.ndarray, warm: Optional[InnerSolution] = None) -> ContinuationResult:
        q_values = np.linspace(self.params.inverse_ramp_parameter, 0.0, self.steps)
        stages = []
        previous = warm if warm is not None and warm.q is None else None
        for index, q in enumerate(q_values):
            law = InverseLaw(self.params) if index == 0 else RampLaw(self.params, q)
            adversary = BarrierAdversaryImpl(self.model, self.uncertainty_set, self.params, self.config,
                                             law=law, epsilon=self.epsilon, accept_local=index > 0)
            solution = adversary.solve(rho_filtered, previous)
            self.log.info(f"Continuation stage {index + 1}/{self.steps} q={q:.4g}: "
                          f"compliance {solution.compliance:.6e}, {solution.iterations} iterations")
            stages.append(solution)
            previous = solution

        result = ContinuationResult(stages=stages, q_values=q_values)
        if result.lower_bound > result.upper_bound * (1.0 + 1e-8):
            self.log.warning(f"Continuation lower bound {result.lower_bound:.6e} exceeds "
                             f"the inverse-law value {result.upper_bound:.6e}")
        self.last_result = result
        return result

    def solve(self, rho_filtered: np.ndarray, warm: Optional[InnerSolution] = None) -> InnerSolution:
        # Stage solutions carry their law; only inverse-law solutions are valid path starts
        start = self.last_result.stages[0] if self.last_result is not None else None
        return self.run(rho_filtered, start if warm is not None else None).final


def ramp_continuation(model: FeModel, rho_filtered: np.ndarray, uncertainty_set: UncertaintySet,
                      params: MaterialParams, steps: int, config: BarrierConfig,
                      warm: Optional[InnerSolution] = None) -> ContinuationResult:
    return RampContinuationAdversary(model, uncertainty_set, params, config, steps).run(rho_filtered, warm)


def direct_linear_worst_case(model: FeModel, rho_filtered: np.ndarray, uncertainty_set: UncertaintySet,
                             params: MaterialParams, config: BarrierConfig) -> InnerSolution:
    """
    Single linear-law solve from the canonical interior point, no continuation
    """
    adversary = BarrierAdversaryImpl(model, uncertainty_set, params, config, law=linear_law(params),
                                     accept_local=True)
    return adversary.solve(rho_filtered)
