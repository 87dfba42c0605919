from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from robust_topopt.material import MaterialLaw


@dataclass(frozen=True)
class KktResidualNorms:
    stationarity: float
    state: float
    budget: float
    complementarity: float

    @property
    def primal(self) -> float:
        return max(self.state, self.budget)


@dataclass(frozen=True)
class InnerSolution:
    """
    Worst-case degradation together with its state and budget multipliers.

    ``multipliers`` are the prices of the budget rows, sign convention
    ``d J_mu / d delta = multipliers @ d g / d delta`` at the solution.
    """

    delta: np.ndarray
    u: np.ndarray
    multipliers: np.ndarray
    compliance: float
    barrier_objective: float
    mu: float
    residuals: KktResidualNorms
    iterations: int
    converged: bool
    law: MaterialLaw
    epsilon: float = 0.0
    slack: Optional[float] = None
    # Missed tol but met acceptable_tol, only returned when the solver was told to accept that
    acceptable: bool = False

    @property
    def q(self) -> Optional[float]:
        return self.law.q


@dataclass
class DesignField:
    rho: np.ndarray
    rho_filtered: np.ndarray
    rho_min: float
    volume_fraction: float

    def volume(self, volumes: np.ndarray) -> float:
        return float(np.dot(volumes, self.rho) / np.sum(volumes))


@dataclass(frozen=True)
class OuterIteration:
    iteration: int
    objective: float
    volume: float
    change: float
    inner_iterations: int


@dataclass
class ReportRow:
    budget: float
    compliance_reference: float
    wc_topo_reference_delta: float
    nom_topo_worst_delta: float
    wc_topo_worst_delta: float
    nom_contin: Optional[float] = None
    nom_direct: Optional[float] = None
    nom_inverse: Optional[float] = None
    wc_contin: Optional[float] = None
    wc_direct: Optional[float] = None
    wc_inverse: Optional[float] = None

    @property
    def has_continuation(self) -> bool:
        return self.nom_contin is not None


@dataclass
class RunResult:
    history: List[OuterIteration]
    design: DesignField
    inner: Optional[InnerSolution]
    nominal_design: DesignField
    nominal_compliance: float
    converged: bool = False
