import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np
from scipy.optimize import brentq

from robust_topopt.fe.mesh import Mesh

log = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.Generator]

INTERIOR_UPPER = 0.99
INTERIOR_LOWER = 0.01


class InfeasibleSetError(ValueError):
    """The admissible degradation set has no strictly interior point"""


@dataclass(frozen=True)
class BudgetValue:
    equality: float
    inequality: Optional[float] = None

    def as_array(self) -> np.ndarray:
        if self.inequality is None:
            return np.array([self.equality])
        return np.array([self.equality, self.inequality])


class UncertaintySet(ABC):
    """
    Admissible degradation fields for a fixed filtered density.

    Every set has one budget equality ``g_eq(rho~, delta) = 0``; some add one inequality
    ``g_ineq(rho~, delta) <= 0``. Gradients are returned row-wise, equality first.
    """

    kind: str

    def __init__(self, volumes: np.ndarray, p: float):
        self.volumes = np.asarray(volumes, dtype=float)
        self.measure = float(np.sum(self.volumes))
        self.p = p

    @property
    @abstractmethod
    def budget(self) -> float:
        """The scalar reported as the budget of this set"""

    @property
    def has_inequality(self) -> bool:
        return False

    @property
    def n_constraints(self) -> int:
        return 2 if self.has_inequality else 1

    @abstractmethod
    def budget_value(self, rho_filtered: np.ndarray, delta: np.ndarray) -> BudgetValue:
        """
        Constraint values at (rho~, delta)
        """

    @abstractmethod
    def budget_grad_delta(self, rho_filtered: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """
        Returns
        -------
        Array of shape (n_constraints, n) with d g / d delta
        """

    @abstractmethod
    def budget_hess_delta(self, rho_filtered: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """
        Returns
        -------
        Array of shape (n_constraints, n): diagonals of the delta Hessians (every set is separable)
        """

    @abstractmethod
    def budget_grad_rho(self, rho_filtered: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """
        Returns
        -------
        Array of shape (n_constraints, n) with d g / d rho~
        """

    @abstractmethod
    def reference_delta(self) -> np.ndarray:
        """
        The degradation field that defines the reference compliance of reports
        """

    @abstractmethod
    def _profile(self, rho_filtered: np.ndarray) -> np.ndarray:
        """
        Shape of the canonical interior point before scaling onto the equality
        """

    @abstractmethod
    def describe(self) -> Dict[str, Union[str, float]]:
        ...

    def _weights(self, rho_filtered: np.ndarray) -> np.ndarray:
        return np.ones_like(self.volumes)

    def _equality_target(self) -> float:
        return self.budget

    def is_empty_budget(self) -> bool:
        return self._equality_target() == 0.0

    def canonical_point(self, rho_filtered: np.ndarray) -> np.ndarray:
        """
        Strictly interior point ``clip(t * profile)`` with ``t`` placed on the equality

        Deterministic. For the linear set on a uniform mesh this is the uniform spread
        delta = D everywhere, the point used to seed and to check against closed forms.
        """
        delta = self._scale_onto_equality(rho_filtered, self._profile(rho_filtered))
        self._check_inequality(rho_filtered, delta)
        return delta

    def sample_feasible(self, rho_filtered: np.ndarray, seed: SeedLike = None) -> np.ndarray:
        """
        Random strictly interior point, a different one per seed

        Use ``canonical_point`` for the deterministic uniform spread.

        Parameters
        ----------
        rho_filtered:
            Filtered density
        seed:
            Seed or generator, makes the sample reproducible

        Returns
        -------
        delta in (0, 1)^n on the equality, strictly inside the inequality
        """
        rng = np.random.default_rng(seed)
        base = self._profile(rho_filtered)
        concentration = rng.uniform(0.25, 4.0)
        profile = base * rng.random(base.shape) ** concentration + 1e-12
        delta = self._scale_onto_equality(rho_filtered, profile)
        if not self.has_inequality:
            return delta

        # Mixing two points on the linear equality stays on it; the inequality is convex
        center = self.canonical_point(rho_filtered)
        for k in range(60):
            if self.budget_value(rho_filtered, delta).inequality < 0:
                return delta
            delta = 0.5 * (delta + center)
        return center

    def _mass(self, rho_filtered: np.ndarray) -> np.ndarray:
        return self.volumes * self._weights(rho_filtered) / self.measure

    def _scale_onto_equality(self, rho_filtered: np.ndarray, profile: np.ndarray) -> np.ndarray:
        mass = self._mass(rho_filtered)
        total = float(np.sum(mass))
        target = self._equality_target()
        if not target > 0:
            raise InfeasibleSetError(f"budget {target} leaves no strictly interior degradation")
        if INTERIOR_UPPER * total <= target:
            raise InfeasibleSetError(
                f"budget {target} is unreachable: at most {INTERIOR_UPPER * total:.6g} can be degraded "
                f"strictly inside the box for the current density")

        lower = min(INTERIOR_LOWER, 0.5 * target / total)

        def residual(t):
            return float(np.dot(mass, np.clip(t * profile, lower, INTERIOR_UPPER))) - target

        t = target / float(np.dot(mass, profile))
        delta = t * profile
        if np.min(delta) >= lower and np.max(delta) <= INTERIOR_UPPER:
            return delta

        t_high = INTERIOR_UPPER / float(np.min(profile))
        t = brentq(residual, 0.0, t_high, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return np.clip(t * profile, lower, INTERIOR_UPPER)

    def _check_inequality(self, rho_filtered: np.ndarray, delta: np.ndarray):
        if not self.has_inequality:
            return
        value = self.budget_value(rho_filtered, delta).inequality
        if not value < 0:
            raise InfeasibleSetError(
                f"dispersion bound not strictly satisfied at the canonical point (margin {value:.3e})")


class WeightedEqualitySet(UncertaintySet, ABC):
    """
    Single budget ``sum_e v_e w_e delta_e / |Omega| = D``
    """

    def __init__(self, volumes: np.ndarray, p: float, budget: float):
        super().__init__(volumes, p)
        if budget < 0:
            raise ValueError(f"uncertainty budget must be >= 0, got {budget}")
        self._budget = float(budget)

    @property
    def budget(self) -> float:
        return self._budget

    def _weight_derivative(self, rho_filtered: np.ndarray) -> np.ndarray:
        return np.zeros_like(self.volumes)

    def budget_value(self, rho_filtered, delta):
        return BudgetValue(float(np.dot(self._mass(rho_filtered), delta)) - self._budget)

    def budget_grad_delta(self, rho_filtered, delta):
        return self._mass(rho_filtered)[None, :]

    def budget_hess_delta(self, rho_filtered, delta):
        return np.zeros((1, len(self.volumes)))

    def budget_grad_rho(self, rho_filtered, delta):
        grad = self.volumes * self._weight_derivative(rho_filtered) * np.asarray(delta) / self.measure
        return grad[None, :]

    def reference_delta(self):
        return np.zeros_like(self.volumes)

    def _profile(self, rho_filtered):
        return np.ones_like(self.volumes)

    def describe(self):
        return {"kind": self.kind, "budget": self._budget}


class LinearSet(WeightedEqualitySet):
    kind = "linear"


class RhoWeightedSet(WeightedEqualitySet):
    kind = "rho-weighted"

    def _weights(self, rho_filtered):
        return np.power(rho_filtered, self.p)

    def _weight_derivative(self, rho_filtered):
        return self.p * np.power(rho_filtered, self.p - 1)


class AverageQuadraticSet(UncertaintySet):
    """
    Mean budget ``sum_e v_e w_e delta_e / |Omega| = D1`` together with the dispersion bound
    ``sum_e v_e (w_e delta_e - m)^2 / |Omega| <= D2``, ``w_e`` = 1 or rho~_e^p
    """

    kind = "average-quadratic"

    def __init__(self, volumes: np.ndarray, p: float, mean_budget: float, dispersion: float,
                 anchor: float = 0.4, weighting: str = "plain"):
        super().__init__(volumes, p)
        if weighting not in ("plain", "rho"):
            raise ValueError(f"Unknown weighting: {weighting}")
        if dispersion < 0:
            raise ValueError(f"dispersion bound must be >= 0, got {dispersion}")
        if not 0 < anchor < 1:
            raise ValueError(f"mean anchor must lie in (0, 1), got {anchor}")
        self.mean_budget = float(mean_budget)
        self.dispersion = float(dispersion)
        self.anchor = float(anchor)
        self.weighting = weighting

    @property
    def budget(self) -> float:
        return self.dispersion

    @property
    def has_inequality(self) -> bool:
        return True

    def _equality_target(self) -> float:
        return self.mean_budget

    def _weights(self, rho_filtered):
        if self.weighting == "rho":
            return np.power(rho_filtered, self.p)
        return np.ones_like(self.volumes)

    def _weight_derivative(self, rho_filtered):
        if self.weighting == "rho":
            return self.p * np.power(rho_filtered, self.p - 1)
        return np.zeros_like(self.volumes)

    def budget_value(self, rho_filtered, delta):
        w = self._weights(rho_filtered)
        equality = float(np.dot(self.volumes, w * delta)) / self.measure - self.mean_budget
        inequality = float(np.dot(self.volumes, (w * delta - self.anchor) ** 2)) / self.measure - self.dispersion
        return BudgetValue(equality, inequality)

    def budget_grad_delta(self, rho_filtered, delta):
        w = self._weights(rho_filtered)
        v = self.volumes / self.measure
        return np.vstack((v * w, 2.0 * v * w * (w * delta - self.anchor)))

    def budget_hess_delta(self, rho_filtered, delta):
        w = self._weights(rho_filtered)
        v = self.volumes / self.measure
        return np.vstack((np.zeros_like(v), 2.0 * v * w ** 2))

    def budget_grad_rho(self, rho_filtered, delta):
        w = self._weights(rho_filtered)
        dw = self._weight_derivative(rho_filtered)
        v = self.volumes / self.measure
        delta = np.asarray(delta)
        return np.vstack((v * dw * delta, 2.0 * v * (w * delta - self.anchor) * dw * delta))

    def reference_delta(self):
        return np.full_like(self.volumes, self.anchor)

    def _profile(self, rho_filtered):
        # Constant weighted degradation w_e * delta_e
        return 1.0 / np.maximum(self._weights(rho_filtered), 1e-300)

    def describe(self):
        return {
            "kind": self.kind,
            "budget": self.dispersion,
            "mean_budget": self.mean_budget,
            "anchor": self.anchor,
            "weighting": self.weighting,
        }


def make_uncertainty_set(kind: str, mesh: Mesh, p: float, budget: float, mean_budget: float = 0.4,
                         anchor: float = 0.4, weighting: str = "plain") -> UncertaintySet:
    if kind == "linear":
        return LinearSet(mesh.element_volumes, p, budget)
    if kind == "rho-weighted":
        return RhoWeightedSet(mesh.element_volumes, p, budget)
    if kind == "average-quadratic":
        return AverageQuadraticSet(mesh.element_volumes, p, mean_budget, budget, anchor, weighting)
    raise ValueError(f"Unknown uncertainty set: {kind}")


def budget_value(uncertainty_set: UncertaintySet, rho_filtered: np.ndarray, delta: np.ndarray) -> BudgetValue:
    return uncertainty_set.budget_value(rho_filtered, delta)


def budget_grad_delta(uncertainty_set: UncertaintySet, rho_filtered: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return uncertainty_set.budget_grad_delta(rho_filtered, delta)


def budget_grad_rho(uncertainty_set: UncertaintySet, rho_filtered: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return uncertainty_set.budget_grad_rho(rho_filtered, delta)


def sample_feasible(uncertainty_set: UncertaintySet, rho_filtered: np.ndarray, seed: SeedLike = None) -> np.ndarray:
    return uncertainty_set.sample_feasible(rho_filtered, seed)
