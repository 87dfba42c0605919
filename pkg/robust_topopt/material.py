import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MaterialParams:
    E0: float = 1.0
    E_D: float = 0.7
    nu: float = 0.3
    p: float = 4.0

    def __post_init__(self):
        if not self.E0 > self.E_D > 0:
            raise ValueError(f"material moduli must satisfy E0 > E_D > 0, got E0={self.E0}, E_D={self.E_D}")
        if not self.p >= 1:
            raise ValueError(f"SIMP penalty p must be >= 1, got {self.p}")
        if not 0 <= self.nu < 0.5:
            raise ValueError(f"Poisson's ratio must be in [0, 0.5), got {self.nu}")

    @property
    def inverse_ramp_parameter(self) -> float:
        """The RAMP parameter reproducing the inverse law"""
        return (self.E0 - self.E_D) / self.E_D


def _check_degradation(delta: ArrayLike) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0.0) or np.any(delta > 1.0) or np.any(np.isnan(delta)):
        raise ValueError("degradation must lie in [0, 1]")
    return delta


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _pin_endpoints(delta: np.ndarray, e: np.ndarray, params: "MaterialParams") -> np.ndarray:
    # Endpoint values are exact for every law
    return np.where(delta == 0.0, params.E0, np.where(delta == 1.0, params.E_D, e))


class MaterialLaw(ABC):
    """
    Young's modulus as a function of the degradation variable
    """

    name: str

    def __init__(self, params: MaterialParams):
        self.params = params

    @abstractmethod
    def young(self, delta: ArrayLike) -> ArrayLike:
        """
        Modulus E(delta), decreasing from E0 at delta = 0 to E_D at delta = 1
        """

    @abstractmethod
    def derivatives(self, delta: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """
        Returns
        -------
        (E, dE/ddelta, d2E/ddelta2)
        """

    @property
    def q(self) -> Optional[float]:
        return None

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class InverseLaw(MaterialLaw):
    name = "inverse"

    def young(self, delta):
        delta = _check_degradation(delta)
        e = _pin_endpoints(delta, 1.0 / ((1.0 - delta) / self.params.E0 + delta / self.params.E_D), self.params)
        return _scalar_or_array(e)

    def derivatives(self, delta):
        delta = _check_degradation(delta)
        c = 1.0 / self.params.E_D - 1.0 / self.params.E0
        e = _pin_endpoints(delta, 1.0 / ((1.0 - delta) / self.params.E0 + delta / self.params.E_D), self.params)
        return _scalar_or_array(e), _scalar_or_array(-c * e ** 2), _scalar_or_array(2.0 * c ** 2 * e ** 3)


class RampLaw(MaterialLaw):
    """
    ``E_D + (1 - delta) / (1 + q delta) * (E0 - E_D)``; q = 0 is the linear law,
    q = (E0 - E_D) / E_D coincides with the inverse law
    """

    def __init__(self, params: MaterialParams, q: float):
        super().__init__(params)
        if q < 0:
            raise ValueError(f"RAMP parameter q must be >= 0, got {q}")
        self._q = float(q)
        self.name = f"ramp(q={self._q:g})"

    @property
    def q(self) -> float:
        return self._q

    def young(self, delta):
        delta = _check_degradation(delta)
        span = self.params.E0 - self.params.E_D
        e = _pin_endpoints(delta, self.params.E_D + (1.0 - delta) / (1.0 + self._q * delta) * span, self.params)
        return _scalar_or_array(e)

    def derivatives(self, delta):
        delta = _check_degradation(delta)
        q = self._q
        span = self.params.E0 - self.params.E_D
        denominator = 1.0 + q * delta
        e = _pin_endpoints(delta, self.params.E_D + (1.0 - delta) / denominator * span, self.params)
        de = -span * (1.0 + q) / denominator ** 2
        d2e = 2.0 * q * span * (1.0 + q) / denominator ** 3
        return _scalar_or_array(e), _scalar_or_array(de), _scalar_or_array(d2e)


def linear_law(params: MaterialParams) -> RampLaw:
    return RampLaw(params, 0.0)


def make_law(kind: str, params: MaterialParams, q: Optional[float] = None) -> MaterialLaw:
    if kind == "inverse":
        return InverseLaw(params)
    if kind == "ramp":
        if q is None:
            raise ValueError("the ramp law needs a parameter q")
        return RampLaw(params, q)
    if kind == "linear":
        return linear_law(params)
    raise ValueError(f"Unknown material law: {kind}")


def young_inverse(delta: ArrayLike, params: MaterialParams) -> ArrayLike:
    return InverseLaw(params).young(delta)


def young_ramp(delta: ArrayLike, q: float, params: MaterialParams) -> ArrayLike:
    return RampLaw(params, q).young(delta)


def young_derivs(delta: ArrayLike, law: MaterialLaw) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    return law.derivatives(delta)


def simp_factor(rho_filtered: ArrayLike, p: float) -> ArrayLike:
    return np.power(rho_filtered, p)


def effective_modulus(rho_filtered: ArrayLike, delta: ArrayLike, params: MaterialParams,
                      law: Optional[MaterialLaw] = None) -> ArrayLike:
    """
    SIMP-penalized degraded modulus rho~^p * E(delta)
    """
    law = law if law is not None else InverseLaw(params)
    rho_filtered = np.asarray(rho_filtered, dtype=float)
    if np.any(rho_filtered < 0.0) or np.any(rho_filtered > 1.0):
        raise ValueError("filtered density must lie in [0, 1]")
    return _scalar_or_array(simp_factor(rho_filtered, params.p) * law.young(delta))


def uniform_spread_increase(budget: float, volume_fraction: float, params: MaterialParams) -> float:
    """
    Relative compliance increase when a budget is spread evenly over a solid fraction
    of the domain, inverse law: E0 / E(D / V) - 1
    """
    fraction = budget / volume_fraction
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"budget {budget} cannot be spread over volume fraction {volume_fraction}")
    return params.E0 / young_inverse(fraction, params) - 1.0


def whole_domain_ratio(params: MaterialParams) -> float:
    """Compliance ratio when every element is fully degraded"""
    return params.E0 / params.E_D


def two_element_moduli(law: MaterialLaw, budget: float, samples: int = 101) -> np.ndarray:
    """
    Moduli pairs (E(d1), E(d2)) reachable with d1 + d2 = budget, d1, d2 in [0, 1].
    Comparing the pairs of two laws shows which admissible set is larger.

    Returns
    -------
    Array of shape (samples, 2)
    """
    if not 0.0 <= budget <= 2.0:
        raise ValueError(f"two-element budget must lie in [0, 2], got {budget}")
    low = max(0.0, budget - 1.0)
    high = min(1.0, budget)
    d1 = np.linspace(low, high, samples)
    d2 = np.clip(budget - d1, 0.0, 1.0)
    return np.column_stack((law.young(d1), law.young(d2)))
