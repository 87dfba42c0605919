import logging
from typing import Optional

import numpy as np

from robust_topopt.fe.solver import FeModel
from robust_topopt.filtering import FilterSpec
from robust_topopt.material import InverseLaw, MaterialLaw, MaterialParams, simp_factor
from robust_topopt.models import DesignField

log = logging.getLogger(__name__)


class TopologyProblem:
    """
    Everything the outer loop needs about one benchmark: analysis model, density filter,
    material parameters and the volume bound
    """

    log = logging.getLogger("TopologyProblem")

    def __init__(self, model: FeModel, filter_spec: FilterSpec, params: MaterialParams,
                 volume_fraction: float, rho_min: float):
        if not 0 < volume_fraction <= 1:
            raise ValueError(f"volume fraction V must lie in (0, 1], got {volume_fraction}")
        if not 0 < rho_min < 1:
            raise ValueError(f"rho_min must lie in (0, 1), got {rho_min}")
        if volume_fraction < rho_min:
            raise ValueError(f"volume fraction {volume_fraction} is below rho_min {rho_min}")
        self.model = model
        self.filter = filter_spec
        self.params = params
        self.volume_fraction = volume_fraction
        self.rho_min = rho_min

    @property
    def mesh(self):
        return self.model.mesh

    def design(self, rho: np.ndarray) -> DesignField:
        rho = np.asarray(rho, dtype=float)
        return DesignField(rho=rho, rho_filtered=self.filter.apply(rho), rho_min=self.rho_min,
                           volume_fraction=self.volume_fraction)

    def initial_design(self) -> DesignField:
        return self.design(np.full(self.mesh.n_elements, max(self.volume_fraction, self.rho_min)))

    def volume(self, rho: np.ndarray) -> float:
        return float(np.dot(self.mesh.element_volumes, rho) / self.mesh.domain_measure)

    def volume_gradient(self) -> np.ndarray:
        return self.mesh.element_volumes / self.mesh.domain_measure

    def volume_constraint(self, rho: np.ndarray) -> float:
        return self.volume(rho) - self.volume_fraction

    def moduli(self, rho_filtered: np.ndarray, delta: Optional[np.ndarray] = None,
               law: Optional[MaterialLaw] = None) -> np.ndarray:
        law = law if law is not None else InverseLaw(self.params)
        if delta is None:
            delta = np.zeros_like(rho_filtered)
        return simp_factor(rho_filtered, self.params.p) * law.young(delta)

    def compliance(self, rho_filtered: np.ndarray, delta: Optional[np.ndarray] = None,
                   law: Optional[MaterialLaw] = None) -> float:
        """
        Compliance of a filtered design for a fixed degradation field (pristine material by default)
        """
        return self.model.solve(self.moduli(rho_filtered, delta, law))[1]

    def compliance_sensitivity(self, rho_filtered: np.ndarray, delta: np.ndarray, u: np.ndarray,
                               law: Optional[MaterialLaw] = None) -> np.ndarray:
        """
        Derivative of f^T u with respect to the filtered density at a fixed degradation field
        """
        law = law if law is not None else InverseLaw(self.params)
        p = self.params.p
        return -p * np.power(rho_filtered, p - 1) * law.young(delta) * self.model.element_energies(u)
