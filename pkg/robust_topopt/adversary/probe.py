from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from robust_topopt.fe.solver import FeModel
from robust_topopt.material import InverseLaw, MaterialLaw, MaterialParams, simp_factor


@dataclass(frozen=True)
class ProbeResult:
    max_value: float
    identity_error: float
    n_dirs: int


def hessian_form(model: FeModel, rho_filtered: np.ndarray, delta: np.ndarray, u: np.ndarray,
                 x: np.ndarray, y: np.ndarray, params: MaterialParams, law: MaterialLaw, epsilon: float = 0.0):
    """
    Second variation of J = 2 f^T u - u^T K(delta) u - eps/2 |delta|^2 in direction (x, y),
    evaluated twice: by the direct Hessian product and in completed-square form

    Returns
    -------
    (direct, completed_square)
    """
    simp = simp_factor(np.asarray(rho_filtered, dtype=float), params.p)
    e, de, d2e = law.derivatives(delta)
    ke = model.stiff.matrix
    ue = model.element_displacements(u)
    ye = model.element_displacements(y)

    energies = np.einsum("ei,ij,ej->e", ue, ke, ue)
    cross = np.einsum("ei,ij,ej->e", ye, ke, ue)
    y_energy = np.einsum("ei,ij,ej->e", ye, ke, ye)

    direct = float(
        np.sum((-simp * d2e * energies - epsilon) * x ** 2)
        - 4.0 * np.sum(x * simp * de * cross)
        - 2.0 * np.sum(simp * e * y_energy)
    )

    shift = ye + (de / e * x)[:, None] * ue
    square = np.einsum("ei,ij,ej->e", shift, ke, shift)
    remainder = d2e - 2.0 * de ** 2 / e
    completed = float(
        -2.0 * np.sum(simp * e * square)
        - epsilon * np.sum(x ** 2)
        - np.sum(simp * remainder * energies * x ** 2)
    )
    return direct, completed


def concavity_probe(model: FeModel, rho_filtered: np.ndarray, delta: np.ndarray, u: np.ndarray,
                    params: MaterialParams, n_dirs: int, law: Optional[MaterialLaw] = None,
                    epsilon: float = 0.0, delta_only: bool = False,
                    seed: Union[None, int, np.random.Generator] = None) -> ProbeResult:
    """
    Largest second variation over random unit directions

    Parameters
    ----------
    delta_only:
        Restrict directions to the degradation block (y = 0)

    Returns
    -------
    Maximum quadratic-form value and the largest relative mismatch between the direct
    and the completed-square evaluation
    """
    if n_dirs < 1:
        raise ValueError(f"n_dirs must be >= 1, got {n_dirs}")
    law = law if law is not None else InverseLaw(params)
    rng = np.random.default_rng(seed)
    n = model.mesh.n_elements
    free = model.load.free_dofs

    best = -np.inf
    mismatch = 0.0
    for _ in range(n_dirs):
        x = rng.standard_normal(n)
        y = np.zeros(model.mesh.n_dofs)
        if not delta_only:
            y[free] = rng.standard_normal(len(free))
        norm = np.sqrt(np.dot(x, x) + np.dot(y, y))
        x, y = x / norm, y / norm
        direct, completed = hessian_form(model, rho_filtered, delta, u, x, y, params, law, epsilon)
        best = max(best, direct)
        mismatch = max(mismatch, abs(direct - completed) / max(abs(direct), np.finfo(float).tiny))
    return ProbeResult(max_value=best, identity_error=mismatch, n_dirs=n_dirs)
