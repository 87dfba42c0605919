import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq


@dataclass
class MmaState:
    low: Optional[np.ndarray] = None
    upp: Optional[np.ndarray] = None
    xold1: Optional[np.ndarray] = None
    xold2: Optional[np.ndarray] = None
    iteration: int = 0
    multiplier: float = 0.0


class MmaOptimizer:
    """
    Method of moving asymptotes for one inequality constraint ``g(x) <= 0``.
    The separable subproblem is solved through its one-dimensional dual.
    """

    log = logging.getLogger("MmaOptimizer")

    ALBEFA = 0.1
    ASYINIT = 0.5
    ASYINCR = 1.2
    ASYDECR = 0.7
    RAA0 = 1e-5

    def __init__(self, x_min, x_max, move: float = 0.2, state: Optional[MmaState] = None):
        """
        Parameters
        ----------
        x_min, x_max:
            Variable bounds (scalars or arrays)
        move:
            Move limit as a fraction of the variable range
        """
        if not 0 < move <= 1:
            raise ValueError(f"move limit must lie in (0, 1], got {move}")
        self.x_min = x_min
        self.x_max = x_max
        self.move = move
        self.state = state if state is not None else MmaState()

    def _asymptotes(self, x: np.ndarray, x_range: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        state = self.state
        if state.iteration < 2:
            return x - self.ASYINIT * x_range, x + self.ASYINIT * x_range

        # Oscillating variables get tighter asymptotes, monotone ones looser
        zzz = (x - state.xold1) * (state.xold1 - state.xold2)
        factor = np.ones_like(x)
        factor[zzz > 0] = self.ASYINCR
        factor[zzz < 0] = self.ASYDECR
        low = x - factor * (state.xold1 - state.low)
        upp = x + factor * (state.upp - state.xold1)
        low = np.minimum(np.maximum(low, x - 10 * x_range), x - 0.01 * x_range)
        upp = np.maximum(np.minimum(upp, x + 10 * x_range), x + 0.01 * x_range)
        return low, upp

    def step(self, x: np.ndarray, dfdx: np.ndarray, g: float, dgdx: np.ndarray) -> np.ndarray:
        """
        One design update

        Parameters
        ----------
        x:
            Current design
        dfdx:
            Objective gradient
        g:
            Constraint value (<= 0 satisfied)
        dgdx:
            Constraint gradient

        Returns
        -------
        The next design, within the bounds and move limits
        """
        x = np.asarray(x, dtype=float)
        dfdx = np.asarray(dfdx, dtype=float)
        dgdx = np.asarray(dgdx, dtype=float)
        if not (np.all(np.isfinite(dfdx)) and np.all(np.isfinite(dgdx)) and np.isfinite(g)):
            raise ValueError("MMA needs finite gradients and constraint value")

        x_min = np.broadcast_to(self.x_min, x.shape).astype(float)
        x_max = np.broadcast_to(self.x_max, x.shape).astype(float)
        x = np.clip(x, x_min, x_max)
        x_range = x_max - x_min

        low, upp = self._asymptotes(x, x_range)
        alpha = np.maximum.reduce([low + self.ALBEFA * (x - low), x - self.move * x_range, x_min])
        beta = np.minimum.reduce([upp - self.ALBEFA * (upp - x), x + self.move * x_range, x_max])

        ux1 = upp - x
        xl1 = x - low
        ux2 = ux1 ** 2
        xl2 = xl1 ** 2
        xmamiinv = 1.0 / np.maximum(upp - low, 1e-5)

        p0 = np.maximum(dfdx, 0.0)
        q0 = np.maximum(-dfdx, 0.0)
        pq0 = 0.001 * (p0 + q0) + self.RAA0 * xmamiinv
        p0 = (p0 + pq0) * ux2
        q0 = (q0 + pq0) * xl2

        pc = np.maximum(dgdx, 0.0) * ux2
        qc = np.maximum(-dgdx, 0.0) * xl2
        offset = g - np.sum(pc / ux1 + qc / xl1)

        def x_of(lam: float) -> np.ndarray:
            sp = np.sqrt(p0 + lam * pc)
            sq = np.sqrt(q0 + lam * qc)
            return np.clip((sp * low + sq * upp) / (sp + sq), alpha, beta)

        def constraint(lam: float) -> float:
            xl = x_of(lam)
            return offset + float(np.sum(pc / (upp - xl) + qc / (xl - low)))

        lam = 0.0
        if constraint(0.0) > 0:
            high = 1.0
            while constraint(high) > 0:
                high *= 2.0
                assert high < 1e30, "MMA subproblem infeasible: the constraint cannot be met inside the box"
            lam = brentq(constraint, 0.0, high, xtol=1e-15 * high, rtol=4 * np.finfo(float).eps, maxiter=500)

        x_new = x_of(lam)
        self.log.debug(f"MMA iteration {self.state.iteration}: multiplier {lam:.4e}")

        self.state.xold2 = self.state.xold1
        self.state.xold1 = x.copy()
        self.state.low = low
        self.state.upp = upp
        self.state.multiplier = lam
        self.state.iteration += 1
        return x_new


def mma_step(state: MmaState, rho: np.ndarray, objective_grad: np.ndarray, constraint_value: float,
             constraint_grad: np.ndarray, bounds: Tuple[float, float], move: float = 0.2) -> np.ndarray:
    return MmaOptimizer(bounds[0], bounds[1], move, state).step(rho, objective_grad, constraint_value, constraint_grad)
