import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix, diags

from robust_topopt.fe.solver import FeModel, SingularSystemError, SymbolicAnalysis, reduce_matrix
from robust_topopt.material import InverseLaw, MaterialLaw, MaterialParams, simp_factor
from robust_topopt.models import InnerSolution, KktResidualNorms
from robust_topopt.uncertainty.sets import UncertaintySet

# Below this distance to a bound the budget gradients and the active box rows become dependent
LICQ_MONITOR = 1e-9

ARMIJO = 1e-4
MIN_STEP = 1e-12
TIKHONOV_MU_FLOOR = 1e-12


class InnerSolverError(RuntimeError):
    """The worst-case solver did not reach the requested tolerances"""

    def __init__(self, message: str, best: Optional[InnerSolution] = None):
        super().__init__(message)
        self.best = best


class _NotConcave(Exception):
    pass


@dataclass(frozen=True)
class BarrierConfig:
    mu_init: float = 0.1
    mu_target: float = 1e-7
    mu_factor: float = 0.2
    tol: float = 1e-10
    constr_viol_tol: float = 1e-10
    compl_inf_tol: float = 1e-4
    acceptable_tol: float = 1e-6
    # Return solves stuck between tol and acceptable_tol flagged instead of raising
    accept_acceptable: bool = False
    max_iter: int = 1000
    max_stage_iter: int = 100
    fraction_to_boundary: float = 0.995
    ascent_max_iter: int = 500

    def __post_init__(self):
        if not 0 < self.mu_target <= self.mu_init:
            raise ValueError(f"barrier levels must satisfy 0 < mu_target <= mu_init, got {self.mu_target}, {self.mu_init}")
        if not 0 < self.mu_factor < 1:
            raise ValueError(f"mu_factor must lie in (0, 1), got {self.mu_factor}")
        if not 0 < self.fraction_to_boundary < 1:
            raise ValueError(f"fraction_to_boundary must lie in (0, 1), got {self.fraction_to_boundary}")
        for name in ("tol", "constr_viol_tol", "compl_inf_tol", "acceptable_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_iter < 1 or self.max_stage_iter < 1 or self.ascent_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")

    def schedule(self) -> List[float]:
        levels = []
        mu = self.mu_init
        while mu > self.mu_target * (1.0 + 1e-12):
            levels.append(mu)
            mu *= self.mu_factor
        levels.append(self.mu_target)
        return levels


@dataclass(frozen=True)
class KktResidual:
    r_delta: np.ndarray
    r_u: np.ndarray
    r_g: np.ndarray

    def max_norm(self) -> float:
        return max(float(np.max(np.abs(block), initial=0.0)) for block in (self.r_delta, self.r_u, self.r_g))


@dataclass
class _Iterate:
    delta: np.ndarray
    u: np.ndarray
    multipliers: np.ndarray
    slack: Optional[float] = None

    def moved(self, direction: "_Iterate", alpha: float) -> "_Iterate":
        return _Iterate(
            delta=self.delta + alpha * direction.delta,
            u=self.u + alpha * direction.u,
            multipliers=self.multipliers + alpha * direction.multipliers,
            slack=None if self.slack is None else self.slack + alpha * direction.slack,
        )


@dataclass
class _Evaluation:
    young: np.ndarray
    young_d1: np.ndarray
    young_d2: np.ndarray
    energies: np.ndarray
    stiffness: object
    state_residual: np.ndarray
    objective_grad: np.ndarray
    stationarity: np.ndarray
    constraints: np.ndarray
    constraint_grads: np.ndarray
    constraint_hess: np.ndarray
    slack_residual: float
    multiplier_residual: np.ndarray

    def merit(self) -> float:
        return float(np.sqrt(
            np.sum(self.stationarity ** 2)
            + 4.0 * np.sum(self.state_residual ** 2)
            + self.slack_residual ** 2
            + np.sum(self.multiplier_residual ** 2)
        ))


class _BarrierProblem:
    """
    Barrier subproblem data for a fixed filtered density, set, law and Tikhonov weight
    """

    def __init__(self, model: FeModel, rho_filtered: np.ndarray, uncertainty_set: UncertaintySet,
                 law: MaterialLaw, params: MaterialParams, epsilon: float,
                 schur_analysis: Optional[SymbolicAnalysis] = None):
        self.model = model
        self.schur_analysis = schur_analysis if schur_analysis is not None else SymbolicAnalysis()
        self.rho_filtered = np.asarray(rho_filtered, dtype=float)
        self.uncertainty_set = uncertainty_set
        self.law = law
        self.params = params
        self.epsilon = epsilon
        self.simp = simp_factor(self.rho_filtered, params.p)
        self.free = model.load.free_dofs
        self.force = model.force

    @property
    def has_inequality(self) -> bool:
        return self.uncertainty_set.has_inequality

    def evaluate(self, it: _Iterate, mu: float) -> _Evaluation:
        e, de, d2e = self.law.derivatives(it.delta)
        moduli = self.simp * e
        stiffness = self.model.stiffness_matrix(moduli)
        state_residual = (self.force - stiffness @ it.u)[self.free]
        energies = self.model.element_energies(it.u)

        objective_grad = -self.simp * de * energies - self.epsilon * it.delta
        barrier_grad = mu * (1.0 / it.delta - 1.0 / (1.0 - it.delta))
        budget = self.uncertainty_set.budget_value(self.rho_filtered, it.delta).as_array()
        grads = self.uncertainty_set.budget_grad_delta(self.rho_filtered, it.delta)
        hess = self.uncertainty_set.budget_hess_delta(self.rho_filtered, it.delta)

        stationarity = objective_grad + barrier_grad - grads.T @ it.multipliers
        multiplier_residual = -budget.copy()
        slack_residual = 0.0
        if self.has_inequality:
            multiplier_residual[1] -= it.slack
            slack_residual = mu / it.slack - it.multipliers[1]

        return _Evaluation(
            young=e, young_d1=de, young_d2=d2e, energies=energies, stiffness=stiffness,
            state_residual=state_residual, objective_grad=objective_grad, stationarity=stationarity,
            constraints=budget, constraint_grads=grads, constraint_hess=hess,
            slack_residual=slack_residual, multiplier_residual=multiplier_residual,
        )

    def norms(self, it: _Iterate, ev: _Evaluation, mu: float) -> KktResidualNorms:
        budget = float(np.max(np.abs(ev.multiplier_residual)))
        complementarity = abs(it.slack * it.multipliers[1] - mu) if self.has_inequality else 0.0
        return KktResidualNorms(
            stationarity=float(np.max(np.abs(ev.stationarity))),
            state=float(np.max(np.abs(ev.state_residual), initial=0.0)),
            budget=budget,
            complementarity=complementarity,
        )

    def barrier_objective(self, it: _Iterate, compliance: float, mu: float) -> float:
        value = compliance - 0.5 * self.epsilon * float(np.dot(it.delta, it.delta))
        value += mu * float(np.sum(np.log(it.delta) + np.log1p(-it.delta)))
        if self.has_inequality:
            value += mu * np.log(it.slack)
        return value

    def coupling(self, it: _Iterate, ev: _Evaluation):
        """
        Mixed second derivative d2 L / d delta d u restricted to free dofs, one row per element
        """
        mesh = self.model.mesh
        ku = self.model.element_displacements(it.u) @ self.model.stiff.matrix
        values = (-2.0 * self.simp * ev.young_d1)[:, None] * ku
        rows = np.repeat(np.arange(mesh.n_elements), 8)
        full = coo_matrix((values.ravel(), (rows, mesh.element_dofs.ravel())),
                          shape=(mesh.n_elements, mesh.n_dofs)).tocsc()
        return full[:, self.free]

    def delta_hessian(self, it: _Iterate, ev: _Evaluation, mu: float) -> np.ndarray:
        h = -self.simp * ev.young_d2 * ev.energies - self.epsilon
        h -= mu / it.delta ** 2 + mu / (1.0 - it.delta) ** 2
        h -= ev.constraint_hess.T @ it.multipliers
        return h

    def newton_direction(self, it: _Iterate, ev: _Evaluation, mu: float) -> _Iterate:
        h = self.delta_hessian(it, ev, mu)
        if np.any(h >= 0):
            raise _NotConcave()
        g = self.coupling(it, ev)
        k_free = reduce_matrix(ev.stiffness, self.model.load)
        schur = (2.0 * k_free + g.T @ diags(1.0 / h) @ g).tocsc()
        try:
            factorization = self.schur_analysis.factorize(schur)
        except SingularSystemError:
            raise _NotConcave()

        n_rows = len(it.multipliers)
        grads = ev.constraint_grads.T
        f_delta = ev.stationarity
        f_u = 2.0 * ev.state_residual

        r1 = f_u - g.T @ (f_delta / h)
        w = g.T @ (grads / h[:, None])
        s_inv_r1 = factorization.solve(r1)
        s_inv_w = np.column_stack([factorization.solve(w[:, j]) for j in range(n_rows)])

        d = np.zeros(n_rows)
        r_lambda = -ev.multiplier_residual
        if self.has_inequality:
            d[1] = -it.slack ** 2 / mu
            r_lambda[1] += it.slack ** 2 / mu * ev.slack_residual

        m = w.T @ s_inv_w - grads.T @ (grads / h[:, None]) - np.diag(d)
        rhs = r_lambda - grads.T @ (f_delta / h) - w.T @ s_inv_r1
        d_multipliers = np.linalg.solve(m, rhs)

        du_free = s_inv_r1 + s_inv_w @ d_multipliers
        d_delta = (-f_delta - g @ du_free + grads @ d_multipliers) / h
        du = np.zeros_like(it.u)
        du[self.free] = du_free

        d_slack = None
        if self.has_inequality:
            d_slack = (ev.slack_residual - d_multipliers[1]) * it.slack ** 2 / mu
        return _Iterate(delta=d_delta, u=du, multipliers=d_multipliers, slack=d_slack)

    def max_step(self, it: _Iterate, direction: _Iterate, tau: float) -> float:
        alpha = 1.0
        lower = direction.delta < 0
        if np.any(lower):
            alpha = min(alpha, float(np.min(-tau * it.delta[lower] / direction.delta[lower])))
        upper = direction.delta > 0
        if np.any(upper):
            alpha = min(alpha, float(np.min(tau * (1.0 - it.delta[upper]) / direction.delta[upper])))
        if self.has_inequality and direction.slack < 0:
            alpha = min(alpha, -tau * it.slack / direction.slack)
        return alpha


class WorstCaseAdversary(ABC):
    @abstractmethod
    def solve(self, rho_filtered: np.ndarray, warm: Optional[InnerSolution] = None) -> InnerSolution:
        """
        Maximize the barrier-regularized compliance over the admissible degradation fields

        Parameters
        ----------
        rho_filtered:
            Filtered density of the design under attack
        warm:
            Previous solution to start from, the barrier path then starts at its final level
        """


class BarrierAdversaryImpl(WorstCaseAdversary):
    log = logging.getLogger("BarrierAdversaryImpl")

    def __init__(self, model: FeModel, uncertainty_set: UncertaintySet, params: MaterialParams,
                 config: BarrierConfig, law: Optional[MaterialLaw] = None, epsilon: float = 0.0,
                 accept_local: bool = False):
        """
        Parameters
        ----------
        law:
            Degradation law, inverse law by default
        epsilon:
            Tikhonov weight, 0 switches the regularization off
        accept_local:
            Return the best iterate instead of raising when a non-concave stage stagnates
        """
        if epsilon < 0:
            raise ValueError(f"Tikhonov weight must be >= 0, got {epsilon}")
        self.model = model
        self.uncertainty_set = uncertainty_set
        self.params = params
        self.config = config
        self.law = law if law is not None else InverseLaw(params)
        self.epsilon = epsilon
        self.accept_local = accept_local
        self.schur_analysis = SymbolicAnalysis()

    def solve(self, rho_filtered: np.ndarray, warm: Optional[InnerSolution] = None) -> InnerSolution:
        problem = _BarrierProblem(self.model, rho_filtered, self.uncertainty_set, self.law, self.params, self.epsilon,
                                  self.schur_analysis)
        if self.uncertainty_set.is_empty_budget():
            return self._empty_budget_solution(problem)

        if warm is not None and warm.delta.shape == problem.rho_filtered.shape and np.any(warm.delta > 0):
            try:
                return self._follow_path(problem, self._warm_iterate(problem, warm), [self.config.mu_target])
            except InnerSolverError as e:
                self.log.warning(f"Warm start failed ({e}), restarting from the interior point")

        return self._follow_path(problem, self._cold_iterate(problem), self.config.schedule())

    def _empty_budget_solution(self, problem: _BarrierProblem) -> InnerSolution:
        delta = np.zeros_like(problem.rho_filtered)
        u, value = self.model.solve(problem.simp * self.law.young(delta))
        self.log.info("Empty uncertainty budget, the worst case is the nominal material")
        k = self.uncertainty_set.n_constraints
        return InnerSolution(
            delta=delta, u=u, multipliers=np.zeros(k), compliance=value, barrier_objective=value,
            mu=0.0, residuals=KktResidualNorms(0.0, 0.0, 0.0, 0.0), iterations=0, converged=True,
            law=self.law, epsilon=self.epsilon,
        )

    def _cold_iterate(self, problem: _BarrierProblem) -> _Iterate:
        delta = self.uncertainty_set.canonical_point(problem.rho_filtered)
        u, _ = self.model.solve(problem.simp * self.law.young(delta))
        slack = None
        multipliers = np.zeros(self.uncertainty_set.n_constraints)
        if problem.has_inequality:
            slack = -self.uncertainty_set.budget_value(problem.rho_filtered, delta).inequality
            multipliers[1] = self.config.mu_init / slack
        it = _Iterate(delta=delta, u=u, multipliers=multipliers, slack=slack)
        self._estimate_multipliers(problem, it, self.config.mu_init)
        return it

    def _warm_iterate(self, problem: _BarrierProblem, warm: InnerSolution) -> _Iterate:
        delta = np.clip(warm.delta, 1e-14, 1.0 - 1e-14)
        slack = None
        if problem.has_inequality:
            value = self.uncertainty_set.budget_value(problem.rho_filtered, delta).inequality
            slack = max(-value, warm.slack if warm.slack is not None else 0.0, 1e-14)
        return _Iterate(delta=delta, u=warm.u.copy(), multipliers=warm.multipliers.copy(), slack=slack)

    def _estimate_multipliers(self, problem: _BarrierProblem, it: _Iterate, mu: float):
        # Least-squares fit of the equality price to the stationarity rows
        ev = problem.evaluate(it, mu)
        grads = ev.constraint_grads
        target = ev.objective_grad + mu * (1.0 / it.delta - 1.0 / (1.0 - it.delta))
        if problem.has_inequality:
            target = target - it.multipliers[1] * grads[1]
        it.multipliers[0] = float(np.dot(grads[0], target) / np.dot(grads[0], grads[0]))

    def _follow_path(self, problem: _BarrierProblem, it: _Iterate, levels: List[float]) -> InnerSolution:
        total = 0
        converged = True
        use_ascent = False
        reached = levels[0]
        for index, mu in enumerate(levels):
            final = index == len(levels) - 1
            reached = mu
            if not use_ascent:
                try:
                    it, iterations, converged = self._newton_stage(problem, it, mu, final)
                except _NotConcave:
                    self.log.warning(f"Inner problem not concave at mu={mu:.1e} ({problem.law.name}), "
                                     f"switching to barrier gradient ascent")
                    use_ascent = True
                    iterations = 0
            if use_ascent:
                it, iterations, converged = self._ascent_stage(problem, it, mu, final)
            total += iterations
            self.log.debug(f"mu={mu:.1e}: {iterations} iterations, converged={converged}")
            if total > self.config.max_iter:
                converged = converged and final
                break

        solution = self._package(problem, it, reached, total, converged)
        if not converged:
            if use_ascent and self.accept_local:
                self.log.warning(f"Gradient ascent stagnated ({problem.law.name}); accepting the best local iterate")
                return solution
            if self.config.accept_acceptable and self._acceptable(solution.residuals):
                self.log.warning(f"Inner solve stopped at the acceptable level: {solution.residuals}")
                return replace(solution, acceptable=True)
            raise InnerSolverError(f"Inner solve did not converge after {total} iterations: {solution.residuals}",
                                   best=solution)

        if np.min(np.minimum(solution.delta, 1.0 - solution.delta)) < LICQ_MONITOR:
            self.log.warning("Degradation field touches a bound; the budget constraint may be degenerate")
        return solution

    def _tolerances(self, mu: float, final: bool):
        if final:
            return self.config.tol, self.config.constr_viol_tol, self.config.compl_inf_tol
        stage = max(self.config.tol, 0.1 * mu)
        return stage, stage, stage

    def _stage_converged(self, norms: KktResidualNorms, mu: float, final: bool) -> bool:
        tol, viol, compl = self._tolerances(mu, final)
        return norms.stationarity <= tol and norms.primal <= viol and norms.complementarity <= compl

    def _acceptable(self, norms: KktResidualNorms) -> bool:
        return max(norms.stationarity, norms.primal, norms.complementarity) <= self.config.acceptable_tol

    def _newton_stage(self, problem: _BarrierProblem, it: _Iterate, mu: float, final: bool):
        ev = problem.evaluate(it, mu)
        for iteration in range(self.config.max_stage_iter):
            if self._stage_converged(problem.norms(it, ev, mu), mu, final):
                return it, iteration, True

            direction = problem.newton_direction(it, ev, mu)
            alpha = problem.max_step(it, direction, self.config.fraction_to_boundary)
            merit = ev.merit()
            while True:
                trial = it.moved(direction, alpha)
                trial_ev = problem.evaluate(trial, mu)
                if trial_ev.merit() <= (1.0 - ARMIJO * alpha) * merit:
                    break
                alpha *= 0.5
                if alpha < MIN_STEP:
                    self.log.debug(f"Line search failed at mu={mu:.1e}, merit {merit:.3e}")
                    return it, iteration + 1, self._stage_converged(problem.norms(it, ev, mu), mu, final)
            it, ev = trial, trial_ev

        return it, self.config.max_stage_iter, self._stage_converged(problem.norms(it, ev, mu), mu, final)

    def _restore_equality(self, problem: _BarrierProblem, it: _Iterate):
        # The equality is linear in delta: one scaled correction restores it
        for _ in range(3):
            grads = self.uncertainty_set.budget_grad_delta(problem.rho_filtered, it.delta)[0]
            value = self.uncertainty_set.budget_value(problem.rho_filtered, it.delta).equality
            if abs(value) <= 1e-14:
                return
            scale = it.delta * (1.0 - it.delta)
            it.delta = np.clip(it.delta - value / np.dot(grads, scale * grads) * scale * grads, 1e-14, 1.0 - 1e-14)

    def _ascent_value(self, problem: _BarrierProblem, delta: np.ndarray, mu: float):
        """
        Reduced barrier objective phi(delta) with the state eliminated, and its gradient
        """
        if np.any(delta <= 0) or np.any(delta >= 1):
            return -np.inf, None, None
        inequality_value = None
        if problem.has_inequality:
            inequality_value = self.uncertainty_set.budget_value(problem.rho_filtered, delta).inequality
            if not inequality_value < 0:
                return -np.inf, None, None
        e, de, _ = self.law.derivatives(delta)
        try:
            u, value = self.model.solve(problem.simp * e)
        except SingularSystemError:
            return -np.inf, None, None
        phi = value - 0.5 * problem.epsilon * float(np.dot(delta, delta))
        phi += mu * float(np.sum(np.log(delta) + np.log1p(-delta)))
        grad = -problem.simp * de * self.model.element_energies(u) - problem.epsilon * delta
        grad += mu * (1.0 / delta - 1.0 / (1.0 - delta))
        if problem.has_inequality:
            phi += mu * np.log(-inequality_value)
            grad += mu * self.uncertainty_set.budget_grad_delta(problem.rho_filtered, delta)[1] / inequality_value
        return phi, grad, u

    def _ascent_stage(self, problem: _BarrierProblem, it: _Iterate, mu: float, final: bool):
        tau = self.config.fraction_to_boundary
        tol = self._tolerances(mu, final)[0]
        it = _Iterate(it.delta.copy(), it.u.copy(), it.multipliers.copy(), it.slack)
        self._restore_equality(problem, it)

        phi, grad, u = self._ascent_value(problem, it.delta, mu)
        if grad is None:
            raise InnerSolverError("Gradient ascent started outside the admissible set")
        step = None
        stalled = 0
        for iteration in range(self.config.ascent_max_iter):
            normal = self.uncertainty_set.budget_grad_delta(problem.rho_filtered, it.delta)[0]
            scale = it.delta * (1.0 - it.delta)
            price = float(np.dot(normal, scale * grad) / np.dot(normal, scale * normal))
            projected = grad - price * normal
            it.multipliers[0] = price
            it.u = u
            if float(np.max(np.abs(projected))) <= tol:
                return self._ascent_finish(problem, it, mu), iteration, True

            direction = scale * projected
            slope = float(np.dot(projected, direction))
            alpha_max = np.inf
            down = direction < 0
            if np.any(down):
                alpha_max = min(alpha_max, float(np.min(-tau * it.delta[down] / direction[down])))
            up = direction > 0
            if np.any(up):
                alpha_max = min(alpha_max, float(np.min(tau * (1.0 - it.delta[up]) / direction[up])))
            if not np.isfinite(alpha_max):
                alpha_max = 1.0
            alpha = alpha_max if step is None else min(alpha_max, 2.0 * step)

            while True:
                trial = it.delta + alpha * direction
                trial_phi, trial_grad, trial_u = self._ascent_value(problem, trial, mu)
                if trial_phi >= phi + ARMIJO * alpha * slope:
                    break
                alpha *= 0.5
                if alpha < MIN_STEP:
                    return self._ascent_finish(problem, it, mu), iteration + 1, False

            improvement = trial_phi - phi
            stalled = stalled + 1 if improvement <= 1e-15 * max(1.0, abs(phi)) else 0
            it.delta, phi, grad, u, step = trial, trial_phi, trial_grad, trial_u, alpha
            if stalled >= 20:
                it.u = u
                return self._ascent_finish(problem, it, mu), iteration + 1, False

        it.u = u
        return self._ascent_finish(problem, it, mu), self.config.ascent_max_iter, False

    def _ascent_finish(self, problem: _BarrierProblem, it: _Iterate, mu: float) -> _Iterate:
        if problem.has_inequality:
            it.slack = -self.uncertainty_set.budget_value(problem.rho_filtered, it.delta).inequality
            it.multipliers[1] = mu / it.slack
        return it

    def _package(self, problem: _BarrierProblem, it: _Iterate, mu: float, iterations: int,
                 converged: bool) -> InnerSolution:
        ev = problem.evaluate(it, mu)
        value = float(np.dot(self.model.force, it.u))
        return InnerSolution(
            delta=it.delta.copy(), u=it.u.copy(), multipliers=it.multipliers.copy(), compliance=value,
            barrier_objective=problem.barrier_objective(it, value, mu), mu=mu,
            residuals=problem.norms(it, ev, mu), iterations=iterations, converged=converged,
            law=self.law, epsilon=self.epsilon, slack=it.slack,
        )


def kkt_residual(model: FeModel, rho_filtered: np.ndarray, delta: np.ndarray, u: np.ndarray,
                 multipliers: np.ndarray, mu: float, uncertainty_set: UncertaintySet, params: MaterialParams,
                 law: Optional[MaterialLaw] = None, epsilon: float = 0.0,
                 slack: Optional[float] = None) -> KktResidual:
    """
    Residual blocks of the barrier optimality system

    Returns
    -------
    r_delta = dJ_mu/ddelta - multipliers @ dg/ddelta, r_u = f - K u (zero on fixed dofs),
    r_g = budget values (the inequality row shifted by its slack when one is given)
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0.0) or np.any(delta >= 1.0):
        raise ValueError("barrier residual needs a strictly interior degradation field")
    law = law if law is not None else InverseLaw(params)
    problem = _BarrierProblem(model, rho_filtered, uncertainty_set, law, params, epsilon)
    if uncertainty_set.has_inequality and slack is None:
        slack = max(-uncertainty_set.budget_value(rho_filtered, delta).inequality, np.finfo(float).tiny)
    ev = problem.evaluate(_Iterate(delta, np.asarray(u, dtype=float), np.asarray(multipliers, dtype=float), slack), mu)
    r_u = np.zeros(model.mesh.n_dofs)
    r_u[model.load.free_dofs] = ev.state_residual
    return KktResidual(r_delta=ev.stationarity, r_u=r_u, r_g=-ev.multiplier_residual)


def solve_worst_case(model: FeModel, rho_filtered: np.ndarray, uncertainty_set: UncertaintySet,
                     params: MaterialParams, config: BarrierConfig, warm: Optional[InnerSolution] = None,
                     law: Optional[MaterialLaw] = None) -> InnerSolution:
    return BarrierAdversaryImpl(model, uncertainty_set, params, config, law=law).solve(rho_filtered, warm)


def solve_worst_case_tikhonov(model: FeModel, rho_filtered: np.ndarray, uncertainty_set: UncertaintySet,
                              params: MaterialParams, epsilon: float, config: BarrierConfig,
                              warm: Optional[InnerSolution] = None) -> InnerSolution:
    if not epsilon > 0:
        raise ValueError(f"Tikhonov weight must be > 0, got {epsilon}")
    config = replace(config, mu_target=min(config.mu_target, TIKHONOV_MU_FLOOR))
    return BarrierAdversaryImpl(model, uncertainty_set, params, config, epsilon=epsilon).solve(rho_filtered, warm)
