from dataclasses import replace

import numpy as np
from behave import *

from robust_topopt.adversary import (
    BarrierConfig,
    InnerSolverError,
    concavity_probe,
    direct_linear_worst_case,
    kkt_residual,
    ramp_continuation,
    solve_worst_case,
    solve_worst_case_tikhonov,
)
from robust_topopt.fe import build_cantilever_model, build_mesh
from robust_topopt.material import InverseLaw, MaterialParams, simp_factor
from robust_topopt.uncertainty import make_uncertainty_set

use_step_matcher("re")


def _compliance(context, delta, law=None):
    law = law if law is not None else InverseLaw(context.args.params)
    _, value = context.args.model.solve(context.args.simp * law.young(delta))
    return value


def _barrier_gap(context):
    inner = context.args.inner
    n = context.args.model.mesh.n_elements
    return 1e-6 * inner.compliance + 2 * n * context.args.config.mu_target


@given(r"an adversary problem on an? (?P<nx>\d+)x(?P<ny>\d+) cantilever with a density drawn in "
       r"\[(?P<low>[\d.]+), 1\] with seed (?P<seed>\d+)")
def step_impl(context, nx, ny, low, seed):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args.params = MaterialParams(E0=1.0, E_D=0.7, nu=0.3, p=4.0)
    mesh = build_mesh(int(nx), int(ny), 2.0, 1.0)
    context.args.model = build_cantilever_model(mesh, 0.3, 1.9, 2.0, 0.3, "-y")
    rng = np.random.default_rng(int(seed))
    context.args.rho_filtered = rng.uniform(float(low), 1.0, mesh.n_elements)
    context.args.simp = simp_factor(context.args.rho_filtered, context.args.params.p)
    context.args.config = BarrierConfig()


@given(r"a (?P<kind>linear|rho-weighted|average-quadratic) uncertainty budget of (?P<budget>[\d.]+)")
def step_impl(context, kind, budget):
    context.args.uset = make_uncertainty_set(kind, context.args.model.mesh, context.args.params.p, float(budget),
                                             mean_budget=0.4, anchor=0.4, weighting="plain")


@when(r"the worst case is solved")
def step_impl(context):
    context.args.inner = solve_worst_case(context.args.model, context.args.rho_filtered, context.args.uset,
                                          context.args.params, context.args.config)


@when(r"the worst case is solved again from the previous solution")
def step_impl(context):
    context.args.warm_inner = solve_worst_case(context.args.model, context.args.rho_filtered, context.args.uset,
                                               context.args.params, context.args.config, warm=context.args.inner)


@when(r"the worst case is solved with Tikhonov weight (?P<epsilon>[\d.]+)")
def step_impl(context, epsilon):
    context.args.tikhonov_inner = solve_worst_case_tikhonov(context.args.model, context.args.rho_filtered,
                                                            context.args.uset, context.args.params, float(epsilon),
                                                            context.args.config)


@when(r"the ramp continuation runs with (?P<steps>\d+) steps")
def step_impl(context, steps):
    context.args.continuation = ramp_continuation(context.args.model, context.args.rho_filtered, context.args.uset,
                                                  context.args.params, int(steps), context.args.config)


@then(r"the worst-case degradation is zero after (?P<iterations>\d+) iterations")
def step_impl(context, iterations):
    inner = context.args.inner
    assert np.all(inner.delta == 0.0)
    assert inner.iterations == int(iterations)
    assert inner.converged


@then(r"the worst-case compliance equals the pristine compliance")
def step_impl(context):
    _, value = context.args.model.solve(context.args.simp * context.args.params.E0)
    assert abs(context.args.inner.compliance - value) <= 1e-12 * value


@then(r"the worst case converged with optimality residuals below (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    inner = context.args.inner
    bound = float(tol)
    assert inner.converged
    assert inner.residuals.stationarity <= bound, inner.residuals
    assert inner.residuals.primal <= bound, inner.residuals
    residual = kkt_residual(context.args.model, context.args.rho_filtered, inner.delta, inner.u, inner.multipliers,
                            inner.mu, context.args.uset, context.args.params, epsilon=inner.epsilon,
                            slack=inner.slack)
    assert residual.max_norm() <= bound, residual.max_norm()


@then(r"the worst-case degradation lies strictly inside the unit box")
def step_impl(context):
    delta = context.args.inner.delta
    assert np.all(delta > 0.0) and np.all(delta < 1.0)


@then(r"the worst-case compliance exceeds the compliance at the canonical point")
def step_impl(context):
    start = context.args.uset.canonical_point(context.args.rho_filtered)
    assert context.args.inner.compliance > _compliance(context, start)


@then(r"(?P<n_dirs>\d+) random directions give a second variation at most (?P<bound>[\d.e-]+) "
      r"with identity error below (?P<tol>[\d.e-]+)")
def step_impl(context, n_dirs, bound, tol):
    inner = context.args.inner
    probe = concavity_probe(context.args.model, context.args.rho_filtered, inner.delta, inner.u,
                            context.args.params, int(n_dirs), seed=0)
    assert probe.n_dirs == int(n_dirs)
    assert probe.max_value <= float(bound), probe
    assert probe.identity_error <= float(tol), probe


@then(r"degradation-only directions with Tikhonov weight (?P<epsilon>[\d.]+) give a second variation "
      r"at most (?P<bound>[-\d.e]+)")
def step_impl(context, epsilon, bound):
    inner = context.args.inner
    probe = concavity_probe(context.args.model, context.args.rho_filtered, inner.delta, inner.u,
                            context.args.params, 100, epsilon=float(epsilon), delta_only=True, seed=1)
    assert probe.max_value <= float(bound) + 1e-12, probe


@then(r"(?P<samples>\d+) feasible samples do not exceed the worst-case compliance beyond the barrier gap")
def step_impl(context, samples):
    limit = context.args.inner.compliance + _barrier_gap(context)
    rng = np.random.default_rng(17)
    best = 0.0
    for _ in range(int(samples)):
        delta = context.args.uset.sample_feasible(context.args.rho_filtered, rng)
        best = max(best, _compliance(context, delta))
    assert best <= limit, (best, limit)


@then(r"moving budget between any 2 elements does not exceed the worst-case compliance beyond the barrier gap")
def step_impl(context):
    inner = context.args.inner
    limit = inner.compliance + _barrier_gap(context)
    mass = context.args.uset.budget_grad_delta(context.args.rho_filtered, inner.delta)[0]
    n = len(inner.delta)
    rng = np.random.default_rng(23)
    for _ in range(40):
        i, j = rng.choice(n, size=2, replace=False)
        for t in np.linspace(-1.0, 1.0, 21):
            delta = inner.delta.copy()
            delta[i] += t
            delta[j] -= t * mass[i] / mass[j]
            if np.all(delta >= 0.0) and np.all(delta <= 1.0):
                value = _compliance(context, delta)
                assert value <= limit, (i, j, t, value, limit)


@then(r"both worst cases agree within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    cold, warm = context.args.inner, context.args.warm_inner
    assert np.max(np.abs(cold.delta - warm.delta)) <= float(tol)
    assert abs(cold.compliance - warm.compliance) <= float(tol) * cold.compliance


@then(r"the warm solve needs fewer iterations")
def step_impl(context):
    assert context.args.warm_inner.iterations < context.args.inner.iterations


@then(r"the regularized compliance does not exceed the plain one")
def step_impl(context):
    assert context.args.tikhonov_inner.compliance <= context.args.inner.compliance + _barrier_gap(context)


@then(r"the continuation lower bound does not exceed its upper bound")
def step_impl(context):
    result = context.args.continuation
    assert len(result.stages) == 4
    assert result.q_values[0] == context.args.params.inverse_ramp_parameter
    assert result.q_values[-1] == 0.0
    assert result.lower_bound <= result.upper_bound * (1.0 + 1e-8)


@then(r"the direct linear-law worst case does not exceed the inverse-law worst case")
def step_impl(context):
    direct = direct_linear_worst_case(context.args.model, context.args.rho_filtered, context.args.uset,
                                      context.args.params, context.args.config)
    upper = context.args.continuation.upper_bound
    n = context.args.model.mesh.n_elements
    assert direct.compliance <= upper * (1.0 + 1e-6) + 2 * n * context.args.config.mu_target


@then(r"evaluating the optimality residual at a degradation touching 0 raises an error")
def step_impl(context):
    n = context.args.model.mesh.n_elements
    delta = np.full(n, 0.1)
    delta[0] = 0.0
    u = np.zeros(context.args.model.mesh.n_dofs)
    try:
        kkt_residual(context.args.model, context.args.rho_filtered, delta, u, np.zeros(1), 1e-3,
                     context.args.uset, context.args.params)
    except ValueError:
        return
    raise AssertionError("residual accepted a degradation on the bound")


@given(r"inner solves that only reach the acceptable level are returned flagged")
def step_impl(context):
    context.args.config = replace(context.args.config, accept_acceptable=True)


@given(r"a barrier tolerance of (?P<tol>[\d.e-]+) with an acceptable level of (?P<acceptable>[\d.e-]+)")
def step_impl(context, tol, acceptable):
    context.args.config = replace(context.args.config, tol=float(tol), acceptable_tol=float(acceptable))


@when(r"the worst case solve is attempted")
def step_impl(context):
    context.args.inner = None
    context.args.error = None
    try:
        context.args.inner = solve_worst_case(context.args.model, context.args.rho_filtered, context.args.uset,
                                              context.args.params, context.args.config)
    except InnerSolverError as e:
        context.args.error = e


@when(r"the worst case is solved with a small Tikhonov weight of (?P<epsilon>[\d.e-]+)")
def step_impl(context, epsilon):
    context.args.tikhonov_inner = solve_worst_case_tikhonov(context.args.model, context.args.rho_filtered,
                                                            context.args.uset, context.args.params, float(epsilon),
                                                            context.args.config)


@then(r"the solve ended at the target barrier level with complementarity at most (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    inner = context.args.inner
    assert inner.mu == context.args.config.mu_target, inner.mu
    assert inner.residuals.complementarity <= float(tol), inner.residuals
    if not context.args.uset.has_inequality:
        assert inner.residuals.complementarity == 0.0


@then(r"the warm solve needs at most (?P<iterations>\d+) iterations")
def step_impl(context, iterations):
    assert context.args.warm_inner.converged
    assert context.args.warm_inner.iterations <= int(iterations), context.args.warm_inner.iterations


@then(r"the regularized compliance is within (?P<tol>[\d.e-]+) of the plain one, relatively")
def step_impl(context, tol):
    plain, regularized = context.args.inner.compliance, context.args.tikhonov_inner.compliance
    assert abs(regularized - plain) <= float(tol) * plain, (regularized, plain)


@then(r"the regularized solve meets the acceptable level")
def step_impl(context):
    inner = context.args.tikhonov_inner
    assert inner.converged or inner.acceptable
    residuals = inner.residuals
    assert max(residuals.stationarity, residuals.primal) <= context.args.config.acceptable_tol, residuals


@then(r"the solve fails with an inner solver error whose best iterate is not converged")
def step_impl(context):
    assert context.args.inner is None, "the solve was accepted"
    best = context.args.error.best
    assert best is not None
    assert not best.converged and not best.acceptable


@then(r"that best iterate meets the acceptable level")
def step_impl(context):
    residuals = context.args.error.best.residuals
    bound = context.args.config.acceptable_tol
    assert max(residuals.stationarity, residuals.primal, residuals.complementarity) <= bound, residuals


@then(r"the solve returns a worst case flagged acceptable but not converged")
def step_impl(context):
    assert context.args.error is None, context.args.error
    inner = context.args.inner
    assert inner.acceptable and not inner.converged
    assert inner.mu == context.args.config.mu_target
    np.testing.assert_array_less(0.0, inner.delta)
