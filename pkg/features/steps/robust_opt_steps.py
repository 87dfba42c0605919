from dataclasses import replace

import numpy as np
from behave import *

from robust_topopt.adversary import BarrierConfig, solve_worst_case
from robust_topopt.fe import build_cantilever_model, build_mesh
from robust_topopt.filtering import build_filter
from robust_topopt.material import InverseLaw, MaterialParams
from robust_topopt.models import KktResidualNorms
from robust_topopt.optimizer import (
    MmaOptimizer,
    MmaState,
    NominalSolver,
    OptimizationEventListener,
    OuterSettings,
    StaleInnerSolutionError,
    TopologyProblem,
    evaluate_report,
    marginal_gradient,
    mma_step,
    nominal_solve,
    optimize,
)
from robust_topopt.uncertainty import make_uncertainty_set

use_step_matcher("re")


class RecordingListener(OptimizationEventListener):
    def __init__(self):
        self.nominal = []
        self.outer = []
        self.inner = []

    def on_nominal_iteration(self, record):
        self.nominal.append(record)

    def on_outer_iteration(self, record):
        self.outer.append(record)

    def on_inner_solve(self, inner):
        self.inner.append(inner)


def _floats(text):
    return np.array([float(value) for value in text.split(",")])


def _mma_step(context, x, dfdx, g, dgdx, move):
    mma = MmaOptimizer(0.0, 1.0, move)
    context.args.mma = mma
    context.args.x_new = mma.step(x, dfdx, g, dgdx)


@when(r"an MMA step is taken from (?P<x>[\d., ]+) with a zero objective gradient and an inactive constraint")
def step_impl(context, x):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    x = _floats(x)
    state = MmaState()
    context.args.x_new = mma_step(state, x, np.zeros_like(x), -0.5, np.full_like(x, 1.0 / len(x)), (0.0, 1.0))
    assert state.iteration == 1 and state.multiplier == 0.0


@when(r"an MMA step with move (?P<move>[\d.]+) is taken from (?P<x>[\d., ]+) with objective gradient "
      r"(?P<df>[-\d.]+), constraint value (?P<g>[-\d.]+) and constraint gradient (?P<dg>[-\d.]+)")
def step_impl(context, move, x, df, g, dg):
    x = _floats(x)
    _mma_step(context, x, np.full_like(x, float(df)), float(g), np.full_like(x, float(dg)), float(move))


@then(r"the MMA design is (?P<expected>[\d., ]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, expected, tol):
    np.testing.assert_allclose(context.args.x_new, _floats(expected), rtol=0, atol=float(tol))


@then(r"the MMA volume multiplier is positive")
def step_impl(context):
    assert context.args.mma.state.multiplier > 0
    assert context.args.mma.state.iteration == 1


@then(r"an MMA step with a NaN objective gradient raises an error")
def step_impl(context):
    try:
        MmaOptimizer(0.0, 1.0).step(np.full(2, 0.5), np.array([np.nan, 1.0]), -0.1, np.ones(2))
    except ValueError:
        return
    raise AssertionError("non-finite gradient accepted")


@given(r"a topology problem on a (?P<nx>\d+)x(?P<ny>\d+) cantilever with volume fraction (?P<v>[\d.]+)")
def step_impl(context, nx, ny, v):
    params = MaterialParams(E0=1.0, E_D=0.7, nu=0.3, p=4.0)
    mesh = build_mesh(int(nx), int(ny), 2.0, 1.0)
    model = build_cantilever_model(mesh, params.nu, 1.9, 2.0, 0.3, "-y")
    filter_spec = build_filter(mesh, 2.0 * mesh.dx)
    context.args.problem = TopologyProblem(model, filter_spec, params, float(v), 0.01)
    context.args.barrier = BarrierConfig()
    context.args.listener = RecordingListener()


@given(r"a random design drawn in \[(?P<low>[\d.]+), 1\] with seed (?P<seed>\d+)")
def step_impl(context, low, seed):
    rng = np.random.default_rng(int(seed))
    context.args.design = context.args.problem.design(rng.uniform(float(low), 1.0, context.args.problem.mesh.n_elements))


@given(r"a (?P<kind>linear|rho-weighted) worst-case budget of (?P<budget>[\d.]+)")
def step_impl(context, kind, budget):
    problem = context.args.problem
    context.args.uset = make_uncertainty_set(kind, problem.mesh, problem.params.p, float(budget))


@given(r"an average-quadratic worst-case budget of (?P<budget>[\d.]+)")
def step_impl(context, budget):
    problem = context.args.problem
    context.args.uset = make_uncertainty_set("average-quadratic", problem.mesh, problem.params.p, float(budget))


@given(r"the adversary targets the barrier level (?P<mu>[\d.e-]+)")
def step_impl(context, mu):
    context.args.barrier = replace(context.args.barrier, mu_target=float(mu))


@when(r"the adversary attacks the design")
def step_impl(context):
    problem = context.args.problem
    context.args.inner = solve_worst_case(problem.model, context.args.design.rho_filtered, context.args.uset,
                                          problem.params, context.args.barrier)


@when(r"the nominal design is optimized for at most (?P<iterations>\d+) iterations")
def step_impl(context, iterations):
    settings = OuterSettings(max_iter=int(iterations))
    context.args.settings = settings
    context.args.nominal = NominalSolver(context.args.problem, settings, [context.args.listener]).solve()


@when(r"the worst-case design is optimized for at most (?P<iterations>\d+) iterations")
def step_impl(context, iterations):
    settings = OuterSettings(max_iter=int(iterations))
    context.args.result = optimize(context.args.problem, context.args.uset, context.args.barrier, settings,
                                   nominal=context.args.nominal, listeners=[context.args.listener])


@when(r"the nominal design is reported as the worst-case design with (?P<steps>\d+) continuation steps")
def step_impl(context, steps):
    design = context.args.nominal.design
    context.args.rows = evaluate_report(context.args.problem, design, [(context.args.uset, design)],
                                        context.args.barrier, int(steps))


@then(r"the nominal design is solid everywhere")
def step_impl(context):
    assert np.all(context.args.nominal.design.rho >= 1.0 - 1e-12)


@then(r"the nominal solve converged after (?P<iterations>\d+) iterations?")
def step_impl(context, iterations):
    assert context.args.nominal.converged
    assert len(context.args.nominal.history) == int(iterations)


@then(r"the nominal solve converged")
def step_impl(context):
    assert context.args.nominal.converged


@then(r"the nominal volume is (?P<v>[\d.]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, v, tol):
    volume = context.args.problem.volume(context.args.nominal.design.rho)
    assert abs(volume - float(v)) <= float(tol), volume


@then(r"the nominal compliance is below that of the uniform start")
def step_impl(context):
    nominal = context.args.nominal
    assert nominal.compliance < nominal.history[0].objective


@then(r"every nominal iterate respects the volume bound within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    problem = context.args.problem
    for record in context.args.listener.nominal:
        assert record.volume <= problem.volume_fraction + float(tol), record
    assert problem.volume(context.args.nominal.design.rho) <= problem.volume_fraction + float(tol)


@then(r"the marginal gradient equals the filtered SIMP sensitivity")
def step_impl(context):
    problem = context.args.problem
    design = context.args.design
    inner = context.args.inner
    grad = marginal_gradient(design, inner, context.args.uset, problem.params, problem.filter, problem.model)
    zero = np.zeros(problem.mesh.n_elements)
    expected = problem.filter.chain_transpose(problem.compliance_sensitivity(design.rho_filtered, zero, inner.u))
    np.testing.assert_allclose(grad, expected, rtol=1e-14, atol=0)


@then(r"no component of the marginal gradient is positive")
def step_impl(context):
    problem = context.args.problem
    grad = marginal_gradient(context.args.design, context.args.inner, context.args.uset, problem.params,
                             problem.filter, problem.model)
    assert np.all(grad <= 0.0)


def _expect_stale(context, inner):
    problem = context.args.problem
    try:
        marginal_gradient(context.args.design, inner, context.args.uset, problem.params, problem.filter,
                          problem.model)
    except StaleInnerSolutionError:
        return
    raise AssertionError("stale adversary solution accepted")


@then(r"a stationarity residual of (?P<residual>[\d.e-]+) makes the marginal gradient fail as stale")
def step_impl(context, residual):
    inner = replace(context.args.inner, residuals=KktResidualNorms(float(residual), 0.0, 0.0, 0.0))
    _expect_stale(context, inner)


@then(r"an unconverged adversary solution makes the marginal gradient fail as stale")
def step_impl(context):
    _expect_stale(context, replace(context.args.inner, converged=False))


@then(r"an adversary solution flagged at the acceptable level is still differentiated")
def step_impl(context):
    problem = context.args.problem
    inner = replace(context.args.inner, converged=False, acceptable=True)
    grad = marginal_gradient(context.args.design, inner, context.args.uset, problem.params, problem.filter,
                             problem.model)
    expected = marginal_gradient(context.args.design, context.args.inner, context.args.uset, problem.params,
                                 problem.filter, problem.model)
    np.testing.assert_array_equal(grad, expected)


@then(r"(?P<count>\d+) components of the marginal gradient match central differences with step "
      r"(?P<h>[\d.e-]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, count, h, tol):
    problem = context.args.problem
    design = context.args.design
    inner = context.args.inner
    uset = context.args.uset
    grad = marginal_gradient(design, inner, uset, problem.params, problem.filter, problem.model)
    h = float(h)

    def value(rho):
        shifted = problem.design(rho)
        return solve_worst_case(problem.model, shifted.rho_filtered, uset, problem.params, context.args.barrier,
                                warm=inner).barrier_objective

    rng = np.random.default_rng(0)
    for e in rng.choice(problem.mesh.n_elements, size=int(count), replace=False):
        step = np.zeros_like(design.rho)
        step[e] = h
        fd = (value(design.rho + step) - value(design.rho - step)) / (2 * h)
        assert abs(fd - grad[e]) <= float(tol) * abs(grad[e]), (e, fd, grad[e])


@then(r"the worst-case design is the nominal design")
def step_impl(context):
    result = context.args.result
    assert result.history == []
    np.testing.assert_array_equal(result.design.rho, context.args.nominal.design.rho)
    assert result.nominal_compliance == context.args.nominal.compliance


@then(r"the listener saw (?P<outer>\d+) worst-case iterations and (?P<inner>\d+) adversary solutions")
def step_impl(context, outer, inner):
    listener = context.args.listener
    assert len(listener.outer) == int(outer)
    assert len(listener.inner) == int(inner)
    assert [record.iteration for record in listener.outer] == list(range(1, int(outer) + 1))


@then(r"every worst-case iterate respects the volume bound within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    problem = context.args.problem
    for record in context.args.listener.outer:
        assert record.volume <= problem.volume_fraction + float(tol), record
    assert problem.volume(context.args.result.design.rho) <= problem.volume_fraction + float(tol)


@then(r"the robust topology shows no increase at the reference degradation")
def step_impl(context):
    (row,) = context.args.rows
    assert row.wc_topo_reference_delta == 0.0
    assert row.budget == context.args.uset.budget


@then(r"both topologies show the same worst-case increase")
def step_impl(context):
    (row,) = context.args.rows
    assert abs(row.nom_topo_worst_delta - row.wc_topo_worst_delta) <= 1e-9
    assert row.wc_topo_worst_delta >= row.wc_topo_reference_delta


@then(r"the inverse-law increase is at least the continuation increase, which is positive")
def step_impl(context):
    (row,) = context.args.rows
    assert row.has_continuation
    assert row.nom_contin > 0.0
    assert row.nom_inverse >= row.nom_contin - 1e-6
    assert row.nom_inverse >= row.nom_direct - 1e-6


@then(r"the worst-case increase is at least that of the uniform admissible degradation")
def step_impl(context):
    (row,) = context.args.rows
    problem = context.args.problem
    rho_filtered = context.args.nominal.design.rho_filtered
    weights = np.power(rho_filtered, problem.params.p)
    level = context.args.uset.budget * problem.mesh.domain_measure / float(np.dot(problem.mesh.element_volumes, weights))
    assert level < 1.0
    uniform = 100.0 * (problem.params.E0 / InverseLaw(problem.params).young(level) - 1.0)
    assert row.nom_topo_worst_delta >= uniform - 1e-3, (row.nom_topo_worst_delta, uniform)


@then(r"the single-call nominal solve returns the same design")
def step_impl(context):
    design = nominal_solve(context.args.problem, context.args.settings)
    np.testing.assert_array_equal(design.rho, context.args.nominal.design.rho)
