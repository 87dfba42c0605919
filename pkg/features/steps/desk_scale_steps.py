import time

import numpy as np
from behave import *

from robust_topopt.adversary import BarrierConfig, ramp_continuation, solve_worst_case
from robust_topopt.config import load_config_env
from robust_topopt.fe import build_cantilever_model, build_mesh
from robust_topopt.material import MaterialParams
from robust_topopt.optimizer import NominalSolver, evaluate_report
from robust_topopt.runner import barrier_config, build_problem, build_uncertainty_set, optimize_config, outer_settings
from robust_topopt.uncertainty import make_uncertainty_set

use_step_matcher("re")


@given(r"the degradation preset with budgets (?P<budgets>[\d., and]+) and at most (?P<iterations>\d+) "
       r"outer iterations")
def step_impl(context, budgets, iterations):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    values = budgets.replace(" and ", ",")
    context.args.config = load_config_env("degradation", overrides=[
        f"uncertainty.budgets=[{values}]",
        f"optimizer.max_iter={iterations}",
    ])


@when(r"the nominal and worst-case designs are optimized for every budget")
def step_impl(context):
    config = context.args.config
    problem = build_problem(config)
    nominal = NominalSolver(problem, outer_settings(config)).solve()
    context.args.problem = problem
    context.args.nominal = nominal
    context.args.pairs = []
    for budget in sorted(config.uncertainty.budgets):
        result = optimize_config(config, budget, nominal=nominal)
        context.args.pairs.append((build_uncertainty_set(config, problem.mesh, budget), result.design))


@when(r"the designs are reported with (?P<steps>\d+) continuation steps")
def step_impl(context, steps):
    context.args.steps = int(steps)
    context.args.rows = evaluate_report(context.args.problem, context.args.nominal.design, context.args.pairs,
                                        barrier_config(context.args.config), int(steps))


@then(r"for every budget the robust topology has the lower worst-case increase")
def step_impl(context):
    for row in context.args.rows:
        assert row.wc_topo_worst_delta < row.nom_topo_worst_delta, row


@then(r"the worst-case increase of the nominal topology does not decrease with the budget")
def step_impl(context):
    increases = [row.nom_topo_worst_delta for row in context.args.rows]
    assert all(a <= b + 1e-6 for a, b in zip(increases, increases[1:])), increases


@then(r"for every budget the nominal cost of the robust topology is below its worst-case gain")
def step_impl(context):
    for row in context.args.rows:
        assert row.wc_topo_reference_delta < row.nom_topo_worst_delta - row.wc_topo_worst_delta, row


@then(r"for every budget and topology the continuation increase does not exceed the inverse-law increase")
def step_impl(context):
    for row in context.args.rows:
        assert row.nom_contin <= row.nom_inverse + 1e-6, row
        assert row.wc_contin <= row.wc_inverse + 1e-6, row


@then(r"at most (?P<percent>\d+) percent of the solid elements of each robust topology are partially degraded "
      r"in the linear-law worst case")
def step_impl(context, percent):
    problem = context.args.problem
    barrier = barrier_config(context.args.config)
    for uncertainty_set, design in context.args.pairs:
        result = ramp_continuation(problem.model, design.rho_filtered, uncertainty_set, problem.params,
                                   context.args.steps, barrier)
        solid = design.rho_filtered > 0.5
        delta = result.final.delta[solid]
        partial = np.count_nonzero((delta > 0.05) & (delta < 0.95))
        assert partial <= float(percent) / 100.0 * np.count_nonzero(solid), (uncertainty_set.budget, partial)


def _smooth_density(mesh) -> np.ndarray:
    # Same design at every resolution: a field of the element centers
    x, y = mesh.element_centers[:, 0] / mesh.width, mesh.element_centers[:, 1] / mesh.height
    return 0.65 + 0.3 * np.sin(3.0 * np.pi * x) * np.cos(2.0 * np.pi * y)


@given(r"a smooth density field on the cantilever with a rho-weighted budget of (?P<budget>[\d.]+)")
def step_impl(context, budget):
    context.args.params = MaterialParams(E0=1.0, E_D=0.7, nu=0.3, p=4.0)
    context.args.budget = float(budget)


@when(r"the worst case is timed on (?P<nx>\d+)x(?P<ny>\d+) and (?P<fine_nx>\d+)x(?P<fine_ny>\d+) meshes, "
      r"best of (?P<repeats>\d+) solves")
def step_impl(context, nx, ny, fine_nx, fine_ny, repeats):
    params = context.args.params
    context.args.timings = []
    for size in ((int(nx), int(ny)), (int(fine_nx), int(fine_ny))):
        mesh = build_mesh(size[0], size[1], 2.0, 1.0)
        model = build_cantilever_model(mesh, params.nu, 1.9, 2.0, 0.3, "-y")
        uncertainty_set = make_uncertainty_set("rho-weighted", mesh, params.p, context.args.budget)
        rho_filtered = _smooth_density(mesh)
        seconds = []
        for _ in range(int(repeats)):
            start = time.perf_counter()
            inner = solve_worst_case(model, rho_filtered, uncertainty_set, params, BarrierConfig())
            seconds.append(time.perf_counter() - start)
            assert inner.converged
        context.args.timings.append((min(seconds), inner.iterations))


@then(r"the finer mesh takes at most (?P<factor>\d+) times as long per adversary solve")
def step_impl(context, factor):
    (coarse, _), (fine, _) = context.args.timings
    assert fine <= float(factor) * coarse, (coarse, fine)


@then(r"the finer mesh needs at most (?P<percent>\d+) percent more Newton iterations")
def step_impl(context, percent):
    (_, coarse), (_, fine) = context.args.timings
    assert fine <= (1.0 + float(percent) / 100.0) * coarse, (coarse, fine)
