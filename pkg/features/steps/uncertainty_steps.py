import numpy as np
from behave import *

from robust_topopt.fe.mesh import build_mesh
from robust_topopt.material import MaterialParams, young_inverse
from robust_topopt.uncertainty.sets import (
    InfeasibleSetError,
    budget_grad_delta,
    budget_grad_rho,
    budget_value,
    make_uncertainty_set,
    sample_feasible,
)

use_step_matcher("re")

P = 4.0


@given(r"an (?P<nx>\d+)x(?P<ny>\d+) mesh with a filtered density drawn in \[0\.2, 1\] with seed (?P<seed>\d+)")
def step_impl(context, nx, ny, seed):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args.mesh = build_mesh(int(nx), int(ny), 2.0, 1.0)
    rng = np.random.default_rng(int(seed))
    context.args.rho_filtered = rng.uniform(0.2, 1.0, context.args.mesh.n_elements)


@given(r"a filtered density of (?P<value>[\d.]+) everywhere")
def step_impl(context, value):
    context.args.rho_filtered = np.full(context.args.mesh.n_elements, float(value))


@given(r"a (?P<kind>linear|rho-weighted|average-quadratic) set with budget (?P<budget>[\d.]+)(?P<rho> and density weighting)?")
def step_impl(context, kind, budget, rho):
    context.args.uset = make_uncertainty_set(kind, context.args.mesh, P, float(budget), mean_budget=0.4, anchor=0.4,
                                             weighting="rho" if rho else "plain")


@then(r"the canonical point lies strictly inside the unit box")
def step_impl(context):
    delta = context.args.uset.canonical_point(context.args.rho_filtered)
    context.args.delta = delta
    assert np.all(delta > 0.0) and np.all(delta < 1.0)


@then(r"the canonical point satisfies the budget equality within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    value = budget_value(context.args.uset, context.args.rho_filtered, context.args.delta)
    assert abs(value.equality) <= float(tol), value


@then(r"the canonical point satisfies any inequality strictly")
def step_impl(context):
    value = context.args.uset.budget_value(context.args.rho_filtered, context.args.delta)
    assert value.inequality is None or value.inequality < 0, value


@then(r"two samples drawn with seed (?P<seed>\d+) are identical")
def step_impl(context, seed):
    first = sample_feasible(context.args.uset, context.args.rho_filtered, int(seed))
    second = sample_feasible(context.args.uset, context.args.rho_filtered, int(seed))
    np.testing.assert_array_equal(first, second)


@then(r"samples drawn with seeds (?P<first>\d+) to (?P<last>\d+) are feasible")
def step_impl(context, first, last):
    uset = context.args.uset
    for seed in range(int(first), int(last) + 1):
        delta = uset.sample_feasible(context.args.rho_filtered, seed)
        value = uset.budget_value(context.args.rho_filtered, delta)
        assert np.all(delta >= 0.0) and np.all(delta <= 1.0), seed
        assert abs(value.equality) <= 1e-9, (seed, value)
        assert value.inequality is None or value.inequality < 0, (seed, value)


@then(r"the budget gradient with respect to the filtered density matches central differences")
def step_impl(context):
    uset = context.args.uset
    rho = context.args.rho_filtered
    delta = np.random.default_rng(2).uniform(0.1, 0.9, len(rho))
    grad = budget_grad_rho(uset, rho, delta)
    h = 1e-6
    for e in range(0, len(rho), 5):
        step = np.zeros_like(rho)
        step[e] = h
        fd = (uset.budget_value(rho + step, delta).as_array() - uset.budget_value(rho - step, delta).as_array()) / (2 * h)
        np.testing.assert_allclose(grad[:, e], fd, rtol=1e-5, atol=1e-10)


@then(r"the budget gradient with respect to the filtered density is zero")
def step_impl(context):
    uset = context.args.uset
    delta = uset.canonical_point(context.args.rho_filtered)
    assert np.all(uset.budget_grad_rho(context.args.rho_filtered, delta) == 0.0)


@then(r"the budget gradient with respect to the degradation matches central differences")
def step_impl(context):
    uset = context.args.uset
    rho = context.args.rho_filtered
    delta = np.random.default_rng(5).uniform(0.1, 0.9, len(rho))
    grad = budget_grad_delta(uset, rho, delta)
    hess = uset.budget_hess_delta(rho, delta)
    center = uset.budget_value(rho, delta).as_array()
    for e in range(0, len(rho), 3):
        step = np.zeros_like(delta)
        step[e] = 1e-6
        fd = (uset.budget_value(rho, delta + step).as_array() - uset.budget_value(rho, delta - step).as_array()) / 2e-6
        np.testing.assert_allclose(grad[:, e], fd, rtol=1e-5, atol=1e-10)
        step[e] = 1e-4
        plus = uset.budget_value(rho, delta + step).as_array()
        minus = uset.budget_value(rho, delta - step).as_array()
        np.testing.assert_allclose(hess[:, e], (plus - 2 * center + minus) / 1e-8, rtol=1e-4, atol=1e-6)


@then(r"the reference degradation is (?P<value>[\d.]+) everywhere")
def step_impl(context, value):
    reference = context.args.uset.reference_delta()
    assert reference.shape == (context.args.mesh.n_elements,)
    np.testing.assert_array_equal(reference, float(value))


@then(r"the reference modulus is (?P<value>[\d.]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, value, tol):
    moduli = young_inverse(context.args.uset.reference_delta(), MaterialParams())
    assert np.max(np.abs(moduli - float(value))) <= float(tol)


@then(r"the set has an empty budget")
def step_impl(context):
    assert context.args.uset.is_empty_budget()


@then(r"constructing the canonical point raises an infeasible set error")
def step_impl(context):
    try:
        context.args.uset.canonical_point(context.args.rho_filtered)
    except InfeasibleSetError:
        return
    raise AssertionError("InfeasibleSetError not raised")


@then(r"creating a set of kind (?P<kind>\w+) raises an error")
def step_impl(context, kind):
    try:
        make_uncertainty_set(kind, context.args.mesh, P, 0.03)
    except ValueError:
        return
    raise AssertionError(f"set kind {kind} accepted")


@then(r"the canonical point equals (?P<value>[\d.]+) in every element within (?P<tol>[\d.e-]+)")
def step_impl(context, value, tol):
    delta = context.args.uset.canonical_point(context.args.rho_filtered)
    np.testing.assert_allclose(delta, float(value), rtol=0.0, atol=float(tol))


@then(r"the midpoints of (?P<pairs>\d+) random pairs of feasible samples are feasible")
def step_impl(context, pairs):
    uset = context.args.uset
    rho = context.args.rho_filtered
    rng = np.random.default_rng(17)
    for k in range(int(pairs)):
        first = uset.sample_feasible(rho, rng)
        second = uset.sample_feasible(rho, rng)
        middle = 0.5 * (first + second)
        value = uset.budget_value(rho, middle)
        assert np.all(middle >= 0.0) and np.all(middle <= 1.0), k
        assert abs(value.equality) <= 1e-10, (k, value)
        if value.inequality is not None:
            bound = 0.5 * (uset.budget_value(rho, first).inequality + uset.budget_value(rho, second).inequality)
            assert value.inequality <= bound + 1e-12, (k, value.inequality, bound)
            assert value.inequality < 0, (k, value)
