from types import SimpleNamespace

import numpy as np
from behave import *

from robust_topopt.fe import build_mesh
from robust_topopt.filtering import apply, build_filter, chain_transpose

use_step_matcher("re")


@given(r"a density filter of radius (?P<radius>[\d.]+) on a 3x1 strip of unit elements")
def step_impl(context, radius):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args = SimpleNamespace()
    context.args.mesh = build_mesh(3, 1, 3.0, 1.0)
    context.args.filter = build_filter(context.args.mesh, float(radius))


@given(r"a density filter of radius (?P<radius>[\d.]+) on a (?P<nx>\d+)x(?P<ny>\d+) mesh of a (?P<width>[\d.]+) by (?P<height>[\d.]+) domain")
def step_impl(context, radius, nx, ny, width, height):
    context.args = SimpleNamespace()
    context.args.mesh = build_mesh(int(nx), int(ny), float(width), float(height))
    context.args.filter = build_filter(context.args.mesh, float(radius))


@then(r"the filter row of element (?P<e>\d+) is (?P<weights>[\d., ]+)")
def step_impl(context, e, weights):
    expected = [float(w) for w in weights.split(",")]
    np.testing.assert_allclose(context.args.filter.dense()[int(e)], expected, rtol=0, atol=1e-15)


@then(r"every filter row sums to one")
def step_impl(context):
    np.testing.assert_allclose(context.args.filter.dense().sum(axis=1), 1.0, rtol=0, atol=1e-14)


@then(r"a constant density of (?P<value>[\d.]+) is left unchanged by the filter")
def step_impl(context, value):
    rho = np.full(context.args.mesh.n_elements, float(value))
    np.testing.assert_allclose(apply(context.args.filter, rho), rho, rtol=1e-14)


@then(r"filtering and the transposed chain are adjoint for random fields with seed (?P<seed>\d+)")
def step_impl(context, seed):
    rng = np.random.default_rng(int(seed))
    spec = context.args.filter
    for _ in range(5):
        x = rng.random(context.args.mesh.n_elements)
        y = rng.standard_normal(context.args.mesh.n_elements)
        left = np.dot(apply(spec, x), y)
        right = np.dot(x, chain_transpose(spec, y))
        assert abs(left - right) <= 1e-12 * max(1.0, abs(left)), (left, right)


@then(r"filtering returns random fields unchanged")
def step_impl(context):
    rho = np.random.default_rng(3).random(context.args.mesh.n_elements)
    np.testing.assert_allclose(context.args.filter.apply(rho), rho, rtol=1e-15)


@then(r"every element is its own only neighbor")
def step_impl(context):
    for e in range(context.args.mesh.n_elements):
        np.testing.assert_array_equal(context.args.filter.neighbors(e), [e])


@then(r"building a filter of radius 0 raises an error")
def step_impl(context):
    mesh = build_mesh(4, 2, 2.0, 1.0)
    try:
        build_filter(mesh, 0.0)
    except ValueError:
        return
    raise AssertionError("radius 0 was accepted")
