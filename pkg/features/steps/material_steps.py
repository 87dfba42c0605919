import numpy as np
from behave import *

from robust_topopt.material import (
    InverseLaw,
    MaterialParams,
    RampLaw,
    effective_modulus,
    linear_law,
    make_law,
    two_element_moduli,
    uniform_spread_increase,
    whole_domain_ratio,
    young_derivs,
    young_inverse,
    young_ramp,
)

use_step_matcher("re")


def _raises(function, *args):
    try:
        function(*args)
    except ValueError:
        return True
    return False


@given(r"material parameters E0 (?P<e0>[\d.]+), E_D (?P<e_d>[\d.]+), nu (?P<nu>[\d.]+) and p (?P<p>[\d.]+)")
def step_impl(context, e0, e_d, nu, p):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args.params = MaterialParams(E0=float(e0), E_D=float(e_d), nu=float(nu), p=float(p))


@then(r"the inverse law gives (?P<value>[\d.]+) at degradation (?P<delta>[\d.]+)")
def step_impl(context, value, delta):
    assert abs(young_inverse(float(delta), context.args.params) - float(value)) < 1e-12


@then(r"the ramp law with q (?P<q>[\d.]+) gives (?P<value>[\d.]+) at degradation (?P<delta>[\d.]+)")
def step_impl(context, q, value, delta):
    assert abs(young_ramp(float(delta), float(q), context.args.params) - float(value)) < 1e-12


@then(r"the ramp law with the inverse parameter matches the inverse law on 100 points within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    params = context.args.params
    delta = np.linspace(0.0, 1.0, 100)
    ramp = young_ramp(delta, params.inverse_ramp_parameter, params)
    inverse = young_inverse(delta, params)
    np.testing.assert_allclose(ramp, inverse, rtol=float(tol), atol=0)


@then(r"every law is exactly E0 at zero and E_D at full degradation")
def step_impl(context):
    params = context.args.params
    for law in (InverseLaw(params), linear_law(params), RampLaw(params, 0.3), RampLaw(params, 5.0)):
        assert law.young(0.0) == params.E0, law
        assert law.young(1.0) == params.E_D, law
        e, _, _ = law.derivatives(np.array([0.0, 1.0]))
        np.testing.assert_array_equal(e, [params.E0, params.E_D])


@then(r"the derivatives of the (?P<kind>inverse|linear|ramp) law match central differences")
def step_impl(context, kind):
    law = make_law(kind, context.args.params, q=2.0 if kind == "ramp" else None)
    delta = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    _, de, d2e = young_derivs(delta, law)
    _, de_plus, _ = law.derivatives(delta + h)
    _, de_minus, _ = law.derivatives(delta - h)
    np.testing.assert_allclose(de, (law.young(delta + h) - law.young(delta - h)) / (2 * h), rtol=1e-7, atol=1e-10)
    np.testing.assert_allclose(d2e, (de_plus - de_minus) / (2 * h), rtol=1e-6, atol=1e-9)
    assert np.all(de < 0)


@then(r"spreading budget (?P<budget>[\d.]+) over volume fraction (?P<v>[\d.]+) increases the compliance by (?P<increase>[\d.]+) percent within (?P<tol>[\d.]+)")
def step_impl(context, budget, v, increase, tol):
    value = 100.0 * uniform_spread_increase(float(budget), float(v), context.args.params)
    assert abs(value - float(increase)) <= float(tol), value


@then(r"degrading the whole domain multiplies the compliance by (?P<ratio>[\d.]+)")
def step_impl(context, ratio):
    assert abs(whole_domain_ratio(context.args.params) - float(ratio)) < 1e-12


@then(r"the effective modulus at density (?P<rho>[\d.]+) and degradation (?P<delta>[\d.]+) is (?P<value>[\d.]+)")
def step_impl(context, rho, delta, value):
    assert abs(effective_modulus(float(rho), float(delta), context.args.params) - float(value)) < 1e-12


@then(r"the two-element moduli of the inverse law never exceed those of the linear law for budget (?P<budget>[\d.]+)")
def step_impl(context, budget):
    params = context.args.params
    inverse = two_element_moduli(InverseLaw(params), float(budget))
    linear = two_element_moduli(linear_law(params), float(budget))
    assert inverse.shape == (101, 2)
    assert np.all(inverse <= linear + 1e-15)
    assert np.any(inverse < linear - 1e-3)


@then(r"evaluating the inverse law at degradation (?P<delta>[\d.]+) raises an error")
def step_impl(context, delta):
    assert _raises(young_inverse, float(delta), context.args.params)


@then(r"a negative ramp parameter raises an error")
def step_impl(context):
    assert _raises(RampLaw, context.args.params, -0.5)


@then(r"an E_D above E0 raises an error")
def step_impl(context):
    assert _raises(MaterialParams, 1.0, 1.2, 0.3, 4.0)
