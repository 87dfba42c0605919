from types import SimpleNamespace

import numpy as np
from behave import *

from robust_topopt.fe import (
    FeModel,
    Mesh,
    SingularSystemError,
    SymbolicAnalysis,
    assemble,
    build_cantilever_model,
    build_mesh,
    clamped_edge_dofs,
    edge_line_load,
    element_stiffness,
    factorize_spd,
    make_load_case,
    reduce_matrix,
    solve_state,
    unit_plane_strain_tensor,
)
from robust_topopt.material import InverseLaw, MaterialParams

use_step_matcher("re")


@given(r"a structured mesh of (?P<nx>\d+)x(?P<ny>\d+) elements on a (?P<width>[\d.]+) by (?P<height>[\d.]+) domain")
def step_impl(context, nx, ny, width, height):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args = SimpleNamespace()
    context.args.mesh = build_mesh(int(nx), int(ny), float(width), float(height))


@when(r"the unit element stiffness is computed with Poisson ratio (?P<nu>[\d.]+)")
def step_impl(context, nu):
    context.args.stiff = element_stiffness(context.args.mesh, float(nu))


@then(r"the element stiffness is symmetric with (?P<zeros>\d+) zero eigenvalues and no negative ones")
def step_impl(context, zeros):
    ke = context.args.stiff.matrix
    np.testing.assert_allclose(ke, ke.T, rtol=0, atol=1e-14 * np.max(np.abs(ke)))
    eigenvalues = np.linalg.eigvalsh(ke)
    scale = np.max(np.abs(eigenvalues))
    assert np.sum(np.abs(eigenvalues) < 1e-10 * scale) == int(zeros), eigenvalues
    assert np.all(eigenvalues > -1e-10 * scale), eigenvalues


@given(r"a cantilever model with (?P<nx>\d+)x(?P<ny>\d+) elements")
def step_impl(context, nx, ny):
    """
    Parameters
    ----------
    context : behave.runner.Context
    """
    context.args = SimpleNamespace()
    context.args.params = MaterialParams(E0=1.0, E_D=0.7, nu=0.3, p=4.0)
    mesh = build_mesh(int(nx), int(ny), 2.0, 1.0)
    context.args.model = build_cantilever_model(mesh, 0.3, 1.9, 2.0, 0.3, "-y")
    context.args.compliances = []


@then(r"the nodal forces sum to (?P<fy>[-\d.]+) in y and (?P<fx>[-\d.]+) in x")
def step_impl(context, fy, fx):
    force = context.args.model.force
    assert abs(np.sum(force[1::2]) - float(fy)) < 1e-14
    assert abs(np.sum(force[0::2]) - float(fx)) < 1e-14


def _solve(context, delta):
    model = context.args.model
    law = InverseLaw(context.args.params)
    moduli = np.ones(model.mesh.n_elements) * law.young(delta)
    context.args.moduli = moduli
    u, value = model.solve(moduli)
    context.args.u = u
    context.args.compliances.append(value)


@when(r"the cantilever is solved with pristine solid material")
def step_impl(context):
    _solve(context, np.zeros(context.args.model.mesh.n_elements))


@when(r"the cantilever is solved with fully degraded solid material for E_D (?P<e_d>[\d.]+)")
def step_impl(context, e_d):
    assert float(e_d) == context.args.params.E_D
    _solve(context, np.ones(context.args.model.mesh.n_elements))


@then(r"the equilibrium residual on the free dofs is below (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    model = context.args.model
    k = model.stiffness_matrix(context.args.moduli)
    residual = (model.force - k @ context.args.u)[model.load.free_dofs]
    assert np.max(np.abs(residual)) < float(tol)
    assert np.all(context.args.u[model.load.fixed_dofs] == 0)
    np.testing.assert_array_equal(solve_state(k, model.load), context.args.u)


@then(r"the compliance is positive")
def step_impl(context):
    assert context.args.compliances[-1] > 0


@then(r"the degraded to pristine compliance ratio is (?P<ratio>[\d.]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, ratio, tol):
    pristine, degraded = context.args.compliances
    assert abs(degraded / pristine / float(ratio) - 1.0) <= float(tol), degraded / pristine


@then(r"building a mesh with 0 elements in x raises an error naming nx")
def step_impl(context):
    try:
        Mesh(0, 4, 1.0, 1.0)
    except ValueError as e:
        assert "nx" in str(e)
    else:
        raise AssertionError("mesh with nx = 0 was accepted")


@then(r"assembling with a zero modulus in element (?P<element>\d+) raises an error")
def step_impl(context, element):
    model = context.args.model
    moduli = np.ones(model.mesh.n_elements)
    moduli[int(element)] = 0.0
    try:
        assemble(model.mesh, model.stiff, moduli)
    except ValueError:
        return
    raise AssertionError("zero modulus accepted")


@then(r"assembling the unit moduli gives a symmetric matrix whose rows sum to zero")
def step_impl(context):
    model = context.args.model
    k = assemble(model.mesh, model.stiff, np.ones(model.mesh.n_elements)).toarray()
    scale = np.max(np.abs(k))
    np.testing.assert_allclose(k, k.T, rtol=0, atol=1e-14 * scale)
    # Rigid translations in x and y produce no nodal forces
    np.testing.assert_allclose(k[:, 0::2].sum(axis=1), 0.0, atol=1e-12 * scale)
    np.testing.assert_allclose(k[:, 1::2].sum(axis=1), 0.0, atol=1e-12 * scale)


@then(r"the unit material tensor for Poisson ratio (?P<nu>[\d.]+) has entries (?P<c11>[\d.]+), (?P<c12>[\d.]+) and (?P<c33>[\d.]+)")
def step_impl(context, nu, c11, c12, c33):
    tensor = unit_plane_strain_tensor(float(nu))
    expected = np.array([
        [float(c11), float(c12), 0.0],
        [float(c12), float(c11), 0.0],
        [0.0, 0.0, float(c33)],
    ])
    np.testing.assert_allclose(tensor, expected, rtol=1e-14, atol=1e-14)


def _square_element(nu: float) -> np.ndarray:
    # Plane-stress formula of the square bilinear element with plane-strain constants
    e = 1.0 / (1.0 - nu ** 2)
    n = nu / (1.0 - nu)
    k = np.array([
        1 / 2 - n / 6, 1 / 8 + n / 8, -1 / 4 - n / 12, -1 / 8 + 3 * n / 8,
        -1 / 4 + n / 12, -1 / 8 - n / 8, n / 6, 1 / 8 - 3 * n / 8,
    ])
    layout = np.array([
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ])
    return e / (1.0 - n ** 2) * k[layout]


@then(r"every diagonal entry of the element stiffness is (?P<value>[\d.]+)")
def step_impl(context, value):
    np.testing.assert_allclose(np.diag(context.args.stiff.matrix), float(value), rtol=1e-13, atol=0)


@then(r"the element stiffness has the spectrum of the closed-form square element for Poisson ratio (?P<nu>[\d.]+)")
def step_impl(context, nu):
    expected = np.linalg.eigvalsh(_square_element(float(nu)))
    actual = np.linalg.eigvalsh(context.args.stiff.matrix)
    np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-12)


@when(r"the cantilever is solved with moduli drawn in \[(?P<low>[\d.]+), 1\] with seed (?P<seed>\d+)")
def step_impl(context, low, seed):
    model = context.args.model
    moduli = np.random.default_rng(int(seed)).uniform(float(low), 1.0, model.mesh.n_elements)
    context.args.moduli = moduli
    u, value = model.solve(moduli)
    context.args.u = u
    context.args.compliances.append(value)


@then(r"u\^T K v equals v\^T K u for (?P<pairs>\d+) random vector pairs within (?P<tol>[\d.e-]+)")
def step_impl(context, pairs, tol):
    k = context.args.model.stiffness_matrix(context.args.moduli)
    rng = np.random.default_rng(8)
    for _ in range(int(pairs)):
        u, v = rng.standard_normal((2, k.shape[0]))
        forward, backward = u @ (k @ v), v @ (k @ u)
        scale = np.linalg.norm(u) * np.linalg.norm(k @ v)
        assert abs(forward - backward) <= float(tol) * scale, (forward, backward)


@then(r"the compliance equals u\^T K u within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    u = context.args.u
    energy = u @ (context.args.model.stiffness_matrix(context.args.moduli) @ u)
    value = context.args.compliances[-1]
    assert abs(value - energy) <= float(tol) * abs(value), (value, energy)


def _rescaled_compliance(context, load_factor: float = 1.0, modulus_factor: float = 1.0) -> float:
    model = context.args.model
    load = make_load_case(model.mesh, load_factor * model.force, model.load.fixed_dofs)
    _, value = FeModel(model.mesh, model.stiff, load).solve(modulus_factor * context.args.moduli)
    return value


@then(r"doubling the load multiplies the compliance by (?P<factor>[\d.]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, factor, tol):
    value = _rescaled_compliance(context, load_factor=2.0)
    expected = float(factor) * context.args.compliances[-1]
    assert abs(value - expected) <= float(tol) * expected, (value, expected)


@then(r"multiplying every modulus by (?P<factor>[\d.]+) divides the compliance by (?P<divisor>[\d.]+) "
      r"within (?P<tol>[\d.e-]+)")
def step_impl(context, factor, divisor, tol):
    value = _rescaled_compliance(context, modulus_factor=float(factor))
    expected = context.args.compliances[-1] / float(divisor)
    assert abs(value - expected) <= float(tol) * expected, (value, expected)


@then(r"(?P<count>\d+) random increases of the moduli never increase the compliance")
def step_impl(context, count):
    model = context.args.model
    rng = np.random.default_rng(21)
    for k in range(int(count)):
        increase = np.where(rng.random(model.mesh.n_elements) < 0.3, rng.uniform(0.0, 0.5, model.mesh.n_elements), 0.0)
        _, value = model.solve(context.args.moduli + increase)
        assert value <= context.args.compliances[-1] * (1.0 + 1e-12), (k, value, context.args.compliances[-1])


@when(r"the nodes are displaced by u_x = (?P<strain>[\d.]+) x")
def step_impl(context, strain):
    mesh = context.args.mesh
    context.args.strain = float(strain)
    u = np.zeros(mesh.n_dofs)
    u[0::2] = context.args.strain * mesh.node_coordinates[:, 0]
    context.args.u = u
    context.args.k = assemble(mesh, context.args.stiff, np.ones(mesh.n_elements))


@then(r"the interior node carries no force")
def step_impl(context):
    mesh = context.args.mesh
    coordinates = mesh.node_coordinates
    interior = np.flatnonzero((coordinates[:, 0] > 0) & (coordinates[:, 0] < mesh.width)
                              & (coordinates[:, 1] > 0) & (coordinates[:, 1] < mesh.height))
    assert interior.size == 1
    force = context.args.k @ context.args.u
    np.testing.assert_allclose(force[[2 * interior[0], 2 * interior[0] + 1]], 0.0, atol=1e-14)


@then(r"the strain energy is half of C11 times the squared strain times the area within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    u = context.args.u
    c11 = context.args.stiff.tensor[0, 0]
    expected = 0.5 * c11 * context.args.strain ** 2 * context.args.mesh.domain_measure
    energy = 0.5 * u @ (context.args.k @ u)
    assert abs(energy - expected) <= float(tol) * expected, (energy, expected)


@then(r"every element holds the energy C11 times the squared strain times its volume")
def step_impl(context):
    mesh = context.args.mesh
    load = make_load_case(mesh, np.zeros(mesh.n_dofs), clamped_edge_dofs(mesh, "left"))
    energies = FeModel(mesh, context.args.stiff, load).element_energies(context.args.u)
    expected = context.args.stiff.tensor[0, 0] * context.args.strain ** 2 * mesh.element_volumes
    np.testing.assert_allclose(energies, expected, rtol=1e-12, atol=0)


@when(r"a bar with moduli (?P<first>[\d.]+) and (?P<second>[\d.]+), clamped left and pulled by (?P<force>[\d.]+) "
      r"on the right edge, is solved")
def step_impl(context, first, second, force):
    mesh = context.args.mesh
    load = edge_line_load(mesh, "right", 0.0, mesh.height, float(force), "+x")
    model = FeModel(mesh, element_stiffness(mesh, 0.0), make_load_case(mesh, load, clamped_edge_dofs(mesh, "left")))
    context.args.u, context.args.bar_compliance = model.solve(np.array([float(first), float(second)]))


@then(r"the right edge moves by (?P<value>[\d.]+) in x within (?P<tol>[\d.e-]+)")
def step_impl(context, value, tol):
    nodes = context.args.mesh.nodes_on_edge("right")
    np.testing.assert_allclose(context.args.u[2 * nodes], float(value), rtol=0, atol=float(tol))
    np.testing.assert_allclose(context.args.u[1::2], 0.0, rtol=0, atol=float(tol))


@then(r"the bar compliance is (?P<value>[\d.]+) within (?P<tol>[\d.e-]+)")
def step_impl(context, value, tol):
    assert abs(context.args.bar_compliance - float(value)) <= float(tol), context.args.bar_compliance


@then(r"the state solves performed (?P<count>\d+) symbolic analysis")
def step_impl(context, count):
    assert context.args.model.analysis.analyses == int(count), context.args.model.analysis.analyses


@then(r"a freshly analyzed solve gives the same displacements within (?P<tol>[\d.e-]+)")
def step_impl(context, tol):
    model = context.args.model
    u = solve_state(model.stiffness_matrix(context.args.moduli), model.load, analysis=SymbolicAnalysis())
    scale = np.max(np.abs(u))
    np.testing.assert_allclose(context.args.u, u, rtol=0, atol=float(tol) * scale)


@then(r"factorizing the negated reduced stiffness raises a singular system error")
def step_impl(context):
    model = context.args.model
    reduced = reduce_matrix(model.stiffness_matrix(context.args.moduli), model.load)
    try:
        factorize_spd(-reduced)
    except SingularSystemError:
        return
    raise AssertionError("negative definite matrix was factorized")
