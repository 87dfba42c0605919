import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import cvxopt
import cvxopt.cholmod
import numpy as np
from scipy.sparse import coo_matrix, csc_matrix

from robust_topopt.fe.element import UnitElementStiffness, element_stiffness
from robust_topopt.fe.mesh import Mesh

log = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10

# Supernodal LL' only, so an indefinite matrix fails the numeric factorization
cvxopt.cholmod.options["supernodal"] = 2

_DIRECTIONS = {
    "+x": (1.0, 0.0),
    "-x": (-1.0, 0.0),
    "+y": (0.0, 1.0),
    "-y": (0.0, -1.0),
}


class SingularSystemError(RuntimeError):
    """The reduced system could not be factorized or is not positive definite"""


@dataclass(frozen=True)
class LoadCase:
    force: np.ndarray
    fixed_dofs: np.ndarray
    free_dofs: np.ndarray

    @property
    def reduced_force(self) -> np.ndarray:
        return self.force[self.free_dofs]


def make_load_case(mesh: Mesh, force: np.ndarray, fixed_dofs: Sequence[int]) -> LoadCase:
    fixed = np.unique(np.asarray(fixed_dofs, dtype=int))
    if fixed.size and (fixed[0] < 0 or fixed[-1] >= mesh.n_dofs):
        raise ValueError("fixed dof index out of range")
    free = np.setdiff1d(np.arange(mesh.n_dofs), fixed)
    if free.size == 0:
        raise ValueError("every dof is fixed")
    force = np.array(force, dtype=float)
    force[fixed] = 0.0
    return LoadCase(force=force, fixed_dofs=fixed, free_dofs=free)


def edge_line_load(mesh: Mesh, edge: str, start: float, end: float, magnitude: float, direction: str) -> np.ndarray:
    """
    Consistent nodal forces of a uniform line load on part of a grid edge

    Parameters
    ----------
    edge:
        ``bottom``/``top`` (interval along x) or ``left``/``right`` (interval along y)
    start, end:
        Loaded interval on the edge
    magnitude:
        Total force carried by the interval
    direction:
        One of ``+x``, ``-x``, ``+y``, ``-y``

    Returns
    -------
    The global load vector
    """
    if direction not in _DIRECTIONS:
        raise ValueError(f"Unknown load direction: {direction}")
    if not end > start:
        raise ValueError(f"load interval must have positive length, got [{start}, {end}]")

    nodes = mesh.nodes_on_edge(edge)
    along_x = edge in ("bottom", "top")
    pitch = mesh.dx if along_x else mesh.dy
    positions = np.arange(len(nodes)) * pitch

    traction = magnitude / (end - start)
    nodal = np.zeros(len(nodes))
    for k in range(len(nodes) - 1):
        xa, xb = positions[k], positions[k + 1]
        a, b = max(xa, start), min(xb, end)
        if b <= a:
            continue
        # Integrals of the two linear shape functions over [a, b]
        nodal[k] += traction * ((xb - a) ** 2 - (xb - b) ** 2) / (2.0 * pitch)
        nodal[k + 1] += traction * ((b - xa) ** 2 - (a - xa) ** 2) / (2.0 * pitch)

    if not np.any(nodal):
        raise ValueError(f"load interval [{start}, {end}] does not intersect the {edge} edge")

    force = np.zeros(mesh.n_dofs)
    ux, uy = _DIRECTIONS[direction]
    force[2 * nodes] += ux * nodal
    force[2 * nodes + 1] += uy * nodal
    return force


def clamped_edge_dofs(mesh: Mesh, edge: str) -> np.ndarray:
    nodes = mesh.nodes_on_edge(edge)
    return np.sort(np.concatenate((2 * nodes, 2 * nodes + 1)))


def assemble(mesh: Mesh, stiff: UnitElementStiffness, moduli: np.ndarray) -> csc_matrix:
    """
    Global stiffness K = sum_e E_e * K_e over the full dof set
    """
    moduli = np.asarray(moduli, dtype=float)
    if moduli.shape != (mesh.n_elements,):
        raise ValueError(f"expected {mesh.n_elements} moduli, got shape {moduli.shape}")
    if np.any(~(moduli > 0)):
        raise ValueError("element moduli must be strictly positive")
    values = (moduli[:, None] * stiff.matrix.ravel()[None, :]).ravel()
    return coo_matrix((values, (mesh.assembly_rows, mesh.assembly_cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsc()


def reduce_matrix(matrix: csc_matrix, load: LoadCase) -> csc_matrix:
    return matrix[load.free_dofs, :][:, load.free_dofs].tocsc()


class SpdFactorization:
    """
    Numeric Cholesky factor of a symmetric positive definite matrix.

    The factor is stored inside the ``SymbolicAnalysis`` that produced it and stays valid
    until that analysis factorizes the next matrix.
    """

    def __init__(self, factor, size: int):
        self._factor = factor
        self.size = size

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        b = cvxopt.matrix(np.ascontiguousarray(rhs.reshape(self.size, -1)))
        cvxopt.cholmod.solve(self._factor, b)
        return np.array(b).reshape(rhs.shape)


class SymbolicAnalysis:
    """
    CHOLMOD fill-reducing ordering and symbolic factorization of one sparsity pattern,
    reused by every numeric factorization of a matrix with that pattern
    """

    log = logging.getLogger("SymbolicAnalysis")

    def __init__(self):
        self._pattern = None
        self._factor = None
        self.analyses = 0

    def _analyze(self, matrix: cvxopt.spmatrix, pattern):
        self._factor = cvxopt.cholmod.symbolic(matrix)
        self._pattern = pattern
        self.analyses += 1
        self.log.debug(f"Symbolic analysis #{self.analyses} of a {matrix.size[0]}x{matrix.size[1]} pattern")

    def factorize(self, matrix: csc_matrix) -> SpdFactorization:
        matrix = csc_matrix(matrix)
        matrix.sort_indices()
        pattern = (matrix.shape, matrix.indptr.tobytes(), matrix.indices.tobytes())
        coo = matrix.tocoo()
        spmatrix = cvxopt.spmatrix(coo.data, coo.row.astype(int), coo.col.astype(int), size=matrix.shape)
        if pattern != self._pattern:
            self._analyze(spmatrix, pattern)
        try:
            try:
                cvxopt.cholmod.numeric(spmatrix, self._factor)
            except ValueError:
                # cvxopt dropped a different set of explicit zeros, analyze again
                self._analyze(spmatrix, pattern)
                cvxopt.cholmod.numeric(spmatrix, self._factor)
        except ArithmeticError as e:
            self._pattern = None
            raise SingularSystemError(f"Matrix is not positive definite: {e}") from e
        return SpdFactorization(self._factor, matrix.shape[0])


def factorize_spd(matrix: csc_matrix, analysis: Optional[SymbolicAnalysis] = None) -> SpdFactorization:
    analysis = analysis if analysis is not None else SymbolicAnalysis()
    return analysis.factorize(matrix)


def solve_state(matrix: csc_matrix, load: LoadCase, factorization: Optional[SpdFactorization] = None,
                analysis: Optional[SymbolicAnalysis] = None) -> np.ndarray:
    """
    Solve K u = f on the free dofs

    Parameters
    ----------
    matrix:
        Full (unreduced) global stiffness matrix
    load:
        Load vector and Dirichlet dofs
    factorization:
        Optional factorization of the reduced matrix to reuse
    analysis:
        Symbolic analysis to factorize with, a fresh one by default

    Returns
    -------
    The full displacement vector, zero on fixed dofs
    """
    reduced = reduce_matrix(matrix, load)
    rhs = load.reduced_force
    if factorization is None:
        factorization = factorize_spd(reduced, analysis)

    u_free = factorization.solve(rhs)
    scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    residual = rhs - reduced @ u_free
    if np.max(np.abs(residual), initial=0.0) / scale > RESIDUAL_TOLERANCE:
        # One step of iterative refinement
        u_free = u_free + factorization.solve(residual)
        residual = rhs - reduced @ u_free
        if np.max(np.abs(residual), initial=0.0) / scale > RESIDUAL_TOLERANCE:
            raise SingularSystemError(
                f"State residual {np.max(np.abs(residual)) / scale:.3e} above {RESIDUAL_TOLERANCE}")

    u = np.zeros(matrix.shape[0])
    u[load.free_dofs] = u_free
    return u


def compliance(force: np.ndarray, u: np.ndarray) -> float:
    return float(np.dot(force, u))


class FeModel:
    """
    Mesh, unit element stiffness and load case of one analysis
    """

    def __init__(self, mesh: Mesh, stiff: UnitElementStiffness, load: LoadCase):
        self.mesh = mesh
        self.stiff = stiff
        self.load = load
        # The reduced stiffness keeps one sparsity pattern for every modulus field
        self.analysis = SymbolicAnalysis()

    @property
    def force(self) -> np.ndarray:
        return self.load.force

    def stiffness_matrix(self, moduli: np.ndarray) -> csc_matrix:
        return assemble(self.mesh, self.stiff, moduli)

    def solve(self, moduli: np.ndarray) -> Tuple[np.ndarray, float]:
        u = solve_state(self.stiffness_matrix(moduli), self.load, analysis=self.analysis)
        return u, compliance(self.force, u)

    def element_displacements(self, u: np.ndarray) -> np.ndarray:
        return u[self.mesh.element_dofs]

    def element_energies(self, u: np.ndarray) -> np.ndarray:
        """
        u_e^T K_e u_e for every element, unit modulus
        """
        ue = self.element_displacements(u)
        return np.einsum("ei,ij,ej->e", ue, self.stiff.matrix, ue)


def build_cantilever_model(mesh: Mesh, nu: float, load_start: float, load_end: float,
                           magnitude: float, direction: str = "-y") -> FeModel:
    """
    Cantilever clamped on the left edge with a line load on the bottom edge
    """
    stiff = element_stiffness(mesh, nu)
    force = edge_line_load(mesh, "bottom", load_start, load_end, magnitude, direction)
    load = make_load_case(mesh, force, clamped_edge_dofs(mesh, "left"))
    log.info(f"Cantilever model on {mesh}: {len(load.free_dofs)} free dofs, total load {magnitude}")
    return FeModel(mesh, stiff, load)
