from dataclasses import dataclass

import numpy as np

from robust_topopt.fe.mesh import Mesh

# Counterclockwise reference corners of the bilinear quad
_CORNERS_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_CORNERS_ETA = np.array([-1.0, -1.0, 1.0, 1.0])

_GAUSS = 1.0 / np.sqrt(3.0)


def unit_plane_strain_tensor(nu: float) -> np.ndarray:
    """
    Isotropic plane strain elasticity tensor for a unit Young's modulus (Voigt notation)

    Parameters
    ----------
    nu:
        Poisson's ratio in [0, 0.5)

    Returns
    -------
    The symmetric 3x3 tensor
    """
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson's ratio must be in [0, 0.5), got {nu}")
    factor = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return factor * np.array([
        [1.0 - nu, nu, 0.0],
        [nu, 1.0 - nu, 0.0],
        [0.0, 0.0, (1.0 - 2.0 * nu) / 2.0],
    ])


@dataclass(frozen=True)
class UnitElementStiffness:
    matrix: np.ndarray
    strain_displacement: np.ndarray
    weights: np.ndarray
    tensor: np.ndarray

    @property
    def n_integration_points(self) -> int:
        return len(self.weights)


def _strain_displacement(xi: float, eta: float, dx: float, dy: float) -> np.ndarray:
    dn_dxi = 0.25 * _CORNERS_XI * (1.0 + eta * _CORNERS_ETA)
    dn_deta = 0.25 * _CORNERS_ETA * (1.0 + xi * _CORNERS_XI)
    # Axis aligned rectangle: the Jacobian is diagonal
    dn_dx = dn_dxi * 2.0 / dx
    dn_dy = dn_deta * 2.0 / dy

    b = np.zeros((3, 8))
    b[0, 0::2] = dn_dx
    b[1, 1::2] = dn_dy
    b[2, 0::2] = dn_dy
    b[2, 1::2] = dn_dx
    return b


def element_stiffness(mesh: Mesh, nu: float) -> UnitElementStiffness:
    """
    Unit-modulus stiffness of one grid element, 2x2 Gauss quadrature.
    The grid is uniform so a single matrix serves every element.
    """
    tensor = unit_plane_strain_tensor(nu)
    det_j = mesh.dx * mesh.dy / 4.0

    points = [(s * _GAUSS, t * _GAUSS) for t in (-1.0, 1.0) for s in (-1.0, 1.0)]
    b_matrices = np.array([_strain_displacement(xi, eta, mesh.dx, mesh.dy) for xi, eta in points])
    weights = np.full(len(points), det_j)

    matrix = np.einsum("lji,jk,lkm,l->im", b_matrices, tensor, b_matrices, weights)
    matrix = 0.5 * (matrix + matrix.T)
    return UnitElementStiffness(matrix=matrix, strain_displacement=b_matrices, weights=weights, tensor=tensor)
