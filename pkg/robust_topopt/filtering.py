import logging
import math

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from robust_topopt.fe.mesh import Mesh

log = logging.getLogger(__name__)


class FilterSpec:
    """
    Linear-decay density filter.

    ``weights[e, j] = max(0, R - |c_j - c_e|) * v_j`` (unnormalized), ``normalizers[e] = sum_j weights[e, j]``.
    """

    def __init__(self, radius: float, weights: csr_matrix):
        self.radius = radius
        self.weights = weights
        self.normalizers = np.asarray(weights.sum(axis=1)).ravel()
        self._weights_t = weights.T.tocsr()

    def neighbors(self, e: int) -> np.ndarray:
        row = self.weights.getrow(e)
        return row.indices[row.data > 0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.weights @ np.asarray(rho, dtype=float)) / self.normalizers

    def chain_transpose(self, grad_filtered: np.ndarray) -> np.ndarray:
        return self._weights_t @ (np.asarray(grad_filtered, dtype=float) / self.normalizers)

    def dense(self) -> np.ndarray:
        """
        Row-normalized filter as a dense matrix, only meant for small meshes
        """
        return self.weights.toarray() / self.normalizers[:, None]


def build_filter(mesh: Mesh, radius: float) -> FilterSpec:
    """
    Build the filter by scanning the index window that can reach within ``radius``

    Parameters
    ----------
    mesh:
        Structured grid
    radius:
        Filter radius in length units, > 0

    Returns
    -------
    The filter
    """
    if not radius > 0:
        raise ValueError(f"filter radius must be > 0, got {radius}")

    wx = int(math.ceil(radius / mesh.dx))
    wy = int(math.ceil(radius / mesh.dy))
    ix, iy = mesh.element_grid_indices()
    e = np.arange(mesh.n_elements)

    rows, cols, values = [], [], []
    for dj in range(-wy, wy + 1):
        for di in range(-wx, wx + 1):
            distance = math.hypot(di * mesh.dx, dj * mesh.dy)
            if distance >= radius:
                continue
            jx, jy = ix + di, iy + dj
            inside = (jx >= 0) & (jx < mesh.nx) & (jy >= 0) & (jy < mesh.ny)
            neighbor = jy[inside] * mesh.nx + jx[inside]
            rows.append(e[inside])
            cols.append(neighbor)
            values.append((radius - distance) * mesh.element_volumes[neighbor])

    weights = coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_elements, mesh.n_elements),
    ).tocsr()
    log.debug(f"Filter radius {radius}: window {2 * wx + 1}x{2 * wy + 1}, {weights.nnz} weights")
    return FilterSpec(radius, weights)


def apply(spec: FilterSpec, rho: np.ndarray) -> np.ndarray:
    return spec.apply(rho)


def chain_transpose(spec: FilterSpec, grad_filtered: np.ndarray) -> np.ndarray:
    return spec.chain_transpose(grad_filtered)
