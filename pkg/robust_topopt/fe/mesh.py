import logging

import numpy as np

log = logging.getLogger(__name__)


class Mesh:
    """
    Structured grid of bilinear quadrilaterals on [0, width] x [0, height].

    Elements are numbered row by row from the bottom left corner
    (``e = iy * nx + ix``), nodes likewise (``n = j * (nx + 1) + i``).
    Every node carries two dofs ``(2n, 2n + 1)``; the element dof list walks
    the nodes counterclockwise starting at the bottom left one.
    """

    def __init__(self, nx: int, ny: int, width: float, height: float):
        if int(nx) != nx or nx < 1:
            raise ValueError(f"nx must be an integer >= 1, got {nx}")
        if int(ny) != ny or ny < 1:
            raise ValueError(f"ny must be an integer >= 1, got {ny}")
        if not width > 0:
            raise ValueError(f"width must be > 0, got {width}")
        if not height > 0:
            raise ValueError(f"height must be > 0, got {height}")

        self.nx = int(nx)
        self.ny = int(ny)
        self.width = float(width)
        self.height = float(height)

        self.dx = self.width / self.nx
        self.dy = self.height / self.ny

        self.n_elements = self.nx * self.ny
        self.n_nodes = (self.nx + 1) * (self.ny + 1)
        self.n_dofs = 2 * self.n_nodes

        self.element_volumes = np.full(self.n_elements, self.dx * self.dy)
        # |Omega| is defined as the sum so the partition identity holds bit for bit
        self.domain_measure = float(np.sum(self.element_volumes))

        ix, iy = self.element_grid_indices()
        self.element_centers = np.column_stack(((ix + 0.5) * self.dx, (iy + 0.5) * self.dy))

        n1 = iy * (self.nx + 1) + ix
        self.element_nodes = np.column_stack((n1, n1 + 1, n1 + self.nx + 2, n1 + self.nx + 1))
        self.element_dofs = np.repeat(2 * self.element_nodes, 2, axis=1) + np.tile([0, 1], 4)

        # Scatter pattern of row-major flattened 8x8 element blocks
        self.assembly_rows = np.repeat(self.element_dofs, 8, axis=1).ravel()
        self.assembly_cols = np.tile(self.element_dofs, (1, 8)).ravel()

    def element_grid_indices(self):
        e = np.arange(self.n_elements)
        return e % self.nx, e // self.nx

    @property
    def node_coordinates(self) -> np.ndarray:
        n = np.arange(self.n_nodes)
        i = n % (self.nx + 1)
        j = n // (self.nx + 1)
        return np.column_stack((i * self.dx, j * self.dy))

    def nodes_on_edge(self, edge: str) -> np.ndarray:
        """
        Node indices along one side of the rectangle, ordered by increasing coordinate

        Parameters
        ----------
        edge:
            One of ``left``, ``right``, ``bottom``, ``top``
        """
        i = np.arange(self.nx + 1)
        j = np.arange(self.ny + 1)
        if edge == "left":
            return j * (self.nx + 1)
        if edge == "right":
            return j * (self.nx + 1) + self.nx
        if edge == "bottom":
            return i
        if edge == "top":
            return self.ny * (self.nx + 1) + i
        raise ValueError(f"Unknown edge: {edge}")

    def __repr__(self):
        return f"Mesh({self.nx}x{self.ny} on {self.width}x{self.height})"


def build_mesh(nx: int, ny: int, width: float, height: float) -> Mesh:
    mesh = Mesh(nx, ny, width, height)
    log.debug(f"Built {mesh} with {mesh.n_elements} elements and {mesh.n_dofs} dofs")
    return mesh
