from .element import UnitElementStiffness, element_stiffness, unit_plane_strain_tensor
from .mesh import Mesh, build_mesh
from .solver import (
    FeModel,
    LoadCase,
    SingularSystemError,
    SpdFactorization,
    SymbolicAnalysis,
    assemble,
    build_cantilever_model,
    clamped_edge_dofs,
    compliance,
    edge_line_load,
    factorize_spd,
    make_load_case,
    reduce_matrix,
    solve_state,
)
