"""Finite element simulator for reverse-osmosis cross-flow membrane channels.

Steady incompressible flow coupled to solute transport in a 2D feed channel;
the membrane permeability law (permeate flux driven by the transmembrane
minus osmotic pressure) is imposed weakly on the membrane walls.
"""

from .geometry import ChannelGeometry, GradingMode, GradingSpec, SpacerConfig
from .mesh import (
    BoundaryTag,
    Mesh,
    MeshError,
    build_rectangle_mesh,
    build_spacer_mesh,
    mesh_quality,
    validate_mesh,
)
from .msh_io import MshParseError, read_msh, write_msh
from .params import NitscheParams, PhysicalParams
from .spaces import DofMap, FemSpaces, build_dofmap, parabolic_inlet
from .assembly import SparseSystem, apply_dirichlet
from .solver import (
    ConvergenceTrace,
    LinearSolveError,
    NonConvergenceError,
    SolutionFields,
    SolverControl,
    compute_residuals,
    divergence_residual,
    picard_solve,
    solve_linear,
)
from .oracles import FlowNumbers, berman_dp, darcy_starling, poiseuille_dp, vant_hoff
from .postproc import (
    LineProfile,
    boundary_flux_report,
    concentration_undershoot,
    export_csv,
    membrane_flux_report,
    permeate_profile,
    pressure_drop_profile,
    read_csv,
    total_mass_flow,
    volumetric_flow_per_width,
)
from .vtk_io import export_vtk, read_vtk
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"
