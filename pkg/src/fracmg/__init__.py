"""Multigrid solvers for 2-D space-fractional diffusion on uniform P1 meshes."""

from .assembly import (
    GeneratorVector,
    build_dense,
    build_generator,
    build_load,
    generator_matrix,
    mass_entry,
)
from .errors import CacheIntegrityError, ConfigError
from .kernel import (
    DirectionalMeasure,
    KernelParams,
    axis_measure,
    bilinear_entry,
    discretize_measure,
    entry_interaction_I,
    pair_interaction,
    rl_indicator_integral,
)
from .mesh import Hierarchy, MeshLevel, build_hierarchy, prolongation_matrix, prolongation_weights
from .multigrid import LevelOperator, MultigridSolver, SolveReport
from .toeplitz import ToeplitzOperator, apply_stiffness, embed, restrict, toeplitz_matvec

__version__ = "0.1.0"
