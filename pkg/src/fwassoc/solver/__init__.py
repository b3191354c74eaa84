from .frank_wolfe import (
    FrankWolfeSolver,
    FwSolution,
    FwState,
    SolverConfig,
    btls_step,
    fw_direction,
    fw_gap,
    round_association,
    solve_mpc,
)
from .problem import LineObjective, MpcProblem, gradient, objective, objective_binary
from .reference import (
    ProjectedGradientSolver,
    enumerate_binary,
    project_simplex,
    reference_solve,
)

__all__ = [
    "FrankWolfeSolver",
    "FwSolution",
    "FwState",
    "LineObjective",
    "MpcProblem",
    "ProjectedGradientSolver",
    "SolverConfig",
    "btls_step",
    "enumerate_binary",
    "fw_direction",
    "fw_gap",
    "gradient",
    "objective",
    "objective_binary",
    "project_simplex",
    "reference_solve",
    "round_association",
    "solve_mpc",
]
