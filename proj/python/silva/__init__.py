"""Incompressible flow on moving Voronoi meshes."""

from ._silva import (
    CaseSpec,
    Case,
    Domain,
    InvalidInput,
    IoError,
    Mesh,
    SolverError,
    build_mesh,
    check_config,
    exact_velocity,
    initial_state,
    laplacian,
    pressure_matrix,
    pressure_rhs,
    run,
    set_thread_count,
    solve_pressure,
    stabilized_gradient,
    strong_gradient,
    thread_count,
    volume_rate,
    weak_divergence,
)

__all__ = [
    "CaseSpec",
    "Case",
    "Domain",
    "InvalidInput",
    "IoError",
    "Mesh",
    "SolverError",
    "build_mesh",
    "check_config",
    "exact_velocity",
    "initial_state",
    "laplacian",
    "pressure_matrix",
    "pressure_rhs",
    "run",
    "set_thread_count",
    "solve_pressure",
    "stabilized_gradient",
    "strong_gradient",
    "thread_count",
    "volume_rate",
    "weak_divergence",
]
