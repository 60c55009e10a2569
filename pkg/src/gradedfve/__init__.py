"""Solver library for the conservative two-sided fractional diffusion
equation: finite-volume-element discretization on uniform, power-graded and
composite meshes, Toeplitz/symbol spectral diagnostics, and a geometric
multigrid-preconditioned GMRES solver with an experiment CLI."""

from . import assembly, bench, krylov, mesh, multigrid, spectral

__all__ = ["mesh", "assembly", "krylov", "multigrid", "spectral", "bench"]
__version__ = "0.1.0"
