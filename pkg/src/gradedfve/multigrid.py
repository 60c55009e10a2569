"""Geometric multigrid for the row-scaled FVE systems.

The hierarchy halves the number of interior points per level (keeping the
even-indexed nodes), rediscretizes the equation on every level grid, and
row-scales each level by its own ``diag(1/h_i)``.  Grid transfer uses
piecewise-linear interpolation on the non-uniform nodes; restriction is
the weighted transpose of the interpolation (the 1/2 factor that turns the
transpose into full weighting on a uniform grid).  The smoother is one
damped-Jacobi sweep before and after coarse-grid correction, with the
damping weight estimated once from the spectrum of the Jacobi iteration
matrix on a small rediscretization of the same problem.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .assembly import FdeProblem, assemble_matrix
from .mesh import Grid

__all__ = [
    "MultigridError",
    "SmootherRegion",
    "DEFAULT_REGION",
    "MgLevel",
    "MgHierarchy",
    "coarsen",
    "prolongation",
    "estimate_omega",
    "build_hierarchy",
    "vcycle",
]

OMEGA_FALLBACK = 2.0 / 3.0


class MultigridError(ValueError):
    """Invalid multigrid construction request."""


@dataclass(frozen=True)
class SmootherRegion:
    """Lens-shaped region of the complex plane used to vet smoother spectra.

    The region is ``{x + iy : x in [x_min, x_max], |y| < boundary(x)}``
    where the boundary is a semicircle tilted by a line,
    ``sqrt(1 - x^2) + slope*(x - 1)``.  ``x_min`` is the left root of the
    boundary, so the boundary is nonnegative on the whole interval.
    """

    slope: float = 0.475
    x_min: float = -1239.0 / 1961.0
    x_max: float = 1.0

    def boundary(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.maximum(1.0 - x * x, 0.0)) + self.slope * (x - 1.0)

    def contains(self, z) -> bool:
        """True if every entry of ``z`` lies strictly inside the lens."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        x = z.real
        ok = (x >= self.x_min) & (x <= self.x_max)
        return bool(np.all(ok & (np.abs(z.imag) < self.boundary(x))))


DEFAULT_REGION = SmootherRegion()


def coarsen(grid: Grid) -> Grid:
    """Keep the boundary nodes and every second interior node."""
    n = grid.n
    if n < 4:
        raise MultigridError("coarsening needs at least 4 interior points")
    nc = n // 2
    x = grid.points
    return Grid(np.concatenate(([x[0]], x[2 : 2 * nc + 1 : 2], [x[-1]])))


def prolongation(fine: Grid, coarse: Grid) -> scipy.sparse.csr_matrix:
    """Linear interpolation from coarse to fine interior nodes.

    Even fine nodes coincide with coarse nodes and are copied; odd fine
    nodes are linearly interpolated between their bracketing coarse
    neighbours, with the Dirichlet boundary nodes acting as zero-value
    anchors (the operands are error corrections, which vanish there).
    """
    n, nc = fine.n, coarse.n
    if nc != n // 2 or not np.array_equal(coarse.points[1:-1], fine.points[2 : 2 * nc + 1 : 2]):
        raise MultigridError("coarse grid is not the coarsening of the fine grid")
    xf = fine.points
    rows, cols, vals = [], [], []
    for i in range(1, n + 1):
        if i % 2 == 0 and i // 2 <= nc:
            rows.append(i - 1)
            cols.append(i // 2 - 1)
            vals.append(1.0)
            continue
        k = (i - 1) // 2  # left coarse neighbour index (0 = boundary)
        xl = xf[2 * k]
        xr = xf[2 * k + 2] if k + 1 <= nc else xf[-1]
        wl = (xr - xf[i]) / (xr - xl)
        if k >= 1:
            rows.append(i - 1)
            cols.append(k - 1)
            vals.append(wl)
        if k + 1 <= nc:
            rows.append(i - 1)
            cols.append(k)
            vals.append(1.0 - wl)
    p = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, nc))
    return p.tocsr()


def _scaled_matrix(grid: Grid, problem: FdeProblem) -> np.ndarray:
    a = assemble_matrix(grid, problem).entries
    return a / grid.steps[:-1][:, None]


def estimate_omega(
    problem: FdeProblem,
    small_grid: Grid,
    region: SmootherRegion = DEFAULT_REGION,
    matrix: np.ndarray | None = None,
) -> float:
    """Estimate the Jacobi damping weight from a small rediscretization.

    The scaled system is assembled on ``small_grid`` (a member of the same
    mesh family with at most ~2^4 interior points), the eigenvalues
    ``lam_j`` of ``D^{-1} A`` are computed, and the weight is scanned over
    ``1.995, 1.990, ..., 0.005``.  Among the candidates for which the whole
    smoother spectrum ``1 - omega*lam_j`` sits inside ``region``, the one
    minimizing the damping of the oscillatory half of the spectrum (the
    eigenvalues of largest modulus) is returned; ties go to the larger
    weight.  If no candidate is admissible the classical 2/3 is returned
    with a warning.
    """
    a = _scaled_matrix(small_grid, problem) if matrix is None else matrix
    d = np.diag(a).copy()
    if np.any(d == 0.0):
        raise MultigridError("zero diagonal entry; Jacobi smoothing undefined")
    lam = np.linalg.eigvals(a / d[:, None])
    upper = lam[np.argsort(np.abs(lam))][lam.size // 2 :]

    best = None
    best_damp = np.inf
    for k in range(399, 0, -1):
        omega = k * 0.005
        z = 1.0 - omega * lam
        if not region.contains(z):
            continue
        damp = float(np.abs(1.0 - omega * upper).max())
        if damp < best_damp - 1e-15:
            best_damp = damp
            best = omega
    if best is None:
        warnings.warn(
            "no Jacobi weight keeps the smoother spectrum inside the region; "
            "falling back to 2/3",
            stacklevel=2,
        )
        return OMEGA_FALLBACK
    return round(best, 3)


@dataclass
class MgLevel:
    grid: Grid
    matrix: np.ndarray
    diag: np.ndarray
    prolong: scipy.sparse.csr_matrix | None = None


@dataclass
class MgHierarchy:
    """V-cycle hierarchy: finest level first, direct solver at the bottom."""

    levels: list[MgLevel]
    omega: float
    restriction_scale: float
    coarse_lu: tuple = field(repr=False, default=None)

    @property
    def depth(self) -> int:
        """Number of coarsening steps."""
        return len(self.levels) - 1

    def apply(self, r: np.ndarray) -> np.ndarray:
        return vcycle(self, r)

    def summary(self) -> list[dict]:
        """Per-level diagnostics (size, weight, infinity-norm estimate)."""
        return [
            {
                "n": lev.grid.n,
                "omega": self.omega,
                "operator_norm_inf": float(np.abs(lev.matrix).sum(axis=1).max()),
            }
            for lev in self.levels
        ]

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def build_hierarchy(
    grid: Grid,
    problem: FdeProblem,
    region: SmootherRegion = DEFAULT_REGION,
    ntilde: int = 16,
    omega: float | None = None,
    restriction_scale: float = 0.5,
) -> MgHierarchy:
    """Build the rediscretized, row-scaled V-cycle hierarchy.

    A single damping weight is estimated once (on the first coarsening of
    the given grid with at most ``ntilde`` interior points, i.e. on the
    same mesh family) and reused on every level.  ``omega`` overrides the
    estimate.  ``restriction_scale`` multiplies the transposed-interpolation
    residual transfer; the default 1/2 makes it full weighting on uniform
    grids, which pairs correctly with rediscretized row-scaled coarse
    operators.
    """
    if grid.n < 4:
        raise MultigridError("hierarchy needs at least 4 interior points")

    grids = [grid]
    while grids[-1].n > 3:
        grids.append(coarsen(grids[-1]))

    levels: list[MgLevel] = []
    est_matrix = None
    est_grid = None
    for g in grids:
        a = _scaled_matrix(g, problem)
        levels.append(MgLevel(grid=g, matrix=a, diag=np.diag(a).copy()))
        if est_grid is None and g.n <= ntilde:
            est_grid, est_matrix = g, a
    for lev, coarse in zip(levels, levels[1:]):
        lev.prolong = prolongation(lev.grid, coarse.grid)

    if omega is None:
        if est_grid is None:  # grid coarser than ntilde never arose
            est_grid, est_matrix = grids[-1], levels[-1].matrix
        omega = estimate_omega(problem, est_grid, region, matrix=est_matrix)

    lu = scipy.linalg.lu_factor(levels[-1].matrix)
    return MgHierarchy(levels, float(omega), float(restriction_scale), lu)


def _vcycle(hier: MgHierarchy, level: int, r: np.ndarray) -> np.ndarray:
    lev = hier.levels[level]
    if level == len(hier.levels) - 1:
        return scipy.linalg.lu_solve(hier.coarse_lu, r)
    omega = hier.omega
    x = omega * r / lev.diag  # pre-smoothing from zero guess
    res = r - lev.matrix @ x
    rc = hier.restriction_scale * (lev.prolong.T @ res)
    x = x + lev.prolong @ _vcycle(hier, level + 1, rc)
    x = x + omega * (r - lev.matrix @ x) / lev.diag
    return x


def vcycle(hier: MgHierarchy, r: np.ndarray) -> np.ndarray:
    """One V(1,1) cycle applied to the residual ``r`` with zero guess."""
    r = np.asarray(r, dtype=float)
    if r.shape != (hier.levels[0].grid.n,):
        raise MultigridError("residual length does not match the finest level")
    return _vcycle(hier, 0, r)
