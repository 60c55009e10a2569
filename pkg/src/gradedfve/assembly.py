"""Finite-volume-element assembly for the conservative two-sided fractional
diffusion equation on an arbitrary grid.

The equation on (0, 1) is

    -d/dx ( K(x) * ( gamma * D_left^{1-beta} + (1-gamma) * D_right^{1-beta} ) ) u = f,

with Dirichlet data ``u(0) = u_left``, ``u(1) = u_right``, where D_left and
D_right are the left/right Caputo derivatives of order ``1 - beta``,
``0 < beta < 1``.  Integrating over the control volumes
``[x_{i-1/2}, x_{i+1/2}]`` with piecewise-linear trial functions yields a
dense N x N system; on a uniform mesh with constant K and gamma = 1/2 the
matrix is symmetric Toeplitz and a compact FFT-ready representation is
available.

Every matrix entry is a short combination of powers of distances between
cell midpoints ``x_{i +- 1/2}`` and nodes ``x_m``, which is what the
vectorized assembly below computes; the node coordinates double as the
prefix sums of the step lengths, so each entry costs O(1) and the whole
assembly O(N^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg

from .mesh import Grid

__all__ = [
    "AssemblyError",
    "FdeProblem",
    "DenseOperator",
    "SymToeplitzOperator",
    "FveSystem",
    "assemble_matrix",
    "assemble_rhs",
    "assemble_system",
    "uniform_toeplitz",
    "matvec",
    "row_scale",
    "save_vector",
    "export_matrix_market",
]


class AssemblyError(ValueError):
    """Invalid problem data or assembly request."""


def _as_coefficient(value) -> Callable[[np.ndarray], np.ndarray]:
    if callable(value):
        return value
    const = float(value)
    return lambda x: np.full_like(np.asarray(x, dtype=float), const)


@dataclass(frozen=True)
class FdeProblem:
    """Problem data: order parameter, anisotropy weight, coefficients, Dirichlet values.

    ``beta`` is accepted on the closed interval [0, 1]; the endpoint values
    evaluate the assembly formulas at their classical limits (discrete
    Laplacian at 0, tridiagonal skew form at 1) and are used for structural
    checks.  ``diffusion`` may be a constant or a callable; it is sampled at
    the cell midpoints and must be positive there.  ``source`` is only ever
    evaluated at interior nodes.
    """

    beta: float
    gamma: float
    diffusion: Callable[[np.ndarray], np.ndarray] | float = 1.0
    source: Callable[[np.ndarray], np.ndarray] | None = None
    u_left: float = 0.0
    u_right: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise AssemblyError("beta must lie in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise AssemblyError("gamma must lie in [0, 1]")

    def diffusion_at(self, x: np.ndarray) -> np.ndarray:
        k = np.asarray(_as_coefficient(self.diffusion)(x), dtype=float)
        if np.any(k <= 0.0):
            raise AssemblyError("diffusion coefficient must be positive")
        return k


@dataclass(frozen=True)
class DenseOperator:
    """Dense square operator."""

    entries: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.shape[0],):
            raise AssemblyError("dimension mismatch in matvec")
        return self.entries @ v

    def to_dense(self) -> np.ndarray:
        return self.entries


class SymToeplitzOperator:
    """Symmetric Toeplitz operator stored by its first row.

    ``scale`` multiplies the whole matrix; the matrix-vector product embeds
    the Toeplitz matrix into a circulant of size 2N and goes through real
    FFTs, costing O(N log N).
    """

    def __init__(self, first_row: np.ndarray, scale: float = 1.0):
        row = np.asarray(first_row, dtype=float)
        if row.ndim != 1 or row.size == 0:
            raise AssemblyError("first_row must be a nonempty 1-D array")
        self.first_row = row
        self.scale = float(scale)
        self._circ_fft: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        n = self.first_row.size
        return (n, n)

    def _fft(self) -> np.ndarray:
        if self._circ_fft is None:
            n = self.first_row.size
            circ = np.zeros(2 * n)
            circ[:n] = self.first_row
            circ[n + 1 :] = self.first_row[1:][::-1]
            self._circ_fft = np.fft.rfft(circ)
        return self._circ_fft

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        n = self.first_row.size
        if v.shape != (n,):
            raise AssemblyError("dimension mismatch in matvec")
        prod = np.fft.irfft(self._fft() * np.fft.rfft(v, 2 * n), 2 * n)[:n]
        return self.scale * prod

    def to_dense(self) -> np.ndarray:
        return self.scale * scipy.linalg.toeplitz(self.first_row)

    def with_scale(self, factor: float) -> "SymToeplitzOperator":
        out = SymToeplitzOperator(self.first_row, self.scale * factor)
        out._circ_fft = self._circ_fft
        return out


LinearOperator = DenseOperator | SymToeplitzOperator


def matvec(op, v: np.ndarray) -> np.ndarray:
    """Apply a :data:`LinearOperator` (or a plain ndarray) to ``v``."""
    if isinstance(op, np.ndarray):
        return op @ np.asarray(v, dtype=float)
    return op.matvec(v)


@dataclass(frozen=True)
class FveSystem:
    """Assembled linear system ``A u = b`` with its provenance."""

    operator: LinearOperator
    rhs: np.ndarray
    grid: Grid
    problem: FdeProblem
    scaled: bool = False

    def __post_init__(self) -> None:
        n = self.grid.n
        if self.operator.shape != (n, n) or self.rhs.shape != (n,):
            raise AssemblyError("system dimensions are inconsistent")


def assemble_matrix(grid: Grid, problem: FdeProblem) -> DenseOperator:
    """Assemble the dense FVE coefficient matrix on an arbitrary grid.

    Row ``i`` combines powers ``|x_m - x_{i-1/2}|**beta`` and
    ``|x_m - x_{i+1/2}|**beta`` over all nodes ``m``; the half-point power
    tables are shared between neighbouring rows, so the assembly performs
    one (N+1) x (N+2) power evaluation overall.
    """
    x = grid.points
    n = grid.n
    beta = float(problem.beta)
    gamma = float(problem.gamma)
    gam1 = math.gamma(beta + 1.0)

    hp = np.empty(n + 2)
    hp[1:] = grid.steps
    hp[0] = 1.0  # unused slot
    inv_h = 1.0 / hp

    z = 0.5 * (x[:-1] + x[1:])  # cell midpoints x_{t+1/2}, t = 0..n
    kz = problem.diffusion_at(z)

    w = np.abs(x[None, :] - z[:, None]) ** beta  # (n+1, n+2)
    r = w[:-1]  # row i uses midpoint x_{i-1/2}
    s = w[1:]  # row i uses midpoint x_{i+1/2}
    km = kz[:-1]
    kp = kz[1:]

    def combine(v: np.ndarray) -> np.ndarray:
        # value at column j (1-based): (v_{j-1}-v_j)/h_j + (v_{j+1}-v_j)/h_{j+1}
        return (v[:, :-2] - v[:, 1:-1]) * inv_h[1:-1] + (
            v[:, 2:] - v[:, 1:-1]
        ) * inv_h[2:]

    m0 = km[:, None] * combine(r) - kp[:, None] * combine(s)
    a = gamma * np.tril(m0, -2) - (1.0 - gamma) * np.triu(m0, 2)

    t = np.arange(n)
    # main diagonal
    a[t, t] = km * (
        r[t, t] * inv_h[t + 1]
        + (1.0 - gamma) * (r[t, t + 1] - r[t, t + 2]) * inv_h[t + 2]
    ) - kp * (
        gamma * (s[t, t] - s[t, t + 1]) * inv_h[t + 1]
        - s[t, t + 1] * inv_h[t + 2]
    )
    # first subdiagonal
    u = t[1:]
    a[u, u - 1] = km[1:] * (
        gamma * (r[u, u - 1] - r[u, u]) * inv_h[u]
        - r[u, u] * inv_h[u + 1]
    ) - kp[1:] * gamma * (
        (s[u, u - 1] - s[u, u]) * inv_h[u]
        + (s[u, u + 1] - s[u, u]) * inv_h[u + 1]
    )
    # first superdiagonal
    v = t[:-1]
    a[v, v + 1] = km[:-1] * (1.0 - gamma) * (
        (r[v, v + 2] - r[v, v + 1]) * inv_h[v + 2]
        + (r[v, v + 2] - r[v, v + 3]) * inv_h[v + 3]
    ) - kp[:-1] * (
        s[v, v + 2] * inv_h[v + 2]
        + (1.0 - gamma) * (s[v, v + 2] - s[v, v + 3]) * inv_h[v + 3]
    )

    a /= gam1
    if not np.all(np.isfinite(a)):
        raise AssemblyError("assembled matrix has non-finite entries")
    return DenseOperator(a)


def assemble_rhs(grid: Grid, problem: FdeProblem) -> np.ndarray:
    """Assemble the right-hand side, including the Dirichlet boundary terms.

    The source is evaluated at interior nodes only and weighted by the cell
    measure ``(h_i + h_{i+1})/2``.  The boundary contributions enter through
    kernels evaluated at the cell midpoints; the first and last midpoints
    carry modified kernels because they sit outside ``[x_1, x_N]``.
    """
    x = grid.points
    n = grid.n
    beta = float(problem.beta)
    gamma = float(problem.gamma)
    gam1 = math.gamma(beta + 1.0)
    ul = float(problem.u_left)
    ur = float(problem.u_right)

    cell = 0.5 * (grid.steps[:-1] + grid.steps[1:])
    if problem.source is None:
        b = np.zeros(n)
    else:
        fi = np.asarray(problem.source(x[1:-1]), dtype=float)
        if fi.shape != (n,):
            raise AssemblyError("source must return one value per interior node")
        if not np.all(np.isfinite(fi)):
            raise AssemblyError("source evaluated to a non-finite value")
        b = fi * cell

    if ul == 0.0 and ur == 0.0:
        return b

    z = 0.5 * (x[:-1] + x[1:])
    kz = problem.diffusion_at(z)
    h1 = grid.steps[0]
    hn1 = grid.steps[-1]
    x1 = x[1]
    xn = x[n]

    g = np.empty(n + 1)
    zi = z[1:-1] if n >= 2 else z[1:0]
    # interior midpoints x_{3/2} .. x_{N-1/2}
    g[1:n] = (ul * gamma / h1) * ((zi - x1) ** beta - zi**beta) + (
        ur * (1.0 - gamma) / hn1
    ) * ((1.0 - zi) ** beta - (xn - zi) ** beta)
    # leftmost midpoint x_{1/2} sits left of x_1
    z0 = z[0]
    g[0] = -(ul * gamma / h1) * z0**beta + (1.0 - gamma) * (
        -(ul / h1) * (x1 - z0) ** beta
        + (ur / hn1) * ((1.0 - z0) ** beta - (xn - z0) ** beta)
    )
    # rightmost midpoint x_{N+1/2} sits right of x_N
    zn = z[n]
    g[n] = (
        (ul * gamma / h1) * ((zn - x1) ** beta - zn**beta)
        + (ur * gamma / hn1) * (zn - xn) ** beta
        + (ur * (1.0 - gamma) / hn1) * (1.0 - zn) ** beta
    )

    b += (kz[1:] * g[1:] - kz[:-1] * g[:-1]) / gam1
    if not np.all(np.isfinite(b)):
        raise AssemblyError("assembled right-hand side has non-finite entries")
    return b


def uniform_toeplitz(
    n: int, beta: float, diffusion: float = 1.0, gamma: float = 0.5
) -> SymToeplitzOperator:
    """Symmetric Toeplitz operator of the uniform-mesh discretization.

    Valid only for constant diffusion and ``gamma = 1/2`` on the uniform
    grid with ``n`` interior points, where the matrix entries depend on
    ``|i - j|`` alone.
    """
    if gamma != 0.5:
        raise AssemblyError("the symmetric Toeplitz form requires gamma = 1/2")
    if n < 1:
        raise AssemblyError("n must be >= 1")
    h = 1.0 / (n + 1)
    c = diffusion * h ** (beta - 1.0) / (2.0**beta * math.gamma(beta + 1.0))
    row = np.empty(n)
    row[0] = 0.5 * (6.0 - 2.0 * 3.0**beta)
    if n > 1:
        row[1] = 0.5 * (3.0 ** (beta + 1.0) - 4.0 - 5.0**beta)
    if n > 2:
        k = np.arange(2.0, n)
        row[2:] = 0.5 * (
            3.0 * (2.0 * k + 1.0) ** beta
            - 3.0 * (2.0 * k - 1.0) ** beta
            + (2.0 * k - 3.0) ** beta
            - (2.0 * k + 3.0) ** beta
        )
    return SymToeplitzOperator(c * row)


def assemble_system(
    grid: Grid, problem: FdeProblem, representation: str = "auto"
) -> FveSystem:
    """Assemble operator and right-hand side; pick the Toeplitz fast path
    when the mesh is uniform, the diffusion constant and gamma = 1/2.

    ``representation`` is one of ``"auto"``, ``"dense"``, ``"toeplitz"``.
    """
    if representation not in ("auto", "dense", "toeplitz"):
        raise AssemblyError("unknown representation request")
    uniform = np.ptp(grid.steps) <= 1e-14 * grid.steps[0]
    const_k = not callable(problem.diffusion)
    can_toeplitz = uniform and const_k and problem.gamma == 0.5
    if representation == "toeplitz" and not can_toeplitz:
        raise AssemblyError(
            "Toeplitz representation needs a uniform grid, constant diffusion "
            "and gamma = 1/2"
        )
    if representation in ("toeplitz", "auto") and can_toeplitz:
        op: LinearOperator = uniform_toeplitz(
            grid.n, problem.beta, float(problem.diffusion), problem.gamma
        )
    else:
        op = assemble_matrix(grid, problem)
    return FveSystem(op, assemble_rhs(grid, problem), grid, problem)


def row_scale(system: FveSystem) -> FveSystem:
    """Multiply both sides of the system by ``diag(1/h_i)``.

    The scaling removes the grid-dependent measure factor from each
    equation, which the multigrid hierarchy relies on.  A Toeplitz operator
    stays Toeplitz (uniform mesh implies a scalar factor ``n + 1``).
    """
    if system.scaled:
        raise AssemblyError("system is already row-scaled")
    h_rows = system.grid.steps[:-1]  # h_1 .. h_N
    if isinstance(system.operator, SymToeplitzOperator):
        factor = float(system.grid.n + 1)
        op: LinearOperator = system.operator.with_scale(factor)
        rhs = system.rhs * factor
    else:
        op = DenseOperator(system.operator.entries / h_rows[:, None])
        rhs = system.rhs / h_rows
    return replace(system, operator=op, rhs=rhs, scaled=True)


def save_vector(path, vec: np.ndarray) -> None:
    """Write a vector as one full-precision value per line."""
    with open(path, "w", encoding="ascii") as fh:
        for v in np.asarray(vec, dtype=float):
            fh.write(f"{v:.17g}\n")


def export_matrix_market(path, op) -> None:
    """Export an operator (or ndarray) in Matrix Market array format."""
    from scipy.io import mmwrite

    dense = op if isinstance(op, np.ndarray) else op.to_dense()
    mmwrite(path, np.asarray(dense), precision=17)
