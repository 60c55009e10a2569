"""Meshes on [0, 1] for diffusion problems with a boundary singularity at x = 0.

Three families are provided:

* uniform grids,
* power-graded grids, obtained by pushing a uniform grid through an
  increasing endomorphism of [0, 1] that behaves like ``x**q`` near the
  origin, optionally blended into a uniform tail through a quadratic
  segment so that the map is C^1,
* composite grids that split the leftmost cell of a uniform mesh into
  geometrically shrinking (dyadic) subintervals.

All generators return immutable :class:`Grid` objects carrying the node
coordinates, the step lengths and a prefix-sum table for O(1) partial-sum
queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MeshError",
    "Grid",
    "BlendCoeffs",
    "CompositeRule",
    "FIRST_STEP_FLOOR",
    "uniform_grid",
    "blend_coefficients",
    "graded_map_eval",
    "q_cap",
    "q_for_beta",
    "graded_grid",
    "composite_grid",
    "composite_grid_from_counts",
    "load_grid",
]

#: Smallest admissible first step of a graded grid; grading exponents are
#: capped so that the first mapped step never drops below this value.
FIRST_STEP_FLOOR = 1e-16

_STEP_SUM_TOL = 1e-12
_BLEND_RESIDUAL_TOL = 1e-10


class MeshError(ValueError):
    """Invalid mesh parameters or a degenerate generated mesh."""


@dataclass(frozen=True)
class Grid:
    """Strictly increasing partition ``0 = x_0 < x_1 < ... < x_{N+1} = 1``.

    Attributes
    ----------
    points : ndarray, shape (N+2,)
        Node coordinates including both boundary nodes.
    steps : ndarray, shape (N+1,)
        Step lengths ``h_i = x_i - x_{i-1}`` for ``i = 1..N+1``.
    prefix : ndarray, shape (N+2,)
        Cumulative step sums with ``prefix[0] = 0``; the partial sum
        ``h_{i+1} + ... + h_j`` is ``prefix[j] - prefix[i]``.
    """

    points: np.ndarray
    steps: np.ndarray = field(init=False, repr=False)
    prefix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise MeshError("grid needs at least one interior point")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise MeshError("grid must span [0, 1] exactly")
        steps = np.diff(pts)
        if np.any(steps <= 0.0):
            raise MeshError("grid points must be strictly increasing")
        if abs(steps.sum() - 1.0) > _STEP_SUM_TOL:
            raise MeshError("step lengths do not sum to 1")
        prefix = np.concatenate(([0.0], np.cumsum(steps)))
        for name, arr in (("points", pts), ("steps", steps), ("prefix", prefix)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        """Number of interior points."""
        return self.points.size - 2

    def partial_sum(self, i: int, j: int) -> float:
        """Return ``h_{i+1} + ... + h_j`` from the prefix table."""
        return float(self.prefix[j] - self.prefix[i])

    def save(self, path) -> None:
        """Write the node coordinates, one per line, at full precision."""
        with open(path, "w", encoding="ascii") as fh:
            for p in self.points:
                fh.write(f"{p:.17g}\n")


def load_grid(path) -> Grid:
    """Read a grid previously written by :meth:`Grid.save`."""
    return Grid(np.loadtxt(path, dtype=float))


def uniform_grid(n: int) -> Grid:
    """Uniform grid with ``n`` interior points, step ``1/(n+1)``."""
    if n < 1:
        raise MeshError("n must be >= 1")
    return Grid(np.arange(n + 2, dtype=float) / (n + 1))


# ---------------------------------------------------------------------------
# power-graded meshes


@dataclass(frozen=True)
class BlendCoeffs:
    """Coefficients of the piecewise map used to grade a mesh.

    The map is ``x**q`` on ``[0, eps1]``, the quadratic ``a x^2 + b x + c``
    on ``[eps1, eps1+eps2]`` and the line ``m x + p`` on ``[eps1+eps2, 1]``.
    ``mode`` records which segments are active:

    * ``"full-power"``  -- pure power map, no blending (eps1 = 1).
    * ``"c1-blend"``    -- all three segments, C^1 at both joins.
    * ``"quad-to-one"`` -- power then quadratic reaching 1 (eps1+eps2 = 1).
    * ``"c0-join"``     -- power then line, continuous only (eps2 = 0).
    """

    q: float
    eps1: float
    eps2: float
    a: float
    b: float
    c: float
    m: float
    p: float
    mode: str


def blend_coefficients(q: float, eps1: float, eps2: float) -> BlendCoeffs:
    """Solve for the quadratic/linear segments joining ``x**q`` to 1.

    Parameters
    ----------
    q : float
        Grading exponent, ``q >= 1``.
    eps1, eps2 : float
        Lengths of the power segment and of the quadratic transition, with
        ``0 < eps1 + eps2 <= 1`` and ``eps2 >= 0``.

    Returns
    -------
    BlendCoeffs
        With mode selected from the segment layout; in ``c1-blend`` mode the
        five matching conditions (value and slope at both joins, value 1 at
        x = 1) are solved as a dense 5x5 system and the residuals are checked
        below 1e-10.
    """
    if not q >= 1.0:
        raise MeshError("grading exponent must satisfy q >= 1")
    if eps2 < 0.0:
        raise MeshError("eps2 must be nonnegative")
    if eps1 <= 0.0:
        raise MeshError("eps1 must be positive")
    s = eps1 + eps2
    if s > 1.0 + 1e-14:
        raise MeshError("eps1 + eps2 must not exceed 1")

    if eps2 == 0.0:
        if eps1 >= 1.0:
            return BlendCoeffs(q, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, "full-power")
        # no quadratic segment: continuous join, slope generally jumps
        m = (1.0 - eps1**q) / (1.0 - eps1)
        return BlendCoeffs(q, eps1, 0.0, 0.0, 0.0, 0.0, m, 1.0 - m, "c0-join")

    if s >= 1.0 - 1e-14:
        # quadratic carries the map all the way to 1: value/slope at eps1,
        # value 1 at x = 1
        g3 = np.array(
            [
                [eps1**2, eps1, 1.0],
                [2.0 * eps1, 1.0, 0.0],
                [1.0, 1.0, 1.0],
            ]
        )
        rhs3 = np.array([eps1**q, q * eps1 ** (q - 1.0), 1.0])
        a, b, c = np.linalg.solve(g3, rhs3)
        coeffs = BlendCoeffs(q, eps1, eps2, a, b, c, 0.0, 0.0, "quad-to-one")
        _check_blend_residuals(coeffs)
        return coeffs

    g5 = np.array(
        [
            [eps1**2, eps1, 1.0, 0.0, 0.0],
            [s**2, s, 1.0, -s, -1.0],
            [2.0 * eps1, 1.0, 0.0, 0.0, 0.0],
            [2.0 * s, 1.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 1.0],
        ]
    )
    rhs5 = np.array([eps1**q, 0.0, q * eps1 ** (q - 1.0), 0.0, 1.0])
    try:
        a, b, c, m, p = np.linalg.solve(g5, rhs5)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by det
        raise MeshError("singular blend system") from exc
    coeffs = BlendCoeffs(q, eps1, eps2, a, b, c, m, p, "c1-blend")
    _check_blend_residuals(coeffs)
    return coeffs


def _check_blend_residuals(coeffs: BlendCoeffs) -> None:
    """Verify the matching conditions actually hold after the solve."""
    q, e1 = coeffs.q, coeffs.eps1
    s = e1 + coeffs.eps2
    quad = lambda x: coeffs.a * x * x + coeffs.b * x + coeffs.c
    dquad = lambda x: 2.0 * coeffs.a * x + coeffs.b
    res = [
        quad(e1) - e1**q,
        dquad(e1) - q * e1 ** (q - 1.0),
    ]
    if coeffs.mode == "c1-blend":
        lin = coeffs.m * s + coeffs.p
        res += [quad(s) - lin, dquad(s) - coeffs.m, coeffs.m + coeffs.p - 1.0]
    else:  # quad-to-one
        res += [quad(1.0) - 1.0]
    if max(abs(r) for r in res) > _BLEND_RESIDUAL_TOL:
        raise MeshError("blend coefficient solve failed the residual check")


def graded_map_eval(coeffs: BlendCoeffs, xhat):
    """Evaluate the piecewise grading map at ``xhat`` in [0, 1].

    Accepts scalars or arrays; raises :class:`MeshError` outside [0, 1].
    """
    x = np.asarray(xhat, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise MeshError("grading map evaluated outside [0, 1]")
    if coeffs.mode == "full-power":
        out = x**coeffs.q
    else:
        s = coeffs.eps1 + coeffs.eps2
        out = np.where(
            x <= coeffs.eps1,
            x**coeffs.q,
            np.where(
                x <= s,
                coeffs.a * x * x + coeffs.b * x + coeffs.c,
                coeffs.m * x + coeffs.p,
            ),
        )
    if np.isscalar(xhat):
        return float(out)
    return out


def q_cap(n: int) -> float:
    """Largest exponent keeping the first graded step at or above 1e-16.

    With step ``h = 1/(n+1)`` the first mapped point is ``h**q``; the cap is
    the exponent making it exactly :data:`FIRST_STEP_FLOOR`.
    """
    return -math.log(FIRST_STEP_FLOOR) / math.log(n + 1)


def q_for_beta(beta: float, n: int) -> float:
    """Grading exponent ``(1+beta)/(1-beta)``, capped via :func:`q_cap`.

    The uncapped value matches the order-optimal grading for a solution
    behaving like ``x**(1-beta)`` near the origin; the cap guards against
    first steps below the floating-point floor.
    """
    if not 0.0 < beta < 1.0:
        raise MeshError("beta must lie in (0, 1)")
    return min((1.0 + beta) / (1.0 - beta), q_cap(n))


def graded_grid(n: int, coeffs: BlendCoeffs) -> Grid:
    """Map the uniform grid with ``n`` interior points through ``coeffs``.

    The boundary nodes are pinned to 0 and 1 exactly; interior nodes are the
    mapped uniform nodes.  Raises if any mapped step collapses to zero (this
    signals a grading exponent above the :func:`q_cap` safety cap).
    """
    if n < 1:
        raise MeshError("n must be >= 1")
    h = 1.0 / (n + 1)
    if coeffs.mode != "full-power" and h > coeffs.eps1:
        raise MeshError(
            "uniform step exceeds the power segment; increase n or eps1"
        )
    pts = graded_map_eval(coeffs, np.arange(n + 2, dtype=float) / (n + 1))
    pts[0] = 0.0
    pts[-1] = 1.0
    if np.any(np.diff(pts) <= 0.0):
        raise MeshError("graded map collapsed a step (grading too strong)")
    return Grid(pts)


# ---------------------------------------------------------------------------
# composite (dyadically refined) meshes


@dataclass(frozen=True)
class CompositeRule:
    """Rule ``n -> n1`` fixing how many points go into the dyadic part."""

    selector: str  # "sqrt" or "log2"

    def __post_init__(self) -> None:
        if self.selector not in ("sqrt", "log2"):
            raise MeshError("selector must be 'sqrt' or 'log2'")

    def __call__(self, n: int) -> int:
        if self.selector == "sqrt":
            return math.isqrt(n)
        return n.bit_length() - 1  # floor(log2 n)


def composite_grid_from_counts(n1: int, n2: int) -> Grid:
    """Composite grid with ``n1`` dyadic points and ``n2`` uniform points.

    The uniform part has step ``h = 1/(n2+1)``; the first cell ``[0, h]`` is
    split at ``x_i = 2**(i-1-n1) * h`` for ``i = 1..n1``.
    """
    if n1 < 1 or n2 < 1:
        raise MeshError("n1 and n2 must be >= 1")
    h = 1.0 / (n2 + 1)
    dyadic = h * np.exp2(np.arange(-n1, 0, dtype=float))  # x_i = 2^(i-1-n1) h
    uniform = h * np.arange(1, n2 + 1, dtype=float)
    pts = np.concatenate(([0.0], dyadic, uniform, [1.0]))
    return Grid(pts)


def composite_grid(n: int, rule: CompositeRule) -> Grid:
    """Composite grid with ``n`` interior points, split by ``rule``."""
    n1 = rule(n)
    n2 = n - n1
    if not 1 <= n1 < n:
        raise MeshError("rule must yield 1 <= n1 < n")
    return composite_grid_from_counts(n1, n2)
