import warnings

import numpy as np
import pytest

from gradedfve import bench
from gradedfve.assembly import DenseOperator, FdeProblem, assemble_system, row_scale
from gradedfve.bench import CaseConfig, MeshSpec
from gradedfve.krylov import gmres, write_residual_csv
from gradedfve.mesh import blend_coefficients, composite_grid_from_counts, graded_grid, uniform_grid
from gradedfve.multigrid import build_hierarchy


def scaled_test_system(beta, gamma, grid):
    prob = bench.make_problem(beta, gamma)
    return row_scale(assemble_system(grid, prob, representation="dense")), prob


class TestBasics:
    def test_identity_converges_in_one_iteration(self, rng):
        b = rng.standard_normal(12)
        rep = gmres(DenseOperator(np.eye(12)), b)
        assert rep.converged and rep.iterations == 1
        assert np.abs(rep.solution - b).max() < 1e-12

    def test_zero_rhs(self):
        rep = gmres(DenseOperator(np.eye(4)), np.zeros(4))
        assert rep.converged and rep.iterations == 0
        assert np.array_equal(rep.solution, np.zeros(4))

    def test_matches_direct_solve(self, rng):
        a = rng.standard_normal((20, 20)) + 20 * np.eye(20)
        b = rng.standard_normal(20)
        rep = gmres(DenseOperator(a), b, tol=1e-12, maxit=40)
        assert rep.converged
        assert np.abs(rep.solution - np.linalg.solve(a, b)).max() < 1e-9

    def test_monotone_residual_history(self, rng):
        a = rng.standard_normal((30, 30)) + 8 * np.eye(30)
        b = rng.standard_normal(30)
        rep = gmres(DenseOperator(a), b, tol=1e-13, maxit=30)
        hist = rep.residual_history
        assert np.all(np.diff(hist) <= 1e-12)

    def test_maxit_respected_and_flagged(self, rng):
        # rotation-like spectrum makes unpreconditioned GMRES slow
        a = np.eye(40) + np.diag(np.ones(39), 1) * 2.0
        a[-1, 0] = 2.0
        b = rng.standard_normal(40)
        rep = gmres(DenseOperator(a), b, tol=1e-15, maxit=5)
        assert not rep.converged
        assert rep.iterations == 5
        assert len(rep.residual_history) == 5


class TestOnFveSystems:
    def test_laplacian_limit_matches_tridiagonal_solve(self):
        n = 2**6 - 1
        grid = uniform_grid(n)
        prob = FdeProblem(beta=0.0, gamma=0.5, source=lambda x: np.sin(np.pi * x))
        system = row_scale(assemble_system(grid, prob, representation="dense"))
        rep = gmres(system.operator, system.rhs, tol=1e-12, maxit=n)
        direct = np.linalg.solve(system.operator.entries, system.rhs)
        assert rep.converged
        assert np.linalg.norm(rep.solution - direct) <= 1e-9 * np.linalg.norm(direct)

    def test_preconditioned_matches_unpreconditioned(self):
        n = 2**5 - 1
        grid = graded_grid(n, blend_coefficients(3.0, 1.0, 0.0))
        system, prob = scaled_test_system(0.5, 0.5, grid)
        plain = gmres(system.operator, system.rhs, tol=1e-7, maxit=100)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hier = build_hierarchy(grid, prob)
        pre = gmres(system.operator, system.rhs, precond=hier.apply, tol=1e-7, maxit=100)
        assert plain.converged and pre.converged
        diff = np.linalg.norm(plain.solution - pre.solution)
        assert diff <= 10 * 1e-7 * np.linalg.norm(plain.solution)

    def test_reference_iteration_count_graded(self):
        # graded mesh case with a reference count of 9 (tolerance +-2)
        res = bench.run_case(
            CaseConfig(0.5, 0.5, MeshSpec("graded", eps1=0.2, eps2=0.05), 2**7 - 1)
        )
        assert res.converged
        assert abs(res.it - 9) <= 2

    def test_reference_iteration_count_composite(self):
        res = bench.run_case(
            CaseConfig(0.9, 0.5, MeshSpec("composite", n1=2**5, n2=2**10), 2**5 + 2**10)
        )
        assert res.converged
        assert abs(res.it - 8) <= 2

    def test_residual_history_csv(self, rng, tmp_path):
        a = rng.standard_normal((12, 12)) + 10 * np.eye(12)
        rep = gmres(DenseOperator(a), rng.standard_normal(12), tol=1e-10, maxit=12)
        path = tmp_path / "hist.csv"
        write_residual_csv(path, rep)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,relative_residual"
        assert len(lines) == rep.iterations + 1
        assert float(lines[-1].split(",")[1]) == rep.residual_history[-1]

    def test_nonconvergence_flagged_not_raised(self):
        grid = graded_grid(2**6 - 1, blend_coefficients(17 / 3, 1.0, 0.0))
        system, prob = scaled_test_system(0.7, 1.0, grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hier = build_hierarchy(grid, prob)
        rep = gmres(system.operator, system.rhs, precond=hier.apply, tol=1e-7, maxit=20)
        assert not rep.converged
        assert rep.iterations == 20
