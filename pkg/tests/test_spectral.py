import math

import numpy as np
import pytest
import scipy.linalg

from gradedfve import spectral as sp
from gradedfve.assembly import FdeProblem, assemble_matrix
from gradedfve.mesh import blend_coefficients, graded_grid, uniform_grid


class TestGeneratingFunction:
    def test_laplacian_limit(self):
        # beta -> 0 telescopes the series to 2 - 2 cos(theta)
        beta = 1e-13
        assert sp.symbol_p(2048, beta, 0.0) == pytest.approx(0.0, abs=1e-9)
        assert sp.symbol_p(2048, beta, math.pi) == pytest.approx(4.0, abs=1e-9)
        th = 1.234
        assert sp.symbol_p(2048, beta, th) == pytest.approx(2 - 2 * math.cos(th), abs=1e-9)

    def test_evenness(self, rng):
        th = rng.uniform(0.0, math.pi, 16)
        vals_p = sp.symbol_p(2**8, 0.5, th)
        vals_m = sp.symbol_p(2**8, 0.5, -th)
        assert np.abs(vals_p - vals_m).max() <= 1e-12

    @pytest.mark.parametrize("beta", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_positivity_away_from_origin(self, beta):
        th = np.linspace(math.pi / 64, math.pi, 200)
        assert np.all(sp.symbol_p(2**10, beta, th) > 0)

    def test_truncation_stability(self):
        th = 0.8
        diffs = [
            abs(sp.symbol_p(2 * n, 0.5, th) - sp.symbol_p(n, 0.5, th))
            for n in (2**6, 2**8, 2**10)
        ]
        assert diffs[0] > diffs[1] > diffs[2]

    def test_zero_order_below_two(self):
        # p(theta)/theta^2 grows as theta -> 0 when the zero order is < 2
        th = 2.0 ** -np.arange(3, 11)
        vals = sp.symbol_p(2**12, 0.5, th) / th**2
        assert np.all(np.diff(vals) > 0)


class TestTwoVariableSymbol:
    def test_normalization_cancels(self):
        beta = 0.4
        k0 = 2.0**beta * math.gamma(beta + 1.0)
        vals = sp.symbol_f(0.7, 1.3, beta, diffusion=k0, n_terms=2**10)
        assert vals == pytest.approx(sp.symbol_p(2**10, beta, 1.3), rel=1e-13)

    def test_zero_at_origin(self):
        # the truncated series at the origin decays like 1/n_terms
        coarse = sp.symbol_f(0.5, 0.0, 0.3, n_terms=2**10)
        fine = sp.symbol_f(0.5, 0.0, 0.3, n_terms=2**12)
        assert abs(coarse) < 1e-5
        assert abs(fine) < abs(coarse) / 8

    def test_square_map_midpoint(self):
        beta, k0 = 0.5, 1.7
        gp = lambda x: 2.0 * np.asarray(x)
        got = sp.symbol_f(0.5, 2.0, beta, diffusion=k0, gprime=gp, n_terms=2**10)
        ref = k0 * sp.symbol_p(2**10, beta, 2.0) / (2**beta * math.gamma(1.5))
        assert got == pytest.approx(ref, rel=1e-13)

    def test_rejects_nonpositive_slope(self):
        with pytest.raises(ValueError):
            sp.symbol_f(0.0, 1.0, 0.5, gprime=lambda x: np.zeros_like(x))


class TestEigVsSymbol:
    def test_laplacian_spectrum_oracle(self):
        # beta -> 0 on the identity map: h^(1-b) A has the classical
        # Laplacian eigenvalues 4 K sin^2(j pi h / 2)
        n = 2**6
        grid = graded_grid(n, blend_coefficients(1.0, 1.0, 0.0))
        a = assemble_matrix(grid, FdeProblem(beta=0.0, gamma=0.5)).entries
        h = 1.0 / (n + 1)
        eigs = np.sort(scipy.linalg.eigvals(h * a).real)
        ref = np.sort(4.0 * np.sin(np.arange(1, n + 1) * math.pi * h / 2.0) ** 2)
        assert np.abs(eigs - ref).max() <= 1e-10

    def test_fine_grid_overlap_q2(self):
        rep = sp.eig_vs_symbol(0.5, 2.0, 2**6, "fine")
        assert rep.grid_tag == "fine-(ii)"
        radius = float(np.abs(np.asarray(rep.sorted_eigs)).max())
        assert rep.sup_gap < 0.05 * radius

    def test_overlap_persists_beyond_crossover_q4(self):
        rep = sp.eig_vs_symbol(0.5, 4.0, 2**6, "fine")
        radius = float(np.abs(np.asarray(rep.sorted_eigs)).max())
        gaps = np.abs(np.asarray(rep.sorted_eigs).real - rep.sorted_samples)
        assert np.median(gaps) < 0.02 * radius

    def test_coarse_grid_runs_and_is_rougher(self):
        fine = sp.eig_vs_symbol(0.5, 2.0, 2**6, "coarse")
        assert fine.grid_tag == "coarse-(i)"
        assert fine.sorted_samples.shape == (2**6,)

    def test_uniform_distribution_matches(self):
        rep = sp.eig_vs_symbol(0.5, 1.0, 2**6, "fine")
        radius = float(np.abs(np.asarray(rep.sorted_eigs)).max())
        assert rep.sup_gap < 0.05 * radius


class TestSymbolTable:
    def test_product_table_matches_pointwise(self):
        import numpy as np

        xs = np.array([0.25, 0.75])
        ths = np.array([0.5, 1.5, 2.5])
        gp = lambda x: 2.0 * np.asarray(x)
        table = sp.sample_symbol(0.5, xs, ths, gprime=gp, n_terms=2**9)
        assert table.values.shape == (2, 3)
        ref = sp.symbol_f(0.75, 1.5, 0.5, gprime=gp, n_terms=2**9)
        assert table.values[1, 1] == pytest.approx(float(np.ravel(ref)[0]), rel=1e-13)
        assert np.all(table.values[:, ths != 0.0] > 0)


class TestTraceNormSequence:
    def test_symmetric_case_vanishes(self):
        s = sp.glt5_sequence(0.5, 1.0, [2**4, 2**5])
        assert np.abs(s).max() <= 1e-13

    def test_monotone_sides(self):
        ns = [2**k for k in range(4, 8)]
        s_dec = sp.glt5_sequence(0.5, 2.0, ns)
        s_inc = sp.glt5_sequence(0.5, 4.0, ns)
        assert np.all(np.diff(s_dec) < 0)
        assert np.all(np.diff(s_inc) > 0)

    def test_region_signs(self):
        signs = sp.glt5_region([0.5], [1.0, 2.0, 4.0])
        assert signs[0, 0] == 0
        assert signs[0, 1] == 1
        assert signs[0, 2] == -1


class TestEmitters:
    def test_csv_outputs(self, tmp_path):
        ns = [16, 32]
        vals = sp.glt5_sequence(0.5, 2.0, ns)
        sp.write_sequence_csv(tmp_path / "s.csv", ns, vals)
        text = (tmp_path / "s.csv").read_text()
        assert text.splitlines()[0] == "n,s"

        signs = sp.glt5_region([0.5], [2.0])
        sp.write_region_csv(tmp_path / "r.csv", [0.5], [2.0], signs)
        assert "beta,q,sign" in (tmp_path / "r.csv").read_text()

        rep = sp.eig_vs_symbol(0.5, 2.0, 16, "coarse")
        sp.write_distribution_csv(tmp_path / "d.csv", rep)
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "index,eigenvalue,symbol_sample"
        assert len(lines) == 17
