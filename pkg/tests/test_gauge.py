"""Gauge operator assembly, Coulomb projection, Green scaling, Newton."""

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from hitchin_disk import deformations as df
from hitchin_disk import fields as fd
from hitchin_disk import gauge as gg
from hitchin_disk.conventions import su2_from_components, frob_norm2


@pytest.fixture(scope="module")
def fid_setup(ptable):
    grid = fd.PolarGrid(n_r=96, n_theta=16, r_min=1e-4)
    pair = fd.fiducial_solution(ptable, 6.0, grid)
    op = gg.assemble_Lt(pair)
    return grid, pair, op


class TestAssembly:
    def test_symmetric_psd(self, fid_setup):
        grid, pair, op = fid_setup
        M = op.matrix
        assert abs(M - M.T).max() < 1e-12
        w = eigsh(M, k=1, which="SA", return_eigenvectors=False, tol=1e-6)
        assert w[0] >= -1e-8

    def test_zero_higgs_reduces_to_laplacian(self, fid_setup, ptable):
        # constant diagonal xi is harmonic for the abelian connection
        grid, pair, _ = fid_setup
        zero_phi = fd.MatrixField(grid, np.zeros(grid.shape + (2, 2), dtype=complex),
                                  "(1,0)", "general")
        pair0 = fd.HiggsPair(grid, pair.a, zero_phi, pair.t, "fiducial")
        op0 = gg.assemble_Lt(pair0)
        comps = np.zeros(grid.shape + (3,))
        comps[..., 0] = 1.0
        x = op0.field_to_vec(su2_from_components(comps))
        res = (op0.matrix @ x).reshape(grid.n_r, grid.n_theta, 3)
        # interior rows vanish; only the Dirichlet boundary layer contributes
        assert np.max(np.abs(res[: grid.n_r - 2])) < 1e-10

    def test_potential_matches_profile_identity(self, fid_setup, ptable):
        # diagonal-sector potential equals 2 t^2 r cosh(2 h_t) with cosh
        # reconstructed from the sinh identity f_t'(r) r^-2 = 2 t^2 sinh(2h_t)
        grid, pair, op = fid_setup
        t = pair.t
        k = grid.n_r // 2
        r = grid.r[k]
        gram = op.gram[k, 0] / op.vol[k, 0]  # unweighted potential block
        # diagonal direction e1: quadratic form value = 2 * potential * |e1|^2/2
        pot_diag = gram[0, 0] / 2.0
        prof = pair.meta["profile"]
        sinh2h = prof.df[k] / r ** 2 / (2.0 * t ** 2)
        cosh2h = np.sqrt(1.0 + sinh2h ** 2)
        expected = 2.0 * t ** 2 * r * cosh2h
        assert abs(pot_diag - expected) / expected < 1e-4

    def test_triplet_dump(self, fid_setup, tmp_path):
        _, _, op = fid_setup
        path = tmp_path / "op.txt"
        op.dump_triplets(path)
        first = path.read_text().splitlines()
        assert first[0].startswith("#")
        row, col, val = first[1].split()
        assert float(val) != 0.0


class TestSolve:
    def test_zero_rhs(self, fid_setup):
        grid, pair, op = fid_setup
        rhs = fd.MatrixField(grid, np.zeros(grid.shape + (2, 2), dtype=complex),
                             "0", "skew-hermitian")
        res = gg.solve_Lt(op, rhs)
        assert np.max(np.abs(res.xi.values)) == 0.0

    def test_packet_rhs_weight(self, ptable):
        # ||G_t f_t||_infty scales like t^{-4/3} for packet data
        grid = fd.PolarGrid(n_r=384, n_theta=8, r_min=1e-4)
        sups = {}
        for t in (8.0, 16.0):
            pair = fd.fiducial_solution(ptable, t, grid)
            op = gg.assemble_Lt(pair)
            w = t ** (2.0 / 3.0) * grid.r
            rhs = np.zeros(grid.shape + (2, 2), dtype=complex)
            rhs[..., :, :] = np.exp(-w ** 1.5)[:, None, None, None] * fd.DIAG_I
            res = gg.solve_Lt(op, fd.MatrixField(grid, rhs, "0", "skew-hermitian"))
            sups[t] = np.max(np.abs(res.xi.values))
        ratio = sups[16.0] / sups[8.0]
        assert abs(ratio / 2.0 ** (-4.0 / 3.0) - 1.0) < 0.05

    def test_exterior_rhs_polynomial_bound(self, ptable):
        # rhs supported outside r = 7/8: interior response grows at most
        # polynomially (log-log fit preferred over semi-log)
        grid = fd.PolarGrid(n_r=256, n_theta=8, r_min=1e-4)
        samples = []
        for t in np.geomspace(4.0, 32.0, 5):
            pair = fd.fiducial_solution(ptable, t, grid)
            op = gg.assemble_Lt(pair)
            rhs = np.zeros(grid.shape + (2, 2), dtype=complex)
            mask = grid.r > 7.0 / 8.0
            rhs[mask] = fd.DIAG_I
            res = gg.solve_Lt(op, fd.MatrixField(grid, rhs, "0", "skew-hermitian"))
            interior = grid.r < 0.5
            samples.append((t, float(np.max(np.abs(res.xi.values[interior])))))
        from hitchin_disk import asymptotics as asy
        fit = asy.fit_power_law(samples, drop_small_third=False)
        assert not fit.exponential_suspected or fit.exponent < 0
        assert abs(fit.exponent) < 6.0  # polynomial growth/decay only

    def test_cg_path_matches_direct(self, fid_setup, rng):
        grid, pair, op = fid_setup
        comps = rng.normal(size=grid.shape + (3,)) * np.exp(-grid.r[:, None, None])
        rhs = fd.MatrixField(grid, su2_from_components(comps), "0", "general")
        rhs = fd.MatrixField(grid, 0.5 * (rhs.values - np.conj(np.swapaxes(rhs.values, -1, -2))),
                             "0", "skew-hermitian")
        direct = gg.solve_Lt(op, rhs, method="direct")
        cg = gg.solve_Lt(op, rhs, method="cg", tol=1e-12)
        assert np.max(np.abs(direct.xi.values - cg.xi.values)) < 1e-6 \
            * max(np.max(np.abs(direct.xi.values)), 1e-30)


class TestCoulomb:
    def test_d1_consistency_exact(self, fid_setup, rng):
        grid, pair, op = fid_setup
        x = rng.normal(size=op.n_unknowns)
        alpha, phi_part = gg.apply_d1(op, x)
        v = df.TangentPair(grid, alpha,
                           fd.MatrixField(grid, phi_part, "(1,0)", "general"))
        b = gg.coulomb_residual_vec(op, v)
        lhs = op.matrix @ x
        assert np.max(np.abs(b - lhs)) < 1e-10 * max(np.max(np.abs(lhs)), 1.0)

    def test_phi_inf_zero_residual(self, ptable):
        grid = fd.PolarGrid(n_r=128, n_theta=16, r_min=1e-3)
        lim = fd.limiting_configuration(fd.MODEL_Q, grid)
        op = gg.assemble_Lt(lim, t=1.0)
        v = df.TangentPair(grid, None, df.phi_infinity(fd.MODEL_Q, (1.0,), grid))
        res_field = gg.coulomb_residual(lim, v, op=op)
        assert np.max(np.abs(res_field.values)) < 1e-12

    def test_gauge_fix_idempotent(self, ptable):
        grid = fd.PolarGrid(n_r=128, n_theta=16, r_min=1e-3)
        pair = fd.approximate_solution(ptable, fd.MODEL_Q, 8.0, grid)
        op = gg.assemble_Lt(pair)
        rad = df.radial_tangent(ptable, fd.MODEL_Q, 8.0, grid)
        g1, r1 = gg.gauge_fix(pair, rad, op=op)
        g2, r2 = gg.gauge_fix(pair, g1, op=op)
        d = max(np.max(np.abs(g2.alpha.values - g1.alpha.values)),
                np.max(np.abs(g2.phi.values - g1.phi.values)))
        assert d < 1e-10 * max(np.max(np.abs(g1.phi.values)), 1.0)

    def test_already_gauged_gives_zero_xi(self, ptable):
        grid = fd.PolarGrid(n_r=128, n_theta=16, r_min=1e-3)
        lim = fd.limiting_configuration(fd.MODEL_Q, grid)
        op = gg.assemble_Lt(lim, t=1.0)
        v = df.TangentPair(grid, None, df.phi_infinity(fd.MODEL_Q, (1.0,), grid))
        b = gg.coulomb_residual_vec(op, v)
        res = gg._solve_vec(op, b)
        assert np.max(np.abs(res.xi.values)) < 1e-12


class TestGreenScaling:
    def test_factor_one_identical(self, ptable):
        grid = fd.PolarGrid(n_r=256, n_theta=8, r_min=1e-4)
        rep = gg.verify_green_scaling(ptable, 8.0, 1.0, grid)
        assert rep["deviation"] == 0.0

    def test_scaling_deviation(self, ptable):
        grid = fd.PolarGrid(n_r=512, n_theta=8, r_min=1e-4)
        rep = gg.verify_green_scaling(ptable, 8.0, 2.0 ** 1.5, grid)
        assert rep["deviation"] <= 1e-4

    def test_rejects_bad_factor(self, ptable):
        grid = fd.PolarGrid(n_r=64, n_theta=8, r_min=1e-3)
        with pytest.raises(ValueError):
            gg.verify_green_scaling(ptable, 8.0, 0.5, grid)


class TestNewton:
    def test_fiducial_input_small_gamma(self, ptable):
        grid = fd.PolarGrid(n_r=160, n_theta=16, r_min=1e-4)
        fidu = fd.fiducial_solution(ptable, 8.0, grid)
        res = gg.newton_correct(fidu, tol=1e-8, max_iter=6)
        assert np.max(np.abs(res.gamma)) < 1e-3
        assert res.residual_history[-1] < 1e-7

    def test_quadratic_contraction(self, ptable):
        grid = fd.PolarGrid(n_r=160, n_theta=16, r_min=1e-4)
        app = fd.approximate_solution(ptable, fd.MODEL_Q, 4.0, grid)
        res = gg.newton_correct(app, tol=5e-9, max_iter=8)
        h = res.residual_history
        assert h[1] <= h[0] ** 1.5
        assert h[-1] < 1e-7

    def test_corrected_kind(self, ptable):
        grid = fd.PolarGrid(n_r=96, n_theta=8, r_min=1e-3)
        app = fd.approximate_solution(ptable, fd.MODEL_Q, 6.0, grid)
        res = gg.newton_correct(app, tol=1e-7, max_iter=6)
        assert res.pair.kind == "corrected"
        assert res.distance_sup > 0
