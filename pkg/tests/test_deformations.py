"""Horizontal, radial, vertical and mixed deformations."""

import numpy as np
import pytest

from hitchin_disk import deformations as df
from hitchin_disk import fields as fd
from hitchin_disk import gauge as gg
from hitchin_disk import metrics as mt
from hitchin_disk import painleve as pl

Q = fd.MODEL_Q


@pytest.fixture(scope="module")
def sheet_grid():
    return fd.PolarGrid(n_r=256, n_theta=16, r_min=1e-12, radial_map="sqrt")


@pytest.fixture(scope="module")
def cover_grid():
    return fd.PolarGrid(n_r=256, n_theta=48, r_min=1e-12, cover_sheets=2,
                        radial_map="sqrt")


class TestPhiInfinity:
    def test_radial_is_half_higgs(self, sheet_grid):
        phi_inf = df.phi_infinity(Q, Q.coeffs, sheet_grid)
        lim = fd.limiting_configuration(Q, fd.PolarGrid(
            n_r=sheet_grid.n_r, n_theta=sheet_grid.n_theta, r_min=1e-12,
            radial_map="sqrt"))
        assert np.max(np.abs(phi_inf.values - 0.5 * lim.phi.values)) < 1e-13

    def test_l2_norm_closed_form(self, sheet_grid):
        phi_inf = df.phi_infinity(Q, (1.0,), sheet_grid)
        v = df.TangentPair(sheet_grid, None, phi_inf)
        val = mt.l2_inner(v, v)
        assert abs(val.value - np.pi / 2) < 1e-7

    def test_normal_bracket_vanishes(self, sheet_grid):
        # [Phi_inf* ^ phi_inf] = 0 pointwise
        lim_phi = fd.limiting_configuration(Q, sheet_grid).phi.values
        phi_inf = df.phi_infinity(Q, (1.0, 0.5), sheet_grid).values
        phis = np.conj(np.swapaxes(lim_phi, -1, -2))
        br = phis @ phi_inf - phi_inf @ phis
        assert np.max(np.abs(br)) < 1e-12


class TestHorizontalRaw:
    def test_radial_specialization(self, ptable, sheet_grid):
        raw = df.horizontal_raw(ptable, Q, Q.coeffs, 6.0, sheet_grid)
        # Im(qdot/q) = 0: only the f_t' term can contribute to alpha, and for
        # the raw variation it sits in the dtheta component
        assert np.max(np.abs(raw.alpha.values[0])) < 1e-13

    def test_finite_difference_linearization(self, ptable):
        # compare against the epsilon-variation of the construction on the
        # cutoff plateau (chi == 1 region)
        g = fd.PolarGrid(n_r=128, n_theta=16, r_min=1e-3, r_max=0.6)
        t = 5.0
        qdot = (1.0, 0.0, 0.5)
        raw = df.horizontal_raw(ptable, Q, qdot, t, g)
        eps = 1e-6
        qp = fd.QuadDifferentialModel(
            coeffs=tuple(c + eps * d for c, d in
                         zip(Q.coeffs + (0.0,), qdot)))
        qm = fd.QuadDifferentialModel(
            coeffs=tuple(c - eps * d for c, d in
                         zip(Q.coeffs + (0.0,), qdot)))
        ap = fd.approximate_solution(ptable, qp, t, g)
        am = fd.approximate_solution(ptable, qm, t, g)
        fd_a = (ap.a.values - am.a.values) / (2 * eps)
        fd_phi = t * (ap.phi.values - am.phi.values) / (2 * eps)
        scale_a = np.max(np.abs(raw.alpha.values)) + 1e-30
        scale_p = np.max(np.abs(raw.phi.values))
        assert np.max(np.abs(fd_a - raw.alpha.values)) / scale_a < 1e-4
        assert np.max(np.abs(fd_phi - raw.phi.values)) / scale_p < 1e-6

    def test_large_t_limit(self, ptable):
        # dot Phi -> the limiting-configuration variation as t -> infinity
        g = fd.PolarGrid(n_r=48, n_theta=8, r_min=0.3, grading=1.0)
        qdot = (1.0,)
        raw = df.horizontal_raw(ptable, Q, qdot, 40.0, g)
        z = g.zmesh()
        f = Q.f(z)
        fdot = Q.fdot(z) if Q.dot_coeffs != (0j,) else np.ones_like(z)
        fdot = np.ones_like(z)
        absf = np.abs(f)
        expect = np.zeros(g.shape + (2, 2), dtype=complex)
        expect[..., 0, 1] = (fdot - 0.5 * f * np.real(fdot / f)) / np.sqrt(absf)
        expect[..., 1, 0] = 0.5 * np.sqrt(absf) * np.real(fdot / f)
        d = np.max(np.abs(raw.phi.values / 40.0 - expect))
        assert d < 1e-8


class TestFirstCorrection:
    def test_radial_alpha_vanishes(self, ptable, sheet_grid):
        fc = df.first_correction(ptable, Q, Q.coeffs, 8.0, sheet_grid)
        assert np.max(np.abs(fc.alpha.values)) < 1e-14

    def test_model_alpha_formula(self, ptable):
        # alpha_t = 4 f_t'(r) Im(fdot/z) dr diag(i,-i) on the model
        g = fd.PolarGrid(n_r=96, n_theta=16, r_min=1e-3)
        t = 6.0
        qdot = (1.0,)
        fc = df.first_correction(ptable, Q, qdot, t, g)
        r, th = g.mesh()
        prof = pl.profile_eval(ptable, t, g.r)
        im_term = np.imag(np.exp(-1j * th) / r)  # Im(1/z) = -sin(th)/r
        expect_r = 4.0 * prof.df[:, None] * im_term
        got = fc.alpha.values[0][..., 0, 0] / 1j
        assert np.max(np.abs(got - expect_r)) < 1e-10 * max(np.max(np.abs(expect_r)), 1.0)
        assert np.max(np.abs(fc.alpha.values[1])) < 1e-13

    def test_gamma_t_limit(self, ptable):
        # gamma_t -> -(1/4) Im(qdot/q) diag(i,-i) away from the zero
        g = fd.PolarGrid(n_r=48, n_theta=8, r_min=0.4, grading=1.0)
        gam = df.gamma_t_field(ptable, Q, (1.0,), 30.0, g)
        z = g.zmesh()
        expect = (-0.25 * np.imag(1.0 / z))[..., None, None] * fd.DIAG_I
        assert np.max(np.abs(gam.values - expect)) < 1e-9

    def test_phi_packet_weight_radial(self, ptable):
        # |phi_t - phi_inf| entries at fixed rho are single weight -1/3
        # packets for qdot = q: exact two-t ratio 2^{-1/3}
        def sup_at(t):
            r = np.array([0.5, 1.0, 2.0]) * t ** (-2.0 / 3.0)
            prof = pl.profile_eval(ptable, t, r)
            up = np.abs((0.5 - prof.r_dh) * np.exp(-prof.h) - 0.5) * np.sqrt(r)
            lo = np.abs((0.5 + prof.r_dh) * np.exp(prof.h) - 0.5) * np.sqrt(r)
            return max(up.max(), lo.max())
        ratio = sup_at(32.0) / sup_at(16.0)
        assert abs(ratio / 2 ** (-1.0 / 3.0) - 1.0) < 0.02

    def test_exterior_exponential_decay(self, ptable):
        # ||phi_t - phi_inf||_{inf, r > 7/8} decays exponentially in t
        g = fd.PolarGrid(n_r=64, n_theta=8, r_min=0.9, grading=1.0)
        ts = np.linspace(4.0, 12.0, 7)
        sups = []
        for t in ts:
            fc = df.first_correction(ptable, Q, Q.coeffs, t, g)
            phi_inf = df.phi_infinity(Q, Q.coeffs, g)
            diff = fc.phi.values / t - phi_inf.values
            sups.append(np.max(np.abs(diff)))
        lg = np.log(sups)
        A = np.vstack([np.ones_like(ts), ts]).T
        coef, *_ = np.linalg.lstsq(A, lg, rcond=None)
        pred = A @ coef
        r2 = 1 - np.sum((lg - pred) ** 2) / np.sum((lg - np.mean(lg)) ** 2)
        assert coef[1] < 0 and r2 > 0.99


class TestRadialTangent:
    def test_normalized_flag(self, ptable, sheet_grid):
        rad = df.radial_tangent(ptable, Q, 8.0, sheet_grid, normalize=True)
        qn = rad.meta["q"]
        assert abs(qn.l1_norm(sheet_grid) - 1.0) < 1e-10

    def test_scaled_radius_stability(self, ptable):
        # sup |phi_t - phi_inf| at r = t^{-2/3} is c t^{-1/3} with stable c
        cs = []
        for t in (16.0, 32.0, 64.0):
            r = np.array([t ** (-2.0 / 3.0)])
            prof = pl.profile_eval(ptable, t, r)
            up = float(np.abs((0.5 - prof.r_dh) * np.exp(-prof.h) - 0.5) * np.sqrt(r))
            cs.append(up * t ** (1.0 / 3.0))
        assert max(cs) / min(cs) < 1.02


class TestVertical:
    def test_xi_inf_sqrt_bound(self, cover_grid):
        vd = df.vertical_data(0, cover_grid)
        small = (cover_grid.r < 1e-2) & (cover_grid.r > 0)
        vals = np.abs(vd.xi_inf.values[small]).max(axis=(-1, -2))
        ratios = vals / np.sqrt(cover_grid.r[small][:, None] / 2.0)
        ratios = ratios[ratios > 0]
        assert np.isfinite(ratios).all()
        assert ratios.max() < 2.1  # |xi| <= sqrt(2 r) for m = 0

    def test_beta_support(self, cover_grid):
        vd = df.vertical_data(1, cover_grid)
        inside = cover_grid.r < 5.0 / 8.0 - 1e-9
        assert np.max(np.abs(vd.beta_inf.values[:, inside])) == 0.0

    def test_equivariance(self, cover_grid):
        vd = df.vertical_data(0, cover_grid)
        ok, defect = fd.check_equivariance(vd.alpha_inf, parity=+1)
        assert ok, defect  # scalar odd x section odd = even total

    def test_gauged_difference_decay(self, ptable, cover_grid):
        vd = df.vertical_data(0, cover_grid)
        alpha_pair = df.TangentPair(cover_grid, vd.alpha_inf, None)
        m_inf = mt.l2_inner(alpha_pair, alpha_pair).value
        ts = np.geomspace(8.0, 45.0, 5)
        vals = []
        for t in ts:
            _, gauged, res = df.vertical_tangent(ptable, 0, t, cover_grid)
            assert res.residual_norm < 1e-8
            vals.append(mt.l2_inner(gauged, gauged).value - m_inf)
        slope = np.polyfit(np.log(ts), np.log(np.abs(vals)), 1)[0]
        assert slope <= -2.0 / 3.0 + 0.25  # coarse-grid sanity; acceptance
        # runs the tight bound on the production grid

    def test_coulomb_residual_after_fix(self, ptable, cover_grid):
        pair = fd.approximate_solution(ptable, Q, 10.0, cover_grid)
        op = gg.assemble_Lt(pair)
        vd = df.vertical_data(0, cover_grid)
        v = df.TangentPair(cover_grid, vd.beta_inf, None)
        gauged, res = gg.gauge_fix(pair, v, op=op)
        scale = gg.tangent_l2_ratio(op, v)
        cres = gg.coulomb_residual(pair, gauged, op=op)
        assert np.max(np.abs(cres.values)) / scale < 1e-8


class TestMixed:
    def test_pointwise_orthogonality_at_infinity(self, cover_grid):
        vd = df.vertical_data(0, cover_grid)
        hor = df.TangentPair(cover_grid, None, df.phi_infinity(Q, (1.0,), cover_grid))
        vert = df.TangentPair(cover_grid, vd.alpha_inf, None)
        rep = df.mixed_inner_probe(hor, vert)
        assert rep["density_sup"] == 0.0
        assert rep["pairing"] == 0.0

    def test_symmetry(self, ptable, cover_grid):
        vd = df.vertical_data(0, cover_grid)
        hor = df.TangentPair(cover_grid, None, df.phi_infinity(Q, (1.0,), cover_grid))
        vert = df.TangentPair(cover_grid, vd.alpha_inf, None)
        rep = df.mixed_inner_probe(hor, vert)
        assert rep["pairing"] == rep["symmetric_check"]

    def test_finite_t_selection_rule(self, ptable, cover_grid):
        # all mixed pairings vanish identically on the one-zero model: the
        # deformation families carry distinct rotation weights
        t = 10.0
        pair = fd.approximate_solution(ptable, Q, t, cover_grid)
        op = gg.assemble_Lt(pair)
        gh, _ = gg.gauge_fix(pair, df.first_correction(ptable, Q, (1.0,), t, cover_grid), op=op)
        _, gv, _ = df.vertical_tangent(ptable, 0, t, cover_grid)
        val = mt.l2_inner(gh.scaled(1.0 / t), gv).value
        assert abs(val) < 1e-13
