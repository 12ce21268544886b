"""Painleve III profile solver tests.

The expected values here come from independent oracles: the integral
representation of K0 for the Bessel evaluations, and grid-refined /
shooting-validated solves for the boundary value problem.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from hitchin_disk import painleve as pl


def oracle_k0(x):
    """K0(x) = int_0^inf exp(-x cosh u) du by adaptive quadrature."""
    val, err = quad(lambda u: np.exp(-x * np.cosh(u)), 0.0, 30.0,
                    epsabs=0.0, epsrel=1e-13, limit=400)
    return val


class TestBesselK0:
    def test_against_integral_oracle(self):
        for x in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0):
            ref = oracle_k0(x)
            assert abs(pl.bessel_k0(x) - ref) <= 1e-10 * ref

    def test_reference_value(self):
        # frozen from the integral-representation oracle
        assert abs(pl.bessel_k0(1.0) - 0.42102443824070834) < 1e-10

    def test_domain_error(self):
        with pytest.raises(ValueError):
            pl.bessel_k0(0.0)
        with pytest.raises(ValueError):
            pl.bessel_k0(-1.0)

    def test_positive_decreasing(self):
        xs = np.linspace(0.05, 20.0, 200)
        vals = pl.bessel_k0(xs)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) < 0)
        assert pl.bessel_k0(2.0) > pl.bessel_k0(3.0) > 0

    def test_far_field_asymptote(self):
        # K0(x) e^x sqrt(2x/pi) = 1 - 1/(8x) + O(x^-2); at x = 50 the first
        # correction is 2.5e-3, so the combination is *not* 1 to 1e-6 (see
        # the decisions ledger); we check it against the oracle instead.
        x = 50.0
        combo = pl.bessel_k0(x) * np.exp(x) * np.sqrt(2 * x / np.pi)
        ref = oracle_k0(x) * np.exp(x) * np.sqrt(2 * x / np.pi)
        assert abs(combo - ref) < 1e-10
        assert abs(combo - (1.0 - 1.0 / (8 * x))) < 1e-4


class TestSolvePsi:
    def test_zero_data_variant(self):
        tab = pl.solve_psi(bc="zero", n=512)
        assert np.max(np.abs(tab.psi)) == 0.0

    def test_preconditions(self):
        with pytest.raises(ValueError):
            pl.solve_psi(rho_min=2.0)
        with pytest.raises(ValueError):
            pl.solve_psi(n=100)

    def test_table_invariants(self, ptable):
        assert np.all(ptable.psi > 0)
        assert np.all(np.diff(ptable.psi) < 0)
        assert np.max(np.abs(ptable.ode_residual())) < 1e-8
        # psi + (1/3) log rho stays bounded near rho_min
        mask = ptable.rho_grid < 100 * ptable.rho_min
        c = ptable.psi[mask] + np.log(ptable.rho_grid[mask]) / 3.0
        assert np.isfinite(c).all()
        assert c.max() - c.min() < 1e-3

    @pytest.mark.xfail(strict=True, reason=(
        "Spec defect: the sigma = 1/3 connection solution has far field "
        "(1/pi) K0(rho), not K0(rho) (McCoy-Tracy-Wu; measured ratio "
        "0.3183099 = 1/pi to 7 digits, validated by an independent shooting "
        "solve).  |psi/K0 - 1| < 1e-3 on [4, 8] is unattainable.  See "
        "notes/decisions.md."))
    def test_far_field_ratio_literal(self, ptable):
        for rho in np.linspace(4.0, 8.0, 9):
            ratio = pl.eval_psi(ptable, rho)[0] / pl.bessel_k0(rho)
            assert abs(ratio - 1.0) < 1e-3

    def test_far_field_ratio_connection_constant(self, ptable):
        # Corrected far-field matching: psi ~ (1/pi) K0.
        for rho in np.linspace(4.0, 8.0, 9):
            ratio = np.pi * pl.eval_psi(ptable, rho)[0] / pl.bessel_k0(rho)
            assert abs(ratio - 1.0) < 1e-3
        r4 = np.pi * pl.eval_psi(ptable, 4.0)[0] / pl.bessel_k0(4.0)
        assert 0.999 <= r4 <= 1.001

    def test_small_rho_constant(self):
        tab = pl.solve_psi(rho_min=1e-6, n=4096)
        rhos = np.geomspace(1e-6, 1e-4, 50)
        c = pl.eval_psi(tab, rhos)[0] + np.log(rhos) / 3.0
        assert c.max() - c.min() < 1e-3

    def test_refinement_second_order(self):
        # nested grids (n, 2n-1) share every other node
        t0 = pl.solve_psi(n=1025)
        t1 = pl.solve_psi(n=2049)
        t2 = pl.solve_psi(n=4097)
        d0 = np.max(np.abs(t1.psi[::2] - t0.psi))
        d1 = np.max(np.abs(t2.psi[::2] - t1.psi))
        assert 3.5 < d0 / d1 < 4.5

    def test_nonconvergence_reports_residual(self):
        with pytest.raises(pl.SolverError, match="residual"):
            pl.solve_psi(n=512, max_iter=1)


class TestEvalPsi:
    def test_nodes_exact(self, ptable):
        idx = [0, 17, 1000, 4095]
        psi, dpsi = pl.eval_psi(ptable, ptable.rho_grid[idx])
        assert np.array_equal(psi, ptable.psi[idx])
        assert np.array_equal(dpsi, ptable.rho_dpsi[idx])

    def test_domain_error(self, ptable):
        with pytest.raises(ValueError):
            pl.eval_psi(ptable, 0.0)
        with pytest.raises(ValueError):
            pl.eval_psi(ptable, np.array([1.0, -2.0]))

    def test_monotone(self, ptable, rng):
        rhos = np.sort(rng.uniform(1e-5, 30.0, size=200))
        psi = pl.eval_psi(ptable, rhos)[0]
        assert np.all(np.diff(psi) < 0)

    def test_beyond_table_asymptote(self, ptable):
        rho = 2.0 * ptable.rho_max
        psi, dpsi = pl.eval_psi(ptable, rho)
        scale = ptable.psi[-1] / pl.bessel_k0(ptable.rho_max)
        assert abs(psi - scale * pl.bessel_k0(rho)) <= 1e-6 * abs(psi)
        assert abs(dpsi + scale * rho * pl.bessel_k1(rho)) <= 1e-6 * abs(dpsi)

    def test_continuity_at_table_edges(self, ptable):
        for edge in (ptable.rho_min, ptable.rho_max):
            lo = pl.eval_psi(ptable, edge * (1 - 1e-9))[0]
            hi = pl.eval_psi(ptable, edge * (1 + 1e-9))[0]
            assert abs(hi - lo) < 1e-7 * max(abs(lo), 1e-30) + 1e-12


class TestProfileEval:
    def test_f_zero_at_origin(self, ptable):
        prof = pl.profile_eval(ptable, 5.0, 0.0)
        assert prof.f == 0.0
        assert prof.df == 0.0
        assert prof.half_exp_minus == 0.0
        assert np.isfinite(prof.half_exp_plus)

    def test_f_limit_at_large_t(self, ptable):
        prof = pl.profile_eval(ptable, 40.0, 0.5)
        assert abs(prof.f - 0.125) < 1e-6

    def test_defining_relation(self, ptable, rng):
        t = rng.uniform(1.0, 30.0, size=20)
        r = rng.uniform(1e-6, 1.0, size=20)
        for ti, ri in zip(t, r):
            prof = pl.profile_eval(ptable, ti, ri)
            assert abs(prof.f - 0.125 - prof.r_dh / 4.0) < 1e-15

    def test_f_bounds_and_monotonicity(self, ptable):
        r = np.logspace(-6, 0, 400)
        for t in (1.0, 4.0, 16.0):
            f = pl.profile_eval(ptable, t, r).f
            assert np.all(f >= 0.0) and np.all(f <= 0.125 + 1e-12)
            assert np.all(np.diff(f) >= -1e-13)

    def test_sinh_identity(self, ptable):
        # f_t'(r) r^-2 = 2 t^2 sinh(2 h_t(r)): the profile derivative is
        # spline-based, so this is a genuine cross-check of the ODE.
        t = 7.0
        r = np.array([0.05, 0.1, 0.2, 0.4])
        prof = pl.profile_eval(ptable, t, r)
        lhs = prof.df / r ** 2
        rhs = 2.0 * t ** 2 * np.sinh(2.0 * prof.h)
        assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-4

    def test_double_zero(self, ptable):
        # f_t(r)/r^2 bounded (and stable) as r -> 0 at fixed t
        t = 3.0
        r = np.geomspace(1e-8, 1e-5, 20)
        vals = pl.profile_eval(ptable, t, r).f / r ** 2
        assert np.isfinite(vals).all()
        assert vals.max() / vals.min() < 1.001

    def test_stable_half_exponentials(self, ptable):
        t = 5.0
        r = np.geomspace(1e-12, 1e-6, 10)
        prof = pl.profile_eval(ptable, t, r)
        # r^{1/2} e^{h} tends to the finite r = 0 limit
        lim = pl.profile_eval(ptable, t, 0.0).half_exp_plus
        assert np.allclose(prof.half_exp_plus, lim, rtol=1e-3)
        assert np.all(prof.half_exp_minus >= 0)


class TestVerifyFtProperties:
    def test_report(self, ptable):
        t_grid = np.geomspace(4.0, 128.0, 9)
        rep = pl.verify_ft_properties(ptable, t_grid)
        assert rep.f_min >= 0.0
        assert rep.f_max <= 0.125 + 1e-12
        assert rep.mono_r_violations == 0
        assert rep.mono_t_violations == 0
        assert abs(rep.slope_sup_rinv_f - 2.0 / 3.0) < 0.02
        assert abs(rep.slope_sup_rinv2_f - 4.0 / 3.0) < 0.02
        assert rep.sup_half_exp_nonincreasing
        assert np.isfinite(rep.f_over_r2_small_r).all()

    def test_requires_enough_t(self, ptable):
        with pytest.raises(ValueError):
            pl.verify_ft_properties(ptable, np.array([1.0, 2.0]))


class TestCache:
    def test_roundtrip_bitexact(self, ptable, tmp_path):
        path = tmp_path / "tab.csv"
        pl.save_table(ptable, path)
        back = pl.load_table(path)
        assert np.array_equal(back.rho_grid, ptable.rho_grid)
        assert np.array_equal(back.psi, ptable.psi)
        assert np.array_equal(back.rho_dpsi, ptable.rho_dpsi)

    def test_cached_solve_hits_cache(self, tmp_path):
        t1 = pl.cached_solve(n=512, cache_dir=str(tmp_path))
        files = list(tmp_path.iterdir())
        assert len(files) == 1
        t2 = pl.cached_solve(n=512, cache_dir=str(tmp_path))
        assert np.array_equal(t1.psi, t2.psi)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("NOTATAB v9 0 0 0 0\n")
        with pytest.raises(ValueError):
            pl.load_table(path)
