"""Acceptance suite: one callable per criterion, shared by pytest and the CLI.

Each check returns a CriterionResult with per-clause detail lines.  Clause
1b (|psi/K0 - 1| < 1e-3 on [4, 8]) is implemented literally and fails by
mathematics, not by implementation: the sigma = 1/3 connection solution has
far field (1/pi) K0 (McCoy-Tracy-Wu), measured here to seven digits and
cross-checked by an independent shooting solve.  It is reported as a known
defect; the corrected criterion |pi psi / K0 - 1| < 1e-3 passes with three
orders of margin.  See notes/decisions.md in the repository for the full
analysis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import deformations as df
from . import fields as fd
from . import gauge as gg
from . import metrics as mt
from . import asymptotics as asy
from . import painleve as pl
from .conventions import su2_from_components, frob_norm2


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    known_defect: bool = False
    details: list = field(default_factory=list)
    elapsed: float = 0.0

    def lines(self):
        out = []
        for ok, msg in self.details:
            tag = "PASS" if ok else ("FAIL [known spec defect]" if self.known_defect
                                     and not ok else "FAIL")
            out.append(f"  [{tag}] {msg}")
        return out


def _clause(details, ok, msg):
    details.append((bool(ok), msg))
    return bool(ok)


# ---------------------------------------------------------------------------

def criterion_1_painleve(table):
    """BVP residual, monotonicity, far field, small-rho constant."""
    t0 = time.time()
    details = []
    res = float(np.max(np.abs(table.ode_residual())))
    ok = _clause(details, res < 1e-8, f"discrete ODE residual {res:.2e} < 1e-8")
    mono = bool(np.all(table.psi > 0) and np.all(np.diff(table.psi) < 0))
    ok &= _clause(details, mono, "psi strictly positive and decreasing")

    rhos = np.linspace(4.0, 8.0, 9)
    ratios = np.array([pl.eval_psi(table, r)[0] / pl.bessel_k0(r) for r in rhos])
    lit = bool(np.max(np.abs(ratios - 1.0)) < 1e-3)
    _clause(details, lit,
            f"|psi/K0 - 1| < 1e-3 on [4,8]: measured ratio {ratios[0]:.7f} "
            f"(= 1/pi to {abs(np.pi*ratios[0]-1):.1e}; literal criterion "
            "unattainable, see ledger)")
    corrected = bool(np.max(np.abs(np.pi * ratios - 1.0)) < 1e-3)
    ok_far = _clause(details, corrected,
                     "|pi psi/K0 - 1| < 1e-3 on [4,8] (corrected far-field matching)")

    rr = np.geomspace(table.rho_min, 100 * table.rho_min, 40)
    c = pl.eval_psi(table, rr)[0] + np.log(rr) / 3.0
    ok_c = _clause(details, c.max() - c.min() < 1e-3,
                   f"psi + (1/3) log rho limit: variation {c.max()-c.min():.2e} "
                   f"< 1e-3 (constant {c.mean():.6f})")

    # `passed` covers every clause except the literal far-field one, which is
    # unattainable (documented defect); if that clause ever starts passing,
    # the analysis in the ledger needs revisiting, so flag it as a failure.
    passed = ok and ok_far and ok_c and (not lit)
    return CriterionResult(1, "Painleve BVP", passed=passed,
                           known_defect=not lit, details=details,
                           elapsed=time.time() - t0)


def criterion_2_lemma41(table):
    t0 = time.time()
    details = []
    rep = pl.verify_ft_properties(table, np.geomspace(4.0, 128.0, 9))
    ok = _clause(details, rep.f_min >= 0.0 and rep.f_max <= 0.125 + 1e-12,
                 f"0 <= f_t <= 1/8 (range [{rep.f_min:.2e}, {rep.f_max:.10f}])")
    ok &= _clause(details, np.isfinite(rep.f_over_r2_small_r).all(),
                  "f_t(r)/r^2 bounded as r -> 0")
    ok &= _clause(details, rep.mono_r_violations == 0 and rep.mono_t_violations == 0,
                  "monotone in r and t (no violations)")
    ok &= _clause(details, abs(rep.slope_sup_rinv_f - 2.0 / 3.0) < 0.02,
                  f"sup_r r^-1 f_t growth exponent {rep.slope_sup_rinv_f:.4f} = 2/3 +- 0.02")
    ok &= _clause(details, abs(rep.slope_sup_rinv2_f - 4.0 / 3.0) < 0.02,
                  f"sup_r r^-2 f_t growth exponent {rep.slope_sup_rinv2_f:.4f} = 4/3 +- 0.02")
    return CriterionResult(2, "Lemma 4.1 profile suite", passed=ok,
                           details=details, elapsed=time.time() - t0)


def criterion_3_fiducial(table):
    t0 = time.time()
    details = []
    sups1, sups2 = [], []
    for n_r, n_t in ((96, 8), (192, 16), (384, 32)):
        g = fd.PolarGrid(n_r=n_r, n_theta=n_t, r_min=0.0)
        fidu = fd.fiducial_solution(table, 5.0, g)
        _, _, nm = fd.hitchin_residual(fidu)
        sups1.append(nm["sup1"])
        sups2.append(nm["sup2"])
    orders = [np.log2(sups1[i] / sups1[i + 1]) for i in range(2)] + \
             [np.log2(sups2[i] / sups2[i + 1]) for i in range(2)]
    ok = _clause(details, all(abs(o - 2.0) <= 0.3 for o in orders),
                 "fiducial residual refinement orders "
                 + ", ".join(f"{o:.2f}" for o in orders) + " (2.0 +- 0.3)")

    # support: approximate == fiducial / limiting outside the annulus
    g = fd.PolarGrid(n_r=200, n_theta=16, r_min=1e-3)
    t = 6.0
    app = fd.approximate_solution(table, fd.MODEL_Q, t, g)
    fidu = fd.fiducial_solution(table, t, g)
    lim = fd.limiting_configuration(fd.MODEL_Q, g)
    m_in = g.r <= 5.0 / 8.0 - 1e-9
    m_out = g.r >= 7.0 / 8.0 + 1e-9
    d_in = max(np.max(np.abs(app.a.values[:, m_in] - fidu.a.values[:, m_in])),
               np.max(np.abs(app.phi.values[m_in] - fidu.phi.values[m_in])))
    d_out = max(np.max(np.abs(app.a.values[:, m_out] - lim.a.values[:, m_out])),
                np.max(np.abs(app.phi.values[m_out] - lim.phi.values[m_out])))
    ok &= _clause(details, d_in < 1e-13 and d_out < 1e-13,
                  f"approximate == fiducial inside ({d_in:.1e}) and == limiting "
                  f"outside ({d_out:.1e}) the cutoff annulus")

    # exponential residual decay in t, measured against the limiting pair to
    # cancel the t-independent discretization floor
    g2 = fd.PolarGrid(n_r=3072, n_theta=8, r_min=0.45, r_max=1.0, grading=1.0)
    lim2 = fd.limiting_configuration(fd.MODEL_Q, g2)
    l1, l2c, _ = fd.hitchin_residual(lim2, 1.0)
    # the cutoff support: this is where the approximate pair's residual lives
    ann = (g2.r >= 5.0 / 8.0) & (g2.r <= 7.0 / 8.0)
    ts = np.linspace(4.0, 20.0, 9)
    sups = []
    for t in ts:
        app = fd.approximate_solution(table, fd.MODEL_Q, t, g2)
        f1, f2, _ = fd.hitchin_residual(app)
        n1 = np.sqrt(fd.MatrixField(g2, f1.values - l1.values, "2",
                                    "skew-hermitian").pointwise_norm2()[ann])
        n2 = np.sqrt(fd.MatrixField(g2, f2.values - l2c.values, "(1,1)",
                                    "general").pointwise_norm2()[ann])
        sups.append(max(n1.max(), n2.max()))
    lg = np.log(sups)
    A = np.vstack([np.ones_like(ts), ts]).T
    coef, *_ = np.linalg.lstsq(A, lg, rcond=None)
    pred = A @ coef
    r2 = 1 - np.sum((lg - pred) ** 2) / np.sum((lg - np.mean(lg)) ** 2)
    ok &= _clause(details, coef[1] < 0 and r2 > 0.99,
                  f"approximate residual decays exponentially: slope {coef[1]:.3f}, "
                  f"R^2 {r2:.5f} over t in [4, 20]")
    return CriterionResult(3, "Fiducial exactness / approximate residual",
                           passed=ok, details=details, elapsed=time.time() - t0)


def criterion_4_green(table):
    t0 = time.time()
    details = []
    grid = fd.PolarGrid(n_r=512, n_theta=8, r_min=1e-4)
    rep = gg.verify_green_scaling(table, 8.0, 2.0 ** 1.5, grid)
    ok = _clause(details, rep["deviation"] <= 1e-4,
                 f"rescaled solves at t and 2^(3/2) t agree to {rep['deviation']:.2e} <= 1e-4")
    rep1 = gg.verify_green_scaling(table, 8.0, 1.0, grid)
    ok &= _clause(details, rep1["deviation"] == 0.0,
                  "factor = 1 gives identical solves")
    ratios = []
    for tt in np.geomspace(4.0, 64.0, 6):
        pair = fd.fiducial_solution(table, tt, grid)
        op = gg.assemble_Lt(pair)
        w = tt ** (2.0 / 3.0) * grid.r
        rhs_vals = np.zeros(grid.shape + (2, 2), dtype=complex)
        rhs_vals[..., :, :] = np.exp(-w ** 1.5)[:, None, None, None] * fd.DIAG_I
        res = gg.solve_Lt(op, fd.MatrixField(grid, rhs_vals, "0", "skew-hermitian"))
        ratios.append(gg._field_l2(op, res.xi.values) / gg._field_l2(op, rhs_vals))
    ok &= _clause(details, bool(np.all(np.diff(ratios) <= 0)),
                  "measured ||L_t^-1|| non-increasing in t "
                  f"({ratios[0]:.2e} -> {ratios[-1]:.2e})")
    return CriterionResult(4, "Green-kernel scaling", passed=ok,
                           details=details, elapsed=time.time() - t0)


def criterion_5_packets():
    t0 = time.time()
    details = []
    ok = True
    t_grid = np.geomspace(8.0, 512.0, 10)
    for j in (0, 1, 2):
        fit = asy.packet_exponent(lambda s: np.exp(-s ** 1.5), j, t_grid)
        target = -2.0 * (j + 1) / 3.0
        ok &= _clause(details, abs(fit.exponent - target) < 0.01,
                      f"packet integral j={j}: exponent {fit.exponent:.5f} "
                      f"= {target:.5f} +- 0.01")
    return CriterionResult(5, "Packet-integral ladder", passed=ok,
                           details=details, elapsed=time.time() - t0)


def criterion_6_coulomb(table, rng=None):
    t0 = time.time()
    details = []
    rng = rng or np.random.default_rng(20240817)
    q = fd.MODEL_Q
    grid = fd.PolarGrid(n_r=200, n_theta=24, r_min=1e-3)
    t = 8.0
    pair = fd.approximate_solution(table, q, t, grid)
    op = gg.assemble_Lt(pair)

    rad = df.radial_tangent(table, q, t, grid)
    gauged, res = gg.gauge_fix(pair, rad, op=op)
    scale = gg.tangent_l2_ratio(op, rad)
    cres = gg.coulomb_residual(pair, gauged, op=op)
    rel = np.max(np.abs(cres.values)) / scale
    ok = _clause(details, rel <= 1e-8,
                 f"post-gauge_fix Coulomb residual {rel:.2e} <= 1e-8 relative")

    lim = fd.limiting_configuration(q, grid)
    op_lim = gg.assemble_Lt(lim, t=1.0)
    v_h = df.TangentPair(grid, None, df.phi_infinity(q, (1.0,), grid))
    r_h = gg._solve_vec(op_lim, gg.coulomb_residual_vec(op_lim, v_h))
    xi_h = np.max(np.abs(r_h.xi.values))
    cov = fd.PolarGrid(n_r=200, n_theta=32, r_min=1e-12, cover_sheets=2,
                       radial_map="sqrt")
    lim_c = fd.limiting_configuration(q, cov)
    op_c = gg.assemble_Lt(lim_c, t=1.0)
    vd = df.vertical_data(0, cov)
    v_v = df.TangentPair(cov, vd.alpha_inf, None)
    r_v = gg._solve_vec(op_c, gg.coulomb_residual_vec(op_c, v_v))
    xi_v = np.max(np.abs(r_v.xi.values)) / np.max(np.abs(vd.alpha_inf.values[0]))
    ok &= _clause(details, xi_h < 1e-10 and xi_v < 1e-2,
                  f"(0, phi_inf) and (alpha_inf, 0) pass with xi ~ 0 "
                  f"({xi_h:.1e}, {xi_v:.1e} relative)")

    # energy identity on 5 random smooth fields (analytic derivatives)
    g_e = fd.PolarGrid(n_r=192, n_theta=32, r_min=1e-4)
    pair_e = fd.fiducial_solution(table, 6.0, g_e)
    op_e = gg.assemble_Lt(pair_e)
    r, th = g_e.mesh()
    worst = 0.0
    for trial in range(5):
        comps = np.zeros(g_e.shape + (3,))
        drc = np.zeros_like(comps)
        dthc = np.zeros_like(comps)
        for a in range(3):
            for (m, p) in ((0, 2), (1, 2), (2, 3)):
                c = rng.normal()
                bump = r ** p * (1 - r ** 2)
                dbump = p * r ** (p - 1) * (1 - r ** 2) - 2 * r ** (p + 1)
                comps[..., a] += c * np.sin(m * th + a) * bump
                drc[..., a] += c * np.sin(m * th + a) * dbump
                dthc[..., a] += c * m * np.cos(m * th + a) * bump
        xi_vals = su2_from_components(comps)
        lhs = float(op_e.field_to_vec(xi_vals) @ (op_e.matrix @ op_e.field_to_vec(xi_vals)))
        ad_th = pair_e.a.values[1] @ xi_vals - xi_vals @ pair_e.a.values[1]
        dxi_r = su2_from_components(drc)
        dxi_th = su2_from_components(dthc) + ad_th
        phi_full = 6.0 * pair_e.phi.values
        br = phi_full @ xi_vals - xi_vals @ phi_full
        rr2 = g_e.r[:, None] ** 2
        dens = frob_norm2(dxi_r) + frob_norm2(dxi_th) / rr2 + 4 * frob_norm2(br)
        rhs_val = g_e.integrate(dens)
        worst = max(worst, abs(lhs - rhs_val) / rhs_val)
    ok &= _clause(details, worst < 5e-3,
                  f"energy identity <L xi, xi> = ||d_A xi||^2 + 2||[Phi^xi]||^2 "
                  f"to O(h^2): worst rel dev {worst:.2e} on 5 random fields")
    return CriterionResult(6, "Coulomb gauge", passed=ok, details=details,
                           elapsed=time.time() - t0)


def criterion_7_radial(table):
    t0 = time.time()
    details = []
    q = fd.MODEL_Q
    grid = fd.PolarGrid(n_r=320, n_theta=16, r_min=1e-12, radial_map="sqrt")
    phi_inf = df.phi_infinity(q, q.coeffs, grid)
    v_inf = df.TangentPair(grid, None, phi_inf)
    m_inf = mt.l2_inner(v_inf, v_inf).value
    ts = np.geomspace(8.0, 64.0, 8)
    samples = []
    for t in ts:
        pair = fd.approximate_solution(table, q, t, grid)
        op = gg.assemble_Lt(pair)
        gauged, _ = gg.gauge_fix(pair, df.radial_tangent(table, q, t, grid), op=op)
        samples.append((t, mt.l2_inner(gauged, gauged).value - m_inf))
    fit = asy.fit_power_law(samples, drop_small_third=False)
    ok = _clause(details, fit.exponent <= -5.0 / 3.0 + 0.1,
                 f"radial metric-difference exponent {fit.exponent:.4f} <= -5/3 + 0.1 "
                 f"(R^2 {fit.r_squared:.6f}; faster decay than the generic t^(-5/3) "
                 "ladder term: its coefficient cancels on the model)")
    return CriterionResult(7, "Radial direction", passed=ok, details=details,
                           elapsed=time.time() - t0)


def criterion_8_vertical_mixed(table):
    t0 = time.time()
    details = []
    q = fd.MODEL_Q
    cov = fd.PolarGrid(n_r=480, n_theta=64, r_min=1e-12, cover_sheets=2,
                       radial_map="sqrt")
    vd = df.vertical_data(0, cov)
    alpha_pair = df.TangentPair(cov, vd.alpha_inf, None)
    m_inf = mt.l2_inner(alpha_pair, alpha_pair).value
    ts = np.geomspace(8.0, 64.0, 8)
    samples, mixed_vals = [], []
    for t in ts:
        _, gauged, _ = df.vertical_tangent(table, 0, t, cov)
        samples.append((t, mt.l2_inner(gauged, gauged).value - m_inf))
        pair = fd.approximate_solution(table, q, t, cov)
        op = gg.assemble_Lt(pair)
        gh, _ = gg.gauge_fix(pair, df.first_correction(table, q, (1.0,), t, cov), op=op)
        mixed_vals.append(mt.l2_inner(gh.scaled(1.0 / t), gauged).value)
    fit = asy.fit_power_law(samples, drop_small_third=False)
    ok = _clause(details, fit.exponent <= -2.0 / 3.0 + 0.1,
                 f"vertical metric-difference exponent {fit.exponent:.4f} <= -2/3 + 0.1 "
                 f"(R^2 {fit.r_squared:.5f})")

    phi_inf_h = df.phi_infinity(q, (1.0,), cov)
    dens = mt.pairing_density(df.TangentPair(cov, None, phi_inf_h), alpha_pair)
    ok &= _clause(details, float(np.max(np.abs(dens))) == 0.0,
                  "mixed pairing at t = infinity vanishes pointwise (exactly)")
    mixed_sup = float(np.max(np.abs(mixed_vals)))
    ok &= _clause(details, mixed_sup <= 1e-12,
                  f"mixed pairing at finite t: {mixed_sup:.1e} (exact zero by the "
                  "rotational selection rule; passes the one-sided -2/3 bound)")
    return CriterionResult(8, "Vertical and mixed ladders", passed=ok,
                           details=details, elapsed=time.time() - t0)


def criterion_9_cone():
    t0 = time.time()
    details = []
    grid = fd.PolarGrid(n_r=512, n_theta=32, r_min=0.0)
    rep = mt.cone_check(fd.MODEL_Q, (1.0,), [2.0, 3.5, 10.0], grid)
    ok = _clause(details, rep["max_dev"] <= 1e-12,
                 f"homogeneity identities to {rep['max_dev']:.2e} <= 1e-12")
    rep_n = mt.cone_check(fd.MODEL_Q, (1.0,), [2.0], grid, normalize=True)
    dev = abs(rep_n["four_q_sk"] - 1.0)
    ok &= _clause(details, dev <= 1e-10,
                  f"with int|q| = 1: 4 ||q||^2_sK = 1 to {dev:.2e}")
    return CriterionResult(9, "Cone structure", passed=ok, details=details,
                           elapsed=time.time() - t0)


def criterion_10_crosscheck():
    t0 = time.time()
    details = []
    grid = fd.PolarGrid(n_r=2048, n_theta=32, r_min=0.0)
    z1, w1, info1 = mt.chart_crosscheck(fd.MODEL_Q, (1.0,), grid)
    z2, w2, info2 = mt.chart_crosscheck(fd.MODEL_Q, fd.MODEL_Q.coeffs, grid)
    ok = _clause(details, info1["rel_mismatch"] <= 1e-6 and info2["rel_mismatch"] <= 1e-6,
                 f"z/w-chart agreement at n_r = 2048: rel {info1['rel_mismatch']:.2e}, "
                 f"{info2['rel_mismatch']:.2e} <= 1e-6")
    ok &= _clause(details, abs(z1 - np.pi / 2) < 1e-6 and abs(w1 - np.pi / 2) < 1e-6,
                  f"qdot = dz^2 reproduces pi/2 (z {z1:.9f}, w {w1:.9f})")
    ok &= _clause(details, abs(z2 - np.pi / 6) < 1e-6 and abs(w2 - np.pi / 6) < 1e-6,
                  f"qdot = q reproduces pi/6 (z {z2:.9f}, w {w2:.9f})")
    return CriterionResult(10, "Chart cross-check", passed=ok, details=details,
                           elapsed=time.time() - t0)


def criterion_11_newton(table):
    t0 = time.time()
    details = []
    q = fd.MODEL_Q
    grid = fd.PolarGrid(n_r=224, n_theta=16, r_min=1e-4, grading=2.0)
    ts = np.linspace(2.5, 4.75, 6)
    dists, quad_ok = [], True
    for t in ts:
        app = fd.approximate_solution(table, q, t, grid)
        res = gg.newton_correct(app, tol=5e-9, max_iter=8)
        dists.append(res.distance_sup)
        h = res.residual_history
        if len(h) >= 2 and h[0] > 1e-6:
            quad_ok &= h[1] <= max(h[0] ** 1.5, 5e-9)
    ok = _clause(details, quad_ok,
                 "quadratic residual contraction observed (r1 <= r0^1.5 at every t)")
    lg = np.log(dists)
    A = np.vstack([np.ones_like(ts), ts]).T
    coef, *_ = np.linalg.lstsq(A, lg, rcond=None)
    pred = A @ coef
    r2 = 1 - np.sum((lg - pred) ** 2) / np.sum((lg - np.mean(lg)) ** 2)
    ok &= _clause(details, coef[1] < 0 and r2 > 0.99,
                  f"corrected-vs-approximate distance: semi-log slope {coef[1]:.3f}, "
                  f"R^2 {r2:.5f}")
    return CriterionResult(11, "Newton correction", passed=ok, details=details,
                           elapsed=time.time() - t0)


def criterion_12_packet_ratios(table):
    t0 = time.time()
    details = []
    ok = True

    # radial/horizontal family (Props 6.1 / 7.1): |phi_t - phi_inf| entries
    # for qdot = q are single weight -1/3 packets; evaluate at fixed
    # rho-points r = rho0 t^{-2/3} so the two-t ratio is exact.
    rho_pts = np.array([0.5, 1.0, 2.0, 4.0])
    def radial_packet_sup(t):
        r = rho_pts * t ** (-2.0 / 3.0)
        prof = pl.profile_eval(table, t, r)
        upper = np.abs((0.5 - prof.r_dh) * np.exp(-prof.h) - 0.5) * np.sqrt(r)
        lower = np.abs((0.5 + prof.r_dh) * np.exp(prof.h) - 0.5) * np.sqrt(r)
        return max(upper.max(), lower.max())
    for t in (16.0, 32.0):
        ratio = radial_packet_sup(2 * t) / radial_packet_sup(t)
        dev = abs(ratio / 2.0 ** (-1.0 / 3.0) - 1.0)
        ok &= _clause(details, dev < 0.05,
                      f"radial/horizontal packet weight -1/3: ratio at t={t:g} "
                      f"off by {dev:.4f} < 0.05")

    # vertical family (Prop 8.2): xi_t + xi_inf has leading weight -1/3
    cov = fd.PolarGrid(n_r=480, n_theta=48, r_min=1e-12, cover_sheets=2,
                       radial_map="sqrt")
    def vertical_packet_sup(t):
        _, gauged, _ = df.vertical_tangent(table, 0, t, cov)
        vals = gauged.meta["xi_sum_vals"]
        window = (cov.r >= 0.5 * t ** (-2.0 / 3.0)) & (cov.r <= 4.0 * t ** (-2.0 / 3.0))
        return float(np.max(np.abs(vals[window])))
    sups = {t: vertical_packet_sup(t) for t in (32.0, 64.0, 128.0)}
    for t in (32.0, 64.0):
        ratio = sups[2 * t] / sups[t]
        dev = abs(ratio / 2.0 ** (-1.0 / 3.0) - 1.0)
        ok &= _clause(details, dev < 0.05,
                      f"vertical packet weight -1/3 (xi_t + xi_inf): ratio at t={t:g} "
                      f"off by {dev:.4f} < 0.05")
    return CriterionResult(12, "Packet weight ratio tests", passed=ok,
                           details=details, elapsed=time.time() - t0)


ALL_CRITERIA = {
    1: lambda table: criterion_1_painleve(table),
    2: lambda table: criterion_2_lemma41(table),
    3: lambda table: criterion_3_fiducial(table),
    4: lambda table: criterion_4_green(table),
    5: lambda table: criterion_5_packets(),
    6: lambda table: criterion_6_coulomb(table),
    7: lambda table: criterion_7_radial(table),
    8: lambda table: criterion_8_vertical_mixed(table),
    9: lambda table: criterion_9_cone(),
    10: lambda table: criterion_10_crosscheck(),
    11: lambda table: criterion_11_newton(table),
    12: lambda table: criterion_12_packet_ratios(table),
}


def run_all(table, numbers=None, verbose=True):
    """Run the acceptance criteria; returns (results, exit_code).

    Exit code 0 when everything passes or the only failures are the
    documented known-defect clauses; 1 otherwise.
    """
    numbers = sorted(numbers or ALL_CRITERIA)
    results = []
    for n in numbers:
        res = ALL_CRITERIA[n](table)
        results.append(res)
        if verbose:
            status = "PASS" if res.passed else (
                "PASS (with known-defect clause)" if res.known_defect else "FAIL")
            print(f"criterion {res.number:2d} [{status:>4s}] {res.name} "
                  f"({res.elapsed:.1f}s)")
            for line in res.lines():
                print(line)
    code = 0 if all(r.passed for r in results) else 1
    return results, code
