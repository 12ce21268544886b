"""Horizontal, radial, vertical and mixed infinitesimal deformations.

Horizontal variations follow the explicit variation formulas of the
approximate-solution family (with the cutoff on its plateau), the first
gauge correction subtracts D1 of gamma_t = -2 f_t(|q|) Im(qdot/q) diag(i,-i),
and the vertical sector is built on the double cover from the odd primitive
of the harmonic representative, cut off in the annulus, then gauge-fixed
through the full operator machinery.

All t-scalings follow the convention that a TangentPair stores the honest
variation of the full fields (A, t Phi); the `scale` attribute records any
additional normalization applied for metric evaluation (e.g. the 1/t on
horizontal pairs).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conventions import frob_pair, frob_norm2, cutoff_chi, cutoff_chi_prime
from .fields import (MatrixField, PolarGrid, QuadDifferentialModel, DIAG_I,
                     approximate_solution, limiting_configuration)
from .gauge import assemble_Lt, gauge_fix, coulomb_residual, solve_Lt
from .painleve import profile_eval


@dataclass
class TangentPair:
    """Infinitesimal deformation (alpha, phi) of a Higgs pair."""

    grid: PolarGrid
    alpha: Optional[MatrixField]
    phi: Optional[MatrixField]
    gauged: bool = False
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def scaled(self, factor):
        alpha = None if self.alpha is None else MatrixField(
            self.grid, factor * self.alpha.values, "1", "skew-hermitian")
        phi = None if self.phi is None else MatrixField(
            self.grid, factor * self.phi.values, "(1,0)", "general")
        return TangentPair(self.grid, alpha, phi, self.gauged,
                           self.scale * factor, dict(self.meta))


def _zero_alpha(grid):
    return MatrixField(grid, np.zeros((2,) + grid.shape + (2, 2), dtype=complex),
                       "1", "skew-hermitian")


# ---------------------------------------------------------------------------
# horizontal sector

def merged_variation(q, qdot):
    """QuadDifferentialModel carrying q with the variation coefficients qdot."""
    if isinstance(qdot, QuadDifferentialModel):
        qdot = qdot.coeffs
    return QuadDifferentialModel(coeffs=q.coeffs,
                                 dot_coeffs=tuple(complex(v) for v in np.atleast_1d(qdot)))


def phi_infinity(q, qdot, grid):
    """varphi_inf = offdiag((1/2)|q|^{-1/2} qdot, (1/2)|q|^{1/2} qdot/q) dz."""
    q = merged_variation(q, qdot)
    z = grid.zmesh()
    f = q.f(z)
    fdot = q.fdot(z)
    absf = np.abs(f)
    if np.any(absf == 0.0) and np.max(np.abs(q.fdot(0.0))) > 0:
        raise ValueError("phi_infinity needs r_min > 0 when qdot(0) != 0")
    vals = np.zeros(grid.shape + (2, 2), dtype=complex)
    safe = np.where(absf > 0, absf, 1.0)
    vals[..., 0, 1] = 0.5 * fdot / np.sqrt(safe)
    vals[..., 1, 0] = 0.5 * np.sqrt(safe) * np.where(
        absf > 0, fdot / np.where(f != 0, f, 1.0), 0.0)
    return MatrixField(grid, vals, "(1,0)", "general")


def _variation_scalars(q, grid):
    """s = qdot/q and its z-derivative on the grid (meromorphic data)."""
    z = grid.zmesh()
    f, fp, fdot = q.f(z), q.fprime(z), q.fdot(z)
    d = np.polynomial.polynomial.polyder(np.array(q.dot_coeffs))
    fdotp = np.polynomial.polynomial.polyval(z, d) if d.size else np.zeros_like(z)
    safe = np.where(f != 0, f, 1.0)
    s = fdot / safe
    s_prime = (fdotp * f - fdot * fp) / safe ** 2
    return f, fp, fdot, s, s_prime


def horizontal_raw(table, q, qdot, t, grid):
    """Ungauged variation (dot A_t, t dot Phi_t) of the approximate family.

    Evaluated with the cutoff on its plateau (chi == 1), matching the
    explicit displayed variation formulas.
    """
    if t < 1.0:
        raise ValueError("horizontal_raw expects t >= 1")
    f, fp, fdot, s, s_prime = _variation_scalars(merged_variation(q, qdot), grid)
    absf = np.abs(f)
    th = grid.theta[None, :]
    prof = profile_eval(table, t, absf.ravel())
    f_t = prof.f.reshape(absf.shape)
    df_t = prof.df.reshape(absf.shape)
    r_dh = prof.r_dh.reshape(absf.shape)
    hep = prof.half_exp_plus.reshape(absf.shape)
    hem = prof.half_exp_minus.reshape(absf.shape)

    # connection variation:
    #   [4 f_t'(|q|) |q| Re(s) Im dbar log|q| - 2 f_t(|q|) d Im(s)] diag(i,-i)
    g = np.where(f != 0, fp / f, 0.0)
    ge = g * np.exp(1j * th)
    imdbar_r, imdbar_th = -0.5 * np.imag(ge), -0.5 * grid.r[:, None] * np.real(ge)
    se = s_prime * np.exp(1j * th)
    dims_r = np.imag(se)
    dims_th = grid.r[:, None] * np.real(se)

    coef = 4.0 * df_t * absf * np.real(s)
    a_vals = np.zeros((2,) + grid.shape + (2, 2), dtype=complex)
    a_vals[0] = (coef * imdbar_r - 2.0 * f_t * dims_r)[..., None, None] * DIAG_I
    a_vals[1] = (coef * imdbar_th - 2.0 * f_t * dims_th)[..., None, None] * DIAG_I

    # Higgs variation with Q = 1/2 + |q| h_t'(|q|) Re(s); |q| h' = r dh at |q|
    Q = 0.5 + r_dh * np.real(s)
    safe = np.where(absf > 0, absf, 1.0)
    upper = (hem / safe) * (fdot - f * Q)       # e^{-h}|q|^{-1/2}(qdot - q Q)
    lower = hep * Q * np.where(f != 0, fdot / np.where(f != 0, f, 1.0), 0.0) \
        * np.where(f != 0, f, 0.0) / safe       # e^{h}|q|^{1/2} Q * (qdot/q)...
    lower = hep * Q * np.where(f != 0, fdot / np.where(f != 0, f, 1.0), 0.0)
    phi_vals = np.zeros(grid.shape + (2, 2), dtype=complex)
    phi_vals[..., 0, 1] = upper
    phi_vals[..., 1, 0] = lower
    phi_dot = MatrixField(grid, t * phi_vals, "(1,0)", "general")
    alpha = MatrixField(grid, a_vals, "1", "skew-hermitian")
    return TangentPair(grid, alpha, phi_dot, gauged=False, scale=1.0,
                       meta={"t": t, "kind": "horizontal-raw"})


def gamma_t_field(table, q, qdot, t, grid):
    """gamma_t = -2 f_t(|q|) Im(qdot/q) diag(i,-i) (0-form)."""
    f, fp, fdot, s, _ = _variation_scalars(merged_variation(q, qdot), grid)
    absf = np.abs(f)
    f_t = profile_eval(table, t, absf.ravel()).f.reshape(absf.shape)
    vals = (-2.0 * f_t * np.imag(s))[..., None, None] * DIAG_I
    return MatrixField(grid, vals, "0", "skew-hermitian")


def first_correction(table, q, qdot, t, grid):
    """First-corrected horizontal tangent (alpha_t, t varphi_t).

    alpha_t = 4 f_t'(|q|) Im(qdot/q) d|q| diag(i,-i) and varphi_t has entries
    (1/2 -+ |q| h_t'(|q|)) e^{-+h_t} |q|^{-+1/2} (qdot, qdot/q); on the model
    with qdot = q this gives alpha_t = 0.
    """
    f, fp, fdot, s, _ = _variation_scalars(merged_variation(q, qdot), grid)
    absf = np.abs(f)
    th = grid.theta[None, :]
    prof = profile_eval(table, t, absf.ravel())
    df_t = prof.df.reshape(absf.shape)
    r_dh = prof.r_dh.reshape(absf.shape)
    hep = prof.half_exp_plus.reshape(absf.shape)
    hem = prof.half_exp_minus.reshape(absf.shape)

    # d|q| components: |q| [Re(g e^{i th}) dr - r Im(g e^{i th}) dtheta]
    g = np.where(f != 0, fp / f, 0.0)
    ge = g * np.exp(1j * th)
    dq_r = absf * np.real(ge)
    dq_th = -absf * grid.r[:, None] * np.imag(ge)

    coef = 4.0 * df_t * np.imag(s)
    a_vals = np.zeros((2,) + grid.shape + (2, 2), dtype=complex)
    a_vals[0] = (coef * dq_r)[..., None, None] * DIAG_I
    a_vals[1] = (coef * dq_th)[..., None, None] * DIAG_I

    safe = np.where(absf > 0, absf, 1.0)
    upper = (0.5 - r_dh) * (hem / safe) * fdot
    lower = (0.5 + r_dh) * hep * np.where(f != 0, fdot / np.where(f != 0, f, 1.0), 0.0)
    phi_vals = np.zeros(grid.shape + (2, 2), dtype=complex)
    phi_vals[..., 0, 1] = upper
    phi_vals[..., 1, 0] = lower

    alpha = MatrixField(grid, a_vals, "1", "skew-hermitian")
    phi = MatrixField(grid, t * phi_vals, "(1,0)", "general")
    return TangentPair(grid, alpha, phi, gauged=False, scale=1.0,
                       meta={"t": t, "kind": "horizontal-corrected",
                             "phi_t_unscaled": phi_vals})


def radial_tangent(table, q, t, grid, normalize=False):
    """Radial deformation (0, varphi_t), the qdot = q specialization.

    With `normalize`, q is rescaled so that int |q| dA = 1 on the grid first.
    """
    if normalize:
        c = 1.0 / q.l1_norm(grid)
        q = QuadDifferentialModel(coeffs=tuple(c * v for v in q.coeffs))
    pair = first_correction(table, q, q.coeffs, t, grid)
    # alpha_t vanishes identically for qdot = q; store the exact zero
    pair = TangentPair(grid, _zero_alpha(grid),
                       MatrixField(grid, pair.meta["phi_t_unscaled"],
                                   "(1,0)", "general"),
                       gauged=False, scale=1.0,
                       meta={"t": t, "kind": "radial", "q": q,
                             "phi_inf": phi_infinity(q, q.coeffs, grid)})
    return pair


# ---------------------------------------------------------------------------
# vertical sector (double cover)

@dataclass
class VerticalData:
    """Harmonic representative and its annulus-cutoff primitive (Lemma-8.1 data)."""

    m_mode: int
    eta_r: np.ndarray       # scalar components of eta = f dw - conj, real
    eta_th: np.ndarray
    xi_inf: MatrixField     # cutoff primitive, su(2)-valued 0-form
    alpha_inf: MatrixField  # harmonic representative as su(2) 1-form
    beta_inf: MatrixField   # alpha_inf - d_{A_inf} xi_inf
    meta: dict = field(default_factory=dict)


def _cover_section(grid):
    """iS/sqrt(2): unit-norm section of the Higgs-commutant line bundle."""
    th = grid.theta[None, :]
    S = np.zeros(grid.shape + (2, 2), dtype=complex)
    S[..., 0, 1] = np.exp(0.5j * th)
    S[..., 1, 0] = np.exp(-0.5j * th)
    return (1j / np.sqrt(2.0)) * S


def vertical_harmonic(m_mode, grid):
    """Scalar components of eta = w^{2m} dw - conj on the cover grid."""
    if grid.cover_sheets != 2:
        raise ValueError("vertical sector lives on the double cover")
    r, th = grid.mesh()
    mm = m_mode + 0.5
    eta_r = np.where(r > 0, r ** (m_mode - 0.5), 0.0) * np.sin(mm * th)
    eta_th = r ** (m_mode + 0.5) * np.cos(mm * th)
    if m_mode == 0 and grid.r[0] == 0.0:
        raise ValueError("m_mode = 0 harmonic form is singular at r = 0")
    return eta_r, eta_th


def vertical_data(m_mode, grid, chi=cutoff_chi, chi_prime=cutoff_chi_prime):
    """Construct (eta, xi_inf, beta_inf) on the cover per the annulus cutoff.

    The primitive F = w^{2m+1}/(2m+1) is odd, u = 2 Im F = O(r^{1/2}); the
    cutoff chi(r) localizes it so beta_inf = alpha_inf - d_{A_inf}(chi xi) is
    supported in r >= 5/8 (exactly, by the section being A_inf-parallel).
    """
    if m_mode < 0:
        raise ValueError("m_mode must be >= 0")
    eta_r, eta_th = vertical_harmonic(m_mode, grid)
    r, th = grid.mesh()
    mm = m_mode + 0.5
    u = 2.0 * r ** mm * np.sin(mm * th) / (2.0 * m_mode + 1.0)

    sec = _cover_section(grid)
    chi_v = chi(grid.r)[:, None]
    chi_p = chi_prime(grid.r)[:, None]

    xi_vals = (chi_v * u)[..., None, None] * sec
    alpha_vals = np.stack([eta_r[..., None, None] * sec,
                           eta_th[..., None, None] * sec])
    beta_r = (1.0 - chi_v) * eta_r - chi_p * u
    beta_th = (1.0 - chi_v) * eta_th
    beta_vals = np.stack([beta_r[..., None, None] * sec,
                          beta_th[..., None, None] * sec])

    xi_inf = MatrixField(grid, xi_vals, "0", "skew-hermitian")
    alpha_inf = MatrixField(grid, alpha_vals, "1", "skew-hermitian")
    beta_inf = MatrixField(grid, beta_vals, "1", "skew-hermitian")
    return VerticalData(m_mode=m_mode, eta_r=eta_r, eta_th=eta_th,
                        xi_inf=xi_inf, alpha_inf=alpha_inf, beta_inf=beta_inf)


def vertical_tangent(table, m_mode, t, cover_grid, q=None, tol=1e-10):
    """Gauge-fixed vertical deformation at the approximate solution.

    Returns (VerticalData, gauged TangentPair, GaugeSolveResult); the packet
    family xi_t + xi_inf of the gauge solve is stored in the tangent meta.
    """
    if q is None:
        q = QuadDifferentialModel(coeffs=(0.0, 1.0))
    vd = vertical_data(m_mode, cover_grid)
    pair = approximate_solution(table, q, t, cover_grid)
    op = assemble_Lt(pair)
    v = TangentPair(cover_grid, vd.beta_inf, None, gauged=False, scale=1.0,
                    meta={"kind": "vertical-raw", "m_mode": m_mode})
    gauged, res = gauge_fix(pair, v, tol=tol, op=op)
    gauged.meta.update({"kind": "vertical", "m_mode": m_mode, "t": t,
                        "xi_t": res.xi,
                        "xi_sum_vals": res.xi.values + vd.xi_inf.values,
                        "vertical_data": vd})
    return vd, gauged, res


# ---------------------------------------------------------------------------
# mixed terms

def mixed_inner_probe(hor, vert):
    """Pointwise inner-product density and L2 pairing of two tangent pairs.

    Uses the metric-side pairing (see metrics.l2_inner); at the t = infinity
    representatives (0, phi_inf) vs (alpha_inf, 0) the density vanishes
    identically node by node.
    """
    from .metrics import l2_inner, pairing_density

    dens = pairing_density(hor, vert)
    value = l2_inner(hor, vert)
    return {"density_sup": float(np.max(np.abs(dens))),
            "pairing": value.value,
            "symmetric_check": l2_inner(vert, hor).value}
