"""Matrix-valued fields on the model disk and the three solution families.

Everything lives on a tensor-product polar grid over the unit disk (or its
double cover, theta running over [0, 4 pi)).  Connections are stored through
their (dr, dtheta) components, Higgs fields through their dz coefficient in
the frame dz^{1/2}, dz^{-1/2}; see conventions.py for the background metric
and pairings.

The three families:

* limiting configuration  A = A_H + (1/2) Im dbar log|q| diag(i,-i),
  Phi = offdiag(|q|^{-1/2} q, |q|^{1/2}), flat and normal away from r = 0;
* fiducial solution       the Painleve-desingularized exact solution for
  q = z dz^2, built from h_t and f_t;
* approximate solution    the cutoff interpolation between the two, equal to
  the fiducial near the zero and to the limiting configuration outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conventions import (SU2_BASIS, cutoff_chi, frob_norm2, pi_skew,
                          su2_components)
from .painleve import profile_eval

DIAG_I = np.array([[1j, 0.0], [0.0, -1j]])


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class PolarGrid:
    """Tensor-product polar grid, optionally on the double cover.

    Radial nodes are graded, r_k = r_min + (r_max - r_min)(k/n_r)^grading,
    k = 0..n_r; theta is uniform with period 2 pi cover_sheets.  With
    radial_map="sqrt" the nodes are instead uniform in sigma = sqrt(r)
    (r_k = (sqrt(r_min) + (1 - sqrt(r_min)) k/n_r)^2); operators assembled on
    such grids difference in sigma, where the twisted-sector fields
    (~ r^{1/2} near the puncture) are smooth.
    """

    n_r: int
    n_theta: int
    r_min: float = 0.0
    r_max: float = 1.0
    grading: float = 2.0
    cover_sheets: int = 1
    radial_map: str = "power"

    def __post_init__(self):
        if self.n_theta % 2 != 0:
            raise ValueError("n_theta must be even")
        if self.cover_sheets not in (1, 2):
            raise ValueError("cover_sheets must be 1 or 2")
        k = np.arange(self.n_r + 1) / self.n_r
        if self.radial_map == "power":
            r = self.r_min + (self.r_max - self.r_min) * k ** self.grading
            object.__setattr__(self, "sigma", None)
        elif self.radial_map == "sqrt":
            s0 = np.sqrt(self.r_min)
            sigma = s0 + (np.sqrt(self.r_max) - s0) * k
            r = sigma ** 2
            object.__setattr__(self, "sigma", sigma)
        else:
            raise ValueError(f"unknown radial_map {self.radial_map!r}")
        if not np.all(np.diff(r) > 0):
            raise ValueError("radial nodes must be strictly increasing")
        object.__setattr__(self, "r", r)
        period = 2.0 * np.pi * self.cover_sheets
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "theta",
                           np.arange(self.n_theta) * period / self.n_theta)
        object.__setattr__(self, "dtheta", period / self.n_theta)
        # composite trapezoid weights on the radial nodes
        w = np.zeros(self.n_r + 1)
        dr = np.diff(r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        object.__setattr__(self, "w_r", w)

    @property
    def shape(self):
        return (self.n_r + 1, self.n_theta)

    def mesh(self):
        """(r, theta) meshgrid arrays of shape (n_r+1, n_theta)."""
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def zmesh(self):
        r, th = self.mesh()
        return r * np.exp(1j * th)

    def integrate(self, density):
        """\\int density r dr dtheta over the grid (trapezoid x exact-FFT rule).

        `density` is a real array of shape (n_r+1, n_theta); the theta rule is
        the periodic trapezoid (spectrally accurate for smooth integrands).
        """
        density = np.asarray(density)
        ang = density.sum(axis=1) * self.dtheta
        return float(np.dot(self.w_r * self.r, ang))

    def integrate_radial(self, density_r):
        """\\int density(r) dr with the grid's trapezoid weights."""
        return float(np.dot(self.w_r, np.asarray(density_r)))

    def integrate_premeasured(self, values):
        """\\int values dr dtheta for integrands already carrying the r measure.

        Used for singular densities whose product with r has a finite limit
        at the origin (supplied explicitly at the r = 0 node).
        """
        values = np.asarray(values)
        ang = values.sum(axis=1) * self.dtheta
        return float(np.dot(self.w_r, ang))


# ---------------------------------------------------------------------------
# quadratic differentials

@dataclass(frozen=True)
class QuadDifferentialModel:
    """Polynomial model q = f(z) dz^2, variation qdot = fdot(z) dz^2.

    coeffs are ascending (c_0, c_1, ...); the simple-zero-at-origin condition
    c_0 = 0, c_1 != 0 is enforced.
    """

    coeffs: tuple
    dot_coeffs: tuple = (0.0,)

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coeffs)
        if len(c) < 2 or c[0] != 0 or c[1] == 0:
            raise ValueError("q must have a simple zero at the origin "
                             "(c_0 = 0, c_1 != 0)")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "dot_coeffs",
                           tuple(complex(v) for v in self.dot_coeffs))

    def f(self, z):
        return np.polynomial.polynomial.polyval(z, np.array(self.coeffs))

    def fprime(self, z):
        d = np.polynomial.polynomial.polyder(np.array(self.coeffs))
        return np.polynomial.polynomial.polyval(z, d)

    def fdot(self, z):
        return np.polynomial.polynomial.polyval(z, np.array(self.dot_coeffs))

    def scaled(self, factor):
        """The differential factor * q (same variation)."""
        return QuadDifferentialModel(
            coeffs=tuple(factor * c for c in self.coeffs),
            dot_coeffs=self.dot_coeffs)

    def l1_norm(self, grid):
        """\\int |q| dA on the grid."""
        z = grid.zmesh()
        return grid.integrate(np.abs(self.f(z))) / grid.cover_sheets


MODEL_Q = QuadDifferentialModel(coeffs=(0.0, 1.0), dot_coeffs=(1.0,))


# ---------------------------------------------------------------------------
# matrix fields

_DEGREES = ("0", "1", "(1,0)", "(0,1)", "2", "(1,1)")
_SYMMETRIES = ("skew-hermitian", "hermitian", "general")


@dataclass
class MatrixField:
    """Traceless 2x2 matrix field on a grid.

    form_degree "1" stores the (dr, dtheta) components stacked along the
    leading axis: values.shape == (2, n_r+1, n_theta, 2, 2).  All other
    degrees store a single coefficient array of shape (n_r+1, n_theta, 2, 2):
    the dz coefficient for "(1,0)", the dzbar coefficient for "(0,1)", the
    dr^dtheta coefficient for "2", the dzbar^dz coefficient for "(1,1)".
    """

    grid: PolarGrid
    values: np.ndarray
    form_degree: str = "0"
    symmetry: str = "general"

    def __post_init__(self):
        if self.form_degree not in _DEGREES:
            raise ValueError(f"unknown form degree {self.form_degree!r}")
        if self.symmetry not in _SYMMETRIES:
            raise ValueError(f"unknown symmetry tag {self.symmetry!r}")
        expected = (2,) + self.grid.shape + (2, 2) if self.form_degree == "1" \
            else self.grid.shape + (2, 2)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape}, "
                             f"expected {expected}")

    def max_trace(self):
        tr = np.abs(self.values[..., 0, 0] + self.values[..., 1, 1])
        return float(tr.max())

    def max_symmetry_defect(self):
        if self.symmetry == "general":
            return 0.0
        adj = np.conj(np.swapaxes(self.values, -1, -2))
        sign = -1.0 if self.symmetry == "skew-hermitian" else 1.0
        return float(np.max(np.abs(self.values - sign * adj)))

    def check(self, tol=1e-12):
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        if self.max_trace() > tol * scale:
            raise ValueError("trace-free violation")
        if self.max_symmetry_defect() > tol * scale:
            raise ValueError(f"{self.symmetry} violation")
        return True

    def pointwise_norm2(self):
        """|.|^2 with the operator-side (Riemannian) conventions, per node."""
        r = self.grid.r[:, None]
        if self.form_degree == "0":
            return frob_norm2(self.values)
        if self.form_degree == "1":
            with np.errstate(divide="ignore", invalid="ignore"):
                ang = np.where(r > 0, frob_norm2(self.values[1]) / r ** 2, 0.0)
            return frob_norm2(self.values[0]) + ang
        if self.form_degree in ("(1,0)", "(0,1)"):
            return 2.0 * frob_norm2(self.values)
        if self.form_degree == "2":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(r > 0, frob_norm2(self.values) / r ** 2, 0.0)
        # (1,1): coefficient of dzbar^dz, |dzbar^dz| = 2
        return 4.0 * frob_norm2(self.values)

    def sup_norm(self, r_window=None):
        """max over nodes of the pointwise norm, optionally on r in window."""
        n2 = self.pointwise_norm2()
        if r_window is not None:
            mask = (self.grid.r >= r_window[0]) & (self.grid.r <= r_window[1])
            n2 = n2[mask]
        return float(np.sqrt(np.max(n2))) if n2.size else 0.0

    def l2_norm(self):
        return float(np.sqrt(self.grid.integrate(self.pointwise_norm2())
                             / self.grid.cover_sheets))


def check_equivariance(fld, parity=+1, tol=1e-10):
    """On a double-cover grid, check value(theta + 2 pi) = parity * value."""
    g = fld.grid
    if g.cover_sheets != 2:
        raise ValueError("equivariance check needs a double-cover grid")
    half = g.n_theta // 2
    vals = fld.values
    if fld.form_degree == "1":
        first, second = vals[:, :, :half], vals[:, :, half:]
    else:
        first, second = vals[:, :half], vals[:, half:]
    scale = max(float(np.max(np.abs(vals))), 1e-30)
    defect = float(np.max(np.abs(second - parity * first))) / scale
    return defect <= tol, defect


# ---------------------------------------------------------------------------
# Higgs pairs

@dataclass
class HiggsPair:
    """Connection/Higgs pair (A, t Phi) on a polar grid.

    `a` is the su(2) connection 1-form (components of dr, dtheta); `phi` is
    the *unscaled* Higgs coefficient of dz; the scaled field used by the
    Hitchin equations and the gauge operator is t * phi (t = 1 is understood
    for limiting pairs, whose kind alone marks the t = infinity origin).
    """

    grid: PolarGrid
    a: MatrixField
    phi: MatrixField
    t: Optional[float]
    kind: str
    q: Optional[QuadDifferentialModel] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("limiting", "fiducial", "approximate", "corrected"):
            raise ValueError(f"unknown pair kind {self.kind!r}")

    @property
    def t_eff(self):
        return 1.0 if self.t is None else self.t

    def phi_full(self):
        """t Phi coefficient array (the Higgs field entering mu_t)."""
        return self.t_eff * self.phi.values


def _poly_fields(q, grid):
    z = grid.zmesh()
    f = q.f(z)
    fp = q.fprime(z)
    return z, f, fp


def _im_dbar_log_components(q, grid):
    """(dr, dtheta) components of Im dbar log |q|_k.

    With g = f'/f:  Im dbar log|f| = -(1/2) Im(g dz), whose components are
    -(1/2) Im(g e^{i theta}) dr - (r/2) Re(g e^{i theta}) dtheta.
    """
    z, f, fp = _poly_fields(q, grid)
    th = grid.theta[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(f != 0, fp / f, 0.0)
    ge = g * np.exp(1j * th)
    return -0.5 * np.imag(ge), -0.5 * grid.r[:, None] * np.real(ge)


def limiting_configuration(q, grid):
    """Limiting configuration (A_inf, Phi_inf) for q on the punctured disk."""
    if grid.r[0] <= 0.0:
        raise ValueError("limiting configuration is singular at r = 0; "
                         "use a grid with r_min > 0")
    z, f, fp = _poly_fields(q, grid)
    comp_r, comp_th = _im_dbar_log_components(q, grid)

    shape = grid.shape
    a_vals = np.zeros((2,) + shape + (2, 2), dtype=complex)
    a_vals[0] = 0.5 * comp_r[..., None, None] * DIAG_I
    a_vals[1] = 0.5 * comp_th[..., None, None] * DIAG_I

    absf = np.abs(f)
    phi_vals = np.zeros(shape + (2, 2), dtype=complex)
    phi_vals[..., 0, 1] = f / np.sqrt(absf)
    phi_vals[..., 1, 0] = np.sqrt(absf)

    a = MatrixField(grid, a_vals, "1", "skew-hermitian")
    phi = MatrixField(grid, phi_vals, "(1,0)", "general")
    return HiggsPair(grid, a, phi, None, "limiting", q=q)


def fiducial_solution(table, t, grid):
    """Exact Painleve-desingularized solution for the model q = z dz^2."""
    if t < 1.0:
        raise ValueError("fiducial solution expects t >= 1")
    prof = profile_eval(table, t, grid.r)
    th = grid.theta[None, :]
    shape = grid.shape

    a_vals = np.zeros((2,) + shape + (2, 2), dtype=complex)
    c = -2.0 * prof.f  # A = c(r) dtheta diag(i, -i)
    a_vals[1] = np.broadcast_to((c[:, None] * np.ones_like(th))[..., None, None],
                                shape + (2, 2)) * DIAG_I

    phi_vals = np.zeros(shape + (2, 2), dtype=complex)
    phi_vals[..., 0, 1] = prof.half_exp_minus[:, None] * np.exp(1j * th)
    phi_vals[..., 1, 0] = prof.half_exp_plus[:, None] * np.ones_like(th)

    a = MatrixField(grid, a_vals, "1", "skew-hermitian")
    phi = MatrixField(grid, phi_vals, "(1,0)", "general")
    return HiggsPair(grid, a, phi, float(t), "fiducial", q=MODEL_Q,
                     meta={"profile": prof})


def approximate_solution(table, q, t, grid, chi=cutoff_chi):
    """Cutoff interpolation between fiducial (near 0) and limiting (outside).

    The connection coefficient is (1/2 + chi(|q|)(4 f_t(|q|) - 1/2)) times
    Im dbar log|q|; the Higgs entries carry e^{+-chi h_t(|q|)}.
    """
    if t < 1.0:
        raise ValueError("approximate solution expects t >= 1")
    z, f, fp = _poly_fields(q, grid)
    absf = np.abs(f)
    prof = profile_eval(table, t, absf.ravel())
    f_t = prof.f.reshape(absf.shape)
    h_t = prof.h.reshape(absf.shape)
    hep = prof.half_exp_plus.reshape(absf.shape)
    hem = prof.half_exp_minus.reshape(absf.shape)

    chi_v = chi(absf)
    coef = 0.5 + chi_v * (4.0 * f_t - 0.5)

    comp_r, comp_th = _im_dbar_log_components(q, grid)
    shape = grid.shape
    a_vals = np.zeros((2,) + shape + (2, 2), dtype=complex)
    a_vals[0] = (coef * comp_r)[..., None, None] * DIAG_I
    a_vals[1] = (coef * comp_th)[..., None, None] * DIAG_I

    # Higgs entries: where chi == 1 use the r^{1/2} e^{+-h} combinations
    # (finite at the zero); elsewhere h_t is tame and direct evaluation is fine.
    phase = np.where(absf > 0, f / np.where(absf > 0, absf, 1.0), 0.0)
    on_plateau = chi_v >= 1.0
    upper = np.where(on_plateau, phase * hem,
                     phase * np.sqrt(np.where(absf > 0, absf, 1.0))
                     * np.exp(-chi_v * np.where(np.isfinite(h_t), h_t, 0.0)))
    lower = np.where(on_plateau, hep,
                     np.sqrt(np.where(absf > 0, absf, 1.0))
                     * np.exp(chi_v * np.where(np.isfinite(h_t), h_t, 0.0)))

    phi_vals = np.zeros(shape + (2, 2), dtype=complex)
    phi_vals[..., 0, 1] = upper
    phi_vals[..., 1, 0] = lower

    a = MatrixField(grid, a_vals, "1", "skew-hermitian")
    phi = MatrixField(grid, phi_vals, "(1,0)", "general")
    return HiggsPair(grid, a, phi, float(t), "approximate", q=q,
                     meta={"chi_lo_hi": (5.0 / 8.0, 7.0 / 8.0)})


# ---------------------------------------------------------------------------
# derivatives on the grid

def _nonuniform_derivative(vals, x):
    """Second-order derivative along axis 0 on the (nonuniform) nodes x."""
    out = np.empty_like(vals)
    hm = (x[1:-1] - x[:-2]).reshape((-1,) + (1,) * (vals.ndim - 1))
    hp = (x[2:] - x[1:-1]).reshape((-1,) + (1,) * (vals.ndim - 1))
    out[1:-1] = (hm ** 2 * vals[2:] - hp ** 2 * vals[:-2]
                 + (hp ** 2 - hm ** 2) * vals[1:-1]) / (hm * hp * (hm + hp))
    # one-sided second-order ends
    h0, h1 = x[1] - x[0], x[2] - x[1]
    out[0] = (-(2 * h0 + h1) / (h0 * (h0 + h1)) * vals[0]
              + (h0 + h1) / (h0 * h1) * vals[1]
              - h0 / (h1 * (h0 + h1)) * vals[2])
    hn, hm1 = x[-1] - x[-2], x[-2] - x[-3]
    out[-1] = ((2 * hn + hm1) / (hn * (hn + hm1)) * vals[-1]
               - (hn + hm1) / (hn * hm1) * vals[-2]
               + hn / (hm1 * (hn + hm1)) * vals[-3])
    return out


def radial_derivative(vals, r, sigma=None):
    """d/dr along axis 0; on sqrt-mapped grids the stencil differences in
    sigma = sqrt(r), where twisted-sector (r^{1/2}-type) fields are smooth."""
    if sigma is None:
        return _nonuniform_derivative(vals, r)
    d_sigma = _nonuniform_derivative(vals, sigma)
    scale = (1.0 / (2.0 * sigma)).reshape((-1,) + (1,) * (vals.ndim - 1))
    return scale * d_sigma


def angular_derivative(vals, dtheta):
    """Centered periodic derivative along axis 1."""
    return (np.roll(vals, -1, axis=1) - np.roll(vals, 1, axis=1)) / (2 * dtheta)


def curvature(a, grid):
    """F = dA + A^A as a 2-form coefficient of dr^dtheta (second order)."""
    if a.form_degree != "1":
        raise TypeError("curvature expects a 1-form connection field")
    a_r, a_th = a.values[0], a.values[1]
    d_r_ath = radial_derivative(a_th, grid.r, getattr(grid, "sigma", None))
    d_th_ar = angular_derivative(a_r, grid.dtheta)
    comm = a_r @ a_th - a_th @ a_r
    f = d_r_ath - d_th_ar + comm
    return MatrixField(grid, f, "2", "skew-hermitian")


def dbar_a_phi(pair):
    """dbar_A Phi as the coefficient of dzbar^dz (unscaled Higgs field)."""
    grid = pair.grid
    th = pair.grid.theta[None, :, None, None]
    phi = pair.phi.values
    a_r, a_th = pair.a.values[0], pair.a.values[1]
    r = grid.r[:, None, None, None]
    d_r = radial_derivative(phi, grid.r, getattr(grid, "sigma", None))
    d_th = angular_derivative(phi, grid.dtheta)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
    dzbar_phi = 0.5 * np.exp(1j * th) * (d_r + 1j * inv_r * d_th)
    a01 = 0.5 * np.exp(1j * th) * (a_r + 1j * inv_r * a_th)
    comm = a01 @ phi - phi @ a01
    return MatrixField(pair.grid, dzbar_phi + comm, "(1,1)", "general")


def higgs_bracket(pair):
    """[Phi ^ Phi*] as a 2-form coefficient of dr^dtheta (unscaled Phi).

    [Phi^Phi*] = (phi phi* - phi* phi) dz^dzbar = -2 i r (phi phi* - phi* phi)
    dr^dtheta.
    """
    phi = pair.phi.values
    phis = np.conj(np.swapaxes(phi, -1, -2))
    comm = phi @ phis - phis @ phi
    r = pair.grid.r[:, None, None, None]
    return MatrixField(pair.grid, -2j * r * comm, "2", "skew-hermitian")


RESIDUAL_CORE_RADIUS = 0.01


def hitchin_residual(pair, t=None, r_core=RESIDUAL_CORE_RADIUS):
    """Both components of the scaled moment map mu_t at the pair.

    Returns (first, second) MatrixFields: F_A + t^2 [Phi^Phi*] (dr^dtheta
    coefficient) and dbar_A Phi (dzbar^dz coefficient), plus norms: sup over
    the interior nodes with r >= r_core (the 2-form norm carries a 1/r weight
    that degenerates at the puncture; inside the core only absolute
    coefficient errors at the 1e-8 level remain) and the L2 norms over the
    whole grid.
    """
    if t is None:
        t = pair.t_eff
    fcurv = curvature(pair.a, pair.grid)
    br = higgs_bracket(pair)
    first = MatrixField(pair.grid, fcurv.values + t ** 2 * br.values,
                        "2", "skew-hermitian")
    second = dbar_a_phi(pair)

    # interior nodes: away from the one-sided radial stencils
    n1 = first.pointwise_norm2()[2:-2]
    n2 = second.pointwise_norm2()[2:-2]
    mask = pair.grid.r[2:-2] >= r_core
    norms = {
        "sup1": float(np.sqrt(np.max(n1[mask]))) if np.any(mask) else 0.0,
        "sup2": float(np.sqrt(np.max(n2[mask]))) if np.any(mask) else 0.0,
        "l2_1": first.l2_norm(),
        "l2_2": second.l2_norm(),
    }
    return first, second, norms


# ---------------------------------------------------------------------------
# CSV field dumps (CLI plot emission)

def dump_field(fld, path, component_name):
    """CSV dump `r,theta,re(m11),im(m11),...` for a single component array."""
    vals = fld.values if fld.form_degree != "1" else fld.values[0]
    r, th = fld.grid.mesh()
    with open(path, "w") as fh:
        fh.write(f"# component: {component_name}\n")
        fh.write("r,theta,re_m11,im_m11,re_m12,im_m12,re_m21,im_m21,re_m22,im_m22\n")
        for i in range(vals.shape[0]):
            for j in range(vals.shape[1]):
                m = vals[i, j]
                fh.write(f"{r[i, j]:.17g},{th[i, j]:.17g},"
                         f"{m[0, 0].real:.17g},{m[0, 0].imag:.17g},"
                         f"{m[0, 1].real:.17g},{m[0, 1].imag:.17g},"
                         f"{m[1, 0].real:.17g},{m[1, 0].imag:.17g},"
                         f"{m[1, 1].real:.17g},{m[1, 1].imag:.17g}\n")
