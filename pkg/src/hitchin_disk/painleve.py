"""Radial sinh-Gordon / Painleve III profile solver.

Solves the boundary value problem

    (rho d/drho)^2 psi = (1/2) rho^2 sinh(2 psi),   rho in (0, infinity),

for the unique positive, monotonically decreasing solution with
psi ~ -(1/3) log rho + const as rho -> 0 and psi ~ K0(rho) as rho -> infinity.
The scheme is second-order finite differences in s = log rho with a damped
Newton iteration; the small-rho behaviour enters through the Robin condition
rho psi' = -1/3 at rho_min and the far field through the Dirichlet condition
psi = K0(rho_max).

The desingularizing profiles are h_t(r) = psi((8/3) t r^{3/2}) and
f_t(r) = 1/8 + (1/4) r dh_t/dr; `profile_eval` evaluates them (plus the
combinations r^{1/2} e^{+-h_t} which stay finite at r = 0) from a solved
table.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline
from scipy.sparse import lil_matrix
from scipy.sparse.linalg import spsolve

RHO_FACTOR = 8.0 / 3.0  # rho = (8/3) t r^{3/2}
ROBIN_SLOPE = -1.0 / 3.0

CACHE_VERSION = "PSITAB v1"


class SolverError(RuntimeError):
    """Newton iteration failed to reach the requested residual."""


def bessel_k0(x):
    """Modified Bessel function K0; relative accuracy better than 1e-10.

    Backed by scipy.special.k0 (Cephes); the test suite validates it against
    the integral representation int_0^inf exp(-x cosh u) du.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("bessel_k0 requires x > 0")
    out = special.k0(x)
    return float(out) if out.ndim == 0 else out


def bessel_k1(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("bessel_k1 requires x > 0")
    out = special.k1(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PainleveTable:
    """Tabulated psi(rho) and rho psi'(rho) on a log-spaced grid."""

    rho_grid: np.ndarray
    psi: np.ndarray
    rho_dpsi: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_s", np.log(self.rho_grid))
        # Clamp the right end-derivatives to the K0-tail branch so evaluation
        # is C^1 across rho_max (a derivative kink there would leave a
        # spurious bump in the fiducial residual wherever the junction radius
        # crosses the gluing annulus).
        rho_max = self.rho_grid[-1]
        kappa = -rho_max * special.k1(rho_max) / special.k0(rho_max)
        s = self._s
        d_left_psi = float(np.polyfit(s[:3], self.psi[:3], 2)[1]
                           + 2 * np.polyfit(s[:3], self.psi[:3], 2)[0] * s[0])
        d_left_p = float(np.polyfit(s[:3], self.rho_dpsi[:3], 2)[1]
                         + 2 * np.polyfit(s[:3], self.rho_dpsi[:3], 2)[0] * s[0])
        object.__setattr__(self, "_psi_spl", CubicSpline(
            s, self.psi, bc_type=((1, d_left_psi), (1, kappa * self.psi[-1]))))
        object.__setattr__(self, "_p_spl", CubicSpline(
            s, self.rho_dpsi,
            bc_type=((1, d_left_p), (1, rho_max ** 2 * self.psi[-1]))))
        object.__setattr__(self, "_dp_spl", self._p_spl.derivative())
        scale = self.psi[-1] / special.k0(self.rho_grid[-1])
        object.__setattr__(self, "_tail_scale", float(scale))
        # Small-rho series psi ~ c0 - (1/3) log rho + c1 rho^{4/3} with the
        # ODE-forced relation c1 = (9/64) e^{2 c0} (its violation would leave
        # a spurious O(1) floor in the normalized fiducial residual at small
        # radii).  Only c0 is measured, by matching the spline value at the
        # switch point rho = 1e-3, below which the series takes over; the
        # residual derivative mismatch there is O(1e-9) and the switch radius
        # r(rho = 1e-3, t) < 6e-3 stays inside the excluded core for every
        # t >= 1.
        s_sw = min(max(np.log(1e-3), self._s[0]), self._s[-1])
        u_sw = np.exp(4.0 * s_sw / 3.0)
        psi_sw = float(self._psi_spl(s_sw))
        c0 = psi_sw + s_sw / 3.0
        for _ in range(4):
            c0 = psi_sw + s_sw / 3.0 - (9.0 / 64.0) * np.exp(2.0 * c0) * u_sw
        object.__setattr__(self, "_s_switch", float(s_sw))
        object.__setattr__(self, "_c0", c0)
        object.__setattr__(self, "_c1", (9.0 / 64.0) * np.exp(2.0 * c0))

    def _series(self, s):
        """(psi, P, dP/ds) of the small-rho series continuation."""
        u = np.exp(4.0 * s / 3.0)
        psi = self._c0 - s / 3.0 + self._c1 * u
        p = -1.0 / 3.0 + (4.0 / 3.0) * self._c1 * u
        dp = (16.0 / 9.0) * self._c1 * u
        return psi, p, dp

    @property
    def rho_min(self):
        return float(self.rho_grid[0])

    @property
    def rho_max(self):
        return float(self.rho_grid[-1])

    def ode_residual(self):
        """Discrete-stencil residual of the interior nodes."""
        s = self._s
        h = s[1] - s[0]
        psi = self.psi
        res = (psi[:-2] - 2.0 * psi[1:-1] + psi[2:]) / h ** 2 \
            - 0.5 * np.exp(2.0 * s[1:-1]) * np.sinh(2.0 * psi[1:-1])
        return res


def _k0_guess(rho):
    # Blend of the two asymptotic regimes, switching smoothly at rho = 1.
    s = np.log(rho)
    w = 0.5 * (1.0 - np.tanh(s / 0.75))
    return w * (-s / 3.0) + (1.0 - w) * special.k0(np.minimum(rho, 700.0))


def solve_psi(rho_min=1e-6, rho_max=48.0, n=4096, tol=1e-10,
              max_iter=60, bc="standard"):
    """Solve the Painleve III boundary value problem on [rho_min, rho_max].

    bc="standard" imposes rho psi' = -1/3 at rho_min and psi = K0(rho_max);
    bc="zero" imposes homogeneous Dirichlet data at both ends (the trivial
    solution, used as a solver sanity check).
    """
    if not (0.0 < rho_min < 1.0 < rho_max):
        raise ValueError("need 0 < rho_min < 1 < rho_max")
    if n < 512:
        raise ValueError("need n >= 512")

    s = np.linspace(np.log(rho_min), np.log(rho_max), n)
    h = s[1] - s[0]
    rho = np.exp(s)

    # Far-field condition.  The decaying solution behaves like a multiple of
    # K0(rho); imposing the Dirichlet value K0(rho_max) itself would pin the
    # amplitude to 1 and force a spurious boundary layer (the sigma = 1/3
    # connection problem selects amplitude ~1/pi; see the decisions ledger).
    # We instead match the logarithmic derivative of the decaying branch,
    # d psi/ds = kappa psi with kappa = -rho_max K1/K0, which kills the
    # growing mode and lets the amplitude come out of the solve.
    if bc == "zero":
        psi = np.zeros(n)
    elif bc == "standard":
        psi = _k0_guess(rho)
    else:
        raise ValueError(f"unknown bc {bc!r}")
    kappa = -rho_max * special.k1(rho_max) / special.k0(rho_max)

    w = 0.5 * np.exp(2.0 * s)

    def residual(p):
        ww = w.astype(p.dtype)
        res = np.empty(n, dtype=p.dtype)
        if bc == "zero":
            res[0] = p[0]
            res[-1] = p[-1]
        else:
            res[0] = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h) - ROBIN_SLOPE
            res[-1] = (3.0 * p[-1] - 4.0 * p[-2] + p[-3]) / (2.0 * h) - kappa * p[-1]
        res[1:-1] = (p[:-2] - 2.0 * p[1:-1] + p[2:]) / h ** 2 \
            - ww[1:-1] * np.sinh(2.0 * p[1:-1])
        return res

    def jacobian(p):
        J = lil_matrix((n, n))
        if bc == "zero":
            J[0, 0] = 1.0
            J[n - 1, n - 1] = 1.0
        else:
            J[0, 0] = -3.0 / (2.0 * h)
            J[0, 1] = 4.0 / (2.0 * h)
            J[0, 2] = -1.0 / (2.0 * h)
            J[n - 1, n - 1] = 3.0 / (2.0 * h) - kappa
            J[n - 1, n - 2] = -4.0 / (2.0 * h)
            J[n - 1, n - 3] = 1.0 / (2.0 * h)
        idx = np.arange(1, n - 1)
        J[idx, idx - 1] = 1.0 / h ** 2
        J[idx, idx] = -2.0 / h ** 2 - 2.0 * w[idx] * np.cosh(2.0 * p[idx])
        J[idx, idx + 1] = 1.0 / h ** 2
        return J.tocsr()

    # Residuals are evaluated in long double: the float64 stencil floor
    # (|psi|/h^2 ~ 1e5 near rho_min times machine eps) sits right at the
    # requested tolerance and would contaminate the exponentially small tail,
    # where strict monotonicity is asserted.
    def residual_ld(p):
        return residual(p.astype(np.longdouble))

    # The attainable residual is limited by the float64 representation of
    # psi itself: one ulp of the O(4.6) values near rho_min moves the stencil
    # by ~eps * |psi| / h^2.  Converge to the larger of tol and that floor.
    res = residual_ld(psi)
    norm = float(np.max(np.abs(res)))

    def floor_est(p):
        return 8.0 * np.finfo(float).eps * float(np.max(np.abs(p))) / h ** 2

    converged = norm < max(tol, floor_est(psi))
    for _ in range(max_iter):
        if converged:
            break
        step = spsolve(jacobian(psi), -res.astype(np.float64))
        lam, accepted = 1.0, False
        while lam > 1e-8:
            trial = psi + lam * step
            tres = residual_ld(trial)
            tnorm = float(np.max(np.abs(tres)))
            if tnorm < norm * (1.0 - 0.25 * lam) or tnorm < tol:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            if norm < max(tol, floor_est(psi)):
                converged = True
                break
            raise SolverError(f"Newton line search stalled, residual {norm:.3e}")
        psi, res, norm = trial, tres, tnorm
        converged = norm < max(tol, floor_est(psi))
    if not converged:
        raise SolverError(f"Newton did not converge, final residual {norm:.3e}")

    # rho psi' from the spline clamped with the *known* end derivatives (the
    # Robin value -1/3 on the left, the decay-matching kappa psi on the
    # right), so the last stored node agrees with the K0-tail branch exactly
    # and no value kink crosses the gluing annulus downstream.
    if bc == "standard":
        p_spl = CubicSpline(s, psi,
                            bc_type=((1, ROBIN_SLOPE), (1, kappa * psi[-1])))
    else:
        p_spl = CubicSpline(s, psi)
    rho_dpsi = p_spl.derivative()(s)
    meta = {"rho_min": rho_min, "rho_max": rho_max, "n": n,
            "solver_tol": tol, "grid_size": n, "bc": bc,
            "final_residual": float(norm)}
    return PainleveTable(rho_grid=rho, psi=psi, rho_dpsi=rho_dpsi, meta=meta)


def eval_psi(table, rho):
    """Evaluate (psi, rho psi') at rho; K0 asymptote beyond the table.

    Cubic interpolation in log rho inside [rho_min, rho_max]; below rho_min
    the slope -1/3 continuation, above rho_max the (scaled) K0 asymptote.
    """
    rho_arr = np.asarray(rho, dtype=float)
    scalar = rho_arr.ndim == 0
    rho_arr = np.atleast_1d(rho_arr)
    if np.any(rho_arr <= 0.0):
        raise ValueError("eval_psi requires rho > 0")

    s = np.log(rho_arr)
    s1 = table._s[-1]
    psi = np.empty_like(rho_arr)
    dpsi = np.empty_like(rho_arr)

    hi = s > s1
    lo = s < table._s_switch
    mid = ~(lo | hi)
    if np.any(lo):
        psi_ser, p_ser, _ = table._series(s[lo])
        psi[lo] = psi_ser
        dpsi[lo] = p_ser
    if np.any(mid):
        psi[mid] = table._psi_spl(s[mid])
        dpsi[mid] = table._p_spl(s[mid])
    if np.any(hi):
        c = table._tail_scale
        r = rho_arr[hi]
        psi[hi] = c * special.k0(np.minimum(r, 700.0))
        dpsi[hi] = -c * r * special.k1(np.minimum(r, 700.0))

    # exact node hits reproduce the table bit-for-bit
    idx = np.searchsorted(table.rho_grid, rho_arr)
    idx = np.clip(idx, 0, table.rho_grid.size - 1)
    exact = table.rho_grid[idx] == rho_arr
    if np.any(exact):
        psi[exact] = table.psi[idx[exact]]
        dpsi[exact] = table.rho_dpsi[idx[exact]]

    if scalar:
        return float(psi[0]), float(dpsi[0])
    return psi, dpsi


def _dp_eval(table, rho_arr):
    """d/ds of (rho psi') with the same branch structure as eval_psi."""
    s = np.log(rho_arr)
    s1 = table._s[-1]
    out = np.zeros_like(rho_arr)
    hi = s > s1
    lo = s < table._s_switch
    mid = ~(lo | hi)
    if np.any(lo):
        out[lo] = table._series(s[lo])[2]
    if np.any(mid):
        out[mid] = table._dp_spl(s[mid])
    if np.any(hi):
        r = np.minimum(rho_arr[hi], 700.0)
        out[hi] = table._tail_scale * r ** 2 * special.k0(r)
    return out


@dataclass(frozen=True)
class ProfileEval:
    """h_t, r dh_t/dr, f_t and f_t' evaluated on a radius array."""

    h: np.ndarray
    r_dh: np.ndarray
    f: np.ndarray
    df: np.ndarray
    half_exp_plus: np.ndarray   # r^{1/2} e^{+h_t}
    half_exp_minus: np.ndarray  # r^{1/2} e^{-h_t}


def profile_eval(table, t, r):
    """Evaluate the desingularizing profiles at parameter t and radii r.

    At r = 0 the limits f = 0, df = 0, r dh = -1/2 are returned (h itself
    diverges logarithmically; the bundled combinations r^{1/2} e^{+-h} stay
    finite and are evaluated through their closed-form limits).
    """
    if t <= 0.0:
        raise ValueError("profile_eval requires t > 0")
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr).astype(float)
    if np.any(r_arr < 0.0):
        raise ValueError("profile_eval requires r >= 0")

    h = np.full_like(r_arr, np.inf)
    r_dh = np.full_like(r_arr, -0.5)
    f = np.zeros_like(r_arr)
    df = np.zeros_like(r_arr)
    hep = np.zeros_like(r_arr)
    hem = np.zeros_like(r_arr)

    pos = r_arr > 0.0
    if np.any(pos):
        rp = r_arr[pos]
        rho = RHO_FACTOR * t * rp ** 1.5
        psi, p = eval_psi(table, rho)
        h[pos] = psi
        r_dh[pos] = 1.5 * p
        fpos = 0.125 + 0.375 * p
        # on the pure series branch, evaluate the double zero without
        # cancellation: f = (3/8)(P + 1/3) = (1/2) c1 rho^{4/3}
        ser = np.log(rho) < table._s_switch
        if np.any(ser):
            fpos[ser] = 0.5 * table._c1 * rho[ser] ** (4.0 / 3.0)
        f[pos] = fpos
        df[pos] = (9.0 / 16.0) * _dp_eval(table, rho) / rp
        # log-stable combinations r^{1/2} e^{+-psi}
        half_log_r = 0.5 * np.log(rp)
        hep[pos] = np.exp(half_log_r + psi)
        hem[pos] = np.exp(half_log_r - psi)

    zero = ~pos
    if np.any(zero):
        # limit of r^{1/2} e^{h}: on the series branch,
        # 0.5 log r + psi -> c0 - (1/3) log((8/3) t).
        hep[zero] = np.exp(table._c0 - np.log(RHO_FACTOR * t) / 3.0)
        hem[zero] = 0.0

    out = ProfileEval(h=h, r_dh=r_dh, f=f, df=df,
                      half_exp_plus=hep, half_exp_minus=hem)
    if scalar:
        return ProfileEval(*[np.float64(a[0]) for a in
                             (out.h, out.r_dh, out.f, out.df,
                              out.half_exp_plus, out.half_exp_minus)])
    return out


@dataclass
class PropertyReport:
    """Measured facts about f_t and h_t across a (t, r) grid."""

    f_min: float
    f_max: float
    mono_r_violations: int
    mono_t_violations: int
    slope_sup_rinv_f: float
    slope_sup_rinv2_f: float
    sup_half_exp: np.ndarray
    sup_half_exp_nonincreasing: bool
    f_over_r2_small_r: np.ndarray
    details: dict = field(default_factory=dict)


def verify_ft_properties(table, t_grid, r_grid=None):
    """Check the qualitative and scaling properties of f_t and h_t.

    Reports bounds 0 <= f <= 1/8, monotonicity in r and t, the growth
    exponents of sup_r r^{-1} f_t and sup_r r^{-2} f_t (expected 2/3 and
    4/3), and boundedness of r^{1/2} e^{|h_t|}.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 8:
        raise ValueError("need a t grid with >= 8 points")
    if r_grid is None:
        r_grid = np.logspace(-6, 0, 600)
    r_grid = np.asarray(r_grid, dtype=float)

    f_vals = np.empty((t_grid.size, r_grid.size))
    sup_rinv = np.empty(t_grid.size)
    sup_rinv2 = np.empty(t_grid.size)
    sup_he = np.empty(t_grid.size)
    f_r2_small = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        prof = profile_eval(table, t, r_grid)
        f_vals[i] = prof.f
        sup_rinv[i] = np.max(prof.f / r_grid)
        sup_rinv2[i] = np.max(prof.f / r_grid ** 2)
        mask = r_grid < 1.0
        sup_he[i] = np.max(np.sqrt(r_grid[mask]) * np.exp(np.abs(prof.h[mask])))
        small = r_grid < 1e-3 / t
        f_r2_small[i] = np.max(prof.f[small] / r_grid[small] ** 2) if np.any(small) \
            else prof.f[0] / r_grid[0] ** 2

    eps = 1e-13
    mono_r = int(np.sum(np.diff(f_vals, axis=1) < -eps))
    mono_t = int(np.sum(np.diff(f_vals, axis=0) < -eps))

    slope1 = np.polyfit(np.log(t_grid), np.log(sup_rinv), 1)[0]
    slope2 = np.polyfit(np.log(t_grid), np.log(sup_rinv2), 1)[0]
    nonincreasing = bool(np.all(np.diff(sup_he) <= 1e-10 * sup_he[:-1]))

    return PropertyReport(
        f_min=float(f_vals.min()), f_max=float(f_vals.max()),
        mono_r_violations=mono_r, mono_t_violations=mono_t,
        slope_sup_rinv_f=float(slope1), slope_sup_rinv2_f=float(slope2),
        sup_half_exp=sup_he, sup_half_exp_nonincreasing=nonincreasing,
        f_over_r2_small_r=f_r2_small,
        details={"t_grid": t_grid, "sup_rinv": sup_rinv, "sup_rinv2": sup_rinv2})


# ---------------------------------------------------------------------------
# cache file format: header "PSITAB v1 rho_min rho_max n tol", then n CSV rows
# "rho,psi,rho_dpsi" round-tripping doubles at 17 significant digits.

def save_table(table, path):
    meta = table.meta
    with open(path, "w") as fh:
        fh.write(f"{CACHE_VERSION} {meta['rho_min']:.17g} {meta['rho_max']:.17g} "
                 f"{meta['n']} {meta['solver_tol']:.17g}\n")
        for rho, psi, dp in zip(table.rho_grid, table.psi, table.rho_dpsi):
            fh.write(f"{rho:.17g},{psi:.17g},{dp:.17g}\n")


def load_table(path):
    with open(path) as fh:
        header = fh.readline().split()
        if " ".join(header[:2]) != CACHE_VERSION:
            raise ValueError(f"unrecognized cache header in {path}")
        rho_min, rho_max = float(header[2]), float(header[3])
        n, tol = int(header[4]), float(header[5])
        data = np.loadtxt(fh, delimiter=",").reshape(n, 3)
    meta = {"rho_min": rho_min, "rho_max": rho_max, "n": n,
            "solver_tol": tol, "grid_size": n, "bc": "standard"}
    return PainleveTable(rho_grid=data[:, 0], psi=data[:, 1],
                         rho_dpsi=data[:, 2], meta=meta)


def cached_solve(rho_min=1e-6, rho_max=48.0, n=4096, tol=1e-10, cache_dir=None):
    """solve_psi with a version-stamped on-disk cache keyed by the parameters."""
    if cache_dir is None:
        cache_dir = os.environ.get("HITCHIN_DISK_CACHE", ".hitchin_disk_cache")
    os.makedirs(cache_dir, exist_ok=True)
    name = f"psitab_{rho_min:.6g}_{rho_max:.6g}_{n}_{tol:.3g}.csv"
    path = os.path.join(cache_dir, name)
    if os.path.exists(path):
        try:
            return load_table(path)
        except (ValueError, OSError):
            pass
    table = solve_psi(rho_min=rho_min, rho_max=rho_max, n=n, tol=tol)
    save_table(table, path)
    return table
