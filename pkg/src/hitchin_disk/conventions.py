"""Shared geometric conventions for the disk model.

Every module computes with the same fixed background: the unit disk with
coordinate z = r e^{i theta}, flat metric dr^2 + r^2 dtheta^2, area form
dA = r dr dtheta, Hodge star *(dr) = r dtheta, and the frame dz^{1/2},
dz^{-1/2} in which the hermitian metric H is the identity.

Matrix pairing: <M, N> = Tr(M N*), so the su(2) basis E1, E2, E3 below has
<E_a, E_b> = 2 delta_ab.

Form norms come in two flavours, fixed here once:

* Operator-side (gauge fixing, energy identities, Newton): the Riemannian
  norms induced by the background metric.  For a (1,0)-form phi = p dz this
  gives |phi|^2 = 2 ||p||_F^2, and the gauge operator potential is
  M xi = 4 pi_skew([p*, [p, xi]]), which is exactly the linearization of the
  scaled moment map.

* Metric-side (L^2 / semiflat / special Kahler values): the pairing on
  (1,0)-forms is renormalized to <phi, psi> = (1/4) Tr(p q*), the unique
  constant for which ||(0, phi_inf)||_{L^2}^2 equals the special Kahler
  value (1/4) int |qdot|^2/|q| dA on the nose, and the vertical section
  i*S/sqrt(2) below is unit-norm so that ||(alpha_inf, 0)||^2 equals the
  Prym-side integral (1/2) int_{cover} |eta|^2 dA.  See the README for the
  bookkeeping.

The cutoff chi is the quintic smoothstep, identically 1 on [0, 5/8] and 0 on
[7/8, infinity); its polynomial is recorded in `cutoff_chi` for
reproducibility.
"""

from __future__ import annotations

import numpy as np

# su(2) basis: E1 = i sigma_3, E2 = i sigma_2, E3 = i sigma_1 (up to signs).
E1 = np.array([[1j, 0.0], [0.0, -1j]])
E2 = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
E3 = np.array([[0.0, 1j], [1j, 0.0]])
SU2_BASIS = np.stack([E1, E2, E3])  # (3, 2, 2)

# Hermitian traceless counterparts (Pauli-like), used for Newton corrections.
HERM_BASIS = np.stack([-1j * E1, -1j * E2, -1j * E3])

# Metric-side normalization for the (1,0)-form pairing: <phi,psi> = C10_METRIC * Tr(p q*).
C10_METRIC = 0.25

# Cutoff plateau/support radii (chi == 1 on [0, CHI_LO], == 0 on [CHI_HI, inf)).
CHI_LO = 5.0 / 8.0
CHI_HI = 7.0 / 8.0


def cutoff_chi(x):
    """Quintic smoothstep cutoff: 1 on [0, 5/8], 0 on [7/8, inf).

    On the transition interval, with s = (x - 5/8)/(1/4),
    chi = 1 - s^3 (10 - 15 s + 6 s^2); C^2 across the joints.
    """
    x = np.asarray(x, dtype=float)
    s = np.clip((x - CHI_LO) / (CHI_HI - CHI_LO), 0.0, 1.0)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def cutoff_chi_prime(x):
    """Derivative of cutoff_chi; supported in (5/8, 7/8)."""
    x = np.asarray(x, dtype=float)
    s = (x - CHI_LO) / (CHI_HI - CHI_LO)
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    d = -(30.0 * s ** 2 - 60.0 * s ** 3 + 30.0 * s ** 4) / (CHI_HI - CHI_LO)
    return np.where(inside, d, 0.0)


def frob_pair(M, N):
    """Real pairing Re Tr(M N*) over trailing 2x2 axes; broadcasts."""
    return np.real(np.einsum("...ij,...ij->...", M, np.conj(N)))


def frob_norm2(M):
    """Tr(M M*) = squared Frobenius norm over trailing 2x2 axes."""
    return np.real(np.einsum("...ij,...ij->...", M, np.conj(M)))


def pi_skew(M):
    """Orthogonal projection of sl(2) matrices onto su(2): (M - M*)/2."""
    return 0.5 * (M - np.conj(np.swapaxes(M, -1, -2)))


def pi_herm(M):
    """Projection onto hermitian part: (M + M*)/2."""
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def su2_components(M):
    """Components x_a with M = sum_a x_a E_a (M skew-hermitian traceless)."""
    return np.stack([frob_pair(M, E) / 2.0 for E in SU2_BASIS], axis=-1)


def su2_from_components(x):
    """Inverse of su2_components: (..., 3) real -> (..., 2, 2) complex."""
    x = np.asarray(x)
    return np.einsum("...a,aij->...ij", x.astype(complex), SU2_BASIS)


def herm_components(M):
    """Components of a hermitian traceless M against HERM_BASIS."""
    return np.stack([frob_pair(M, H) / 2.0 for H in HERM_BASIS], axis=-1)


def herm_from_components(x):
    x = np.asarray(x)
    return np.einsum("...a,aij->...ij", x.astype(complex), HERM_BASIS)


def expm_traceless2(M):
    """exp of (..., 2, 2) traceless matrices via the Cayley-Hamilton closed form.

    For traceless M, M^2 = -det(M) I, so exp M = cosh(s) I + (sinh s / s) M
    with s^2 = -det M (branch-safe through complex sqrt).
    """
    M = np.asarray(M, dtype=complex)
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    s = np.sqrt(-det + 0j)
    small = np.abs(s) < 1e-12
    s_safe = np.where(small, 1.0, s)
    cosh = np.cosh(s)
    ratio = np.where(small, 1.0 + s ** 2 / 6.0, np.sinh(s_safe) / s_safe)
    eye = np.broadcast_to(np.eye(2, dtype=complex), M.shape)
    return cosh[..., None, None] * eye + ratio[..., None, None] * M


def kahan_sum(values):
    """Compensated summation in fixed (given) order; deterministic."""
    total = 0.0
    comp = 0.0
    for v in np.asarray(values, dtype=float).ravel():
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
