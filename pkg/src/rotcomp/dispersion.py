"""Dispersion relations of the rotating compressible linear system.

The rescaled linear system (unit sound speed, rotation rate 1/kappa)
carries two dispersion relations, an acoustic branch ``sigma`` and an
inertial branch ``omega``.  With d1, d2 the Euclidean distances from a
frequency xi to the poles ``+-e3/kappa``,

    sigma = (d2 + d1)/2,      omega = (d2 - d1)/2 = z / (kappa * sigma),

where r = |xi_h| and z = xi_3.  Both are smooth away from the poles,
satisfy sigma >= 1/kappa >= |omega|, and sigma*omega = z/kappa.

All functions are vectorized: xi has shape (..., 3), or pass (r, z)
meshes to the ``*_rz`` variants.  Derivative evaluations reject points
too close to the poles, where the formulas cancel catastrophically.

The incompressible-limit branch ``omega_inc`` is z/(eps*|xi|); by
convention the caller passes eps through the kappa argument for it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Branch",
    "SIGMA",
    "OMEGA",
    "OMEGA_INC",
    "distances",
    "distances_rz",
    "lam",
    "lam_rz",
    "grad_lam_rz",
    "hessian_lam_rz",
    "hessian_to_cartesian",
    "asym_gap",
]

_NEAR_POLE = 1e-8  # relative guard on d1, d2 for derivative formulas


@dataclass(frozen=True)
class Branch:
    """One signed branch of the dispersion relation."""

    tag: str  # "sigma" | "omega" | "omega_inc"
    sign: int = +1

    def __post_init__(self):
        if self.tag not in ("sigma", "omega", "omega_inc"):
            raise ValueError(f"unknown branch tag {self.tag!r}")
        if self.sign not in (+1, -1):
            raise ValueError(f"branch sign must be +-1, got {self.sign}")

    def __str__(self):
        return ("+" if self.sign > 0 else "-") + self.tag


SIGMA = Branch("sigma")
OMEGA = Branch("omega")
OMEGA_INC = Branch("omega_inc")


def _split(xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 3:
        raise ValueError(f"xi must have shape (..., 3), got {xi.shape}")
    r = np.hypot(xi[..., 0], xi[..., 1])
    return r, xi[..., 2]


def distances_rz(r, z, kappa: float):
    """Distances (d1, d2) from (r, z) to the poles (0, +-1/kappa)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    ki = 1.0 / kappa
    return np.hypot(r, z - ki), np.hypot(r, z + ki)


def distances(xi, kappa: float):
    r, z = _split(xi)
    return distances_rz(r, z, kappa)


def lam_rz(r, z, kappa: float, branch: Branch = SIGMA):
    """Signed branch value mu * Lambda(r, z)."""
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if branch.tag == "omega_inc":
        # kappa plays the role of eps here (documented convention)
        a = np.hypot(r, z)
        if np.any(a == 0):
            raise ValueError("incompressible branch is undefined at xi = 0")
        return branch.sign * z / (kappa * a)
    d1, d2 = distances_rz(r, z, kappa)
    sig = 0.5 * (d1 + d2)
    if branch.tag == "sigma":
        return branch.sign * sig
    # omega = z/(kappa*sigma): cancellation-free form of (d2 - d1)/2
    return branch.sign * z / (kappa * sig)


def lam(xi, kappa: float, branch: Branch = SIGMA):
    r, z = _split(xi)
    return lam_rz(r, z, kappa, branch)


def _check_not_near_pole(d1, d2, kappa):
    guard = _NEAR_POLE / kappa
    if np.any(np.minimum(d1, d2) < guard):
        raise ValueError("frequency too close to a singular pole for derivatives")


def grad_lam_rz(r, z, kappa: float, branch: Branch):
    """Gradient (d/dr, d/dz) of the unsigned branch Lambda."""
    if branch.tag not in ("sigma", "omega"):
        raise ValueError("gradients implemented for the sigma/omega branches only")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    d1, d2 = distances_rz(r, z, kappa)
    _check_not_near_pole(d1, d2, kappa)
    ki = 1.0 / kappa
    if branch.tag == "sigma":
        sig = 0.5 * (d1 + d2)
        gr = r * sig / (d1 * d2)
        gz = 0.5 * ((z - ki) / d1 + (z + ki) / d2)
    else:
        om = z / (kappa * 0.5 * (d1 + d2))
        gr = -r * om / (d1 * d2)
        gz = 0.5 * ((z + ki) / d2 - (z - ki) / d1)
    return gr, gz


def hessian_lam_rz(r, z, kappa: float, branch: Branch):
    """Hessian of Lambda in the orthonormal cylindrical frame.

    Returns a (..., 3, 3) symmetric array in the (e_r, e_theta, e_z)
    basis.  The (theta, theta) entry equals (dLambda/dr)/r and is the
    reason r > 0 is required.  Its determinant satisfies the closed form
    r^2 * Lambda / (kappa^2 * (d1 d2)^4).
    """
    if branch.tag not in ("sigma", "omega"):
        raise ValueError("hessians implemented for the sigma/omega branches only")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(r <= 0):
        raise ValueError("hessian requires r > 0 (the e_theta entry degenerates)")
    d1, d2 = distances_rz(r, z, kappa)
    _check_not_near_pole(d1, d2, kappa)
    ki = 1.0 / kappa
    zm, zp = z - ki, z + ki
    s = 1.0 if branch.tag == "sigma" else -1.0
    hrr = 0.5 * (zp**2 / d2**3 + s * zm**2 / d1**3)
    hrz = -0.5 * r * (zp / d2**3 + s * zm / d1**3)
    hzz = 0.5 * r**2 * (1.0 / d2**3 + s / d1**3)
    htt = 0.5 * (1.0 / d2 + s / d1)
    out = np.zeros(np.broadcast(r, z).shape + (3, 3))
    out[..., 0, 0] = hrr
    out[..., 0, 2] = out[..., 2, 0] = hrz
    out[..., 2, 2] = hzz
    out[..., 1, 1] = htt
    return out


def hessian_to_cartesian(h_cyl: np.ndarray, xi) -> np.ndarray:
    """Rotate a cylindrical-frame Hessian into Cartesian coordinates."""
    xi = np.asarray(xi, dtype=float)
    r = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(r == 0):
        raise ValueError("Cartesian frame conversion needs xi_h != 0")
    cos_t = xi[..., 0] / r
    sin_t = xi[..., 1] / r
    zeros = np.zeros_like(cos_t)
    ones = np.ones_like(cos_t)
    # columns are e_r, e_theta, e_z expressed in the Cartesian basis
    basis = np.stack(
        [
            np.stack([cos_t, -sin_t, zeros], axis=-1),
            np.stack([sin_t, cos_t, zeros], axis=-1),
            np.stack([zeros, zeros, ones], axis=-1),
        ],
        axis=-2,
    )
    return basis @ h_cyl @ np.swapaxes(basis, -1, -2)


def asym_gap(xi, c: float, eps: float):
    """High-frequency gaps to the asymptotic wave speeds.

    Returns (|c*sigma_(c eps) / (c|xi|) - 1|, |c*omega_(c eps) / (z/(eps|xi|)) - 1|);
    both are O((c*eps*|xi|)^-2) once c*eps*|xi| >= 1.
    """
    kappa = c * eps
    r, z = _split(xi)
    a = np.hypot(r, z)
    if np.any(kappa * a < 1.0):
        raise ValueError("asymptotic gap requires kappa*|xi| >= 1")
    sig = lam_rz(r, z, kappa, SIGMA)
    gap_sigma = np.abs(sig / a - 1.0)
    if np.any(z == 0):
        raise ValueError("inertial gap requires xi_3 != 0")
    om = lam_rz(r, z, kappa, OMEGA)
    gap_omega = np.abs(c * om / (z / (eps * a)) - 1.0)
    return gap_sigma, gap_omega
