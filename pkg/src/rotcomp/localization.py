"""Smooth dyadic and anisotropic frequency cutoffs.

The mother cutoff ``psi`` is a fixed smooth even profile equal to 1 on
[-1, 1] and 0 outside [-2, 2], with the explicit bridge

    psi(x) = S(2 - |x|),   S(t) = exp(-1/t) / (exp(-1/t) + exp(-1/(1-t)))

on 1 < |x| < 2.  The ring function is phi(x) = psi(x/2) - psi(x), which
is supported on 1 <= |x| <= 4 and telescopes: sum_j phi(2^-j x) = 1 for
x != 0, and psi(x) + sum_{j>=0} phi(2^-j x) = 1 everywhere.

A ``LocSpec`` names one member of the projector family: the dyadic shell
index k, the horizontal ratio p <= 0, the vertical ratio q <= 0, and the
vertical distance-to-pole index l (either p <= l <= 0 or the aggregated
"<= p" flag).  ``symbol`` evaluates its multiplier, ``project`` applies
it to spectral data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SpectralGrid

__all__ = ["psi", "phi", "LocSpec", "symbol", "symbol_mesh", "project"]


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """S(t): 0 for t <= 0, 1 for t >= 1, smooth monotone bridge between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def psi(x) -> np.ndarray:
    """Even cutoff: 1 on [-1, 1], 0 outside [-2, 2]."""
    return _smooth_step(2.0 - np.abs(np.asarray(x, dtype=float)))


def phi(x) -> np.ndarray:
    """Dyadic ring: psi(x/2) - psi(x), supported on 1 <= |x| <= 4."""
    x = np.asarray(x, dtype=float)
    return psi(0.5 * x) - psi(x)


@dataclass(frozen=True)
class LocSpec:
    """Indices of one frequency localization.

    Valid combinations: (k), (k,p), (k,p,q), (k,p,l), (k,p,q,l),
    (k,p,<=p) and (k,p,q,<=p).
    """

    k: int
    p: int | None = None
    q: int | None = None
    l: int | None = None
    le_p: bool = False

    def __post_init__(self):
        if self.p is not None and self.p > 0:
            raise ValueError(f"horizontal index p must be <= 0, got {self.p}")
        if self.q is not None and self.q > 0:
            raise ValueError(f"vertical index q must be <= 0, got {self.q}")
        if self.q is not None and self.p is None:
            raise ValueError("q requires p")
        if self.l is not None:
            if self.p is None:
                raise ValueError("l requires p")
            if self.le_p:
                raise ValueError("l and the <=p flag are mutually exclusive")
            if not (self.p <= self.l <= 0):
                raise ValueError(f"l must satisfy p <= l <= 0, got l={self.l}, p={self.p}")
        if self.le_p and self.p is None:
            raise ValueError("the <=p flag requires p")

    def label(self) -> str:
        parts = [f"k={self.k}"]
        if self.p is not None:
            parts.append(f"p={self.p}")
        if self.q is not None:
            parts.append(f"q={self.q}")
        if self.l is not None:
            parts.append(f"l={self.l}")
        if self.le_p:
            parts.append("l<=p")
        return ",".join(parts)


def _symbol_rz(spec: LocSpec, r, z, a, kappa: float) -> np.ndarray:
    out = phi(a / 2.0**spec.k)
    if spec.p is not None:
        out = out * phi(r / 2.0 ** (spec.k + spec.p))
    if spec.q is not None:
        out = out * phi(z / 2.0 ** (spec.k + spec.q))
    if spec.l is not None:
        out = out * phi((z - 1.0 / kappa) / 2.0 ** (spec.k + spec.l))
    if spec.le_p:
        out = out * psi((z - 1.0 / kappa) / 2.0 ** (spec.k + spec.p))
    return out


def symbol(spec: LocSpec, xi, kappa: float = 1.0) -> np.ndarray:
    """Evaluate the localization multiplier at frequencies xi (..., 3)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 3:
        raise ValueError(f"xi must have shape (..., 3), got {xi.shape}")
    if (spec.l is not None or spec.le_p) and not kappa > 0:
        raise ValueError("pole-distance localizations need kappa > 0")
    r = np.hypot(xi[..., 0], xi[..., 1])
    z = xi[..., 2]
    a = np.sqrt(r * r + z * z)
    return _symbol_rz(spec, r, z, a, kappa)


def symbol_mesh(spec: LocSpec, grid: SpectralGrid, kappa: float = 1.0) -> np.ndarray:
    """Localization multiplier on the full spectral mesh of a grid."""
    kx, ky, kz = grid.wavenumbers()
    r = np.sqrt(kx * kx + ky * ky)
    z = kz + np.zeros_like(r)
    a = np.sqrt(r * r + z * z)
    return _symbol_rz(spec, r, z, a, kappa)


def project(fh: np.ndarray, spec: LocSpec, grid: SpectralGrid, kappa: float = 1.0) -> np.ndarray:
    """Apply the localization multiplier to one spectral field."""
    fh = np.asarray(fh)
    if fh.shape != (grid.n,) * 3:
        raise ValueError(f"field shape {fh.shape} does not match grid n={grid.n}")
    return fh * symbol_mesh(spec, grid, kappa)
