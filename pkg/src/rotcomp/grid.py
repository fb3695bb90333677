"""Periodic spectral grid, FFT conventions, and norms.

Conventions used throughout the package:

* physical points are ``x_j = j * box_len / n`` on each axis,
* wavenumbers are ``2*pi*(m + shift)/box_len`` with integer ``m`` in
  ``[-n/2, n/2)`` and ``shift`` in ``{0, 1/2}`` per axis,
* the forward transform is unnormalized, the inverse carries ``1/n^3``,
* every norm carries the explicit quadrature weight ``(box_len/n)^(3/2)``
  so that discrete norms approximate their continuum counterparts.

The optional half-integer shift on the vertical axis is applied
automatically when a grid wavenumber would land exactly on one of the
singular frequencies ``(0, 0, +-1/kappa)`` of the rotating-compressible
dispersion relations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

__all__ = [
    "PhysParams",
    "SpectralGrid",
    "build_grid",
    "norm",
    "mixed_time_norm",
]


@dataclass(frozen=True)
class PhysParams:
    """Physical parameters of the rotating compressible system.

    c is the background sound speed, eps the Rossby parameter (the
    Coriolis term is e3 x u / eps; eps = inf switches rotation off),
    alpha the pressure-law exponent (gamma - 1)/2.  kappa = c*eps is
    derived and is the single parameter of the rescaled linear system.
    """

    c: float
    eps: float
    alpha: float = 0.5
    kappa: float = field(init=False)

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"sound speed must be positive and finite, got {self.c}")
        if not self.eps > 0:
            raise ValueError(f"Rossby parameter must be positive, got {self.eps}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"pressure exponent must be positive, got {self.alpha}")
        object.__setattr__(self, "kappa", self.c * self.eps)

    @property
    def rotating(self) -> bool:
        return math.isfinite(self.eps)

    @property
    def coriolis(self) -> float:
        """Coriolis rate 1/eps (0 when rotation is off)."""
        return 1.0 / self.eps if self.rotating else 0.0


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _valid_grid_size(n: int) -> bool:
    # powers of two, plus 3*2^m for resolution-comparison runs (e.g. 96^3)
    return n >= 8 and (_is_pow2(n) or (n % 3 == 0 and _is_pow2(n // 3)))


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic n^3 grid with its wavenumber layout.

    ``shift`` holds the per-axis half-integer wavenumber offsets; only
    axis 3 is ever shifted, and only to dodge the singular frequencies.
    """

    n: int
    box_len: float
    shift: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not _valid_grid_size(self.n):
            raise ValueError(
                f"grid size must be a power of two >= 8 (or 3*2^m), got {self.n}"
            )
        if not (self.box_len > 0 and math.isfinite(self.box_len)):
            raise ValueError(f"box length must be positive and finite, got {self.box_len}")
        for s in self.shift:
            if s not in (0.0, 0.5):
                raise ValueError(f"axis shift must be 0 or 1/2, got {s}")

    # ---- wavenumber layout -------------------------------------------------

    def k1d(self, axis: int) -> np.ndarray:
        """Wavenumbers along one axis, in FFT storage order."""
        m = _fft.fftfreq(self.n) * self.n
        return 2.0 * np.pi * (m + self.shift[axis]) / self.box_len

    def wavenumbers(self):
        """Broadcastable (kx, ky, kz) meshes in FFT storage order."""
        kx = self.k1d(0)[:, None, None]
        ky = self.k1d(1)[None, :, None]
        kz = self.k1d(2)[None, None, :]
        return kx, ky, kz

    def k_horizontal(self) -> np.ndarray:
        kx, ky, _ = self.wavenumbers()
        return np.sqrt(kx * kx + ky * ky)

    def k_abs2(self) -> np.ndarray:
        kx, ky, kz = self.wavenumbers()
        return kx * kx + ky * ky + kz * kz

    @property
    def dx(self) -> float:
        return self.box_len / self.n

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.box_len

    @property
    def k_max(self) -> float:
        """Largest wavenumber magnitude present along one axis."""
        return np.pi * self.n / self.box_len

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def volume(self) -> float:
        return self.box_len**3

    def x1d(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    # ---- transforms --------------------------------------------------------

    def _modulation(self, sign: int) -> np.ndarray | None:
        """Phase factor implementing the half-integer wavenumber shift."""
        if all(s == 0.0 for s in self.shift):
            return None
        j = np.arange(self.n)
        out = None
        for axis, s in enumerate(self.shift):
            if s == 0.0:
                continue
            ph = np.exp(sign * 2j * np.pi * s * j / self.n)
            shape = [1, 1, 1]
            shape[axis] = self.n
            ph = ph.reshape(shape)
            out = ph if out is None else out * ph
        return out

    def to_spectral(self, f: np.ndarray) -> np.ndarray:
        """Forward transform of one physical field (unnormalized)."""
        f = np.asarray(f)
        if f.shape != (self.n,) * 3:
            raise ValueError(f"field shape {f.shape} does not match grid n={self.n}")
        mod = self._modulation(-1)
        return _fft.fftn(f * mod) if mod is not None else _fft.fftn(f)

    def to_physical(self, fh: np.ndarray) -> np.ndarray:
        """Inverse transform (carries the 1/n^3 normalization)."""
        fh = np.asarray(fh)
        if fh.shape != (self.n,) * 3:
            raise ValueError(f"field shape {fh.shape} does not match grid n={self.n}")
        out = _fft.ifftn(fh)
        mod = self._modulation(+1)
        return out * mod if mod is not None else out

    def to_physical_real(self, fh: np.ndarray) -> np.ndarray:
        """Inverse transform of a field known to be real in physical space."""
        return self.to_physical(fh).real


def build_grid(n: int, box_len: float, kappa: float | None = None) -> SpectralGrid:
    """Construct a grid whose vertical wavenumbers avoid +-1/kappa.

    When a vertical wavenumber collides with a singular frequency the
    half-integer shift is applied on axis 3; with kappa None or inf the
    check is skipped (no singular frequencies).
    """
    if kappa is not None and not (kappa > 0):
        raise ValueError(f"kappa must be positive, got {kappa}")
    grid = SpectralGrid(n, float(box_len))
    if kappa is None or not math.isfinite(kappa):
        return grid
    if _collides(grid, kappa):
        grid = SpectralGrid(n, float(box_len), shift=(0.0, 0.0, 0.5))
        if _collides(grid, kappa):
            raise ValueError(
                "singular frequency collides with the grid even after the "
                "half-integer shift; change box_len or n"
            )
    return grid


def _collides(grid: SpectralGrid, kappa: float) -> bool:
    kz = grid.k1d(2)
    tol = 1e-6 * max(1.0 / kappa, grid.dk)
    return bool(np.any(np.abs(np.abs(kz) - 1.0 / kappa) < tol))


# ---- norms ----------------------------------------------------------------


def _as_field_list(fields) -> list[np.ndarray]:
    if isinstance(fields, np.ndarray) and fields.ndim == 3:
        return [fields]
    return [np.asarray(f) for f in fields]


def norm(grid: SpectralGrid, fields, kind: str = "l2", *, s: float = 0.0,
         p: float = 2.0, spectral: bool | None = None) -> float:
    """Norm of one field or a tuple of fields on the grid.

    kind is one of ``l2``, ``hs``, ``lp``, ``linf``.  ``l2`` and ``hs``
    expect spectral data by default, ``lp``/``linf`` physical data; pass
    ``spectral`` to override for ``l2``.  Multi-component input is
    reduced with the pointwise Euclidean magnitude before any L^p
    quadrature, and by root-sum-of-squares for l2/hs.
    """
    fl = _as_field_list(fields)
    for f in fl:
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite data in norm computation")
    if kind == "l2":
        if spectral is None:
            spectral = True
        if spectral:
            tot = sum(np.sum(np.abs(f) ** 2) for f in fl)
            return float(np.sqrt(tot) * grid.box_len**1.5 / grid.n**3)
        tot = sum(np.sum(np.abs(f) ** 2) for f in fl)
        return float(np.sqrt(tot * grid.cell_volume))
    if kind == "hs":
        if s < 0:
            raise ValueError(f"Sobolev index must be >= 0, got {s}")
        w = (1.0 + grid.k_abs2()) ** s
        tot = sum(np.sum(w * np.abs(f) ** 2) for f in fl)
        return float(np.sqrt(tot) * grid.box_len**1.5 / grid.n**3)
    mag2 = sum(np.abs(f) ** 2 for f in fl)
    if kind == "linf":
        return float(np.sqrt(mag2.max()))
    if kind == "lp":
        if not 1.0 <= p:
            raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
        if np.isinf(p):
            return float(np.sqrt(mag2.max()))
        return float((np.sum(mag2 ** (p / 2.0)) * grid.cell_volume) ** (1.0 / p))
    raise ValueError(f"unknown norm kind {kind!r}")


def mixed_time_norm(values: np.ndarray, times: np.ndarray, q: float) -> float:
    """L^q-in-time composition of precomputed spatial norms.

    ``values[i]`` is the spatial norm at ``times[i]``; the time integral
    uses the trapezoid rule on the (possibly non-uniform) sample times.
    q = inf takes the max over samples.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.shape != times.shape or values.ndim != 1:
        raise ValueError("values and times must be 1d arrays of equal length")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.isinf(q):
        return float(values.max())
    if not q >= 1.0:
        raise ValueError(f"time exponent must be >= 1, got {q}")
    return float(np.trapezoid(values**q, times) ** (1.0 / q))
