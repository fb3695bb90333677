"""Wave-mode transform diagonalizing the rotating acoustic linear system.

The linearized system in Fourier space is W_hat' = L(xi) W_hat with
W = (rho, u) and L skew-Hermitian; its eigenvalues are +-i*sigma and
+-i*omega.  This module builds the change of unknowns to the four wave
amplitudes (here ordered [omega+, omega-, sigma+, sigma-]) and back.

At frequencies with xi_h != 0 the transform uses the explicit
rotation-angle form: with Y the unitary repackaging of (rho, u) into
(density, horizontal divergence, vertical vorticity, vertical velocity)
combinations, a real rotation mixes the (density, vorticity) pair and a
unitary block mixes the (divergence, vertical velocity) pair.  The
block entries are algebraic in the dispersion relations; their stable
evaluation goes through the product identities

    (k^2 sigma^2 - 1)^2 + (k r)^2 = k^2 d1 d2 * (k^2 sigma^2 - 1),
    (k^2 omega^2 - 1)^2 + (k r)^2 = k^2 d1 d2 * (1 - k^2 omega^2),

with k = kappa.  On the vertical axis (xi_h = 0, including xi = 0) the
angle form degenerates while L(xi) stays smooth, so those columns use a
direct orthonormal eigendecomposition of L instead.

The normalization makes the map an exact isometry with constant 2:
|| (rho, u) ||_L2 = 2 || (U_omega+, U_omega-, U_sigma+, U_sigma-) ||_L2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dispersion import Branch
from .grid import PhysParams, SpectralGrid

__all__ = [
    "StateW",
    "ModeSet",
    "AngleCoeffs",
    "angle_coeffs",
    "matrix_m",
    "linear_matrix",
    "ModeTransform",
    "transform_for",
    "to_modes",
    "from_modes",
    "project_mode",
    "to_aux",
    "from_aux",
]

BRANCHES = (Branch("omega", +1), Branch("omega", -1), Branch("sigma", +1), Branch("sigma", -1))


def branch_index(branch: Branch) -> int:
    for i, b in enumerate(BRANCHES):
        if b == branch:
            return i
    raise ValueError(f"not a mode branch: {branch}")


# ---------------------------------------------------------------------------
# state containers
# ---------------------------------------------------------------------------


@dataclass
class StateW:
    """Density/velocity state as spectral coefficient arrays."""

    grid: SpectralGrid
    rho: np.ndarray  # (n, n, n) complex
    u: np.ndarray  # (3, n, n, n) complex

    @classmethod
    def from_physical(cls, grid: SpectralGrid, rho, u) -> "StateW":
        rho = np.asarray(rho, dtype=float)
        u = np.asarray(u, dtype=float)
        if u.shape != (3,) + (grid.n,) * 3:
            raise ValueError(f"velocity shape {u.shape} does not match grid")
        return cls(grid, grid.to_spectral(rho), np.stack([grid.to_spectral(ui) for ui in u]))

    @classmethod
    def zero(cls, grid: SpectralGrid) -> "StateW":
        shp = (grid.n,) * 3
        return cls(grid, np.zeros(shp, complex), np.zeros((3,) + shp, complex))

    def physical(self):
        """Physical-space (rho, u) with imaginary parts dropped."""
        rho = self.grid.to_physical_real(self.rho)
        u = np.stack([self.grid.to_physical_real(ui) for ui in self.u])
        return rho, u

    def stack(self) -> np.ndarray:
        return np.concatenate([self.rho[None], self.u], axis=0)

    @classmethod
    def from_stack(cls, grid: SpectralGrid, w: np.ndarray) -> "StateW":
        return cls(grid, w[0], w[1:4])

    def copy(self) -> "StateW":
        return StateW(self.grid, self.rho.copy(), self.u.copy())


@dataclass
class ModeSet:
    """The four wave amplitudes on the spectral grid.

    data[0..3] correspond to the branches [omega+, omega-, sigma+, sigma-].
    """

    grid: SpectralGrid
    data: np.ndarray  # (4, n, n, n) complex

    def amplitude(self, branch: Branch) -> np.ndarray:
        return self.data[branch_index(branch)]

    def copy(self) -> "ModeSet":
        return ModeSet(self.grid, self.data.copy())


# ---------------------------------------------------------------------------
# pointwise linear algebra
# ---------------------------------------------------------------------------


def linear_matrix(xi, kappa: float) -> np.ndarray:
    """Generator L(xi) of the rescaled linear flow in (rho, u) variables."""
    xi = np.asarray(xi, dtype=float)
    shape = xi.shape[:-1]
    L = np.zeros(shape + (4, 4), complex)
    for j in range(3):
        L[..., 0, 1 + j] = -1j * xi[..., j]
        L[..., 1 + j, 0] = -1j * xi[..., j]
    L[..., 1, 2] = 1.0 / kappa
    L[..., 2, 1] = -1.0 / kappa
    return L


def matrix_m(xi, kappa: float) -> np.ndarray:
    """Linear generator in the auxiliary (rho, div, curl, w) variables.

    Its characteristic polynomial is
    tau^4 + (kappa^-2 + |xi|^2) tau^2 + kappa^-2 xi3^2, so the
    eigenvalues are +-i*sigma, +-i*omega.
    """
    xi = np.asarray(xi, dtype=float)
    a = np.linalg.norm(xi, axis=-1)
    if np.any(a == 0):
        raise ValueError("matrix_m is undefined at xi = 0")
    shape = xi.shape[:-1]
    M = np.zeros(shape + (4, 4), complex)
    M[..., 0, 1] = -a
    M[..., 1, 0] = a
    M[..., 1, 2] = 1.0 / kappa
    M[..., 2, 1] = -1.0 / kappa
    M[..., 2, 3] = 1j * xi[..., 2] / (a * kappa)
    M[..., 3, 0] = -1j * xi[..., 2]
    return M


@dataclass(frozen=True)
class AngleCoeffs:
    """Entries of the two 2x2 mixing blocks, plus their angles.

    The (density, vorticity) magnitudes are real; the (divergence,
    vertical velocity) entries carry the stated real/imaginary
    structure.  All satisfy the unit-sum identities
    rho_omega^2 + rho_sigma^2 = 1 etc.
    """

    rho_omega: np.ndarray  # >= 0
    rho_sigma: np.ndarray  # >= 0
    vort_omega: np.ndarray  # <= 0
    vort_sigma: np.ndarray  # >= 0
    div_omega: np.ndarray  # purely imaginary, imag sign = sign(xi3)
    div_sigma: np.ndarray  # >= 0 real
    w_omega: np.ndarray  # <= 0 real
    w_sigma: np.ndarray  # purely imaginary, imag sign = -sign(xi3)
    theta1: np.ndarray  # in [-pi/2, 0]
    theta2: np.ndarray  # in [-pi/2, pi/2]


def _angle_tables(r, z, kappa: float):
    """Stable (c1, s1, c2, s2) mixing entries away from the axis."""
    d1 = np.hypot(r, z - 1.0 / kappa)
    d2 = np.hypot(r, z + 1.0 / kappa)
    sig = 0.5 * (d1 + d2)
    om = z / (kappa * sig)
    xi2 = r * r + z * z
    # sigma^2 - kappa^-2 and sigma^2 - z^2 without catastrophic cancellation
    sig2_m_ki2 = 0.5 * (xi2 - 1.0 / kappa**2 + d1 * d2)
    sig2_m_z2 = 0.5 * (r * r - z * z + 1.0 / kappa**2 + d1 * d2)
    den_s = kappa**4 * d1 * d2 * sig2_m_ki2
    den_o = kappa**2 * d1 * d2 * sig2_m_z2 / sig**2
    rs = np.sqrt(den_s)
    ro = np.sqrt(den_o)
    c1 = kappa * r / rs  # density weight on the omega pair
    s1 = -(kappa**2) * sig2_m_ki2 / rs  # vorticity weight on the omega pair
    b_rho2 = kappa * r / ro  # density weight on the sigma pair
    b_beta2 = (sig2_m_z2 / sig**2) / ro  # vorticity weight on the sigma pair
    c2 = kappa * sig * c1
    s2 = kappa * om * b_rho2
    return c1, s1, c2, s2, b_rho2, b_beta2


def angle_coeffs(xi, kappa: float) -> AngleCoeffs:
    """Mixing coefficients at frequencies with xi_h != 0."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 3:
        raise ValueError(f"xi must have shape (..., 3), got {xi.shape}")
    r = np.hypot(xi[..., 0], xi[..., 1])
    z = xi[..., 2]
    if np.any(r <= 0):
        raise ValueError("angle coefficients are defined off the vertical axis only")
    d1, d2 = np.hypot(r, z - 1 / kappa), np.hypot(r, z + 1 / kappa)
    if np.any(np.minimum(d1, d2) < 1e-8 / kappa):
        raise ValueError("frequency too close to a singular pole")
    c1, s1, c2, s2, b_rho2, b_beta2 = _angle_tables(r, z, kappa)
    return AngleCoeffs(
        rho_omega=c1,
        rho_sigma=b_rho2,
        vort_omega=s1,
        vort_sigma=b_beta2,
        div_omega=1j * s2,
        div_sigma=c2 + 0.0 * 1j,
        w_omega=-c2,
        w_sigma=-1j * s2,
        theta1=np.arctan2(s1, c1),
        theta2=np.arctan2(s2, c2),
    )


# ---------------------------------------------------------------------------
# the grid transform
# ---------------------------------------------------------------------------


class ModeTransform:
    """Mode transform bound to a set of wavenumber meshes and kappa.

    Accepts arbitrary broadcastable (kx, ky, kz) meshes so the same code
    serves the full c2c layout and the solver's half-spectrum layout.
    """

    def __init__(self, kx, ky, kz, kappa: float):
        if not (kappa > 0 and np.isfinite(kappa)):
            raise ValueError(f"mode transform needs finite kappa > 0, got {kappa}")
        self.kappa = float(kappa)
        shape = np.broadcast_shapes(np.shape(kx), np.shape(ky), np.shape(kz))
        kx = np.broadcast_to(np.asarray(kx, float), shape)
        ky = np.broadcast_to(np.asarray(ky, float), shape)
        kz = np.broadcast_to(np.asarray(kz, float), shape)
        self.shape = shape
        r = np.hypot(kx, ky)
        z = kz
        d1 = np.hypot(r, z - 1 / kappa)
        d2 = np.hypot(r, z + 1 / kappa)
        if np.any(np.minimum(d1, d2) < 1e-8 / kappa):
            raise ValueError("mesh contains a frequency at a singular pole")
        self.sigma = 0.5 * (d1 + d2)
        self.omega = z / (kappa * self.sigma)
        # branch frequencies mu*Lambda in the fixed branch order
        self.freqs = np.stack([self.omega, -self.omega, self.sigma, -self.sigma])

        gen = r > 0
        self._gen = gen
        rs = np.where(gen, r, 1.0)
        c1, s1, c2, s2, _, _ = _angle_tables(rs, z, kappa)
        self._c1 = np.where(gen, c1, 0.0)
        self._s1 = np.where(gen, s1, 0.0)
        self._c2 = np.where(gen, c2, 0.0)
        self._s2 = np.where(gen, s2, 0.0)
        self._ex = np.where(gen, kx / rs, 0.0)  # unit horizontal direction
        self._ey = np.where(gen, ky / rs, 0.0)

        # axis columns: orthonormal eigenvectors of L(0, 0, kz)
        idx = np.nonzero(~gen)
        self._axis_idx = idx
        if idx[0].size:
            kzs = z[idx]
            xi_axis = np.zeros((kzs.size, 3))
            xi_axis[:, 2] = kzs
            H = -1j * linear_matrix(xi_axis, kappa)
            evals, Q = np.linalg.eigh(H)
            # order columns to the branch layout [omega+, omega-, sigma+, sigma-]
            targets = np.stack(
                [self.omega[idx], -self.omega[idx], self.sigma[idx], -self.sigma[idx]], axis=-1
            )
            order_t = np.argsort(targets, axis=-1, kind="stable")
            scale = np.maximum(np.abs(targets).max(axis=-1), 1.0)
            if np.any(np.abs(np.take_along_axis(targets, order_t, -1) - evals) > 1e-8 * scale[:, None]):
                raise AssertionError("axis eigenvalues do not match the dispersion relations")
            Qo = np.empty_like(Q)
            np.put_along_axis(Qo, order_t[:, None, :].repeat(4, axis=1), Q, axis=-1)
            self._axis_q = Qo
        else:
            self._axis_q = None

    # -- raw stacked-array interface ----------------------------------------

    def forward(self, w: np.ndarray) -> np.ndarray:
        """(rho, u) spectral stack (4, ...) -> mode stack (4, ...)."""
        rho, u1, u2, u3 = w[0], w[1], w[2], w[3]
        y2 = 1j * (self._ex * u1 + self._ey * u2)
        y3 = 1j * (self._ex * u2 - self._ey * u1)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        n1 = (self._c1 * rho + self._s1 * y3) * inv_sqrt2
        n3 = (-self._s1 * rho + self._c1 * y3) * inv_sqrt2
        n2 = (-1j * self._s2 * y2 - self._c2 * u3) * inv_sqrt2
        n4 = (self._c2 * y2 + 1j * self._s2 * u3) * inv_sqrt2
        modes = np.stack(
            [
                0.5 * (n1 + n2),
                0.5 * (n1 - n2),
                0.5 * (n3 + 1j * n4),
                0.5 * (n3 - 1j * n4),
            ]
        )
        if self._axis_q is not None:
            idx = self._axis_idx
            w_axis = np.stack([w[c][idx] for c in range(4)], axis=-1)
            u_axis = 0.5 * np.einsum("pba,pb->pa", self._axis_q.conj(), w_axis)
            for b in range(4):
                modes[b][idx] = u_axis[:, b]
        return modes

    def backward(self, modes: np.ndarray) -> np.ndarray:
        """Mode stack (4, ...) -> (rho, u) spectral stack (4, ...)."""
        up, um, sp, sm = modes[0], modes[1], modes[2], modes[3]
        n1 = up + um
        n2 = up - um
        n3 = sp + sm
        n4 = -1j * (sp - sm)
        sqrt2 = np.sqrt(2.0)
        rho = (self._c1 * n1 - self._s1 * n3) * sqrt2
        y3 = (self._s1 * n1 + self._c1 * n3) * sqrt2
        y2 = (1j * self._s2 * n2 + self._c2 * n4) * sqrt2
        u3 = (-self._c2 * n2 - 1j * self._s2 * n4) * sqrt2
        u1 = -1j * (self._ex * y2 - self._ey * y3)
        u2 = -1j * (self._ey * y2 + self._ex * y3)
        w = np.stack([rho, u1, u2, u3])
        if self._axis_q is not None:
            idx = self._axis_idx
            m_axis = np.stack([modes[b][idx] for b in range(4)], axis=-1)
            w_axis = 2.0 * np.einsum("pab,pb->pa", self._axis_q, m_axis)
            for c in range(4):
                w[c][idx] = w_axis[:, c]
        return w

    def phase_factors(self, t_scaled: float) -> np.ndarray:
        """Diagonal evolution factors exp(i * t * mu * Lambda) per branch."""
        return np.exp(1j * t_scaled * self.freqs)


@lru_cache(maxsize=8)
def transform_for(grid: SpectralGrid, kappa: float) -> ModeTransform:
    kx, ky, kz = grid.wavenumbers()
    return ModeTransform(kx, ky, kz, kappa)


# ---------------------------------------------------------------------------
# public operations on states
# ---------------------------------------------------------------------------


def to_modes(w: StateW, params: PhysParams) -> ModeSet:
    tr = transform_for(w.grid, params.kappa)
    return ModeSet(w.grid, tr.forward(w.stack()))


def from_modes(m: ModeSet, params: PhysParams) -> StateW:
    tr = transform_for(m.grid, params.kappa)
    return StateW.from_stack(m.grid, tr.backward(m.data))


def project_mode(w: StateW, branch: Branch, params: PhysParams) -> StateW:
    """Reconstruct the part of the state carried by one wave branch."""
    m = to_modes(w, params)
    keep = branch_index(branch)
    data = np.zeros_like(m.data)
    data[keep] = m.data[keep]
    return from_modes(ModeSet(m.grid, data), params)


# ---------------------------------------------------------------------------
# auxiliary (rho, div, curl, w) variables
# ---------------------------------------------------------------------------


def _riesz_meshes(grid: SpectralGrid):
    kx, ky, kz = grid.wavenumbers()
    a2 = kx * kx + ky * ky + kz * kz
    a = np.sqrt(a2)
    inv_a = np.where(a > 0, 1.0 / np.where(a > 0, a, 1.0), 0.0)
    return kx, ky, kz, inv_a


def to_aux(w: StateW) -> np.ndarray:
    """(rho, |grad|^-1 div u, |grad|^-1 e3.curl u, u3) spectral stack.

    The Riesz-type symbols are set to 0 at xi = 0.
    """
    kx, ky, kz, inv_a = _riesz_meshes(w.grid)
    u1, u2, u3 = w.u
    alpha = 1j * inv_a * (kx * u1 + ky * u2 + kz * u3)
    beta = 1j * inv_a * (kx * u2 - ky * u1)
    return np.stack([w.rho.copy(), alpha, beta, u3.copy()])


def from_aux(v: np.ndarray, grid: SpectralGrid) -> StateW:
    """Inverse of to_aux on fields with no vertical-axis horizontal part."""
    kx, ky, kz, inv_a = _riesz_meshes(grid)
    rho, alpha, beta, gamma = v
    a = np.where(inv_a > 0, 1.0 / np.where(inv_a > 0, inv_a, 1.0), 0.0)
    r2 = kx * kx + ky * ky
    inv_r2 = np.where(r2 > 0, 1.0 / np.where(r2 > 0, r2, 1.0), 0.0)
    s_div = -1j * a * alpha - kz * gamma  # kx u1 + ky u2
    s_curl = -1j * a * beta  # kx u2 - ky u1
    u1 = (kx * s_div - ky * s_curl) * inv_r2
    u2 = (ky * s_div + kx * s_curl) * inv_r2
    return StateW(grid, rho.copy(), np.stack([u1, u2, gamma.copy()]))
