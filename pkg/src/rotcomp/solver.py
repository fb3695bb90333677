"""Pseudo-spectral solver for the full rotating compressible system.

Time stepping is integrating-factor RK4: the linear flow is applied
exactly (through the wave-mode transform, or the closed acoustic form
when rotation is off) and classical RK4 integrates only the quadratic
nonlinearity.  Products are formed in physical space on 2/3-dealiased
fields; derivatives are spectral.

The solver's hot loop runs on the half spectrum (rfft layout), which is
valid because all fields are real; the public state interface stays on
the full grid.  Runs terminate at t_end, on a gradient blow-up proxy
(a threshold on the sup norm of (grad rho, grad u)), on spectral
resolution loss (tail-energy fraction), or on non-finite values; every
termination is recorded, none raises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .grid import PhysParams, SpectralGrid
from .modes import ModeTransform, StateW

__all__ = [
    "dealias_state",
    "SolverConfig",
    "Trajectory",
    "compression_pulse",
    "rhs",
    "step",
    "simulate",
    "energy_physical",
    "gronwall_check",
    "lifespan_sweep",
]


@dataclass
class SolverConfig:
    params: PhysParams
    grid: SpectralGrid
    dt: float | None = None
    t_end: float = 1.0
    dealias: bool = True
    s_monitor: float = 3.0
    blowup_threshold: float | None = None  # None: 50x initial gradient norm
    cfl_safety: float = 1.0
    sample_every: int = 1
    tail_fraction_limit: float = 0.01

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        kmax = self.grid.dk * (self.grid.n // 3 if self.dealias else self.grid.n // 2)
        dt_max = self.cfl_safety / (self.params.c * kmax + self.params.coriolis)
        if self.dt is None:
            self.dt = dt_max
        elif self.dt > dt_max * (1 + 1e-12):
            raise ValueError(
                f"dt={self.dt:.3g} violates the step bound {dt_max:.3g} "
                f"(cfl_safety / (c*k_max + 1/eps))"
            )
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")


@dataclass
class Trajectory:
    times: np.ndarray
    hs_norms: np.ndarray  # H^s_monitor norm of (rho, u)
    grad_linf: np.ndarray  # sup norm of (grad rho, grad u)
    b_integral: np.ndarray  # running time integral of grad_linf (trapezoid)
    energy: np.ndarray  # physical energy E(t)
    termination: str  # "t_end" | "blowup_threshold" | "resolution_loss" | "nan"
    s_monitor: float
    final_state: StateW | None = None

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


# ---------------------------------------------------------------------------
# half-spectrum workspace
# ---------------------------------------------------------------------------


class _HalfGrid:
    """rfft-layout meshes, dealias masks, and the exact linear stepper."""

    def __init__(self, grid: SpectralGrid, params: PhysParams, dt: float, dealias: bool,
                 build_linear: bool = True):
        if any(s != 0.0 for s in grid.shift):
            raise ValueError(
                "the nonlinear solver needs an unshifted grid; pick a box whose "
                "wavenumbers miss the singular frequencies"
            )
        self.grid = grid
        self.params = params
        n = grid.n
        self.n = n
        self.shape = (n, n, n // 2 + 1)
        k = grid.k1d(0)
        self.kx = k[:, None, None]
        self.ky = k[None, :, None]
        self.kz = k[: n // 2 + 1][None, None, :].copy()
        self.kz[0, 0, -1] = abs(self.kz[0, 0, -1])  # Nyquist stored positive
        m = np.abs(_fft.fftfreq(n) * n)
        mz = m[: n // 2 + 1]
        cut = n // 3 if dealias else n // 2
        self.keep = (
            (m[:, None, None] <= cut) & (m[None, :, None] <= cut) & (mz[None, None, :] <= cut)
        )
        tail_cut = (5.0 / 6.0) * cut
        inner = (
            (m[:, None, None] <= tail_cut)
            & (m[None, :, None] <= tail_cut)
            & (mz[None, None, :] <= tail_cut)
        )
        self.tail = self.keep & ~inner
        # Plancherel multiplicity of the half layout
        mult = np.full(n // 2 + 1, 2.0)
        mult[0] = 1.0
        mult[-1] = 1.0
        self.mult = mult[None, None, :]
        if build_linear:
            self._build_linear(dt)

    def _build_linear(self, dt: float):
        # precompute the exact per-frequency 4x4 propagators for dt and dt/2
        # (applied many times per step, so the einsum form pays off)
        p = self.params
        if p.rotating:
            tr = ModeTransform(self.kx, self.ky, self.kz, p.kappa)
            self._prop_full = self._matrices(tr, p.c * dt)
            self._prop_half = self._matrices(tr, p.c * dt / 2)
        else:
            a = np.sqrt(self.kx**2 + self.ky**2 + self.kz**2)
            inv_a = np.where(a > 0, 1.0 / np.where(a > 0, a, 1.0), 0.0)
            ex, ey, ez = self.kx * inv_a, self.ky * inv_a, self.kz * inv_a
            mats = []
            for tt in (p.c * dt, p.c * dt / 2):
                cs, sn = np.cos(tt * a), np.sin(tt * a)
                P = np.zeros(self.shape + (4, 4), complex)
                P[..., 0, 0] = cs
                dirs = (ex, ey, ez)
                for j in range(3):
                    P[..., 0, 1 + j] = -1j * sn * dirs[j]
                    P[..., 1 + j, 0] = -1j * sn * dirs[j]
                    for i in range(3):
                        P[..., 1 + i, 1 + j] = (cs - 1.0) * dirs[i] * dirs[j]
                    P[..., 1 + j, 1 + j] += 1.0
                mats.append(np.ascontiguousarray(P))
            self._prop_full, self._prop_half = mats

    def _matrices(self, tr: ModeTransform, t_scaled: float) -> np.ndarray:
        ph = tr.phase_factors(t_scaled)
        P = np.empty(self.shape + (4, 4), complex)
        basis = np.zeros((4,) + self.shape, complex)
        for b in range(4):
            basis[:] = 0.0
            basis[b] = 1.0
            col = tr.backward(tr.forward(basis) * ph)
            for a in range(4):
                P[..., a, b] = col[a]
        return np.ascontiguousarray(P)

    def linear(self, w: np.ndarray, half: bool) -> np.ndarray:
        """Exact linear evolution by dt (or dt/2) of a spectral stack."""
        P = self._prop_half if half else self._prop_full
        return np.einsum("...ab,b...->a...", P, w)

    # -- transforms ----------------------------------------------------------

    def to_half(self, w: StateW) -> np.ndarray:
        return np.stack([w.rho[..., : self.n // 2 + 1], *(ui[..., : self.n // 2 + 1] for ui in w.u)])

    def to_state(self, wh: np.ndarray) -> StateW:
        n = self.n
        rho = self.grid.to_spectral(_fft.irfftn(wh[0], s=(n, n, n)))
        u = np.stack([self.grid.to_spectral(_fft.irfftn(wh[i], s=(n, n, n))) for i in (1, 2, 3)])
        return StateW(self.grid, rho, u)

    # -- nonlinear tendency ----------------------------------------------------

    def nonlinear(self, wh: np.ndarray, want_grad: bool = False):
        """Quadratic tendency; optionally also the sup of (grad rho, grad u)."""
        n, alpha = self.n, self.params.alpha
        wd = wh * self.keep
        ir = lambda F: _fft.irfftn(F, s=(n, n, n))
        rho = ir(wd[0])
        u = [ir(wd[1]), ir(wd[2]), ir(wd[3])]
        gr = [ir(1j * self.kx * wd[0]), ir(1j * self.ky * wd[0]), ir(1j * self.kz * wd[0])]
        gu = [
            [ir(1j * self.kx * wd[j]), ir(1j * self.ky * wd[j]), ir(1j * self.kz * wd[j])]
            for j in (1, 2, 3)
        ]
        divu = gu[0][0] + gu[1][1] + gu[2][2]
        n_rho = -(u[0] * gr[0] + u[1] * gr[1] + u[2] * gr[2]) - alpha * rho * divu
        n_u = [
            -(u[0] * gu[j][0] + u[1] * gu[j][1] + u[2] * gu[j][2]) - alpha * rho * gr[j]
            for j in range(3)
        ]
        out = np.stack([_fft.rfftn(n_rho), *(_fft.rfftn(f) for f in n_u)])
        out *= self.keep
        if not want_grad:
            return out
        mag2 = sum(a**2 for a in gr) + sum(gu[j][i] ** 2 for j in range(3) for i in range(3))
        return out, float(np.sqrt(mag2.max()))

    # -- monitors --------------------------------------------------------------

    def hs_norm(self, wh: np.ndarray, s: float) -> float:
        w = (1.0 + self.kx**2 + self.ky**2 + self.kz**2) ** s
        tot = sum(np.sum(w * np.abs(wh[i]) ** 2 * self.mult) for i in range(4))
        return float(np.sqrt(tot) * self.grid.box_len**1.5 / self.n**3)

    def tail_fraction(self, wh: np.ndarray) -> float:
        num = sum(np.sum(np.abs(wh[i]) ** 2 * self.mult * self.tail) for i in range(4))
        den = sum(np.sum(np.abs(wh[i]) ** 2 * self.mult * self.keep) for i in range(4))
        return float(num / den) if den > 0 else 0.0

    def energy(self, wh: np.ndarray) -> float:
        n = self.n
        rho = _fft.irfftn(wh[0], s=(n, n, n))
        u2 = sum(_fft.irfftn(wh[i], s=(n, n, n)) ** 2 for i in (1, 2, 3))
        return _energy_density_integral(rho, u2, self.params, self.grid.cell_volume)


def _energy_density_integral(rho, u2, params: PhysParams, cell_volume: float) -> float:
    """Physical energy from pointwise (rho, |u|^2) fields.

    The internal-energy density is the exact antiderivative of the
    pressure law with value and slope zero at the background state; it
    reduces to c^(1/alpha) (rho^2 + |u|^2)/2 at quadratic order.
    """
    c, alpha = params.c, params.alpha
    sig = c + alpha * rho
    if np.any(sig <= 0):
        raise ValueError("vacuum excursion: c + alpha*rho <= 0 somewhere")
    ia = 1.0 / alpha
    g = 2.0 * alpha + 1.0
    internal = (sig ** (2.0 + ia) - g * c**2 * sig**ia + (g - 1.0) * c ** (2.0 + ia)) / (
        2.0 * alpha * g
    )
    dens = 0.5 * sig**ia * u2 + internal
    return float(dens.sum() * cell_volume)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def dealias_state(w: StateW, dealias: bool = True) -> StateW:
    """Truncate a state to the solver's retained (2/3-rule) modes."""
    hg = _HalfGrid(w.grid, PhysParams(c=1.0, eps=1.0), dt=1.0, dealias=dealias,
                   build_linear=False)
    return hg.to_state(hg.to_half(w) * hg.keep)


def compression_pulse(grid: SpectralGrid, amplitude: float, width: float,
                      velocity_scale: float = 0.0) -> StateW:
    """Radial Gaussian density pulse, optionally with inward velocity."""
    x = grid.x1d()
    x0 = grid.box_len / 2
    X = x[:, None, None] - x0
    Y = x[None, :, None] - x0
    Z = x[None, None, :] - x0
    g = np.exp(-(X**2 + Y**2 + Z**2) / (2.0 * width**2))
    rho = amplitude * g
    if velocity_scale != 0.0:
        s = amplitude * velocity_scale
        u = np.stack([-s * X / width * g, -s * Y / width * g, -s * Z / width * g])
    else:
        u = np.zeros((3,) + g.shape)
    return StateW.from_physical(grid, rho, u)


def rhs(w: StateW, params: PhysParams, dealias: bool = True) -> StateW:
    """Full tendency of the system (linear terms included), spectral."""
    hg = _HalfGrid(w.grid, params, dt=1.0, dealias=dealias, build_linear=False)
    wh = hg.to_half(w) * hg.keep
    nl = hg.nonlinear(wh)
    # linear part: -c div u, -e3 x u / eps - c grad rho
    cor = params.coriolis
    lin = np.stack(
        [
            -1j * params.c * (hg.kx * wh[1] + hg.ky * wh[2] + hg.kz * wh[3]),
            cor * wh[2] - 1j * params.c * hg.kx * wh[0],
            -cor * wh[1] - 1j * params.c * hg.ky * wh[0],
            -1j * params.c * hg.kz * wh[0],
        ]
    )
    tot = nl + lin
    if not np.all(np.isfinite(tot)):
        raise FloatingPointError("non-finite tendency (blow-up or instability)")
    return hg.to_state(tot)


def _ifrk4_step(hg: _HalfGrid, wh: np.ndarray, dt: float, n1=None) -> np.ndarray:
    """One integrating-factor RK4 step on the half spectrum."""
    if n1 is None:
        n1 = hg.nonlinear(wh)
    w_half = hg.linear(wh, half=True)
    w_full = hg.linear(wh, half=False)
    n2 = hg.nonlinear(w_half + 0.5 * dt * hg.linear(n1, half=True))
    n3 = hg.nonlinear(w_half + 0.5 * dt * n2)
    n4 = hg.nonlinear(w_full + dt * hg.linear(n3, half=True))
    return w_full + (dt / 6.0) * (
        hg.linear(n1, half=False) + 2.0 * hg.linear(n2 + n3, half=True) + n4
    )


def step(w: StateW, config: SolverConfig) -> StateW:
    """Advance one time step (convenience wrapper over the half grid)."""
    hg = _HalfGrid(config.grid, config.params, config.dt, config.dealias)
    wh = hg.to_half(w) * hg.keep
    return hg.to_state(_ifrk4_step(hg, wh, config.dt))


def simulate(w0: StateW, config: SolverConfig, keep_final_state: bool = False) -> Trajectory:
    """Integrate until t_end or a recorded termination event."""
    hg = _HalfGrid(config.grid, config.params, config.dt, config.dealias)
    dt = config.dt
    wh = hg.to_half(w0) * hg.keep
    n1, g0 = hg.nonlinear(wh, want_grad=True)
    threshold = config.blowup_threshold if config.blowup_threshold is not None else 50.0 * g0
    times = [0.0]
    grads = [g0]
    hss = [hg.hs_norm(wh, config.s_monitor)]
    bints = [0.0]
    energies = [hg.energy(wh)]
    termination = "t_end"
    t = 0.0
    g_prev = g0
    b_run = 0.0
    istep = 0
    n_steps = int(math.ceil(config.t_end / dt - 1e-9))
    while istep < n_steps:
        if not np.isfinite(g_prev) or not np.all(np.isfinite(n1[0])):
            termination = "nan"
            break
        if g_prev > threshold:
            termination = "blowup_threshold"
            break
        if hg.tail_fraction(wh) > config.tail_fraction_limit:
            termination = "resolution_loss"
            break
        wh = _ifrk4_step(hg, wh, dt, n1=n1)
        t += dt
        istep += 1
        n1, g_now = hg.nonlinear(wh, want_grad=True)
        b_run += 0.5 * dt * (g_prev + g_now)
        g_prev = g_now
        if istep % config.sample_every == 0 or istep == n_steps:
            times.append(t)
            grads.append(g_now)
            hss.append(hg.hs_norm(wh, config.s_monitor))
            bints.append(b_run)
            try:
                e_now = hg.energy(wh) if np.all(np.isfinite(g_now)) else float("nan")
            except ValueError:  # vacuum excursion on the way to blow-up
                e_now = float("nan")
            energies.append(e_now)
    return Trajectory(
        times=np.array(times),
        hs_norms=np.array(hss),
        grad_linf=np.array(grads),
        b_integral=np.array(bints),
        energy=np.array(energies),
        termination=termination,
        s_monitor=config.s_monitor,
        final_state=hg.to_state(wh) if keep_final_state else None,
    )


def energy_physical(w: StateW, params: PhysParams) -> float:
    """Conserved physical energy of a state."""
    rho, u = w.physical()
    u2 = (u**2).sum(axis=0)
    return _energy_density_integral(rho, u2, params, w.grid.cell_volume)


def gronwall_check(traj: Trajectory, rtol: float = 1e-9):
    """Smallest K with ||W(t)||_{H^s} <= ||W(0)||_{H^s} exp(K B(t)).

    Returns (holds, K).  Requires dense sampling: no inter-sample jump
    of B larger than 0.1.
    """
    b = traj.b_integral
    if b.size < 2:
        raise ValueError("trajectory too short for an envelope check")
    if np.max(np.diff(b)) > 0.1:
        raise ValueError("insufficient sampling: B jumps by more than 0.1 between samples")
    ratio = np.log(np.maximum(traj.hs_norms / traj.hs_norms[0], 1e-300))
    pos = b > 0
    k_fit = float(max(0.0, np.max(ratio[pos] / b[pos]))) if pos.any() else 0.0
    holds = bool(
        np.isfinite(k_fit)
        and np.all(traj.hs_norms <= traj.hs_norms[0] * np.exp(k_fit * b) * (1.0 + rtol))
    )
    return holds, k_fit


def lifespan_sweep(w0: StateW, params_base: PhysParams, eps_list, config: SolverConfig,
                   q: float = 3.0):
    """Proxy lifespans over a Rossby-parameter sweep with fixed data.

    Returns one row per eps with the measured termination time, the
    termination reason (resolution-loss rows are lower bounds only), and
    the predicted lower-bound scaling eps^(-1/(q-1)) * min(1, (c eps)^(3/(q-1)))
    for the requested exponent q.
    """
    eps_list = list(eps_list)
    for a, b in zip(eps_list, eps_list[1:]):
        if not b < a:
            raise ValueError("eps_list must be strictly decreasing")
    rows = []
    for eps in eps_list:
        params = PhysParams(c=params_base.c, eps=eps, alpha=params_base.alpha)
        cfg = SolverConfig(
            params=params,
            grid=config.grid,
            dt=None,
            t_end=config.t_end,
            dealias=config.dealias,
            s_monitor=config.s_monitor,
            blowup_threshold=config.blowup_threshold,
            cfl_safety=config.cfl_safety,
            sample_every=config.sample_every,
            tail_fraction_limit=config.tail_fraction_limit,
        )
        traj = simulate(w0, cfg)
        if math.isinf(eps):
            predicted = 0.0
        else:
            ce = params.c * eps
            predicted = eps ** (-1.0 / (q - 1.0)) * min(1.0, ce ** (3.0 / (q - 1.0)))
        rows.append(
            {
                "eps": eps,
                "t_star": traj.t_final,
                "termination": traj.termination,
                "lower_bound_only": traj.termination == "resolution_loss",
                "predicted_scaling": predicted,
            }
        )
    return rows
