import math

import numpy as np
import pytest
from scipy.special import j0 as scipy_j0

import rotcomp as rc
from rotcomp.dispersion import OMEGA, OMEGA_INC, SIGMA, Branch
from rotcomp.localization import LocSpec, phi, psi, symbol_mesh
from rotcomp.propagator import (
    bessel_j0,
    evolve_scalar,
    frequency_mesh,
    kernel_quadrature,
    measure_decay,
    optimal_decay,
    strichartz_norm,
)
from conftest import random_state, state_diff, state_norm


# ---------------------------------------------------------------------------
# linear evolution
# ---------------------------------------------------------------------------


def test_evolve_t0_identity(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(16, 7.0, params.kappa)
    w = random_state(grid, rng)
    wt = rc.evolve_linear(w, params, 0.0)
    assert state_diff(wt, w) < 1e-14 * state_norm(w)


def test_evolve_l2_conservation_long_times(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(16, 7.0, params.kappa)
    w = random_state(grid, rng)
    wn = state_norm(w)
    for t in (0.0, 1.0, 10.0, 100.0):
        wt = rc.evolve_linear(w, params, t)
        assert abs(state_norm(wt) / wn - 1.0) < 1e-10


def test_evolve_group_property(rng):
    params = rc.PhysParams(c=0.8, eps=1.3)
    grid = rc.build_grid(16, 7.0, params.kappa)
    w = random_state(grid, rng)
    a = rc.evolve_linear(w, params, 0.9)
    b = rc.evolve_linear(rc.evolve_linear(w, params, 0.52), params, 0.38)
    assert state_diff(a, b) < 1e-10 * state_norm(w)


def test_evolve_rejects_nonfinite_time(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(8, 7.0, params.kappa)
    with pytest.raises(ValueError):
        rc.evolve_linear(random_state(grid, rng), params, math.nan)


def test_acoustic_path_against_dense_oracle(rng):
    # eps = inf: (rho, u_parallel) rotate at speed c|xi|, u_perp frozen
    params = rc.PhysParams(c=1.7, eps=math.inf)
    grid = rc.build_grid(16, 7.0)
    w = random_state(grid, rng)
    t = 0.43
    wt = rc.evolve_linear(w, params, t)
    kx, ky, kz = grid.wavenumbers()
    KX, KY, KZ = np.broadcast_arrays(kx, ky, kz)
    for _ in range(100):
        i, j, k = rng.integers(0, 16, 3)
        xi = np.array([KX[i, j, k], KY[i, j, k], KZ[i, j, k]])
        a = np.linalg.norm(xi)
        L = np.zeros((4, 4), complex)
        L[0, 1:] = -1j * params.c * xi
        L[1:, 0] = -1j * params.c * xi
        import scipy.linalg as sla

        P = sla.expm(t * L)
        v0 = np.array([w.rho[i, j, k], *(w.u[d][i, j, k] for d in range(3))])
        v1 = np.array([wt.rho[i, j, k], *(wt.u[d][i, j, k] for d in range(3))])
        assert np.abs(P @ v0 - v1).max() < 1e-11 * max(1.0, np.abs(v0).max())
    assert abs(state_norm(wt) / state_norm(w) - 1.0) < 1e-12


def test_mean_mode_coriolis_rotation():
    # zero-frequency mode: u_h rotates at rate 1/eps, rho and u3 frozen
    params = rc.PhysParams(c=1.0, eps=0.5)
    grid = rc.build_grid(16, 7.0, params.kappa)
    rho = np.full((16,) * 3, 0.3)
    u = np.zeros((3, 16, 16, 16))
    u[0] += 1.0
    u[1] += -0.5
    u[2] += 0.25
    w = rc.StateW.from_physical(grid, rho, u)
    t = 0.77
    wt = rc.evolve_linear(w, params, t)
    rho_t, u_t = wt.physical()
    th = t / params.eps
    want1 = 1.0 * math.cos(th) + (-0.5) * math.sin(th)
    want2 = -1.0 * math.sin(th) + (-0.5) * math.cos(th)
    assert np.abs(rho_t - 0.3).max() < 1e-12
    assert np.abs(u_t[0] - want1).max() < 1e-12
    assert np.abs(u_t[1] - want2).max() < 1e-12
    assert np.abs(u_t[2] - 0.25).max() < 1e-12


def test_mode_amplitudes_rotate_diagonally(rng):
    params = rc.PhysParams(c=1.1, eps=0.9)
    grid = rc.build_grid(16, 7.0, params.kappa)
    w = random_state(grid, rng)
    t = 2.3
    m0 = rc.to_modes(w, params)
    mt = rc.to_modes(rc.evolve_linear(w, params, t), params)
    tr = rc.modes.transform_for(grid, params.kappa)
    want = m0.data * np.exp(1j * params.c * t * tr.freqs)
    err = rc.norm(grid, list(mt.data - want), "l2") / rc.norm(grid, list(m0.data), "l2")
    assert err < 1e-10


# ---------------------------------------------------------------------------
# decay measurement plumbing
# ---------------------------------------------------------------------------


def _shell_gaussian(grid, center_rz, sigma):
    kx, ky, kz = grid.wavenumbers()
    r = np.sqrt(kx**2 + ky**2)
    z = kz + np.zeros_like(r)
    r0, z0 = center_rz
    return np.exp(-((r - r0) ** 2 + (z - z0) ** 2) / (2 * sigma**2)).astype(complex)


def test_measure_decay_validation(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(32, 24.0, params.kappa)
    fh = _shell_gaussian(grid, (2.0, 0.0), 0.3)
    with pytest.raises(ValueError):  # too few samples in window
        measure_decay(grid, fh, LocSpec(k=0), SIGMA, params, np.linspace(1, 5, 6), (1, 5))
    with pytest.raises(ValueError):  # wrap-around
        measure_decay(grid, fh, LocSpec(k=0), SIGMA, params,
                      np.linspace(1, 200, 20), (1, 200))
    with pytest.raises(ValueError):  # localized data identically zero
        measure_decay(grid, 0 * fh, LocSpec(k=0), SIGMA, params,
                      np.linspace(1, 5, 9), (1, 5))


def test_measure_decay_smoke_sigma(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(32, 24.0, params.kappa)
    fh = _shell_gaussian(grid, (2.0, 0.0), 0.3)
    times = np.geomspace(2.0, 10.0, 10)
    rep = measure_decay(grid, fh, LocSpec(k=0, p=0), SIGMA, params, times, (2.0, 10.0))
    assert rep.sup_norms[0] > rep.sup_norms[-1]
    assert rep.fitted_exponent < -0.4
    assert rep.fitted_coeff > 0
    assert np.isfinite(rep.l1_norm) and np.isfinite(rep.l2_norm)


# ---------------------------------------------------------------------------
# Strichartz norms
# ---------------------------------------------------------------------------


def test_strichartz_admissibility():
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(16, 7.0, params.kappa)
    fh = np.ones((16,) * 3, complex)
    for q, r in [(3.0, 3.0), (2.0, math.inf), (4.0, 5.0)]:
        with pytest.raises(ValueError):
            strichartz_norm(grid, fh, LocSpec(k=0), OMEGA, params, q, r, 10.0)
    with pytest.raises(ValueError):  # too few samples
        strichartz_norm(grid, fh, LocSpec(k=0), OMEGA, params, 4.0, 4.0, 10.0, nt=32)


def test_strichartz_sup_l2_is_exact(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(16, 7.0, params.kappa)
    fh = (rng.standard_normal((16,) * 3) + 1j * rng.standard_normal((16,) * 3))
    rep = strichartz_norm(grid, fh, LocSpec(k=0), OMEGA, params, math.inf, 2.0, 50.0)
    loc = fh * symbol_mesh(LocSpec(k=0), grid, params.kappa)
    assert abs(rep.mixed_norm - rc.norm(grid, loc, "l2")) < 1e-14 * rep.mixed_norm
    assert rep.ratio == rep.mixed_norm / rep.bound


def test_strichartz_smoke_omega_44(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(32, 16.0, params.kappa)
    kx, ky, kz = grid.wavenumbers()
    a = np.sqrt(kx**2 + ky**2 + kz**2)
    fh = np.exp(-((a / 2.5) ** 2)).astype(complex)
    rep = strichartz_norm(grid, fh, LocSpec(k=0), OMEGA, params, 4.0, 4.0, 10.0)
    assert 0 < rep.mixed_norm < math.inf
    assert 0 < rep.ratio < 5.0


def test_strichartz_incompressible_branch(rng):
    params = rc.PhysParams(c=1.0, eps=0.5)
    grid = rc.build_grid(16, 7.0, params.eps)
    fh = np.ones((16,) * 3, complex)
    rep = strichartz_norm(grid, fh, LocSpec(k=0), OMEGA_INC, params, 4.0, 4.0, 10.0)
    loc = fh * symbol_mesh(LocSpec(k=0), grid, params.eps)
    want_bound = (params.eps * 2.0 ** (3 * 0)) ** 0.25 * rc.norm(grid, loc, "l2")
    assert abs(rep.bound - want_bound) < 1e-12 * want_bound
    assert np.isfinite(rep.ratio) and rep.ratio > 0


# ---------------------------------------------------------------------------
# Bessel function and kernel quadrature
# ---------------------------------------------------------------------------


def test_bessel_j0_against_scipy():
    x = np.linspace(0.0, 80.0, 1001)
    assert np.abs(bessel_j0(x) - scipy_j0(x)).max() < 1e-12


def test_kernel_at_origin_is_localized_measure():
    loc = LocSpec(k=0)
    val = kernel_quadrature(loc, OMEGA, 1.0, 0.0, [0.0, 0.0, 0.0])
    rr = np.linspace(0.0, 4.2, 200001)
    want = np.trapezoid(4 * np.pi * rr**2 * phi(rr), rr)
    assert abs(val.imag) < 1e-10 * want
    assert abs(val.real - want) < 1e-7 * want


def test_kernel_t0_matches_fft_oracle():
    loc = LocSpec(k=0)
    grid = rc.build_grid(128, 64.0, 1.0)
    sym = symbol_mesh(loc, grid, 1.0).astype(complex)
    field = grid.to_physical(sym)
    x1d = grid.x1d()
    for i, j, k in [(2, 3, 1), (4, 0, 0), (0, 0, 5)]:
        x = np.array([x1d[i], x1d[j], -x1d[k]])  # kernel convention mirrors x3
        got = kernel_quadrature(loc, OMEGA, 1.0, 0.0, x)
        want = field[i, j, k] * grid.n**3 * grid.dk**3
        assert abs(got - want) < 1e-6 * abs(want)


def test_kernel_cross_validates_decay_pipeline():
    # |K(t, x_peak)| against the grid field maximum at the same time
    params = rc.PhysParams(c=1.0, eps=1.0)
    loc = LocSpec(k=0)
    grid = rc.build_grid(128, 100.0, params.kappa)
    fh = symbol_mesh(loc, grid, 1.0).astype(complex)
    freq = frequency_mesh(grid, OMEGA, params)
    t = 12.0
    u = grid.to_physical(fh * np.exp(1j * t * freq))
    am = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    x1d = grid.x1d()
    xpk = np.array([x1d[am[0]], x1d[am[1]], x1d[am[2]]])
    xpk = (xpk + grid.box_len / 2) % grid.box_len - grid.box_len / 2
    val = kernel_quadrature(loc, OMEGA, params.kappa, t, [xpk[0], xpk[1], -xpk[2]])
    grid_val = np.abs(u[am]) * grid.n**3 * grid.dk**3
    assert abs(abs(val) - grid_val) < 0.05 * grid_val


def test_kernel_rejects_negative_time():
    with pytest.raises(ValueError):
        kernel_quadrature(LocSpec(k=0), OMEGA, 1.0, -1.0, [0, 0, 0])


# ---------------------------------------------------------------------------
# optimal decay of pole-centered data
# ---------------------------------------------------------------------------


def _optimal_value_2d_oracle(params, t, sign, n=1200):
    """Independent dual-path oracle: direct 2d quadrature in (rho, s)."""
    kappa, c = params.kappa, params.c
    x, wx = np.polynomial.legendre.leggauss(n)
    rho = 0.25 / kappa * (x + 1.0)
    wr = 0.25 / kappa * wx
    s = x.copy()
    ws = wx.copy()
    R, S = np.meshgrid(rho, s, indexing="ij")
    W = wr[:, None] * ws[None, :]
    phase_sphere = np.sqrt(R**2 + 4.0 / kappa**2 + 4.0 * R * S / kappa)
    g = psi(4.0 * kappa * R)
    rad = np.exp(0.5j * sign * t * c * R)
    integral = np.sum(W * g * R**2 * rad * np.exp(0.5j * t * c * phase_sphere))
    return 2.0 * np.pi * abs(integral)


def test_optimal_decay_closed_form_vs_direct_quadrature():
    params = rc.PhysParams(c=1.0, eps=1.0)
    res = optimal_decay(params, 20.0)
    want = _optimal_value_2d_oracle(params, 20.0, +1.0)
    assert abs(res.value - want) < 1e-8 * want


def test_optimal_decay_bound_holds_both_branches():
    params = rc.PhysParams(c=1.0, eps=1.0)
    for t in (20.0, 60.0, 140.0):
        for branch in (SIGMA, OMEGA):
            res = optimal_decay(params, t, branch)
            assert res.holds
            assert res.lower_bound == pytest.approx(
                2 * np.pi * (1 / (48 * t) - (1 / t**2) * 0.5
                             * (math.sin(t / 4) + 0.5 * math.sin(t / 2) + 1.0)),
                rel=1e-12,
            )


def test_optimal_decay_other_parameters():
    params = rc.PhysParams(c=2.0, eps=0.4)  # kappa = 0.8
    res = optimal_decay(params, 30.0)
    assert res.holds
    with pytest.raises(ValueError):
        optimal_decay(params, 0.1)  # t*c/kappa < 1


def test_evolve_scalar_unitary(rng):
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(16, 7.0, params.kappa)
    fh = rng.standard_normal((16,) * 3) + 1j * rng.standard_normal((16,) * 3)
    out = evolve_scalar(grid, fh, SIGMA, params, 3.0)
    assert abs(rc.norm(grid, out, "l2") - rc.norm(grid, fh, "l2")) < 1e-12 * rc.norm(grid, fh, "l2")
