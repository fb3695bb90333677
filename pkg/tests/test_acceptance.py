"""Acceptance suite: one test per criterion, each printing a PASS line.

The runtime-heavy experiments pin their grids, data, windows and
tolerances here; nothing is left to later calibration.  Cross-checks
always pit an implementation against an independently computed oracle
(finite differences, dense eigensolvers, direct quadrature, refinement,
or closed forms).
"""
import math
import time

import numpy as np
import pytest

import rotcomp as rc
from rotcomp.dispersion import OMEGA, SIGMA, Branch
from rotcomp.localization import LocSpec, symbol_mesh
from rotcomp.modes import BRANCHES, matrix_m
from rotcomp.propagator import measure_decay, optimal_decay, strichartz_norm
from rotcomp.solver import _HalfGrid, _ifrk4_step, dealias_state
from conftest import random_state, state_diff, state_norm


def _report(num, name, detail):
    print(f"\nACCEPTANCE {num} ({name}): PASS  [{detail}]")


# ---------------------------------------------------------------------------
# 1. Hessian determinant identity
# ---------------------------------------------------------------------------


def _fd_det(f, r, z, h):
    """Determinant of the cylindrical-frame Hessian from 4th-order stencils."""
    d2r = (-f(r + 2 * h, z) + 16 * f(r + h, z) - 30 * f(r, z) + 16 * f(r - h, z)
           - f(r - 2 * h, z)) / (12 * h * h)
    d2z = (-f(r, z + 2 * h) + 16 * f(r, z + h) - 30 * f(r, z) + 16 * f(r, z - h)
           - f(r, z - 2 * h)) / (12 * h * h)

    def dz4(rr):
        return (-f(rr, z + 2 * h) + 8 * f(rr, z + h) - 8 * f(rr, z - h)
                + f(rr, z - 2 * h)) / (12 * h)

    drz = (-dz4(r + 2 * h) + 8 * dz4(r + h) - 8 * dz4(r - h) + dz4(r - 2 * h)) / (12 * h)
    d1r = (-f(r + 2 * h, z) + 8 * f(r + h, z) - 8 * f(r - h, z) + f(r - 2 * h, z)) / (12 * h)
    return (d2r * d2z - drz**2) * (d1r / r)


def test_01_hessian_determinant():
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = 0.0
    for kappa in (0.25, 1.0, 4.0):
        r = rng.uniform(0.2, 3.0, 6000) / kappa
        z = rng.uniform(-3.0, 3.0, 6000) / kappa
        d1, d2 = rc.distances_rz(r, z, kappa)
        keep = np.minimum(d1, d2) > 0.3 / kappa
        r, z = r[keep][:1000], z[keep][:1000]
        d1, d2 = d1[keep][:1000], d2[keep][:1000]
        assert r.size == 1000
        h = 1.6e-2 * np.minimum(1.0, np.minimum(d1, d2))
        for branch in (SIGMA, OMEGA):
            f = lambda rr, zz: rc.lam_rz(rr, zz, kappa, branch)
            # Richardson pair (h, 2h) cancels the leading truncation term
            det = (16.0 * _fd_det(f, r, z, h) - _fd_det(f, r, z, 2 * h)) / 15.0
            want = r**2 * rc.lam_rz(r, z, kappa, branch) / (kappa**2 * (d1 * d2) ** 4)
            worst = max(worst, float(np.abs((det - want) / want).max()))
    elapsed = time.time() - t0
    assert worst < 1e-6
    assert elapsed < 5.0
    _report(1, "hessian determinant", f"max rel err {worst:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. Eigenstructure of the frequency-space generator
# ---------------------------------------------------------------------------


def test_02_eigenstructure():
    rng = np.random.default_rng(12)
    worst_ev, worst_res = 0.0, 0.0
    count = 0
    while count < 1000:
        xi = rng.uniform(-3, 3, 3)
        if np.linalg.norm(xi) < 0.1:
            continue
        kappa = float(rng.choice([0.25, 1.0, 4.0]))
        ev = np.linalg.eigvals(matrix_m(xi, kappa))
        sig = rc.lam(xi, kappa, SIGMA)
        om = rc.lam(xi, kappa, OMEGA)
        want = np.sort(np.array([sig, -sig, om, -om]))
        worst_ev = max(worst_ev, float(np.abs(np.sort(ev.imag) - want).max()),
                       float(np.abs(ev.real).max()))
        a2 = float(np.dot(xi, xi))
        res = ev**4 + (kappa**-2 + a2) * ev**2 + kappa**-2 * xi[2] ** 2
        worst_res = max(worst_res, float(np.abs(res).max()))
        count += 1
    assert worst_ev < 1e-10
    assert worst_res < 1e-10
    _report(2, "eigenstructure", f"eig err {worst_ev:.2e}, char-poly residual {worst_res:.2e}")


# ---------------------------------------------------------------------------
# 3. Transform isometry and round trip
# ---------------------------------------------------------------------------


def test_03_transform_isometry():
    t0 = time.time()
    rng = np.random.default_rng(13)
    params = rc.PhysParams(c=1.0, eps=1.0)
    grid = rc.build_grid(32, 7.0, params.kappa)
    worst_iso, worst_rt = 0.0, 0.0
    for _ in range(100):
        w = random_state(grid, rng)
        m = rc.to_modes(w, params)
        back = rc.from_modes(m, params)
        wn = state_norm(w)
        worst_iso = max(worst_iso, abs(wn / (2.0 * rc.norm(grid, list(m.data), "l2")) - 1.0))
        worst_rt = max(worst_rt, state_diff(back, w) / wn)
    elapsed = time.time() - t0
    assert worst_iso < 1e-10
    assert worst_rt < 1e-10
    assert elapsed < 30.0
    _report(3, "transform isometry", f"isometry {worst_iso:.2e}, round trip {worst_rt:.2e}, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 4. Mixing-angle identities on a full grid
# ---------------------------------------------------------------------------


def test_04_angle_identities_on_grid():
    grid = rc.build_grid(64, 7.0, 1.0)
    kx, ky, kz = grid.wavenumbers()
    KX, KY, KZ = np.broadcast_arrays(kx, ky, kz)
    mask = np.hypot(KX, KY) > 0  # coefficients live off the vertical axis
    xi = np.stack([KX[mask], KY[mask], KZ[mask]], axis=-1)
    ac = rc.angle_coeffs(xi, 1.0)
    z = xi[:, 2]
    worst = max(
        float(np.abs(ac.rho_omega**2 + ac.vort_omega**2 - 1).max()),
        float(np.abs(ac.rho_sigma**2 + ac.vort_sigma**2 - 1).max()),
        float(np.abs(ac.rho_omega**2 + ac.rho_sigma**2 - 1).max()),
        float(np.abs(np.abs(ac.div_omega) ** 2 + np.abs(ac.w_omega) ** 2 - 1).max()),
        float(np.abs(np.abs(ac.div_sigma) ** 2 + np.abs(ac.w_sigma) ** 2 - 1).max()),
        float(np.abs(np.abs(ac.w_omega) ** 2 + np.abs(ac.w_sigma) ** 2 - 1).max()),
    )
    assert worst < 1e-11
    assert np.all(ac.rho_omega >= 0) and np.all(ac.rho_sigma >= 0)
    assert np.all(ac.vort_omega <= 1e-15) and np.all(ac.vort_sigma >= -1e-15)
    assert np.all(ac.w_omega <= 1e-15) and np.all(ac.div_sigma.real >= 0)
    assert np.all(ac.div_omega.imag * np.sign(z) >= -1e-15)
    assert np.all(ac.w_sigma.imag * np.sign(z) <= 1e-15)
    _report(4, "angle identities", f"worst identity err {worst:.2e} over {mask.sum()} modes")


# ---------------------------------------------------------------------------
# 5. Decay exponents of localized evolutions
# ---------------------------------------------------------------------------


def _pole_gaussian(grid, sigma, pole):
    kx, ky, kz = grid.wavenumbers()
    r = np.sqrt(kx**2 + ky**2)
    z = kz + np.zeros_like(r)
    return np.exp(-(r**2 + (z - pole) ** 2) / (2 * sigma**2)).astype(complex)


def test_05_decay_exponents():
    t0 = time.time()
    params = rc.PhysParams(c=1.0, eps=1.0)

    # inertial branch, shell localization only: the optimal 1/t rate
    grid_a = rc.build_grid(128, 210.0, params.kappa)
    rep_a = measure_decay(
        grid_a, _pole_gaussian(grid_a, 0.30, 1.0), LocSpec(k=0), OMEGA, params,
        np.geomspace(6.0, 100.0, 16), (10.0, 100.0),
    )
    assert abs(rep_a.fitted_exponent + 1.0) <= 0.15

    # inertial branch with full anisotropic localization: 3/2-rate regime
    grid_b = rc.build_grid(128, 120.0, params.kappa)
    ones_b = np.ones((128,) * 3, complex)
    rep_b = measure_decay(
        grid_b, ones_b, LocSpec(k=0, p=0, q=0), OMEGA, params,
        np.geomspace(8.0, 60.0, 14), (10.0, 60.0),
    )
    assert rep_b.fitted_exponent <= -1.3

    # acoustic branch with horizontal localization
    grid_c = rc.build_grid(128, 93.0, params.kappa)
    ones_c = np.ones((128,) * 3, complex)
    rep_c = measure_decay(
        grid_c, ones_c, LocSpec(k=0, p=-1), SIGMA, params,
        np.geomspace(6.4, 45.0, 14), (8.0, 45.0),
    )
    assert rep_c.fitted_exponent <= -1.3

    elapsed = time.time() - t0
    assert elapsed < 600.0
    _report(5, "decay exponents",
            f"P_k omega {rep_a.fitted_exponent:+.3f} (target -1.0+-0.15), "
            f"P_kpq omega {rep_b.fitted_exponent:+.3f} (<= -1.3), "
            f"P_kp sigma {rep_c.fitted_exponent:+.3f} (<= -1.3), {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 6. Optimal decay of pole-centered data
# ---------------------------------------------------------------------------


def _optimal_2d_oracle(params, t, n=1600):
    from rotcomp.localization import psi

    kappa, c = params.kappa, params.c
    x, wx = np.polynomial.legendre.leggauss(n)
    rho = 0.25 / kappa * (x + 1.0)
    wr = 0.25 / kappa * wx
    R, S = np.meshgrid(rho, x, indexing="ij")
    W = wr[:, None] * wx[None, :]
    sphere = np.sqrt(R**2 + 4.0 / kappa**2 + 4.0 * R * S / kappa)
    g = psi(4.0 * kappa * R)
    val = np.sum(W * g * R**2 * np.exp(0.5j * t * c * R) * np.exp(0.5j * t * c * sphere))
    return 2.0 * np.pi * abs(val)


def test_06_optimal_decay():
    t0 = time.time()
    params = rc.PhysParams(c=1.0, eps=1.0)
    res20 = optimal_decay(params, 20.0)
    oracle = _optimal_2d_oracle(params, 20.0)
    agree = abs(res20.value - oracle) / oracle
    assert agree < 1e-8

    ts = np.arange(20.0, 201.0, 20.0)
    values = []
    for t in ts:
        res = optimal_decay(params, t)
        assert res.value >= res.lower_bound, f"bound violated at t={t}"
        values.append(res.value)
    A = np.vstack([np.ones_like(ts), 1.0 / ts]).T
    coef, *_ = np.linalg.lstsq(A, ts * np.asarray(values), rcond=None)
    intercept = coef[0]
    target = 0.9 * 2.0 * np.pi / 48.0
    assert intercept >= target
    elapsed = time.time() - t0
    assert elapsed < 60.0
    _report(6, "optimal decay", f"dual-path {agree:.2e}, bound holds on {len(ts)} times, "
            f"intercept {intercept:.3f} >= {target:.3f}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 7. Strichartz-norm uniformity in the horizon
# ---------------------------------------------------------------------------


def test_07_strichartz_uniformity():
    t0 = time.time()
    box_for_k = {-1: 80.0, 0: 40.0, 1: 22.0}
    c = 4.0
    worst = 0.0
    details = []
    for k in (-1, 0, 1):
        for kappa in (0.5, 1.0, 2.0):
            params = rc.PhysParams(c=c, eps=kappa / c)
            grid = rc.build_grid(64, box_for_k[k], params.kappa)
            kx, ky, kz = grid.wavenumbers()
            a = np.sqrt(kx**2 + ky**2 + kz**2)
            fh = np.exp(-((a / (2.0**k * 2.5)) ** 2)).astype(complex)
            ratios = []
            for T in (10.0, 40.0, 160.0):
                rep = strichartz_norm(grid, fh, LocSpec(k=k), OMEGA, params,
                                      4.0, 4.0, T, nt=64)
                ratios.append(rep.ratio)
            slope = float(np.polyfit(np.log([10.0, 40.0, 160.0]), np.log(ratios), 1)[0])
            worst = max(worst, abs(slope))
            details.append(f"k={k},kap={kappa}:{slope:+.3f}")
    elapsed = time.time() - t0
    assert worst <= 0.05, details
    assert elapsed < 600.0
    _report(7, "strichartz uniformity", f"worst |slope| {worst:.3f} <= 0.05, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 8. Incompressible-limit convergence rate
# ---------------------------------------------------------------------------


def test_08_incompressible_limit():
    eps = 0.5
    rng = np.random.default_rng(18)
    worst = 0.0
    for _ in range(20):
        xi = rng.uniform(-2, 2, 3)
        if abs(xi[2]) < 0.3 or np.linalg.norm(xi) < 0.5:
            continue
        gaps, xs = [], []
        for c in (1.0, 4.0, 16.0, 64.0):
            kappa = c * eps
            if kappa * np.linalg.norm(xi) < 1.0:
                continue
            om = rc.lam(xi, kappa, OMEGA)
            target = xi[2] / (eps * np.linalg.norm(xi))
            gaps.append(abs(c * om / target - 1.0))
            xs.append(kappa * np.linalg.norm(xi))
        if len(gaps) < 3:
            continue
        slope = float(np.polyfit(np.log(xs), np.log(gaps), 1)[0])
        worst = max(worst, abs(slope + 2.0))
    assert worst <= 0.1
    _report(8, "incompressible limit", f"worst |slope + 2| = {worst:.3f} <= 0.1")


# ---------------------------------------------------------------------------
# 9. Nonlinear solver battery
# ---------------------------------------------------------------------------


def test_09_nonlinear_solver():
    t0 = time.time()
    p = rc.PhysParams(c=1.0, eps=1.0, alpha=0.5)

    # integrating-factor exactness on linearized data
    grid32 = rc.build_grid(32, 7.0)
    w0 = dealias_state(rc.compression_pulse(grid32, amplitude=1e-8, width=0.9,
                                            velocity_scale=0.3))
    cfg = rc.SolverConfig(params=p, grid=grid32, dt=1e-5, t_end=1e-5)
    exact_rel = state_diff(rc.step(w0, cfg), rc.evolve_linear(w0, p, 1e-5)) / state_norm(w0)
    assert exact_rel < 1e-12

    # fourth-order self convergence
    w0 = rc.compression_pulse(grid32, amplitude=0.25, width=0.9, velocity_scale=0.1)
    outs = {}
    for dt in (0.02, 0.01, 0.005):
        hg = _HalfGrid(grid32, p, dt, True)
        wh = hg.to_half(w0) * hg.keep
        for _ in range(int(round(0.4 / dt))):
            wh = _ifrk4_step(hg, wh, dt)
        outs[dt] = wh
    e1 = np.sqrt(sum(np.sum(np.abs(outs[0.02][i] - outs[0.01][i]) ** 2) for i in range(4)))
    e2 = np.sqrt(sum(np.sum(np.abs(outs[0.01][i] - outs[0.005][i]) ** 2) for i in range(4)))
    ratio = e1 / e2
    assert 12.0 <= ratio <= 20.0

    # resolution-stable envelope constant
    ks = {}
    for n in (64, 96):
        g = rc.build_grid(n, 7.0)
        w0 = rc.compression_pulse(g, amplitude=0.25, width=0.9, velocity_scale=0.1)
        traj = rc.simulate(w0, rc.SolverConfig(params=p, grid=g, t_end=3.0))
        holds, K = rc.gronwall_check(traj)
        assert holds and traj.termination == "t_end"
        ks[n] = K
    k_ratio = max(ks[64], ks[96]) / min(ks[64], ks[96])
    assert k_ratio <= 2.0
    assert 0.0 < ks[64] < 20.0

    # physical-energy drift on a smooth run to t = 5
    g64 = rc.build_grid(64, 7.0)
    w0 = rc.compression_pulse(g64, amplitude=0.05, width=1.1, velocity_scale=0.02)
    traj = rc.simulate(w0, rc.SolverConfig(params=p, grid=g64, t_end=5.0,
                                           sample_every=25, cfl_safety=0.5))
    assert traj.termination == "t_end"
    drift = float(np.abs(traj.energy - traj.energy[0]).max() / traj.energy[0])
    assert drift <= 1e-6

    elapsed = time.time() - t0
    assert elapsed < 900.0
    _report(9, "nonlinear solver", f"IF exactness {exact_rel:.1e}, order ratio {ratio:.1f}, "
            f"K64={ks[64]:.3f} K96={ks[96]:.3f} (x{k_ratio:.2f}), "
            f"energy drift {drift:.1e}, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 10. Lifespan trend across the rotation sweep
# ---------------------------------------------------------------------------


def test_10_lifespan_trend():
    t0 = time.time()
    params = rc.PhysParams(c=10.0, eps=1.0, alpha=0.5)
    grid = rc.build_grid(64, 7.0)
    w0 = rc.compression_pulse(grid, amplitude=6.0, width=0.9)
    # fixed proxy across the sweep: the default gradient threshold (50x the
    # initial value) together with the spectral-tail criterion
    cfg = rc.SolverConfig(params=params, grid=grid, t_end=4.5, sample_every=4)
    rows = rc.lifespan_sweep(w0, params, [math.inf, 1.0, 0.5, 0.25, 0.1], cfg, q=3.0)
    tstars = [r["t_star"] for r in rows]
    # smallest lifespan without rotation
    assert tstars[0] == min(tstars)
    assert all(t > tstars[0] for t in tstars[1:])
    # non-decreasing as eps decreases, allowing one adjacent inversion within 5%
    inversions = [
        (a - b) / a for a, b in zip(tstars, tstars[1:]) if b < a
    ]
    assert len(inversions) <= 1
    assert all(v <= 0.05 for v in inversions)
    elapsed = time.time() - t0
    assert elapsed < 1800.0
    detail = ", ".join(f"eps={r['eps']}: {r['t_star']:.3f} ({r['termination']})" for r in rows)
    _report(10, "lifespan trend", f"{detail}, {elapsed:.0f}s")
