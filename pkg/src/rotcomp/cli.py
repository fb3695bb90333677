"""Configuration-driven command line front end.

Every subcommand reads a single JSON config file, runs deterministically
(given --seed), and writes a CSV report whose ``#`` header echoes the
fully resolved config.  Exit codes: 0 success (recorded terminations
included), 2 config/validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dispersion, localization, modes, propagator, solver
from .dispersion import OMEGA, SIGMA, Branch
from .grid import PhysParams, build_grid, norm
from .localization import LocSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _parse_branch(spec) -> Branch:
    if isinstance(spec, str):
        sign = +1
        tag = spec
        if spec.startswith(("+", "-")):
            sign = +1 if spec[0] == "+" else -1
            tag = spec[1:]
        return Branch(tag, sign)
    raise ConfigError(f"branch must be a string, got {spec!r}")


def _parse_loc(d) -> LocSpec:
    if not isinstance(d, dict) or "k" not in d:
        raise ConfigError("loc must be an object with at least the key 'k'")
    return LocSpec(
        k=int(d["k"]),
        p=None if d.get("p") is None else int(d["p"]),
        q=None if d.get("q") is None else int(d["q"]),
        l=None if d.get("l") is None else int(d["l"]),
        le_p=bool(d.get("le_p", False)),
    )


def _axis_values(d, key):
    spec = d[key]
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        return np.linspace(float(spec["min"]), float(spec["max"]), int(spec["num"]))
    raise ConfigError(f"{key} must be a list or a min/max/num object")


def _write_csv(path, subcommand: str, config: dict, columns: list[str], rows) -> None:
    lines = [f"# rotcomp {subcommand} report"]
    lines.append(f"# generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}")
    lines.append("# config: " + json.dumps(config, sort_keys=True))
    lines.append("# columns: " + ",".join(columns))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _map_cells(fn, cells, threads: int):
    """Run independent sweep cells, merging results in input order."""
    if threads <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, cells))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_dispersion_table(config, rng, threads):
    kappa = float(config.get("kappa", 1.0))
    rs = _axis_values(config, "r")
    zs = _axis_values(config, "z")
    rows = []
    for r in rs:
        for z in zs:
            if r <= 0:
                raise ConfigError("dispersion-table needs r > 0 for hessians")
            sig = dispersion.lam_rz(r, z, kappa, SIGMA)
            om = dispersion.lam_rz(r, z, kappa, OMEGA)
            hs = dispersion.hessian_lam_rz(r, z, kappa, SIGMA)
            ho = dispersion.hessian_lam_rz(r, z, kappa, OMEGA)
            rows.append(
                (float(r), float(z), float(sig), float(om),
                 float(np.linalg.det(hs)), float(np.linalg.det(ho)))
            )
    return ["r", "z", "sigma", "omega", "det_hess_sigma", "det_hess_omega"], rows, EXIT_OK


def _random_state(grid, params, rng) -> modes.StateW:
    n = grid.n
    kx, ky, kz = grid.wavenumbers()
    damp = np.exp(-0.05 * (kx**2 + ky**2 + kz**2))
    fields = []
    for _ in range(4):
        f = rng.standard_normal((n, n, n))
        fields.append(grid.to_spectral(grid.to_physical_real(grid.to_spectral(f) * damp)))
    w = modes.StateW(grid, fields[0], np.stack(fields[1:]))
    return w


def _cmd_transform_check(config, rng, threads):
    n = int(config.get("n", 32))
    box_len = float(config.get("box_len", 7.0))
    params = PhysParams(c=float(config.get("c", 1.0)), eps=float(config.get("eps", 1.0)),
                        alpha=float(config.get("alpha", 0.5)))
    n_fields = int(config.get("fields", 4))
    grid = build_grid(n, box_len, params.kappa)
    rows = []
    for i in range(n_fields):
        w = _random_state(grid, params, rng)
        m = modes.to_modes(w, params)
        back = modes.from_modes(m, params)
        wn = norm(grid, [w.rho, *w.u], "l2")
        rows.append((i, "round_trip_rel",
                     float(norm(grid, [back.rho - w.rho, *(back.u - w.u)], "l2") / wn), 1e-10))
        rows.append((i, "isometry_ratio_minus_2",
                     float(wn / norm(grid, list(m.data), "l2") - 2.0), 1e-10))
        total = modes.StateW.zero(grid)
        for b in modes.BRANCHES:
            pb = modes.project_mode(w, b, params)
            total.rho += pb.rho
            total.u += pb.u
        rows.append((i, "projection_completeness_rel",
                     float(norm(grid, [total.rho - w.rho, *(total.u - w.u)], "l2") / wn), 1e-10))
    ok = all(abs(v) <= tol for _, _, v, tol in rows)
    cols = ["field", "check", "value", "tol"]
    return cols, rows, EXIT_OK if ok else EXIT_NUMERICAL


def _decay_data(grid, cell) -> np.ndarray:
    kind = cell.get("data", {}).get("kind", "gaussian_rz")
    d = cell.get("data", {})
    kx, ky, kz = grid.wavenumbers()
    r = np.sqrt(kx**2 + ky**2)
    z = kz + np.zeros_like(r)
    if kind == "gaussian_rz":
        r0, z0 = float(d.get("r0", 2.0)), float(d.get("z0", 0.0))
        sg = float(d.get("sigma", 0.3))
        return np.exp(-((r - r0) ** 2 + (z - z0) ** 2) / (2 * sg**2)).astype(complex)
    if kind == "pole_gaussian":
        sg = float(d.get("sigma", 0.3))
        zp = float(d["pole"])
        return np.exp(-(r**2 + (z - zp) ** 2) / (2 * sg**2)).astype(complex)
    if kind == "ones":
        return np.ones_like(r, dtype=complex)
    raise ConfigError(f"unknown decay data kind {kind!r}")


def _cmd_decay(config, rng, threads):
    cells = config.get("cells")
    if not cells:
        raise ConfigError("decay config needs a non-empty 'cells' list")

    def run(cell):
        params = PhysParams(c=float(cell.get("c", 1.0)), eps=float(cell.get("eps", 1.0)))
        grid = build_grid(int(cell["n"]), float(cell["box_len"]), params.kappa)
        branch = _parse_branch(cell.get("branch", "omega"))
        loc = _parse_loc(cell["loc"])
        tspec = cell["times"]
        times = np.geomspace(float(tspec["min"]), float(tspec["max"]), int(tspec["num"]))
        rep = propagator.measure_decay(
            grid, _decay_data(grid, cell), loc, branch, params,
            times, tuple(cell["fit_window"]),
        )
        return cell.get("name", loc.label()), params, rep

    results = _map_cells(run, cells, threads)
    rows = []
    for name, params, rep in results:
        for t, s in zip(rep.times, rep.sup_norms):
            rows.append(
                (name, str(rep.branch), rep.loc.label(), params.kappa, params.c,
                 float(t), float(s), rep.fitted_exponent, rep.fitted_coeff)
            )
    cols = ["cell", "branch", "loc", "kappa", "c", "t", "sup_norm",
            "fitted_exponent", "fitted_coeff"]
    return cols, rows, EXIT_OK


def _cmd_strichartz(config, rng, threads):
    cells = config.get("cells")
    if not cells:
        raise ConfigError("strichartz config needs a non-empty 'cells' list")

    def run(cell):
        params = PhysParams(c=float(cell.get("c", 1.0)), eps=float(cell.get("eps", 1.0)))
        grid = build_grid(int(cell["n"]), float(cell["box_len"]), params.kappa)
        branch = _parse_branch(cell.get("branch", "omega"))
        loc = _parse_loc(cell["loc"])
        kx, ky, kz = grid.wavenumbers()
        a = np.sqrt(kx**2 + ky**2 + kz**2)
        fh = np.exp(-((a / (2.0 ** loc.k * 2.5)) ** 2)).astype(complex)
        out = []
        for T in cell["horizons"]:
            rep = propagator.strichartz_norm(
                grid, fh, loc, branch, params,
                q=float(cell.get("q", 4.0)), r=float(cell.get("r", 4.0)),
                T=float(T), nt=int(cell.get("nt", 64)),
            )
            out.append((cell.get("name", loc.label()), params, rep))
        return out

    rows = []
    for result in _map_cells(run, cells, threads):
        for name, params, rep in result:
            rows.append(
                (name, str(rep.branch), rep.loc.label(), params.kappa, params.c,
                 rep.q, rep.r, rep.horizon, rep.mixed_norm, rep.bound, rep.ratio)
            )
    cols = ["cell", "branch", "loc", "kappa", "c", "q", "r", "T",
            "mixed_norm", "bound", "ratio"]
    return cols, rows, EXIT_OK


def _cmd_kernel(config, rng, threads):
    loc = _parse_loc(config["loc"])
    branch = _parse_branch(config.get("branch", "omega"))
    kappa = float(config.get("kappa", 1.0))
    t = float(config.get("t", 0.0))
    points = config.get("points", [[0.0, 0.0, 0.0]])
    rows = []
    for x in points:
        val = propagator.kernel_quadrature(loc, branch, kappa, t, np.asarray(x, float))
        rows.append((float(x[0]), float(x[1]), float(x[2]), val.real, val.imag, abs(val)))
    return ["x1", "x2", "x3", "re", "im", "abs"], rows, EXIT_OK


def _cmd_optimal_decay(config, rng, threads):
    params = PhysParams(c=float(config.get("c", 1.0)), eps=float(config.get("eps", 1.0)))
    branch = _parse_branch(config.get("branch", "sigma"))
    times = config.get("times", list(range(20, 201, 20)))
    rows = []
    all_hold = True
    for t in times:
        res = propagator.optimal_decay(params, float(t), branch)
        rows.append((res.t, res.value, res.lower_bound, int(res.holds)))
        all_hold &= res.holds
    cols = ["t", "value", "lower_bound", "holds"]
    return cols, rows, EXIT_OK if all_hold else EXIT_NUMERICAL


def _solver_config(config) -> tuple[modes.StateW, solver.SolverConfig]:
    params = PhysParams(c=float(config.get("c", 1.0)), eps=float(config.get("eps", 1.0)),
                        alpha=float(config.get("alpha", 0.5)))
    grid = build_grid(int(config.get("n", 32)), float(config.get("box_len", 7.0)))
    w0 = solver.compression_pulse(
        grid,
        amplitude=float(config.get("amplitude", 0.5)),
        width=float(config.get("width", 0.9)),
        velocity_scale=float(config.get("velocity_scale", 0.0)),
    )
    cfg = solver.SolverConfig(
        params=params,
        grid=grid,
        dt=None if config.get("dt") is None else float(config["dt"]),
        t_end=float(config.get("t_end", 1.0)),
        dealias=bool(config.get("dealias", True)),
        s_monitor=float(config.get("s_monitor", 3.0)),
        blowup_threshold=None if config.get("blowup_threshold") is None
        else float(config["blowup_threshold"]),
        cfl_safety=float(config.get("cfl_safety", 1.0)),
        sample_every=int(config.get("sample_every", 1)),
    )
    return w0, cfg


def _cmd_simulate(config, rng, threads):
    w0, cfg = _solver_config(config)
    traj = solver.simulate(w0, cfg)
    rows = [
        (float(t), float(h), float(g), float(b), float(e), traj.termination)
        for t, h, g, b, e in zip(
            traj.times, traj.hs_norms, traj.grad_linf, traj.b_integral, traj.energy
        )
    ]
    cols = ["t", "hs_norm", "grad_linf", "b_integral", "energy", "termination"]
    code = EXIT_NUMERICAL if traj.termination == "nan" else EXIT_OK
    return cols, rows, code


def _cmd_lifespan_sweep(config, rng, threads):
    w0, cfg = _solver_config(config)
    eps_list = [float("inf") if e in ("inf", None) else float(e) for e in config["eps_list"]]
    rows_raw = solver.lifespan_sweep(w0, cfg.params, eps_list, cfg, q=float(config.get("q", 3.0)))
    rows = [
        (r["eps"], r["t_star"], r["termination"], int(r["lower_bound_only"]),
         r["predicted_scaling"])
        for r in rows_raw
    ]
    cols = ["eps", "t_star", "termination", "lower_bound_only", "predicted_scaling"]
    return cols, rows, EXIT_OK


def _cmd_selftest(config, rng, threads):
    n = int(config.get("n", 16))
    rows = []

    def check(name, value, tol):
        rows.append((name, float(value), float(tol), int(abs(value) <= tol)))

    # partition of unity of the dyadic cutoffs
    x = np.concatenate([rng.uniform(-64, 64, 2000), rng.uniform(-0.5, 0.5, 500)])
    total = localization.psi(x) + sum(localization.phi(x / 2.0**j) for j in range(0, 12))
    mask = np.abs(x) <= 2.0**11
    check("cutoff_partition_of_unity", np.abs(total[mask] - 1.0).max(), 1e-12)
    # Plancherel and round trip
    params = PhysParams(c=1.0, eps=1.0)
    grid = build_grid(n, 7.0, params.kappa)
    f = rng.standard_normal((n, n, n))
    fh = grid.to_spectral(f)
    check("fft_round_trip", np.abs(grid.to_physical(fh) - f).max(), 1e-12 * max(1, np.abs(f).max()))
    check(
        "plancherel_rel",
        norm(grid, fh, "l2") / norm(grid, f, "l2", spectral=False) - 1.0,
        1e-12,
    )
    # dispersion product identity and hessian determinant
    r = rng.uniform(0.3, 3.0, 200)
    z = rng.uniform(-3.0, 3.0, 200)
    sig = dispersion.lam_rz(r, z, 1.0, SIGMA)
    om = dispersion.lam_rz(r, z, 1.0, OMEGA)
    check("sigma_omega_product", np.abs(sig * om - z).max(), 1e-11 * max(1, np.abs(z).max()))
    h = dispersion.hessian_lam_rz(r, z, 1.0, SIGMA)
    d1, d2 = dispersion.distances_rz(r, z, 1.0)
    want = r**2 * sig / (d1 * d2) ** 4
    check("hessian_det_identity", np.abs(np.linalg.det(h) - want).max() / np.abs(want).max(), 1e-9)
    # mode transform round trip and isometry
    w = _random_state(grid, params, rng)
    m = modes.to_modes(w, params)
    back = modes.from_modes(m, params)
    wn = norm(grid, [w.rho, *w.u], "l2")
    check("mode_round_trip_rel", norm(grid, [back.rho - w.rho, *(back.u - w.u)], "l2") / wn, 1e-10)
    check("mode_isometry", wn / norm(grid, list(m.data), "l2") - 2.0, 1e-10)
    ok = all(bool(p) for _, _, _, p in rows)
    return ["check", "value", "tol", "passed"], rows, EXIT_OK if ok else EXIT_NUMERICAL


_COMMANDS = {
    "dispersion-table": _cmd_dispersion_table,
    "transform-check": _cmd_transform_check,
    "decay": _cmd_decay,
    "strichartz": _cmd_strichartz,
    "kernel": _cmd_kernel,
    "optimal-decay": _cmd_optimal_decay,
    "simulate": _cmd_simulate,
    "lifespan-sweep": _cmd_lifespan_sweep,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rotcomp", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="path to the JSON config file")
    parser.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel sweep cells (affects speed only, never values)")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized test data")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        if args.config is None:
            config = {}
        else:
            with open(args.config) as fh:
                config = json.load(fh)
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        rng = np.random.default_rng(args.seed)
        cols, rows, code = _COMMANDS[args.subcommand](config, rng, max(1, args.threads))
        full_config = dict(config)
        full_config["_seed"] = args.seed
        _write_csv(args.out, args.subcommand, full_config, cols, rows)
        return code
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"rotcomp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (propagator.QuadratureError, FloatingPointError) as exc:
        print(f"rotcomp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"rotcomp: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
