"""Command-line front end: ``rlscatter {solve,scan,bound,validate,kernels} --config run.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(exceptional value, solver divergence), 4 oracle-suite failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bundle, lattice
from .config import RunConfig, check_bound_range, check_scattering_energies, load_config
from .errors import ConfigError, ExceptionalValue, NoRootInBracket, SolverDivergence

log = logging.getLogger("rlscatter")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ORACLE = 0, 2, 3, 4
THREADS_ENV = "RLSCATTER_THREADS"

_F_CONVENTION = ("f(w, w') is the coefficient of exp(i k R)/R in the far field; "
                 "columns out/in index the mesh directions in directions.csv")
_UNITS = "natural units: hbar = 1; Schrodinger operator -Delta + V; Dirac mass m, energy lambda"


# --- helpers ---------------------------------------------------------------


def resolve_threads(flag: int | None) -> int:
    """``--threads`` if given, else the environment variable, else 1."""
    if flag is not None:
        n = flag
    else:
        env = os.environ.get(THREADS_ENV)
        try:
            n = int(env) if env else 1
        except ValueError as exc:
            raise ConfigError("threads", f"{THREADS_ENV}={env!r} is not an integer") from exc
    if n < 1:
        raise ConfigError("threads", "must be at least 1")
    return n


def _map(fn, items, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _directions_table(out: Path, mesh) -> None:
    d = mesh.directions
    bundle.write_table(out / "directions.csv",
                       {"index": np.arange(mesh.size), "x": d[:, 0], "y": d[:, 1], "z": d[:, 2],
                        "weight": mesh.weights},
                       comments=[f"Lebedev mesh of polynomial order {mesh.order}; weights sum to 4 pi"])


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


# --- solve -----------------------------------------------------------------


def _solve_schrodinger(cfg: RunConfig, problem, mesh, lam: float, out: Path, idx: int) -> dict:
    from .partial_waves import partial_wave_oracle
    from .schrodinger import born_amplitude, scatter

    res = scatter(problem, lam, mesh)
    m = mesh.size
    oi, ii = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    bundle.write_table(out / f"amplitude_{idx:03d}.csv",
                       {"out": oi.ravel(), "in": ii.ravel(), "f": res.f.ravel()},
                       comments=[_UNITS, f"lambda = {lam!r}", _F_CONVENTION])
    bundle.write_table(out / f"eigenvalues_{idx:03d}.csv",
                       {"j": np.arange(res.block.eigenvalues.size), "mu": res.block.eigenvalues},
                       comments=[_UNITS, f"lambda = {lam!r}",
                                 "eigenvalues of the weight-split S = I + (i sqrt(lambda)/2 pi) D^1/2 f D^1/2"])
    rec = {"energy": lam, "status": "ok", "sigma_direct": res.sigma_direct, "sigma_ergodic": res.sigma_ergodic,
           "ergodic_relative_gap": abs(res.sigma_direct - res.sigma_ergodic) / max(res.sigma_direct, 1e-300),
           "unitarity_defect": res.block.unitarity_defect(), "nodes": int(problem.grid.size)}
    pot = problem.potential
    k = np.sqrt(lam)
    if cfg.oracles.partial_waves and getattr(pot, "is_radial", False):
        pw = partial_wave_oracle(pot, lam, l_max=12)
        ref = pw.amplitude(mesh.directions @ mesh.directions.T)
        rec["partial_wave_f_error"] = float(np.max(np.abs(res.f - ref)) / np.max(np.abs(ref)))
        rec["sigma_partial_wave"] = pw.sigma_double
    if cfg.oracles.born and hasattr(pot, "fourier"):
        fb = born_amplitude(pot, k * mesh.directions[:, None, :], k * mesh.directions[None, :, :])
        rec["born_relative_deviation"] = _rel(res.f, fb)
    return rec


def _solve_dirac(cfg: RunConfig, problem, mesh, lam: float, out: Path, idx: int) -> dict:
    from .dirac import (EnergyShell, dirac_amplitude, dirac_cross_sections, far_field_check,
                        gamma_consistency, on_shell_t_dirac, solve_rls)
    from .errors import DegenerateFit

    sol = solve_rls(problem, lam, mesh.directions)
    amps = dirac_amplitude(sol, mesh)
    shell = EnergyShell(problem.m, lam)
    on = on_shell_t_dirac(shell, amps)
    cs = dirac_cross_sections(on)
    m = mesh.size
    oi, si, ii, ni = np.meshgrid(np.arange(m), np.arange(2), np.arange(m), np.arange(2), indexing="ij")
    chans = np.asarray(amps.channels)
    bundle.write_table(out / f"amplitude_{idx:03d}.csv",
                       {"out": oi.ravel(), "s": chans[si.ravel()], "in": ii.ravel(), "n": chans[ni.ravel()],
                        "F": amps.F.ravel(), "T": amps.T.ravel()},
                       comments=[_UNITS, f"lambda = {lam!r}, m = {problem.m!r}",
                                 "F = g_s(q)^* f(w, w', n) projected amplitude; T on-shell kernel; "
                                 "q = |kappa| w, k = |kappa| w'"])
    bundle.write_table(out / f"eigenvalues_{idx:03d}.csv",
                       {"j": np.arange(on.block.eigenvalues.size), "mu": on.block.eigenvalues},
                       comments=[_UNITS, f"lambda = {lam!r}",
                                 "eigenvalues of S_p = I - i a D^1/2 T_p D^1/2, a = 2 pi |lambda| kappa"])
    rec = {"energy": lam, "status": "ok", "block": amps.block_index,
           "sigma_direct": cs.trace_direct, "sigma_ergodic": cs.trace_ergodic,
           "sigma_ergodic_reference_constant": cs.trace_ergodic_reference,
           "ergodic_relative_gap": abs(cs.trace_direct - cs.trace_ergodic) / max(cs.trace_direct, 1e-300),
           "sigma_matrix_direct": cs.direct, "unitarity_defect": on.block.unitarity_defect(),
           "nodes": int(problem.grid.size)}
    if cfg.oracles.gamma:
        try:
            fit = gamma_consistency(amps.F, amps.T, lam)
            rec["gamma_fit"] = {"constant": fit.constant, "correlation": fit.correlation,
                                "residual": fit.residual, "reference": fit.reference_value}
        except DegenerateFit as exc:
            rec["gamma_fit"] = {"error": str(exc)}
    if cfg.oracles.far_field:
        kap = shell.kappa
        rep = far_field_check(sol, mesh.directions[: min(6, m)], [10.0 / kap, 20.0 / kap, 40.0 / kap])
        rec["far_field"] = {"radii": rep.radii, "rho": rep.rho, "decreasing": rep.decreasing,
                            "extraction_error": rep.extraction_error}
    return rec


def cmd_solve(cfg: RunConfig, out: Path, threads: int) -> tuple[int, dict]:
    from .grid import AngularMesh

    check_scattering_energies(cfg)
    mesh = AngularMesh.lebedev(cfg.mesh_order)
    problem = cfg.make_problem()
    _directions_table(out, mesh)
    solver = _solve_schrodinger if cfg.problem == "schrodinger" else _solve_dirac

    def one(item):
        idx, lam = item
        log.info("solve lambda=%g", lam)
        try:
            return solver(cfg, problem, mesh, lam, out, idx)
        except (ExceptionalValue, SolverDivergence) as exc:
            log.warning("lambda=%g failed: %s", lam, exc)
            return {"energy": lam, "status": "failed", "reason": f"{type(exc).__name__}: {exc}"}

    records = _map(one, list(enumerate(cfg.energies)), threads)
    keys = ["sigma_direct", "sigma_ergodic", "ergodic_relative_gap", "unitarity_defect"]
    bundle.write_table(out / "energies.csv",
                       {"index": np.arange(len(records)), "energy": [r["energy"] for r in records],
                        "failed": [int(r["status"] != "ok") for r in records],
                        **{k: [r.get(k, np.nan) for r in records] for k in keys}},
                       comments=[_UNITS, "sigma integrates |f|^2 over outgoing and incident directions; "
                                 "failed = 1 marks an energy whose solve raised (values are nan)"])
    failed = any(r["status"] != "ok" for r in records)
    return (EXIT_NUMERICAL if failed else EXIT_OK), {"records": records}


# --- scan / bound ----------------------------------------------------------


def cmd_scan(cfg: RunConfig, out: Path, threads: int) -> tuple[int, dict]:
    from .spectral import exceptional_scan, write_scan

    check_scattering_energies(cfg)
    problem = cfg.make_problem()
    res = exceptional_scan(cfg.energies, problem, cfg.scan.threshold, cfg.scan.report_threshold, workers=threads)
    write_scan(out / "scan.txt", res)
    return EXIT_OK, {"flagged": res.flagged, "flagged_loose": res.flagged_loose, "between": res.between,
                     "near_flagged": res.energies[res.near_flagged], "min_relative": float(np.min(res.relative))}


def cmd_bound(cfg: RunConfig, out: Path, threads: int) -> tuple[int, dict]:
    from .partial_waves import bound_states_radial
    from .spectral import bound_state_search, extrapolated_bound_states

    rng = check_bound_range(cfg)
    if cfg.bound.richardson:
        states = extrapolated_bound_states(cfg.make_problem, cfg.grid.h, rng, n_scan=cfg.bound.n_scan)
    else:
        states = bound_state_search(cfg.make_problem(), rng, n_scan=cfg.bound.n_scan)
    bundle.write_table(out / "bound.csv",
                       {"energy": [s.energy for s in states], "multiplicity": [s.multiplicity for s in states]},
                       comments=[_UNITS, "energies where an eigenvalue of K crosses -1"])
    summary = {"bound_states": [{"energy": s.energy, "multiplicity": s.multiplicity} for s in states]}
    pot = cfg.potential_object()
    if cfg.problem == "schrodinger" and cfg.oracles.partial_waves and getattr(pot, "is_radial", False):
        radial = bound_states_radial(pot, l_max=3)
        summary["radial_oracle"] = {str(k): v for k, v in radial.items()}
    return EXIT_OK, summary


# --- validate / kernels ------------------------------------------------------


def _check(name: str, value: float, tol: float, passed: bool | None = None) -> dict:
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": value, "tolerance": tol, "passed": ok}


def _algebra_checks(seed: int) -> list:
    from .algebra import ALPHA, BETA, I4, dirac_eigensystem, dirac_h0, resolvent_free

    rng = np.random.default_rng(seed)
    mats = list(ALPHA) + [BETA]
    anti = max(np.max(np.abs(a @ b + b @ a - (2 * I4 if i == j else 0)))
               for i, a in enumerate(mats) for j, b in enumerate(mats))
    q = rng.normal(size=(200, 3))
    es = dirac_eigensystem(q, 1.0)
    h0 = dirac_h0(q, 1.0)
    eig = np.max(np.abs(h0 @ es.z0 - es.z0 @ es.d))
    mu = rng.normal(size=200) + 1j * rng.uniform(0.1, 2.0, 200)
    res = max(np.max(np.abs(resolvent_free(qq, 1.0, z) @ (dirac_h0(qq, 1.0) - z * I4) - I4)) for qq, z in zip(q, mu))
    return [_check("algebra.anticommutators", float(anti), 1e-14), _check("algebra.eigen_residual", float(eig), 1e-11),
            _check("algebra.resolvent_identity", float(res), 1e-10)]


def cmd_validate(cfg: RunConfig, out: Path, threads: int) -> tuple[int, dict]:
    check_scattering_energies(cfg)
    checks = _algebra_checks(cfg.seed)
    code, solved = cmd_solve(cfg, out, threads)
    for rec in solved["records"]:
        tag = f"lambda={rec['energy']:g}"
        if rec["status"] != "ok":
            checks.append({"name": f"{tag}.solve", "value": float("nan"), "tolerance": 0.0, "passed": False,
                           "reason": rec["reason"]})
            continue
        checks.append(_check(f"{tag}.ergodic_identity", rec["ergodic_relative_gap"], 1e-2))
        checks.append(_check(f"{tag}.unitarity", rec["unitarity_defect"], 1e-2))
        if "partial_wave_f_error" in rec:
            checks.append(_check(f"{tag}.partial_wave_amplitude", rec["partial_wave_f_error"], 5e-2))
        if "born_relative_deviation" in rec:
            checks.append(_check(f"{tag}.born_amplitude", rec["born_relative_deviation"], 2e-2))
        fit = rec.get("gamma_fit")
        if fit and "correlation" in fit:
            checks.append(_check(f"{tag}.gamma_correlation", 1.0 - fit["correlation"], 1e-3))
        ff = rec.get("far_field")
        if ff:
            checks.append(_check(f"{tag}.far_field_decreasing", float(ff["rho"][-1]), 0.0, ff["decreasing"]))
            checks.append(_check(f"{tag}.far_field_extraction", ff["extraction_error"], 5e-2))
    report = {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
    bundle.write_json(out / "validate.json", report)
    for c in checks:
        log.info("%s %s value=%.3e tol=%.1e", "PASS" if c["passed"] else "FAIL", c["name"], c["value"], c["tolerance"])
    if code == EXIT_NUMERICAL:
        return code, {"validate": report, **solved}
    return (EXIT_OK if report["all_passed"] else EXIT_ORACLE), {"validate": report, **solved}


def cmd_kernels(cfg: RunConfig, out: Path, threads: int) -> tuple[int, dict]:
    from .oracles import kernel_triangle

    m = cfg.mass if cfg.mass is not None else 1.0
    rep = kernel_triangle(m=m, seed=cfg.seed)
    cols = {"x": rep.points[:, 0], "y": rep.points[:, 1], "z": rep.points[:, 2],
            "closed_vs_convolution": rep.closed_vs_conv}
    for n, row in zip(rep.grids, rep.closed_vs_fourier):
        cols[f"closed_vs_fourier_{n}"] = row
    bundle.write_table(out / "kernels.csv", cols,
                       comments=[f"relative errors of the closed-form resolvent kernel at mu = {rep.mu!r}, m = {m!r}",
                                 "fourier columns: FFT grid size n on a periodic box of side 24"])
    errs = rep.max_errors()
    worst = max(errs["closed_vs_conv"], *errs["closed_vs_fourier"], *errs["conv_vs_fourier"])
    passed = worst <= 1e-2 and rep.improving
    return (EXIT_OK if passed else EXIT_ORACLE), {"errors": errs, "improving": rep.improving, "passed": passed}


COMMANDS = {"solve": cmd_solve, "scan": cmd_scan, "bound": cmd_bound, "validate": cmd_validate,
            "kernels": cmd_kernels}


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rlscatter", description="Lippmann-Schwinger scattering toolkit")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config's 'output')")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--verbose", action="store_true")
    return p


def run(command: str, cfg: RunConfig, out: Path, threads: int) -> int:
    """Execute one subcommand and persist its bundle; returns the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    os.environ[THREADS_ENV] = str(threads)
    lattice.configure_solver(cfg.solver.gmres_tol, cfg.solver.gmres_maxiter)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        code, body = COMMANDS[command](cfg, out, threads)
    except (ExceptionalValue, SolverDivergence, NoRootInBracket) as exc:
        code, body = EXIT_NUMERICAL, {"error": f"{type(exc).__name__}: {exc}"}
    summary = {"command": command, "exit_code": code, "config": cfg.to_dict(), **body}
    bundle.write_json(out / "summary.json", summary)
    bundle.write_json(out / "metadata.json", {
        "started": started.isoformat(), "elapsed_seconds": time.perf_counter() - t0, "threads": threads,
        "versions": bundle.environment_info(), "argv": sys.argv,
    })
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.output
        if out is None:
            raise ConfigError("output", "give --out or an 'output' entry in the config")
        threads = resolve_threads(args.threads)
        if command_needs_energies(args.command):
            check_scattering_energies(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(args.command, cfg, Path(out), threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def command_needs_energies(command: str) -> bool:
    return command in ("solve", "scan", "validate")


if __name__ == "__main__":
    sys.exit(main())
