"""Command-line runner: verification suites, sweeps, reports, run manifests.

Everything a run emits is deterministic in (config, seed): CSV tables, JSON
reports, rendered figures, and the manifest listing their hashes.  Wall-clock
timings go to a sidecar file that is excluded from the manifest inventory so
that repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .beam import (
    Interval,
    Quadrature,
    characteristic_residual,
    clamped_basis,
    eval_mode,
    mode_matrix,
)
from .config import ConfigError, RunConfig, config_hash, parse_config, serialize_config
from .energy import (
    energy_estimate_check,
    ensemble_energy,
    energy_series,
    fourth_order_boundedness,
    ito_identity_residual,
)
from .estimates import (
    ManufacturedSolutionSpec,
    random_modal_corpus,
    verify_carleman,
    verify_observability,
    verify_revised_carleman,
)
from .identity import (
    audit_coefficients,
    boundary_term_check,
    integrated_balance,
    pointwise_identity_residual,
)
from .manufactured import identity_corpus, solution_corpus
from .report import (
    bounds_figure,
    energy_figure,
    modes_figure,
    observability_figure,
    sha256_file,
    sweep_figure,
    write_json,
    write_text,
)
from .sde import Forcing, SimulationConfig, simulate_ensemble, trajectory_csv
from .weights import (
    Cutoff,
    WeightField,
    coefficient_lower_bounds,
    coefficient_table_csv,
)

SUITES = ("eigen", "energy", "identity", "carleman", "revised", "observability")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict
    files: list


class _Ctx:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.interval = Interval(cfg.a, cfg.b)
        self.quad = Quadrature.gauss_legendre(self.interval, cfg.quad_panels, cfg.quad_order)
        self.modes = clamped_basis(cfg.modes, self.interval, self.quad)
        self.lam_vec = np.array([m.lam for m in self.modes])
        self.tag = config_hash(cfg)[:8]

    def mode_field(self, k: int, amplitude: float = 1.0):
        mode = self.modes[k]

        def field(t, x):
            return amplitude * np.broadcast_to(
                eval_mode(mode, x, 0), np.broadcast_shapes(np.shape(t), np.shape(x))
            )

        return field

    def unit_modal(self, k: int) -> np.ndarray:
        e = np.zeros(self.cfg.modes)
        e[k] = 1.0
        return e


def _load_golden():
    try:
        from importlib.resources import files

        text = files("beamobs").joinpath("goldens/default.json").read_text()
        return json.loads(text)
    except (FileNotFoundError, ModuleNotFoundError, OSError):
        return None


def _golden_check(golden, cfg_hash: str, section: str, key: str, value, tol: float):
    """Compare a run constant against the committed golden when comparable."""
    if golden is None:
        return {"status": "absent", "value": value}
    if golden.get("config_hash") != cfg_hash:
        return {"status": "config-mismatch", "value": value}
    ref = golden.get(section, {}).get(key)
    if ref is None:
        return {"status": "absent", "value": value}
    ok = abs(value - ref) <= tol * max(1.0, abs(ref))
    return {"status": "match" if ok else "MISMATCH", "value": value, "golden": ref}


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------

def suite_eigen(ctx: _Ctx, outdir: str) -> SuiteResult:
    cfg = ctx.cfg
    quad, modes = ctx.quad, ctx.modes
    V = mode_matrix(modes, quad.nodes, 0)
    gram = (V * quad.weights) @ V.T
    orth_err = float(np.abs(gram - np.eye(len(modes))).max())

    eig_res = []
    bnd_res = []
    for m in modes:
        r = eval_mode(m, quad.nodes, 4) - m.lam * eval_mode(m, quad.nodes, 0)
        eig_res.append(float(np.sqrt(quad.integrate(r**2))) / m.lam)
        mx = float(np.abs(eval_mode(m, quad.nodes, 0)).max())
        worst = max(
            abs(float(eval_mode(m, xb, o)))
            for xb in (ctx.interval.a, ctx.interval.b)
            for o in (0, 1)
        )
        bnd_res.append(worst / mx)

    # independent oracle for the first root: plain bisection over (pi, 2pi)/L
    L = ctx.interval.length
    lo, hi = np.pi / L, 2 * np.pi / L
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if characteristic_residual(lo, L) * characteristic_residual(mid, L) <= 0:
            hi = mid
        else:
            lo = mid
    oracle = 0.5 * (lo + hi)
    mu1_err = abs(modes[0].mu - oracle)

    lines = ["k,mu,lambda,eigenrelation_residual,boundary_residual"]
    for m, er, br in zip(modes, eig_res, bnd_res):
        lines.append(",".join(format(v, ".17g") for v in (m.k, m.mu, m.lam, er, br)))
    files = [
        write_text(os.path.join(outdir, f"eigen_{ctx.tag}.csv"), "\n".join(lines) + "\n"),
        modes_figure(os.path.join(outdir, f"modes_{ctx.tag}.png"), modes),
    ]
    passed = orth_err < 1e-8 and max(eig_res) < 1e-6 and mu1_err < 1e-6 and max(bnd_res) < 1e-8
    return SuiteResult(
        "eigen",
        passed,
        {
            "orthonormality_error": orth_err,
            "max_eigenrelation_residual": max(eig_res),
            "max_boundary_residual": max(bnd_res),
            "mu1": modes[0].mu,
            "mu1_oracle_gap": mu1_err,
        },
        files,
    )


def suite_energy(ctx: _Ctx, outdir: str, dump_trajectory: bool = False) -> SuiteResult:
    cfg = ctx.cfg
    e1 = ctx.unit_modal(0)
    zeros = np.zeros(cfg.modes)

    # conservation with no forcing
    cfg1 = SimulationConfig(ctx.interval, cfg.horizon, cfg.modes, cfg.steps, cfg.seed, 2)
    ens0 = simulate_ensemble(cfg1, Forcing.none(), (e1, zeros), modes=ctx.modes, quad=ctx.quad)
    E0 = energy_series(ens0.trial(0), ctx.lam_vec)
    drift = float(np.abs(E0 - E0[0]).max() / E0[0])

    # deterministic forced balance residual halves by four with the step
    def forced_residual(steps: int) -> float:
        cfg_h = SimulationConfig(ctx.interval, cfg.horizon, cfg.modes, steps, cfg.seed, 2)
        forcing = Forcing(drift_modal=lambda t: e1 * np.sin(t))
        ens = simulate_ensemble(cfg_h, forcing, (e1, zeros), modes=ctx.modes, quad=ctx.quad)
        _, rmax = ito_identity_residual(ens.trial(0), ctx.modes, forcing, ctx.quad)
        return rmax

    r_coarse = forced_residual(cfg.steps // 4)
    r_fine = forced_residual(cfg.steps // 2)
    order_ratio = r_coarse / r_fine

    # mean growth under constant deterministic noise from rest
    gforce = Forcing(noise=ctx.mode_field(0))
    cfgN = SimulationConfig(ctx.interval, cfg.horizon, cfg.modes, cfg.steps, cfg.seed, cfg.trials)
    ensg = simulate_ensemble(cfgN, gforce, (zeros, zeros), modes=ctx.modes, quad=ctx.quad)
    record = ensemble_energy(ensg, ctx.lam_vec, theory=ensg.t)
    idx = np.linspace(1, ensg.t.size - 1, 9).round().astype(int)
    zscores = np.abs(record.mean[idx] - record.theory[idx]) / np.maximum(record.stderr[idx], 1e-300)
    mean_law_ok = bool((zscores <= 3.0).all())

    # two-way growth-estimate constants and no-blow-up of the stiff norm
    chk_cons = energy_estimate_check(ens0, ctx.lam_vec)
    chk_noise = energy_estimate_check(ensg, ctx.lam_vec, forcing_sq_norm=cfg.horizon)
    h4 = fourth_order_boundedness(ensg, ctx.lam_vec)

    files = [
        write_text(os.path.join(outdir, f"energy_{ctx.tag}.csv"), record.csv()),
        energy_figure(os.path.join(outdir, f"energy_{ctx.tag}.png"), record),
    ]
    if dump_trajectory:
        files.append(write_text(
            os.path.join(outdir, f"trajectory_{ctx.tag}.csv"), trajectory_csv(ensg.trial(0))
        ))
    passed = (
        drift < 1e-8
        and 3.5 <= order_ratio <= 4.5
        and mean_law_ok
        and chk_cons.empirical_c <= 1.0 + 1e-6
        and h4["finite"]
    )
    return SuiteResult(
        "energy",
        passed,
        {
            "conservation_drift": drift,
            "forced_residual_order_ratio": order_ratio,
            "mean_law_max_z": float(zscores.max()),
            "two_way_constant_conservative": chk_cons.empirical_c,
            "two_way_constant_noise": chk_noise.empirical_c,
            "fourth_order_norm": h4,
        },
        files,
    )


def suite_identity(ctx: _Ctx, outdir: str) -> SuiteResult:
    cfg = ctx.cfg
    T = cfg.horizon
    fields = identity_corpus(ctx.interval, T, count=5, seed=42)
    rng = np.random.default_rng(7)
    worst = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        w = WeightField(lam=lam, T=T)
        for f in fields:
            t = rng.uniform(0.0, T, size=100)
            x = rng.uniform(ctx.interval.a, ctx.interval.b, size=100)
            worst = max(worst, float(np.abs(pointwise_identity_residual(f, w, t, x)).max()))

    audit = audit_coefficients(ctx.interval, T, samples=1000)

    w = WeightField(lam=2.0, T=T)
    sol = solution_corpus(ctx.interval, T)[0]
    det_forcing = Forcing(drift=sol.forcing)
    cfg_det = SimulationConfig(ctx.interval, T, cfg.modes, cfg.steps, cfg.seed, 2)
    ens_det = simulate_ensemble(
        cfg_det, det_forcing, (np.zeros(cfg.modes), np.zeros(cfg.modes)),
        modes=ctx.modes, quad=ctx.quad,
    )
    det = integrated_balance(ens_det, ctx.modes, det_forcing, w, ctx.quad,
                             time_stride=cfg.time_stride)

    sto_forcing = Forcing(noise=ctx.mode_field(0))
    cfg_sto = SimulationConfig(ctx.interval, T, cfg.modes, cfg.steps, cfg.seed, cfg.trials)
    ens_sto = simulate_ensemble(
        cfg_sto, sto_forcing, (np.zeros(cfg.modes), np.zeros(cfg.modes)),
        modes=ctx.modes, quad=ctx.quad,
    )
    cut = Cutoff(epsilon=cfg.epsilon, T=T)
    sto = integrated_balance(ens_sto, ctx.modes, sto_forcing, w, ctx.quad,
                             cutoff=cut, time_stride=cfg.time_stride)
    bnd = boundary_term_check(ens_sto, ctx.modes, w, cutoff=cut)

    sto_ok = abs(sto.residual) <= 3.0 * sto.residual_stderr or abs(sto.normalized_residual) < 1e-6
    files = [
        write_json(os.path.join(outdir, f"audit_{ctx.tag}.json"), audit.to_jsonable()),
        write_json(os.path.join(outdir, f"balance_{ctx.tag}.json"), {
            "deterministic": det.to_jsonable(),
            "stochastic": sto.to_jsonable(),
            "boundary_check": {
                "value": bnd.value, "majorant": bnd.majorant,
                "empirical_c": bnd.empirical_c, "holds": bnd.holds,
            },
        }),
    ]
    passed = (
        worst < 1e-6
        and abs(det.normalized_residual) < 1e-5
        and sto_ok
        and bnd.holds
    )
    return SuiteResult(
        "identity",
        passed,
        {
            "pointwise_max_residual": worst,
            "deterministic_balance_residual": det.normalized_residual,
            "stochastic_balance_z": sto.residual / max(sto.residual_stderr, 1e-300),
            "audit_findings": list(audit.findings),
            "boundary_constant": bnd.empirical_c,
        },
        files,
    )


def suite_carleman(ctx: _Ctx, outdir: str, golden) -> SuiteResult:
    cfg = ctx.cfg
    T = cfg.horizon
    corpus = [
        ManufacturedSolutionSpec(field=f, amplitude=cfg.manufactured_amplitude, name=f"sol{i}")
        for i, f in enumerate(solution_corpus(ctx.interval, T, cfg.manufactured_count))
    ]
    rep = verify_carleman(corpus, cfg.lambda_grid, ctx.interval, T, ctx.quad)

    doubled = [
        ManufacturedSolutionSpec(field=s.field, amplitude=2.0 * s.amplitude, name=s.name)
        for s in corpus
    ]
    rep2 = verify_carleman(doubled, cfg.lambda_grid, ctx.interval, T, ctx.quad)
    scale_dev = max(
        abs(a.ratio - b.ratio)
        for a, b in zip(rep.rows, rep2.rows)
        if a.flag == "ok" and b.flag == "ok"
    )

    bounds = coefficient_lower_bounds(cfg.lambda_grid, ctx.interval, T)
    blines = ["lambda,min_h1_scaled,min_h2_scaled,min_h3_scaled,min_h4_scaled,min_h5_scaled,all_positive"]
    for lam, mins, ok in bounds.rows():
        blines.append(",".join([format(lam, ".17g")] + [format(v, ".17g") for v in mins] + [str(ok)]))
    table_csv = coefficient_table_csv(
        cfg.lambda_grid, np.linspace(0.0, T, 5), np.linspace(cfg.a, cfg.b, 5), T
    )

    gcheck = _golden_check(golden, config_hash(cfg), "carleman", "empirical_constant",
                           rep.empirical_constant, 1e-6)
    files = [
        write_text(os.path.join(outdir, f"carleman_{ctx.tag}.csv"), rep.csv()),
        write_json(os.path.join(outdir, f"carleman_{ctx.tag}.json"), rep.to_jsonable()),
        sweep_figure(os.path.join(outdir, f"carleman_{ctx.tag}.png"), rep),
        write_text(os.path.join(outdir, f"coefficient_bounds_{ctx.tag}.csv"), "\n".join(blines) + "\n"),
        bounds_figure(os.path.join(outdir, f"coefficient_bounds_{ctx.tag}.png"), bounds),
        write_text(os.path.join(outdir, f"coefficient_table_{ctx.tag}.csv"), table_csv),
    ]
    passed = rep.passed and scale_dev <= 1e-12 and gcheck["status"] != "MISMATCH"
    return SuiteResult(
        "carleman",
        passed,
        {
            "empirical_constant": rep.empirical_constant,
            "sweep_lambda0": rep.empirical_lambda0,
            "positivity_lambda0": bounds.threshold,
            "amplitude_scaling_deviation": scale_dev,
            "golden": gcheck,
        },
        files,
    )


def suite_revised(ctx: _Ctx, outdir: str, golden) -> SuiteResult:
    cfg = ctx.cfg
    T = cfg.horizon
    datum = random_modal_corpus(1, cfg.modes, seed=cfg.seed)[0]
    forcing = Forcing(noise=ctx.mode_field(0))
    sim = SimulationConfig(ctx.interval, T, cfg.modes, cfg.steps, cfg.seed, cfg.trials)
    rep = verify_revised_carleman(
        sim, forcing, (datum[0], datum[1]), ctx.modes, ctx.quad,
        epsilon=cfg.epsilon, lambdas=cfg.lambda_grid, time_stride=cfg.time_stride,
    )
    lam_probe = cfg.lambda_grid[len(cfg.lambda_grid) // 2]
    rep_half = verify_revised_carleman(
        sim, forcing, (datum[0], datum[1]), ctx.modes, ctx.quad,
        epsilon=cfg.epsilon / 2.0, lambdas=[lam_probe], time_stride=cfg.time_stride,
    )
    tc_full = next(r.extras["tail_coefficient"] for r in rep.rows if r.lam == lam_probe)
    tc_half = rep_half.rows[0].extras["tail_coefficient"]
    tail_factor = tc_half / tc_full

    gcheck = _golden_check(golden, config_hash(cfg), "revised", "empirical_constant",
                           rep.empirical_constant, 1e-6)
    files = [
        write_text(os.path.join(outdir, f"revised_{ctx.tag}.csv"), rep.csv()),
        write_json(os.path.join(outdir, f"revised_{ctx.tag}.json"), rep.to_jsonable()),
        sweep_figure(os.path.join(outdir, f"revised_{ctx.tag}.png"), rep),
    ]
    passed = rep.passed and abs(tail_factor - 16.0) < 1e-12 * 16.0 and gcheck["status"] != "MISMATCH"
    return SuiteResult(
        "revised",
        passed,
        {
            "empirical_constant": rep.empirical_constant,
            "lambda0": rep.empirical_lambda0,
            "tail_factor_eps_halved": tail_factor,
            "cutoff_c1": rep.metadata["cutoff_c1"],
            "cutoff_c2": rep.metadata["cutoff_c2"],
            "golden": gcheck,
        },
        files,
    )


def suite_observability(ctx: _Ctx, outdir: str, golden) -> SuiteResult:
    cfg = ctx.cfg
    data = random_modal_corpus(cfg.obs_corpus, cfg.modes, seed=cfg.seed)
    forcing = Forcing(noise=ctx.mode_field(0, amplitude=cfg.obs_noise_amplitude))
    sim = SimulationConfig(ctx.interval, cfg.horizon, cfg.modes, cfg.steps, cfg.seed, cfg.obs_trials)
    rep = verify_observability(data, sim, forcing, ctx.modes, ctx.quad,
                               recorded_lambda=max(cfg.lambda_grid))
    sim2 = SimulationConfig(ctx.interval, cfg.horizon, cfg.modes, cfg.steps, cfg.seed,
                            2 * cfg.obs_trials)
    rep2 = verify_observability(data, sim2, forcing, ctx.modes, ctx.quad,
                                recorded_lambda=max(cfg.lambda_grid))
    stability = abs(rep2.empirical_constant - rep.empirical_constant) / rep.empirical_constant
    boundary_positive = all(r["boundary_term"] > 0.0 for r in rep.rows if r["flag"] == "ok")

    gcheck = _golden_check(golden, config_hash(cfg), "observability", "empirical_constant",
                           rep.empirical_constant, 1e-6)
    files = [
        write_text(os.path.join(outdir, f"observability_{ctx.tag}.csv"), rep.csv()),
        write_json(os.path.join(outdir, f"observability_{ctx.tag}.json"), rep.to_jsonable()),
        observability_figure(os.path.join(outdir, f"observability_{ctx.tag}.png"), rep),
    ]
    passed = (
        rep.passed and boundary_positive and stability <= 0.10
        and gcheck["status"] != "MISMATCH"
    )
    return SuiteResult(
        "observability",
        passed,
        {
            "empirical_constant": rep.empirical_constant,
            "worst_datum": rep.worst_datum,
            "stability_rel_change": stability,
            "boundary_terms_positive": boundary_positive,
            "golden": gcheck,
        },
        files,
    )


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

def _run_suites(cfg: RunConfig, names, outdir: str, dump_trajectory: bool = False):
    ctx = _Ctx(cfg)
    golden = _load_golden()
    results = []
    timings = []
    for name in names:
        t0 = time.perf_counter()
        if name == "eigen":
            res = suite_eigen(ctx, outdir)
        elif name == "energy":
            res = suite_energy(ctx, outdir, dump_trajectory=dump_trajectory)
        elif name == "identity":
            res = suite_identity(ctx, outdir)
        elif name == "carleman":
            res = suite_carleman(ctx, outdir, golden)
        elif name == "revised":
            res = suite_revised(ctx, outdir, golden)
        elif name == "observability":
            res = suite_observability(ctx, outdir, golden)
        else:
            raise ValueError(f"unknown suite {name!r}")
        timings.append((name, time.perf_counter() - t0))
        results.append(res)
    return ctx, results, timings


def _write_manifest(cfg: RunConfig, outdir: str, results, timings) -> dict:
    summary_lines = [f"beamobs {__version__}  scenario={cfg.scenario}  seed={cfg.seed}"]
    for r in results:
        state = "PASS" if r.passed else "FAIL"
        summary_lines.append(f"[{state}] {r.name}")
        for k, v in r.details.items():
            summary_lines.append(f"    {k}: {v}")
    summary_path = write_text(os.path.join(outdir, "summary.txt"), "\n".join(summary_lines) + "\n")
    config_path = write_text(os.path.join(outdir, "config_resolved.ini"), serialize_config(cfg))

    inventory_files = sorted(
        {os.path.relpath(p, outdir) for r in results for p in r.files}
        | {os.path.relpath(summary_path, outdir), os.path.relpath(config_path, outdir)}
    )
    manifest = {
        "tool": "beamobs",
        "version": __version__,
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "suites": {
            r.name: {"passed": r.passed, "details": r.details,
                     "files": sorted(os.path.relpath(p, outdir) for p in r.files)}
            for r in results
        },
        "inventory": {name: sha256_file(os.path.join(outdir, name)) for name in inventory_files},
    }
    write_json(os.path.join(outdir, "manifest.json"), manifest)
    write_text(
        os.path.join(outdir, "timings.txt"),
        "".join(f"{name}: {dt:.3f} s\n" for name, dt in timings),
    )
    return manifest


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    from dataclasses import replace

    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out is not None:
        kw["out"] = args.out
    if args.trials is not None:
        kw["trials"] = args.trials
    if getattr(args, "lambda_grid", None):
        kw["lambda_grid"] = tuple(float(v) for v in args.lambda_grid.split(","))
    if args.epsilon is not None:
        kw["epsilon"] = args.epsilon
    return replace(cfg, **kw)


def _load_config(args) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    return _apply_overrides(cfg, args).validate()


def _emit_plot_data(report, outdir: str, tag: str) -> list:
    """One plot-ready CSV per swept scenario plus the full table."""
    rows = [r for r in report.rows if r.flag == "ok"]
    if not rows:
        raise ValueError("empty sweep table, nothing to emit")
    files = []
    scenarios = []
    for r in rows:
        if r.scenario not in scenarios:
            scenarios.append(r.scenario)
    for name in scenarios:
        lines = ["lambda,ratio"]
        for r in rows:
            if r.scenario == name:
                lines.append(f"{r.lam:.17g},{r.ratio:.17g}")
        files.append(write_text(os.path.join(outdir, f"series_{name}_{tag}.csv"),
                                "\n".join(lines) + "\n"))
    files.append(write_text(os.path.join(outdir, f"sweep_table_{tag}.csv"), report.csv()))
    return files


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    names = SUITES if args.suite == "all" else (args.suite,)
    outdir = cfg.out
    os.makedirs(outdir, exist_ok=True)
    ctx, results, timings = _run_suites(cfg, names, outdir,
                                        dump_trajectory=args.dump_trajectory)
    _write_manifest(cfg, outdir, results, timings)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}")
    all_ok = all(r.passed for r in results)
    print(f"outputs in {outdir}; manifest.json written")
    return 0 if all_ok else 1


def cmd_sweep(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    outdir = cfg.out
    os.makedirs(outdir, exist_ok=True)
    ctx = _Ctx(cfg)
    corpus = [
        ManufacturedSolutionSpec(field=f, amplitude=cfg.manufactured_amplitude, name=f"sol{i}")
        for i, f in enumerate(solution_corpus(ctx.interval, cfg.horizon, cfg.manufactured_count))
    ]
    rep = verify_carleman(corpus, cfg.lambda_grid, ctx.interval, cfg.horizon, ctx.quad)
    files = _emit_plot_data(rep, outdir, ctx.tag)
    files.append(sweep_figure(os.path.join(outdir, f"sweep_{ctx.tag}.png"), rep))
    results = [SuiteResult("sweep", rep.passed, {
        "empirical_constant": rep.empirical_constant,
        "empirical_lambda0": rep.empirical_lambda0,
    }, files)]
    _write_manifest(cfg, outdir, results, [("sweep", 0.0)])
    print(f"sweep written to {outdir} (constant {rep.empirical_constant:.6g})")
    return 0 if rep.passed else 1


def cmd_report(args) -> int:
    outdir = args.out or "runs/default"
    manifest_path = os.path.join(outdir, "manifest.json")
    if not os.path.exists(manifest_path):
        print(f"no manifest at {manifest_path}", file=sys.stderr)
        return 2
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    lines = [f"run report: scenario={manifest['scenario']} seed={manifest['seed']}"]
    ok = True
    for name, entry in manifest["suites"].items():
        state = "PASS" if entry["passed"] else "FAIL"
        ok = ok and entry["passed"]
        lines.append(f"[{state}] {name}")
        for k, v in entry["details"].items():
            lines.append(f"    {k}: {v}")
        for f in entry["files"]:
            lines.append(f"    file: {f}")
    text = "\n".join(lines) + "\n"
    write_text(os.path.join(outdir, "report.txt"), text)
    print(text, end="")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="beamobs",
        description="stochastic clamped-beam simulator and estimate verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to an INI run configuration")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--out", help="output directory override")
    common.add_argument("--trials", type=int, help="Monte Carlo trials override")
    common.add_argument("--lambda", dest="lambda_grid",
                        help="comma-separated weight parameter grid")
    common.add_argument("--epsilon", type=float, help="cutoff width override")

    p_run = sub.add_parser("run", parents=[common], help="run a verification suite")
    p_run.add_argument("suite", choices=SUITES + ("all",))
    p_run.add_argument("--dump-trajectory", action="store_true",
                       help="export the first trial's modal trajectory as CSV")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="sweep the weighted inequality over the lambda grid")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="summarize an existing run directory")
    p_rep.add_argument("--out", help="run directory (default runs/default)")
    p_rep.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
