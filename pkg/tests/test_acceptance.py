"""Acceptance gate: every shipped criterion at its stated tolerance.

Each test prints one pass/fail line.  Defaults throughout: interval [1, 2],
horizon 1, eight modes, 2048 steps, 256 trials, weight grid {2,...,12},
cutoff width 1/8, observability corpus of 64 data at 200 paths.
"""
import json
import math
import os
import time

import numpy as np
import pytest

from beamobs.beam import (
    Interval,
    Quadrature,
    characteristic_residual,
    clamped_basis,
    eval_mode,
    mode_matrix,
)
from beamobs.cli import main
from beamobs.config import RunConfig, config_hash
from beamobs.energy import energy_series, ensemble_energy, ito_identity_residual
from beamobs.estimates import (
    ManufacturedSolutionSpec,
    random_modal_corpus,
    verify_carleman,
    verify_observability,
    verify_revised_carleman,
)
from beamobs.identity import (
    audit_coefficients,
    integrated_balance,
    pointwise_identity_residual,
)
from beamobs.manufactured import identity_corpus, solution_corpus
from beamobs.sde import Forcing, SimulationConfig, simulate_ensemble, simulate_path
from beamobs.weights import Cutoff, WeightField, coefficient_lower_bounds

CFG = RunConfig()
IV = Interval(CFG.a, CFG.b)
QUAD = Quadrature.gauss_legendre(IV, CFG.quad_panels, CFG.quad_order)
MODES = clamped_basis(CFG.modes, IV, QUAD)
LAM = np.array([m.lam for m in MODES])


def _report(num, ok, detail):
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, detail


def _mode_forcing(k, amp=1.0):
    def field(t, x):
        return amp * np.broadcast_to(eval_mode(MODES[k], x, 0),
                                     np.broadcast_shapes(np.shape(t), np.shape(x)))
    return field


def test_criterion_1_eigenbasis():
    t0 = time.perf_counter()
    V = mode_matrix(MODES, QUAD.nodes, 0)
    orth = float(np.abs((V * QUAD.weights) @ V.T - np.eye(CFG.modes)).max())
    eig = max(
        math.sqrt(QUAD.integrate((eval_mode(m, QUAD.nodes, 4) - m.lam * eval_mode(m, QUAD.nodes, 0)) ** 2)) / m.lam
        for m in MODES
    )
    lo, hi = np.pi, 2 * np.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if characteristic_residual(lo, 1.0) * characteristic_residual(mid, 1.0) <= 0:
            hi = mid
        else:
            lo = mid
    oracle = 0.5 * (lo + hi)
    gap = abs(MODES[0].mu * IV.length - oracle)
    elapsed = time.perf_counter() - t0
    ok = orth < 1e-8 and eig < 1e-6 and gap < 1e-6 and abs(oracle - 4.7300407) < 1e-6 and elapsed < 1.0
    _report(1, ok, f"orth {orth:.2e}, eigenrelation {eig:.2e}, root gap {gap:.2e}, {elapsed:.2f}s")


def test_criterion_2_energy_identity():
    t0 = time.perf_counter()
    zeros = np.zeros(CFG.modes)
    e1 = np.eye(CFG.modes)[0]

    cfg1 = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, 2)
    traj = simulate_path(cfg1, Forcing.none(), (e1, zeros), modes=MODES, quad=QUAD)
    E = energy_series(traj, LAM)
    drift = float(np.abs(E - E[0]).max() / E[0])

    forcing = Forcing(drift_modal=lambda t: e1 * np.sin(t))
    maxima = {}
    for steps in (CFG.steps // 4, CFG.steps // 2):
        cfg_h = SimulationConfig(IV, CFG.horizon, CFG.modes, steps, CFG.seed, 2)
        tr = simulate_path(cfg_h, forcing, (e1, zeros), modes=MODES, quad=QUAD)
        _, maxima[steps] = ito_identity_residual(tr, MODES, forcing, QUAD)
    ratio = maxima[CFG.steps // 4] / maxima[CFG.steps // 2]

    gforce = Forcing(noise=_mode_forcing(0))
    cfgN = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, CFG.trials)
    ens = simulate_ensemble(cfgN, gforce, (zeros, zeros), modes=MODES, quad=QUAD)
    rec = ensemble_energy(ens, LAM, theory=ens.t)
    idx = np.linspace(1, ens.t.size - 1, 9).round().astype(int)
    zmax = float((np.abs(rec.mean[idx] - rec.theory[idx]) / rec.stderr[idx]).max())

    elapsed = time.perf_counter() - t0
    ok = drift < 1e-8 and 3.5 <= ratio <= 4.5 and zmax <= 3.0 and elapsed < 30.0
    _report(2, ok, f"drift {drift:.2e}, order ratio {ratio:.3f}, mean-law max z {zmax:.2f}, {elapsed:.1f}s")


def test_criterion_3_pointwise_identity():
    t0 = time.perf_counter()
    fields = identity_corpus(IV, CFG.horizon, count=5, seed=42)
    rng = np.random.default_rng(7)
    worst = 0.0
    for lam in (1.0, 2.0, 4.0, 8.0):
        w = WeightField(lam=lam, T=CFG.horizon)
        for f in fields:
            t = rng.uniform(0.0, CFG.horizon, size=100)
            x = rng.uniform(IV.a, IV.b, size=100)
            worst = max(worst, float(np.abs(pointwise_identity_residual(f, w, t, x)).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 5.0
    _report(3, ok, f"max normalized residual {worst:.2e} over 2000 points, {elapsed:.1f}s")


def test_criterion_4_integrated_balance():
    t0 = time.perf_counter()
    w = WeightField(lam=2.0, T=CFG.horizon)
    zeros = np.zeros(CFG.modes)

    sol = solution_corpus(IV, CFG.horizon)[0]
    det_forcing = Forcing(drift=sol.forcing)
    cfg_det = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, 2)
    ens_det = simulate_ensemble(cfg_det, det_forcing, (zeros, zeros), modes=MODES, quad=QUAD)
    det = integrated_balance(ens_det, MODES, det_forcing, w, QUAD, time_stride=CFG.time_stride)

    sto_forcing = Forcing(noise=_mode_forcing(0))
    cut = Cutoff(epsilon=CFG.epsilon, T=CFG.horizon)
    cfg_sto = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, CFG.trials)
    ens_sto = simulate_ensemble(cfg_sto, sto_forcing, (zeros, zeros), modes=MODES, quad=QUAD)
    sto = integrated_balance(ens_sto, MODES, sto_forcing, w, QUAD, cutoff=cut,
                             time_stride=CFG.time_stride)

    def refined_blocks():
        for lo in range(0, 4 * CFG.trials, CFG.trials):
            cfg_f = SimulationConfig(IV, CFG.horizon, CFG.modes, 2 * CFG.steps, CFG.seed,
                                     4 * CFG.trials)
            yield simulate_ensemble(cfg_f, sto_forcing, (zeros, zeros), modes=MODES,
                                    quad=QUAD, trial_indices=np.arange(lo, lo + CFG.trials))

    fine = integrated_balance(refined_blocks(), MODES, sto_forcing, w, QUAD, cutoff=cut,
                              time_stride=CFG.time_stride)

    elapsed = time.perf_counter() - t0
    z = abs(sto.residual) / max(sto.residual_stderr, 1e-300)
    shrinks = abs(fine.normalized_residual) < abs(sto.normalized_residual)
    ok = (abs(det.normalized_residual) < 1e-5 and z <= 3.0 and shrinks and elapsed < 120.0)
    _report(4, ok, f"deterministic {det.normalized_residual:.2e}, stochastic z {z:.2f}, "
                   f"refined {fine.normalized_residual:.2e} vs {sto.normalized_residual:.2e}, {elapsed:.1f}s")


def test_criterion_5_coefficient_audit():
    t0 = time.perf_counter()
    audit = audit_coefficients(IV, CFG.horizon, samples=1000)
    completed = set(audit.agrees) == {"f1", "f2", "f3", "f4", "h1", "h2", "h3", "h4", "h5"}
    clean = all(audit.max_rel_dev[n] <= 1e-10 for n, ok in audit.agrees.items() if ok)
    reported = all(any(n in f for f in audit.findings) for n, ok in audit.agrees.items() if not ok)

    table = coefficient_lower_bounds(CFG.lambda_grid, IV, CFG.horizon)
    h5_exact = all(mins[4] == 32.0 for _, mins, _ in table.rows())
    positive = table.threshold is not None and all(
        ok for lam, _, ok in table.rows() if lam >= table.threshold
    )
    elapsed = time.perf_counter() - t0
    ok = completed and clean and reported and h5_exact and positive and elapsed < 5.0
    _report(5, ok, f"findings {list(audit.findings) or 'none'}, positivity threshold "
                   f"{table.threshold}, h5 scaling exact {h5_exact}, {elapsed:.1f}s")


def test_criterion_6_carleman_sweep():
    t0 = time.perf_counter()
    corpus = [ManufacturedSolutionSpec(field=f, name=f"sol{i}")
              for i, f in enumerate(solution_corpus(IV, CFG.horizon, CFG.manufactured_count))]
    rep = verify_carleman(corpus, CFG.lambda_grid, IV, CFG.horizon, QUAD)
    finite = all(np.isfinite(r.ratio) for r in rep.rows if r.flag == "ok")

    doubled = [ManufacturedSolutionSpec(field=s.field, amplitude=2.0, name=s.name)
               for s in corpus]
    rep2 = verify_carleman(doubled, CFG.lambda_grid, IV, CFG.horizon, QUAD)
    dev = max(abs(a.ratio - b.ratio) for a, b in zip(rep.rows, rep2.rows))

    from importlib.resources import files
    golden = json.loads(files("beamobs").joinpath("goldens/default.json").read_text())
    assert golden["config_hash"] == config_hash(CFG), "golden was frozen for the default config"
    gap = abs(rep.empirical_constant - golden["carleman"]["empirical_constant"])

    elapsed = time.perf_counter() - t0
    ok = finite and dev <= 1e-12 and gap <= 1e-6 and elapsed < 60.0
    _report(6, ok, f"constant {rep.empirical_constant:.8g} (golden gap {gap:.2e}), "
                   f"scaling dev {dev:.2e}, {elapsed:.1f}s")


def test_criterion_7_revised_carleman():
    t0 = time.perf_counter()
    datum = random_modal_corpus(1, CFG.modes, seed=CFG.seed)[0]
    forcing = Forcing(noise=_mode_forcing(0))
    sim = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, CFG.trials)
    rep = verify_revised_carleman(sim, forcing, (datum[0], datum[1]), MODES, QUAD,
                                  epsilon=CFG.epsilon, lambdas=CFG.lambda_grid,
                                  time_stride=CFG.time_stride)
    lam_probe = CFG.lambda_grid[len(CFG.lambda_grid) // 2]
    rep_half = verify_revised_carleman(sim, forcing, (datum[0], datum[1]), MODES, QUAD,
                                       epsilon=CFG.epsilon / 2.0, lambdas=[lam_probe],
                                       time_stride=CFG.time_stride)
    tc = next(r.extras["tail_coefficient"] for r in rep.rows if r.lam == lam_probe)
    factor = rep_half.rows[0].extras["tail_coefficient"] / tc

    from importlib.resources import files
    golden = json.loads(files("beamobs").joinpath("goldens/default.json").read_text())
    gap = abs(rep.empirical_constant - golden["revised"]["empirical_constant"])

    elapsed = time.perf_counter() - t0
    ok = rep.passed and factor == 16.0 and gap <= 1e-6 and elapsed < 120.0
    _report(7, ok, f"constant {rep.empirical_constant:.8g} (golden gap {gap:.2e}), "
                   f"tail factor {factor}, {elapsed:.1f}s")


def test_criterion_8_observability():
    t0 = time.perf_counter()
    data = random_modal_corpus(CFG.obs_corpus, CFG.modes, seed=CFG.seed)
    forcing = Forcing(noise=_mode_forcing(0, amp=CFG.obs_noise_amplitude))
    sim = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, CFG.obs_trials)
    rep = verify_observability(data, sim, forcing, MODES, QUAD)
    sim2 = SimulationConfig(IV, CFG.horizon, CFG.modes, CFG.steps, CFG.seed, 2 * CFG.obs_trials)
    rep2 = verify_observability(data, sim2, forcing, MODES, QUAD)
    stability = abs(rep2.empirical_constant - rep.empirical_constant) / rep.empirical_constant
    positive = all(r["boundary_term"] > 0.0 for r in rep.rows if r["flag"] == "ok")
    elapsed = time.perf_counter() - t0
    ok = (np.isfinite(rep.empirical_constant) and stability <= 0.10 and positive
          and elapsed < 300.0)
    _report(8, ok, f"constant {rep.empirical_constant:.6g}, stability {stability:.2e}, "
                   f"boundary terms positive {positive}, {elapsed:.1f}s")


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "all", "--out", str(out1)]) == 0
    assert main(["run", "all", "--out", str(out2)]) == 0
    with open(out1 / "manifest.json", "rb") as fh:
        m1 = fh.read()
    with open(out2 / "manifest.json", "rb") as fh:
        m2 = fh.read()
    identical = m1 == m2
    inventory = json.loads(m1)["inventory"]
    for name in inventory:
        with open(out1 / name, "rb") as fh:
            b1 = fh.read()
        with open(out2 / name, "rb") as fh:
            b2 = fh.read()
        identical = identical and b1 == b2
    elapsed = time.perf_counter() - t0
    _report(9, identical, f"manifest and {len(inventory)} data files byte-identical, {elapsed:.0f}s")
