import numpy as np
import pytest

from beamobs.beam import Quadrature, eval_mode
from beamobs.energy import (
    energy,
    energy_estimate_check,
    energy_series,
    ensemble_energy,
    ito_identity_residual,
)
from beamobs.sde import Forcing, SimulationConfig, reconstruct, simulate_ensemble, simulate_path


def mode_field(modes, k, amp=1.0):
    def field(t, x):
        return amp * np.broadcast_to(eval_mode(modes[k], x, 0),
                                     np.broadcast_shapes(np.shape(t), np.shape(x)))
    return field


def test_energy_point_values(lam_vec):
    e1 = np.eye(8)[0]
    e2 = np.eye(8)[1]
    assert energy(e1, np.zeros(8), lam_vec) == lam_vec[0]
    assert energy(np.zeros(8), np.zeros(8), lam_vec) == 0.0
    val = energy(e1 + e2, e1, lam_vec)
    assert abs(val - (lam_vec[0] + lam_vec[1] + 1.0)) < 1e-12 * val


def test_modal_energy_matches_quadrature_reconstruction(interval, quad, modes, lam_vec):
    rng = np.random.default_rng(8)
    c = rng.uniform(-1, 1, size=8)
    cp = rng.uniform(-1, 1, size=8)
    modal = energy(c, cp, lam_vec)
    n = 4
    from beamobs.sde import ModalTrajectory
    traj = ModalTrajectory(t=np.linspace(0, 1, n + 1), c=np.tile(c, (n + 1, 1)),
                           cp=np.tile(cp, (n + 1, 1)), increments=np.zeros(n),
                           master_seed=0, trial_index=0)
    fine = Quadrature.gauss_legendre(interval, panels=16, order=20)
    snap = reconstruct(traj, modes, 0, fine.nodes)
    quadrature = fine.integrate(snap.y_t**2) + fine.integrate(snap.y_xx**2)
    assert abs(modal - quadrature) < 1e-6 * modal


def test_conservation_residual_is_roundoff(interval, quad, modes, lam_vec):
    cfg = SimulationConfig(interval, 1.0, 8, 1024, 3, 2)
    c0 = np.eye(8)[0]
    traj = simulate_path(cfg, Forcing.none(), (c0, np.zeros(8)), modes=modes, quad=quad)
    r, rmax = ito_identity_residual(traj, modes, Forcing.none(), quad)
    E0 = energy_series(traj, lam_vec)[0]
    assert rmax / E0 < 1e-8


def test_forced_residual_is_second_order(interval, quad, modes):
    forcing = Forcing(drift_modal=lambda t: np.eye(8)[0] * np.sin(t))
    maxima = {}
    for steps in (512, 1024):
        cfg = SimulationConfig(interval, 1.0, 8, steps, 3, 2)
        traj = simulate_path(cfg, forcing, (np.eye(8)[0], np.zeros(8)),
                             modes=modes, quad=quad)
        _, maxima[steps] = ito_identity_residual(traj, modes, forcing, quad)
    ratio = maxima[512] / maxima[1024]
    assert 3.5 < ratio < 4.5


def test_stochastic_residual_statistics(interval, quad, modes):
    forcing = Forcing(noise=mode_field(modes, 0))
    rms = {}
    finals = {}
    for steps in (512, 1024):
        cfg = SimulationConfig(interval, 1.0, 8, steps, 5, 128)
        ens = simulate_ensemble(cfg, forcing, (np.zeros(8), np.zeros(8)),
                                modes=modes, quad=quad)
        ends = []
        for i in range(ens.trials):
            r, _ = ito_identity_residual(ens.trial(i), modes, forcing, quad)
            ends.append(r[-1])
        ends = np.asarray(ends)
        rms[steps] = float(np.sqrt((ends**2).mean()))
        finals[steps] = ends
    # ensemble mean consistent with zero
    m = finals[1024].mean()
    se = finals[1024].std(ddof=1) / np.sqrt(finals[1024].size)
    assert abs(m) <= 3.0 * se
    # halving the step contracts the pathwise residual (square-root rate)
    ratio = rms[512] / rms[1024]
    assert 1.15 < ratio < 1.75


def test_residual_requires_increments(interval, quad, modes):
    from dataclasses import replace
    cfg = SimulationConfig(interval, 1.0, 8, 64, 3, 2)
    traj = simulate_path(cfg, Forcing.none(), (np.eye(8)[0], np.zeros(8)),
                         modes=modes, quad=quad)
    with pytest.raises(ValueError, match="increments"):
        ito_identity_residual(replace(traj, increments=None), modes, Forcing.none(), quad)


def test_ensemble_energy_record_and_mean_law(interval, quad, modes, lam_vec):
    forcing = Forcing(noise=mode_field(modes, 0))
    cfg = SimulationConfig(interval, 1.0, 8, 512, 42, 256)
    ens = simulate_ensemble(cfg, forcing, (np.zeros(8), np.zeros(8)), modes=modes, quad=quad)
    rec = ensemble_energy(ens, lam_vec, theory=ens.t)
    assert (rec.mean >= 0).all()
    idx = np.linspace(1, rec.t.size - 1, 9).round().astype(int)
    z = np.abs(rec.mean[idx] - rec.theory[idx]) / rec.stderr[idx]
    assert z.max() <= 3.0
    text = rec.csv()
    assert text.splitlines()[0] == "t,mean_energy,stderr,theory"
    assert len(text.splitlines()) == rec.t.size + 1


def test_two_way_estimate_conservative_case(interval, quad, modes, lam_vec):
    cfg = SimulationConfig(interval, 1.0, 8, 512, 3, 4)
    ens = simulate_ensemble(cfg, Forcing.none(), (np.eye(8)[0], np.zeros(8)),
                            modes=modes, quad=quad)
    chk = energy_estimate_check(ens, lam_vec)
    assert not chk.degenerate
    assert chk.empirical_c <= 1.0 + 1e-6
    # scaling the data leaves every ratio unchanged
    scaled = simulate_ensemble(cfg, Forcing.none(), (2.0 * np.eye(8)[0], np.zeros(8)),
                               modes=modes, quad=quad)
    chk2 = energy_estimate_check(scaled, lam_vec)
    assert chk2.empirical_c == chk.empirical_c


def test_two_way_estimate_noise_case(interval, quad, modes, lam_vec):
    forcing = Forcing(noise=mode_field(modes, 0))
    cfg = SimulationConfig(interval, 1.0, 8, 512, 11, 64)
    ens = simulate_ensemble(cfg, forcing, (np.zeros(8), np.zeros(8)), modes=modes, quad=quad)
    chk = energy_estimate_check(ens, lam_vec, forcing_sq_norm=1.0)
    assert np.isfinite(chk.empirical_c) and chk.empirical_c > 0.0


def test_two_way_estimate_degenerate_flag(interval, quad, modes, lam_vec):
    cfg = SimulationConfig(interval, 1.0, 8, 64, 3, 2)
    ens = simulate_ensemble(cfg, Forcing.none(), (np.zeros(8), np.zeros(8)),
                            modes=modes, quad=quad)
    chk = energy_estimate_check(ens, lam_vec)
    assert chk.degenerate and chk.empirical_c == 0.0


def test_fourth_order_norm_stays_bounded(interval, quad, modes, lam_vec):
    from beamobs.energy import fourth_order_boundedness
    forcing = Forcing(noise=mode_field(modes, 0))
    cfg = SimulationConfig(interval, 1.0, 8, 512, 11, 64)
    ens = simulate_ensemble(cfg, forcing, (np.zeros(8), np.zeros(8)), modes=modes, quad=quad)
    h4 = fourth_order_boundedness(ens, lam_vec)
    assert h4["finite"] and h4["initial"] == 0.0 and h4["peak"] < np.inf

    # conserved without forcing
    cons = simulate_ensemble(cfg, Forcing.none(), (np.eye(8)[0], np.zeros(8)),
                             modes=modes, quad=quad)
    h4c = fourth_order_boundedness(cons, lam_vec)
    assert h4c["peak"] <= h4c["initial"] * (1.0 + 1e-10) + 1.0  # bounded by the start


def test_energy_record_keeps_samples(interval, quad, modes, lam_vec):
    from beamobs.energy import ensemble_energy
    cfg = SimulationConfig(interval, 1.0, 8, 64, 3, 4)
    ens = simulate_ensemble(cfg, Forcing.none(), (np.eye(8)[0], np.zeros(8)),
                            modes=modes, quad=quad)
    rec = ensemble_energy(ens, lam_vec)
    assert rec.samples.shape == (4, 65)
    assert (rec.samples >= 0).all()
