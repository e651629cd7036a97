import numpy as np
import pytest
import sympy as sp

from beamobs.beam import Interval, Quadrature, eval_mode
from beamobs.estimates import (
    ManufacturedSolutionSpec,
    _lambda0_from_profile,
    carleman_lhs_field,
    carleman_rhs_field,
    lambda_sweep,
    random_modal_corpus,
    verify_carleman,
    verify_observability,
    verify_revised_carleman,
)
from beamobs.manufactured import (
    ManufacturedField,
    PolyProfile,
    clamped_bump,
    solution_corpus,
    time_bump,
)
from beamobs.sde import Forcing, SimulationConfig
from beamobs.weights import WeightField


def mode_field(modes, k, amp=1.0):
    def field(t, x):
        return amp * np.broadcast_to(eval_mode(modes[k], x, 0),
                                     np.broadcast_shapes(np.shape(t), np.shape(x)))
    return field


# -------------------------------------------------- manufactured solutions

def test_forcing_matches_symbolic_derivatives(interval):
    t_s, x_s = sp.symbols("t x")
    T = 1.0
    a, b = interval.a, interval.b
    y_s = (t_s**3 * (T - t_s) ** 3) * ((x_s - a) ** 2 * (b - x_s) ** 2)
    f_s = sp.lambdify((t_s, x_s), sp.diff(y_s, t_s, 2) + sp.diff(y_s, x_s, 4))
    field = solution_corpus(interval, T)[0]
    rng = np.random.default_rng(3)
    t = rng.uniform(0, T, size=50)
    x = rng.uniform(a, b, size=50)
    ref = f_s(t, x)
    assert np.abs(field.forcing(t, x) - ref).max() < 1e-12 * max(1.0, np.abs(ref).max())


def test_corpus_is_admissible(interval):
    for f in solution_corpus(interval, 1.0):
        assert f.zero_end_residual(interval, 1.0) < 1e-12
        assert f.clamped_residual(interval, 1.0) < 1e-12


# -------------------------------------------------- weighted integrals

def test_lhs_zero_field(interval, quad):
    z = PolyProfile(np.polynomial.Polynomial([0.0]))
    zero = ManufacturedField(terms=((z, z),))
    assert carleman_lhs_field(zero, WeightField(lam=1.0, T=1.0), interval, 1.0, quad) == 0.0


def test_lhs_frozen_mode_against_refined_quadrature(interval, quad, modes):
    # time-constant single-mode field; refined rule is the oracle
    mode = modes[0]

    class Frozen:
        def partial(self, t, x, i=0, j=0):
            shape = np.broadcast_shapes(np.shape(t), np.shape(x))
            if j > 0:
                return np.zeros(shape)
            return np.broadcast_to(eval_mode(mode, x, i), shape)

    w = WeightField(lam=1.0, T=1.0)
    coarse = carleman_lhs_field(Frozen(), w, interval, 1.0, quad)
    fine = carleman_lhs_field(
        Frozen(), w, interval, 1.0,
        Quadrature.gauss_legendre(interval, panels=24, order=24),
        tpanels=24, torder=24,
    )
    assert coarse > 0.0
    assert abs(coarse - fine) < 1e-6 * fine


def test_lhs_strictly_increasing_in_lambda(interval, quad):
    field = solution_corpus(interval, 1.0)[0]
    vals = [carleman_lhs_field(field, WeightField(lam=lam, T=1.0), interval, 1.0, quad)
            for lam in (2.0, 4.0, 8.0)]
    assert vals[0] < vals[1] < vals[2]


def test_rhs_refined_quadrature(interval, quad):
    field = solution_corpus(interval, 1.0)[0]
    w = WeightField(lam=4.0, T=1.0)
    coarse = carleman_rhs_field(field, w, interval, 1.0, quad)
    fine = carleman_rhs_field(field, w, interval, 1.0,
                              Quadrature.gauss_legendre(interval, panels=24, order=24),
                              tpanels=24, torder=24)
    assert abs(coarse - fine) < 1e-6 * fine


# -------------------------------------------------- zero-end sweep

def test_sweep_ratios_and_scaling(interval, quad):
    corpus = [ManufacturedSolutionSpec(field=f, name=f"sol{i}")
              for i, f in enumerate(solution_corpus(interval, 1.0))]
    rep = verify_carleman(corpus, [2, 4, 6, 8, 10, 12], interval, 1.0, quad)
    assert rep.passed
    assert all(np.isfinite(r.ratio) for r in rep.rows if r.flag == "ok")
    doubled = [ManufacturedSolutionSpec(field=s.field, amplitude=2.0, name=s.name)
               for s in corpus]
    rep2 = verify_carleman(doubled, [2, 4, 6, 8, 10, 12], interval, 1.0, quad)
    dev = max(abs(a.ratio - b.ratio) for a, b in zip(rep.rows, rep2.rows))
    assert dev <= 1e-12


def test_sweep_flags_degenerate_zero_solution(interval, quad):
    zero = ManufacturedSolutionSpec(field=solution_corpus(interval, 1.0)[0],
                                    amplitude=0.0, name="null")
    rep = lambda_sweep(zero, [2.0], interval, 1.0, quad)
    assert rep.rows[0].flag == "degenerate"
    assert not rep.passed  # nothing usable in the table


def test_sweep_rejects_nonzero_end_values(interval, quad):
    bad = ManufacturedField(terms=((PolyProfile(np.polynomial.Polynomial([1.0, 1.0])),
                                    clamped_bump(interval)),))
    with pytest.raises(ValueError, match="end values"):
        verify_carleman([ManufacturedSolutionSpec(field=bad, name="bad")],
                        [2.0], interval, 1.0, quad)


def test_sweep_empty_lambda_grid(interval, quad):
    spec = ManufacturedSolutionSpec(field=solution_corpus(interval, 1.0)[0])
    with pytest.raises(ValueError, match="lambda"):
        verify_carleman([spec], [], interval, 1.0, quad)


def test_lambda0_profile_rule():
    lams = np.array([2.0, 4.0, 6.0, 8.0])
    assert _lambda0_from_profile(lams, np.array([5.0, 4.0, 3.0, 2.0])) == 2.0
    assert _lambda0_from_profile(lams, np.array([3.0, 5.0, 4.0, 2.0])) == 4.0
    assert _lambda0_from_profile(lams, np.array([1.0, 2.0, 3.0, 4.0])) == 8.0


# -------------------------------------------------- windowed variant

def test_revised_tail_scaling_and_errorbars(interval, quad, modes):
    cfg = SimulationConfig(interval, 1.0, 8, 1024, 31, 32)
    forcing = Forcing(noise=mode_field(modes, 0))
    datum = random_modal_corpus(1, 8, seed=12)[0]
    rep = verify_revised_carleman(cfg, forcing, (datum[0], datum[1]), modes, quad,
                                  epsilon=1.0 / 8, lambdas=[4.0, 8.0])
    assert rep.passed
    row = rep.rows[0]
    assert row.lhs_stderr > 0.0
    assert row.extras["tail_coefficient"] == 4.0**2 / (1.0 / 8) ** 4

    rep_half = verify_revised_carleman(cfg, forcing, (datum[0], datum[1]), modes, quad,
                                       epsilon=1.0 / 16, lambdas=[4.0])
    assert rep_half.rows[0].extras["tail_coefficient"] == 16.0 * row.extras["tail_coefficient"]
    assert rep.metadata["cutoff_c1"] == 15.0 / 4.0


def test_revised_deterministic_single_mode(interval, quad, modes):
    cfg = SimulationConfig(interval, 1.0, 8, 1024, 3, 2)
    rep = verify_revised_carleman(cfg, Forcing.none(), (np.eye(8)[0], np.zeros(8)),
                                  modes, quad, epsilon=1.0 / 8, lambdas=[6.0])
    assert np.isfinite(rep.rows[0].ratio) and rep.rows[0].ratio > 0.0


def test_revised_epsilon_contract(interval, quad, modes):
    cfg = SimulationConfig(interval, 1.0, 8, 256, 3, 2)
    with pytest.raises(ValueError, match="epsilon"):
        verify_revised_carleman(cfg, Forcing.none(), (np.zeros(8), np.zeros(8)),
                                modes, quad, epsilon=0.7, lambdas=[2.0])


# -------------------------------------------------- observability

def test_observability_basics(interval, quad, modes):
    data = random_modal_corpus(6, 8, seed=900)
    cfg = SimulationConfig(interval, 1.0, 8, 512, 900, 24)
    forcing = Forcing(noise=mode_field(modes, 0, amp=0.1))
    rep = verify_observability(data, cfg, forcing, modes, quad)
    assert rep.passed and not rep.degenerate
    assert all(r["boundary_term"] > 0.0 for r in rep.rows)
    assert 0 <= rep.worst_datum < 6

    again = verify_observability(data, cfg, forcing, modes, quad)
    assert again.empirical_constant == rep.empirical_constant


def test_observability_homogeneity(interval, quad, modes):
    data = random_modal_corpus(3, 8, seed=42)
    cfg = SimulationConfig(interval, 1.0, 8, 512, 42, 16)
    forcing = Forcing(noise=mode_field(modes, 0, amp=0.1))
    rep = verify_observability(data, cfg, forcing, modes, quad)
    scaled = verify_observability(2.0 * data, cfg,
                                  Forcing(noise=mode_field(modes, 0, amp=0.2)),
                                  modes, quad)
    for r1, r2 in zip(rep.rows, scaled.rows):
        assert r2["ratio"] == r1["ratio"]


def test_observability_deterministic_single_mode(interval, quad, modes):
    datum = np.zeros((1, 2, 8))
    datum[0, 0, 0] = 1.0
    cfg = SimulationConfig(interval, 1.0, 8, 512, 7, 2)
    rep = verify_observability(datum, cfg, Forcing.none(), modes, quad)
    assert rep.rows[0]["boundary_term"] > 0.0
    assert np.isfinite(rep.rows[0]["ratio"])


def test_observability_degenerate_corpus(interval, quad, modes):
    data = np.zeros((2, 2, 8))
    cfg = SimulationConfig(interval, 1.0, 8, 128, 7, 2)
    rep = verify_observability(data, cfg, Forcing.none(), modes, quad)
    assert rep.degenerate
    assert all(r["flag"] == "degenerate" for r in rep.rows)
    assert not any(np.isnan(r["lhs"]) for r in rep.rows)


def test_random_corpus_reproducible():
    a = random_modal_corpus(4, 8, seed=5)
    b = random_modal_corpus(4, 8, seed=5)
    assert (a == b).all()
    assert np.abs(a) .max() <= 1.0
