import math

import numpy as np
import pytest

from beamobs.beam import (
    Interval,
    Quadrature,
    characteristic_residual,
    clamped_basis,
    clamped_mode,
    eval_mode,
    inner_product,
    mode_matrix,
    project,
    solve_characteristic,
)


def bisection_root(k, L, iters=200):
    """Independent oracle: plain bisection of cosh*cos = 1 on (k pi, (k+1) pi)/L."""
    lo, hi = k * math.pi / L, (k + 1) * math.pi / L
    flo = math.cos(lo * L) - 1.0 / math.cosh(lo * L)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = math.cos(mid * L) - 1.0 / math.cosh(mid * L)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def test_first_roots_match_bisection_oracle():
    for k, approx in [(1, 4.7300407), (2, 7.8532046)]:
        oracle = bisection_root(k, 1.0)
        mu = solve_characteristic(k, 1.0)
        assert abs(mu - oracle) < 1e-10
        assert abs(mu - approx) < 1e-6


def test_high_mode_approaches_asymptote():
    mu = solve_characteristic(10, 1.0)
    assert abs(mu - 10.5 * math.pi) < 1e-6


def test_roots_scale_with_length():
    assert abs(solve_characteristic(1, 2.0) - bisection_root(1, 2.0)) < 1e-10


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_characteristic(0, 1.0)
    with pytest.raises(ValueError):
        solve_characteristic(1, -1.0)
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)


@pytest.mark.parametrize("k", [1, 4, 8, 12, 16])
def test_mode_invariants(k, interval, quad, modes16):
    mode = modes16[k - 1]
    L = interval.length
    # characteristic equation in the overflow-safe scaling; the raw product
    # cosh*cos - 1 is only resolvable in doubles for the first root
    assert abs(characteristic_residual(mode.mu, L)) < 1e-12
    if k == 1:
        assert abs(math.cosh(mode.mu * L) * math.cos(mode.mu * L) - 1.0) < 1e-10

    vals = eval_mode(mode, quad.nodes, 0)
    peak = np.abs(vals).max()
    for xb in (interval.a, interval.b):
        for order in (0, 1):
            assert abs(eval_mode(mode, xb, order)) < 1e-8 * peak

    assert abs(inner_product(vals, vals, quad) - 1.0) < 1e-8

    resid = eval_mode(mode, quad.nodes, 4) - mode.lam * vals
    assert math.sqrt(quad.integrate(resid**2)) / mode.lam < 1e-6


def test_orthonormality_sixteen_modes(quad, modes16):
    V = mode_matrix(modes16, quad.nodes, 0)
    gram = (V * quad.weights) @ V.T
    assert np.abs(gram - np.eye(16)).max() < 1e-8


def test_spectral_gap_and_asymptotics(interval, modes16):
    lams = np.array([m.lam for m in modes16])
    assert (np.diff(lams) > 0).all()
    ratios = lams / ((np.arange(1, 17) + 0.5) * np.pi / interval.length) ** 4
    assert abs(ratios[-1] - 1.0) < 1e-8
    assert abs(ratios[7] - 1.0) < abs(ratios[0] - 1.0)


def test_derivative_matches_finite_difference(interval, modes16):
    rng = np.random.default_rng(3)
    x = rng.uniform(interval.a + 0.05, interval.b - 0.05, size=12)
    h = 1e-6
    for k in (1, 8):
        mode = modes16[k - 1]
        fd = (eval_mode(mode, x + h, 0) - eval_mode(mode, x - h, 0)) / (2 * h)
        assert np.abs(fd - eval_mode(mode, x, 1)).max() < 1e-6 * np.abs(eval_mode(mode, x, 1)).max() + 1e-4


def test_eval_mode_order_contract(modes16):
    with pytest.raises(ValueError):
        eval_mode(modes16[0], 1.5, 5)


def test_large_wavenumber_short_interval_is_finite():
    iv = Interval(0.0, 0.1)
    q = Quadrature.gauss_legendre(iv)
    mode = clamped_mode(16, iv, q)
    for order in range(5):
        assert np.isfinite(eval_mode(mode, q.nodes, order)).all()


def test_quadrature_basics(interval, quad):
    assert (quad.weights > 0).all()
    assert abs(quad.weights.sum() - interval.length) < 1e-12 * interval.length
    unit = Quadrature.gauss_legendre(Interval(0.0, 1.0))
    assert abs(inner_product(np.ones_like(unit.nodes), np.ones_like(unit.nodes), unit) - 1.0) < 1e-14


def test_inner_product_orthogonality(quad, modes16):
    v1 = eval_mode(modes16[0], quad.nodes, 0)
    v2 = eval_mode(modes16[1], quad.nodes, 0)
    assert abs(inner_product(v1, v1, quad) - 1.0) < 1e-8
    assert abs(inner_product(v1, v2, quad)) < 1e-8


def test_projection_recovers_modal_mixtures(quad, modes16):
    four = modes16[:4]
    c = project(lambda x: eval_mode(four[1], x, 0), four, quad)
    assert np.abs(c - np.array([0.0, 1.0, 0.0, 0.0])).max() < 1e-8

    assert np.abs(project(np.zeros_like(quad.nodes), four, quad)).max() == 0.0

    mix = lambda x: eval_mode(four[0], x, 0) + 2.0 * eval_mode(four[2], x, 0)
    c = project(mix, four, quad)
    assert np.abs(c - np.array([1.0, 0.0, 2.0, 0.0])).max() < 1e-8


def test_second_derivative_trace_nonzero(interval, modes16):
    assert abs(eval_mode(modes16[0], interval.b, 2)) > 1.0
