"""Clamped-beam eigenbasis on an interval, with quadrature and modal projection.

The fourth-order operator with clamped ends (value and slope pinned at both
endpoints) has eigenfunctions built from exponential and trigonometric parts.
Everything here evaluates them in an overflow-safe form: the growing
exponential is folded into a coefficient times ``exp(-mu*(b-x))`` so that all
exponentials carry non-positive arguments.  Raw cosh/sinh forms lose all
boundary accuracy past the first few modes and are not used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Interval",
    "Quadrature",
    "EigenMode",
    "characteristic_residual",
    "solve_characteristic",
    "clamped_mode",
    "clamped_basis",
    "eval_mode",
    "inner_product",
    "project",
]


@dataclass(frozen=True)
class Interval:
    """Closed spatial interval [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"interval needs b > a, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule on an interval.

    Parameters
    ----------
    nodes, weights : ndarray
        Flattened node positions and positive weights; weights sum to the
        interval length.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_legendre(cls, interval: Interval, panels: int = 8, order: int = 16) -> "Quadrature":
        if panels < 1 or order < 1:
            raise ValueError("panels and order must be positive")
        ref_x, ref_w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(interval.a, interval.b, panels + 1)
        half = np.diff(edges) / 2.0
        mid = (edges[:-1] + edges[1:]) / 2.0
        nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
        weights = (half[:, None] * ref_w[None, :]).ravel()
        return cls(nodes=nodes, weights=weights)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def characteristic_residual(mu: np.ndarray | float, L: float):
    """Overflow-safe residual of the clamped-clamped frequency condition.

    The condition cosh(mu*L)*cos(mu*L) = 1 is rescaled by 1/cosh so the
    residual stays O(1) for large arguments: cos(mu*L) - sech(mu*L).
    """
    z = np.asarray(mu, dtype=float) * L
    return np.cos(z) - 1.0 / np.cosh(z)


def solve_characteristic(k: int, L: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Return the k-th positive root of the clamped-beam frequency condition.

    The k-th root sits near (k + 1/2)*pi/L.  A sign-change scan over the
    window ((k-1/2)*pi/L, (k+3/2)*pi/L) brackets the candidates; the bracket
    closest to the nominal location is refined by safeguarded bisection with
    Newton polishing until |cos(mu L) - sech(mu L)| < tol.
    """
    if k < 1:
        raise ValueError(f"mode index must be >= 1, got {k}")
    if not L > 0:
        raise ValueError(f"interval length must be positive, got {L}")

    lo = (k - 0.5) * math.pi / L
    hi = (k + 1.5) * math.pi / L
    nominal = (k + 0.5) * math.pi / L
    scan = np.linspace(lo, hi, 512)
    res = characteristic_residual(scan, L)
    flips = np.nonzero(np.sign(res[:-1]) * np.sign(res[1:]) < 0)[0]
    if flips.size == 0:
        raise RuntimeError(
            f"no sign change of the characteristic residual in [{lo:.6g}, {hi:.6g}] for k={k}"
        )
    mids = (scan[flips] + scan[flips + 1]) / 2.0
    pick = flips[int(np.argmin(np.abs(mids - nominal)))]
    a, b = float(scan[pick]), float(scan[pick + 1])
    fa = float(characteristic_residual(a, L))

    mu = 0.5 * (a + b)
    for _ in range(max_iter):
        f = float(characteristic_residual(mu, L))
        if abs(f) < tol:
            return mu
        if fa * f < 0:
            b = mu
        else:
            a, fa = mu, f
        # Newton step from the current iterate, kept only when it stays bracketed
        z = mu * L
        df = L * (-math.sin(z) + math.tanh(z) / math.cosh(z))
        step = mu - f / df if df != 0 else mu
        mu = step if a < step < b else 0.5 * (a + b)
    raise RuntimeError(
        f"characteristic root for k={k} did not converge: bracket [{a:.17g}, {b:.17g}], "
        f"residual {characteristic_residual(mu, L):.3g}"
    )


@dataclass(frozen=True)
class EigenMode:
    """One normalized clamped-beam eigenpair.

    The shape is stored in the stable basis
    ``coef_right*exp(-mu*(b-x)) + coef_left*exp(-mu*(x-a)) - cos(mu*(x-a))
    + sigma*sin(mu*(x-a))`` scaled by ``norm`` so the quadrature norm is one.
    """

    k: int
    mu: float
    lam: float
    sigma: float
    coef_right: float
    coef_left: float
    norm: float
    interval: Interval


def _raw_shape(mode: EigenMode, x, order: int):
    s = np.asarray(x, dtype=float) - mode.interval.a
    mu = mode.mu
    L = mode.interval.length
    ea = np.exp(-mu * s)
    eb = np.exp(-mu * (L - s))
    c, si = np.cos(mu * s), np.sin(mu * s)
    # trig part of d^j/dx^j cycles with period 4 starting from -cos + sigma*sin
    cyc = order % 4
    if cyc == 0:
        trig = -c + mode.sigma * si
    elif cyc == 1:
        trig = si + mode.sigma * c
    elif cyc == 2:
        trig = c - mode.sigma * si
    else:
        trig = -si - mode.sigma * c
    sign = -1.0 if order % 2 else 1.0
    return mu**order * (mode.coef_right * eb + sign * mode.coef_left * ea + trig)


def eval_mode(mode: EigenMode, x, order: int = 0):
    """Evaluate the normalized mode or one of its first four derivatives."""
    if order not in (0, 1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 0..4, got {order}")
    out = mode.norm * _raw_shape(mode, x, order)
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def clamped_mode(k: int, interval: Interval, quad: Quadrature | None = None) -> EigenMode:
    """Construct the k-th clamped mode, normalized against `quad`."""
    if quad is None:
        quad = Quadrature.gauss_legendre(interval)
    L = interval.length
    mu = solve_characteristic(k, L)
    beta = mu * L
    emb = math.exp(-beta)
    denom = math.sinh(beta) - math.sin(beta)
    sigma = 1.0 - (math.cos(beta) - math.sin(beta) - emb) / denom
    coef_left = 0.5 * (1.0 + sigma)
    # (1-sigma)*exp(beta)/2 written without forming exp(beta)
    coef_right = (math.cos(beta) - math.sin(beta) - emb) / ((1.0 - emb * emb) - 2.0 * math.sin(beta) * emb)
    mode = EigenMode(
        k=k, mu=mu, lam=mu**4, sigma=sigma,
        coef_right=coef_right, coef_left=coef_left, norm=1.0, interval=interval,
    )
    nrm2 = quad.integrate(_raw_shape(mode, quad.nodes, 0) ** 2)
    if not nrm2 > 0:
        raise RuntimeError(f"mode {k} has non-positive norm {nrm2}")
    return EigenMode(
        k=k, mu=mu, lam=mu**4, sigma=sigma,
        coef_right=coef_right, coef_left=coef_left,
        norm=1.0 / math.sqrt(nrm2), interval=interval,
    )


def clamped_basis(count: int, interval: Interval, quad: Quadrature | None = None) -> list[EigenMode]:
    if quad is None:
        quad = Quadrature.gauss_legendre(interval)
    return [clamped_mode(k, interval, quad) for k in range(1, count + 1)]


def _values_on(field, nodes: np.ndarray) -> np.ndarray:
    vals = field(nodes) if callable(field) else np.asarray(field, dtype=float)
    return np.broadcast_to(np.asarray(vals, dtype=float), nodes.shape)


def inner_product(f, g, quad: Quadrature) -> float:
    """Integral of f*g over the interval; fields are callables or node arrays."""
    return quad.integrate(_values_on(f, quad.nodes) * _values_on(g, quad.nodes))


def project(field, modes: list[EigenMode], quad: Quadrature) -> np.ndarray:
    """Modal coefficient vector of a field against the normalized basis."""
    vals = _values_on(field, quad.nodes)
    table = np.stack([eval_mode(m, quad.nodes, 0) for m in modes])
    return table @ (quad.weights * vals)


def mode_matrix(modes: list[EigenMode], x: np.ndarray, order: int = 0) -> np.ndarray:
    """Stack of mode derivative values, shape (len(modes), len(x))."""
    return np.stack([eval_mode(m, x, order) for m in modes])
