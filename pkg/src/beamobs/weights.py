"""Carleman weight, multiplier coefficients, time cutoff, and coefficient bounds.

The weight is additively separable, quadratic in space and quartic in time:
``l(t, x) = lam * ((x - x0)^2 + (t - T)^2 * t^2)``.  All of its partial
derivatives are closed forms, so every coefficient below is evaluated exactly.

Two flavours of the expanded volume-term weights exist:

* :class:`MultiplierCoefficients` carries the hand-expanded polynomials as
  published (``f1..f4``, ``h1..h5``).
* :func:`volume_weights_consistent` carries the set under which the integrated
  identity balances exactly.  The two differ only in the ``f3``/``h3`` slot;
  :func:`beamobs.identity.audit_coefficients` quantifies the difference
  instead of silently papering over it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightField",
    "MultiplierCoefficients",
    "Cutoff",
    "coefficients",
    "base_coefficients",
    "printed_volume_weights",
    "volume_weights_consistent",
    "coefficient_table_csv",
    "coefficient_lower_bounds",
    "LowerBoundTable",
    "H_EXPONENTS",
]

# lambda-exponents expected for the h1..h5 lower bounds
H_EXPONENTS = (3, 7, 5, 3, 1)


@dataclass(frozen=True)
class WeightField:
    """Exponential Carleman weight exp(l) with closed-form partials.

    ``x0`` must sit strictly left of the interval when the weight is used with
    an interval starting at a > 0; the expanded f/h polynomials additionally
    require ``x0 == 0``.
    """

    lam: float
    T: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"weight parameter must be positive, got {self.lam}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")

    # -- spatial part: lam*(x-x0)^2 ------------------------------------
    def l_x(self, x):
        return 2.0 * self.lam * (np.asarray(x, dtype=float) - self.x0)

    def l_xx(self, x=None):
        return 2.0 * self.lam

    # third and fourth x-derivatives vanish identically (quadratic weight)

    # -- temporal part: lam*t^2*(t-T)^2 --------------------------------
    def l_t(self, t):
        t = np.asarray(t, dtype=float)
        return 2.0 * self.lam * t * (t - self.T) * (2.0 * t - self.T)

    def l_tt(self, t):
        t = np.asarray(t, dtype=float)
        return 2.0 * self.lam * (6.0 * t * t - 6.0 * t * self.T + self.T * self.T)

    def l_ttt(self, t):
        t = np.asarray(t, dtype=float)
        return 12.0 * self.lam * (2.0 * t - self.T)

    def l(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return self.lam * ((x - self.x0) ** 2 + (t - self.T) ** 2 * t * t)

    def theta(self, t, x):
        return np.exp(self.l(t, x))

    def partial(self, t, x, i: int, j: int):
        """d^{i+j} l / dx^i dt^j as an array broadcast over (t, x)."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(t.shape, x.shape)
        if i == 0 and j == 0:
            return np.broadcast_to(self.l(t, x), shape).copy()
        if i > 0 and j > 0:
            return np.zeros(shape)
        if j == 0:
            if i == 1:
                val = self.l_x(x)
            elif i == 2:
                val = np.full((), 2.0 * self.lam)
            else:
                val = np.zeros(())
        else:
            tt, T, lam = t, self.T, self.lam
            if j == 1:
                val = self.l_t(tt)
            elif j == 2:
                val = self.l_tt(tt)
            elif j == 3:
                val = self.l_ttt(tt)
            elif j == 4:
                val = np.full((), 24.0 * lam)
            else:
                val = np.zeros(())
        return np.broadcast_to(val, shape).copy()


@dataclass(frozen=True)
class MultiplierCoefficients:
    """Multiplier-identity coefficients at one point (t, x).

    ``a .. phi1`` are the defining combinations of weight partials; ``f1..f4``
    and ``h1..h5`` are the hand-expanded volume weights as published (these
    require x0 = 0).
    """

    a: float
    b: float
    g: float
    d: float
    phi: float
    phi1: float
    f1: float
    f2: float
    f3: float
    f4: float
    h1: float
    h2: float
    h3: float
    h4: float
    h5: float


def _base_coeffs(w: WeightField, t, x):
    lx = w.l_x(x)
    lxx = w.l_xx()
    lt = w.l_t(t)
    ltt = w.l_tt(t)
    a = lx**4 - 6.0 * lx**2 * lxx + 3.0 * lxx**2 + lt**2 - ltt
    b = 12.0 * lx * lxx - 4.0 * lx**3
    g = 6.0 * lx**2 - 6.0 * lxx
    d = -4.0 * lx
    phi = -8.0 * lx**2 * lxx
    phi1 = -6.0 * lxx
    return lx, lxx, lt, ltt, a, b, g, d, phi, phi1


def printed_volume_weights(w: WeightField, t, x):
    """Hand-expanded f/h polynomials as published, vectorized over (t, x)."""
    if w.x0 != 0.0:
        raise ValueError(
            "the expanded f/h coefficient polynomials are only defined for x0 = 0; "
            f"got x0 = {w.x0} (a, b, g, d, phi, phi1 remain available via base_coefficients)"
        )
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    lx, lxx, lt, ltt, a, b, g, d, phi, phi1 = _base_coeffs(w, t, x)
    lam = w.lam
    shape = np.broadcast_shapes(t.shape, x.shape)
    f1 = np.broadcast_to(32.0 * lam, shape).copy()
    f2 = np.broadcast_to(352.0 * lam**3 * x**2, shape).copy()
    f3 = np.broadcast_to(
        2304.0 * lam**5 * x**4 - 768.0 * lam**4 * x**2 + 192.0 * lam**3 * x + 320.0 * lam**3,
        shape,
    ).copy()
    lttt = w.l_ttt(t)
    a_phi = a - phi
    a_phi_t = 2.0 * lt * ltt - lttt  # time derivative of (a - phi); phi is static in t
    f4 = np.broadcast_to(
        1536.0 * lam**7 * x**6
        + 512.0 * lam**6 * x**4
        - 4224.0 * lam**5 * x**2
        + 384.0 * lam**4
        - 32.0 * lam**3 * x**2 * (lt**2 - ltt)
        + 2.0 * ltt * a_phi
        + 2.0 * lt * a_phi_t,
        shape,
    ).copy()
    return {
        "f1": f1,
        "f2": f2,
        "f3": f3,
        "f4": f4,
        "h1": np.broadcast_to(2.0 * ltt + 4.0 * lx**2 * lxx, shape).copy(),
        "h2": f4,
        "h3": f3 - np.broadcast_to(12.0 * ltt * lx**2, shape),
        "h4": f2 + np.broadcast_to(2.0 * ltt, shape),
        "h5": f1,
    }


def coefficients(w: WeightField, t: float, x: float) -> MultiplierCoefficients:
    """All multiplier coefficients at (t, x); f/h slots require x0 = 0."""
    _, _, _, _, a, b, g, d, phi, phi1 = _base_coeffs(w, t, x)
    fh = printed_volume_weights(w, t, x)
    return MultiplierCoefficients(
        a=float(a), b=float(b), g=float(g), d=float(d), phi=float(phi), phi1=float(phi1),
        **{k: float(v) for k, v in fh.items()},
    )


def base_coefficients(w: WeightField, t, x):
    """(a, b, g, d, phi, phi1) arrays at (t, x); valid for any x0 < a."""
    _, _, _, _, a, b, g, d, phi, phi1 = _base_coeffs(w, t, x)
    return a, b, g, d, phi, phi1


def volume_weights_consistent(w: WeightField, t, x):
    """Volume-term weights under which the integrated identity balances.

    Returns a dict with vectorized arrays ``f1, f2, f3, f4, ut2`` where
    ``ut2`` multiplies the squared time derivative.  ``f3`` here is
    ``256*lam^3*(9*lam^2*x^4 - 3*lam*x^2 + 2)``, which differs from the
    published expansion by ``192*lam^3*(1 - x)``; see audit_coefficients.
    """
    if w.x0 != 0.0:
        raise ValueError("volume weights are only defined for x0 = 0")
    lam = w.lam
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lt = w.l_t(t)
    ltt = w.l_tt(t)
    lttt = w.l_ttt(t)
    lx = w.l_x(x)
    lxx = 2.0 * lam
    a_phi = lx**4 - 6.0 * lx**2 * lxx + 3.0 * lxx**2 + lt**2 - ltt + 8.0 * lx**2 * lxx
    f4 = (
        1536.0 * lam**7 * x**6
        + 512.0 * lam**6 * x**4
        - 4224.0 * lam**5 * x**2
        + 384.0 * lam**4
        - 32.0 * lam**3 * x**2 * (lt**2 - ltt)
        + 2.0 * ltt * a_phi
        + 2.0 * lt * (2.0 * lt * ltt - lttt)
    )
    out = {
        "f1": np.broadcast_to(32.0 * lam, np.broadcast_shapes(x.shape, t.shape)).copy(),
        "f2": np.broadcast_to(352.0 * lam**3 * x**2, np.broadcast_shapes(x.shape, t.shape)).copy(),
        "f3": np.broadcast_to(
            256.0 * lam**3 * (9.0 * lam**2 * x**4 - 3.0 * lam * x**2 + 2.0),
            np.broadcast_shapes(x.shape, t.shape),
        ).copy(),
        "f4": np.broadcast_to(f4, np.broadcast_shapes(x.shape, t.shape)).copy(),
        "ut2": np.broadcast_to(2.0 * (ltt + 8.0 * lx**2 * lxx), np.broadcast_shapes(x.shape, t.shape)).copy(),
    }
    return out


# quintic smoothstep and exact bound constants for the time cutoff
_CHI_C1 = 15.0 / 4.0
_CHI_C2 = 40.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class Cutoff:
    """Time cutoff equal to one on [eps, T-eps] and zero near both ends.

    The ramps on [eps/2, eps] and its mirror are the quintic smoothstep
    6u^5 - 15u^4 + 10u^3, giving C^2 regularity with exact derivative bounds
    |chi'| <= c1/eps and |chi''| <= c2/eps^2, c1 = 15/4 and c2 = 40/sqrt(3).
    """

    epsilon: float
    T: float

    c1 = _CHI_C1
    c2 = _CHI_C2

    def __post_init__(self):
        if not 0.0 < self.epsilon < self.T / 2.0:
            raise ValueError(f"cutoff width must lie in (0, T/2), got {self.epsilon} with T={self.T}")

    def evaluate(self, t):
        """Return (chi, chi', chi'') arrays at times t in [0, T]."""
        t = np.asarray(t, dtype=float)
        eps, T = self.epsilon, self.T
        half = eps / 2.0
        chi = np.zeros_like(t)
        d1 = np.zeros_like(t)
        d2 = np.zeros_like(t)

        chi[(t >= eps) & (t <= T - eps)] = 1.0

        rise = (t > half) & (t < eps)
        u = (t[rise] - half) / half
        chi[rise] = ((6.0 * u - 15.0) * u + 10.0) * u**3
        d1[rise] = 30.0 * u**2 * (u - 1.0) ** 2 / half
        d2[rise] = 60.0 * u * (2.0 * u - 1.0) * (u - 1.0) / half**2

        fall = (t > T - eps) & (t < T - half)
        u = ((T - half) - t[fall]) / half
        chi[fall] = ((6.0 * u - 15.0) * u + 10.0) * u**3
        d1[fall] = -30.0 * u**2 * (u - 1.0) ** 2 / half
        d2[fall] = 60.0 * u * (2.0 * u - 1.0) * (u - 1.0) / half**2

        if t.ndim == 0:
            return float(chi), float(d1), float(d2)
        return chi, d1, d2

    def __call__(self, t):
        return self.evaluate(t)[0]


def coefficient_table_csv(lambdas, ts, xs, T: float) -> str:
    """Full multiplier-coefficient table over a (lambda, t, x) grid as CSV."""
    names = ["a", "b", "g", "d", "phi", "phi1",
             "f1", "f2", "f3", "f4", "h1", "h2", "h3", "h4", "h5"]
    lines = ["lambda,t,x," + ",".join(names)]
    for lam in np.atleast_1d(lambdas):
        w = WeightField(lam=float(lam), T=T)
        for t in np.atleast_1d(ts):
            for x in np.atleast_1d(xs):
                c = coefficients(w, float(t), float(x))
                vals = [lam, t, x] + [getattr(c, n) for n in names]
                lines.append(",".join(format(float(v), ".17g") for v in vals))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LowerBoundTable:
    """Scaled minima of the h-coefficients over a (t, x) grid, per lambda."""

    lambdas: np.ndarray
    minima: np.ndarray          # shape (n_lambda, 5): min h_i / lam^p_i
    all_positive: np.ndarray    # shape (n_lambda,), bool
    threshold: float | None     # smallest lambda with all five minima positive
    limits: np.ndarray          # minima row at the largest lambda

    def rows(self):
        for lam, mins, ok in zip(self.lambdas, self.minima, self.all_positive):
            yield float(lam), [float(v) for v in mins], bool(ok)


def coefficient_lower_bounds(
    lambdas,
    interval,
    T: float,
    nt: int = 201,
    nx: int = 201,
    use_consistent_f3: bool = False,
) -> LowerBoundTable:
    """Tabulate min over the space-time grid of h_i / lam^p_i for each lambda.

    ``use_consistent_f3`` switches the h3 slot to the identity-consistent f3;
    the default reproduces the published polynomials.
    """
    lambdas = np.asarray(sorted(float(v) for v in np.atleast_1d(lambdas)))
    if lambdas.size == 0:
        raise ValueError("lambda grid must be non-empty")
    tg = np.linspace(0.0, T, nt)[:, None]
    xg = np.asarray(np.linspace(interval.a, interval.b, nx))[None, :]
    minima = np.empty((lambdas.size, 5))
    for i, lam in enumerate(lambdas):
        w = WeightField(lam=float(lam), T=T)
        lt = w.l_t(tg)
        ltt = w.l_tt(tg)
        lx = w.l_x(xg)
        lxx = 2.0 * lam
        h1 = 2.0 * ltt + 4.0 * lx**2 * lxx
        if use_consistent_f3:
            f3 = 256.0 * lam**3 * (9.0 * lam**2 * xg**4 - 3.0 * lam * xg**2 + 2.0)
        else:
            f3 = (
                2304.0 * lam**5 * xg**4 - 768.0 * lam**4 * xg**2
                + 192.0 * lam**3 * xg + 320.0 * lam**3
            )
        f2 = 352.0 * lam**3 * xg**2
        a_phi = lx**4 - 6.0 * lx**2 * lxx + 3.0 * lxx**2 + lt**2 - ltt + 8.0 * lx**2 * lxx
        lttt = w.l_ttt(tg)
        f4 = (
            1536.0 * lam**7 * xg**6 + 512.0 * lam**6 * xg**4
            - 4224.0 * lam**5 * xg**2 + 384.0 * lam**4
            - 32.0 * lam**3 * xg**2 * (lt**2 - ltt)
            + 2.0 * ltt * a_phi + 2.0 * lt * (2.0 * lt * ltt - lttt)
        )
        h2 = f4
        h3 = f3 - 12.0 * ltt * lx**2
        h4 = f2 + 2.0 * ltt
        h5 = np.broadcast_to(32.0 * lam, h1.shape)
        for j, (h, p) in enumerate(zip((h1, h2, h3, h4, h5), H_EXPONENTS)):
            minima[i, j] = np.min(h / lam**p)
    all_positive = np.all(minima > 0.0, axis=1)
    threshold = None
    for lam, ok in zip(lambdas, all_positive):
        if ok:
            threshold = float(lam)
            break
    return LowerBoundTable(
        lambdas=lambdas,
        minima=minima,
        all_positive=all_positive,
        threshold=threshold,
        limits=minima[-1].copy(),
    )
