"""Closed-form space-time fields built from separable terms.

Each field is a finite sum phi_i(t) * psi_i(x) of 1-D profiles that are closed
under differentiation (polynomials and harmonic sums), so every mixed partial
needed by the identity and estimate checks is exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet

__all__ = [
    "PolyProfile",
    "HarmonicProfile",
    "ManufacturedField",
    "clamped_bump",
    "time_bump",
    "identity_corpus",
    "solution_corpus",
]


class PolyProfile:
    """Polynomial profile with exact derivatives of every order."""

    def __init__(self, poly: np.polynomial.Polynomial):
        self.poly = poly
        self._derivs = [poly]

    @classmethod
    def from_roots(cls, roots, scale: float = 1.0) -> "PolyProfile":
        return cls(np.polynomial.Polynomial.fromroots(roots) * scale)

    def eval(self, s, order: int = 0):
        while len(self._derivs) <= order:
            self._derivs.append(self._derivs[-1].deriv())
        return self._derivs[order](np.asarray(s, dtype=float))


class HarmonicProfile:
    """Sum of amp*sin(freq*s + phase) terms; differentiation shifts the phase."""

    def __init__(self, terms):
        self.terms = [(float(a), float(w), float(p)) for a, w, p in terms]

    def eval(self, s, order: int = 0):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        shift = order * np.pi / 2.0
        for a, w, p in self.terms:
            out = out + a * w**order * np.sin(w * s + p + shift)
        return out


@dataclass(frozen=True)
class ManufacturedField:
    """Finite sum of separable closed-form terms phi(t) * psi(x)."""

    terms: tuple

    def partial(self, t, x, i: int = 0, j: int = 0):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(t.shape, x.shape))
        for time_p, space_p in self.terms:
            out = out + time_p.eval(t, j) * space_p.eval(x, i)
        return out

    def __call__(self, t, x):
        return self.partial(t, x, 0, 0)

    def forcing(self, t, x):
        """Drift that makes the field an exact solution: y_tt + y_xxxx."""
        return self.partial(t, x, 0, 2) + self.partial(t, x, 4, 0)

    def jet(self, t, x, nx: int = 4, nt: int = 2) -> Jet:
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(t.shape, x.shape)
        tab = np.zeros((nx + 1, nt + 1) + shape)
        for i in range(nx + 1):
            for j in range(nt + 1):
                tab[i, j] = self.partial(t, x, i, j)
        return Jet(tab)

    def scaled(self, amplitude: float) -> "ManufacturedField":
        return ManufacturedField(
            terms=tuple((_Scaled(tp, amplitude), sp) for tp, sp in self.terms)
        )

    # -- admissibility checks used by quadrature-based consumers --------
    def clamped_residual(self, interval, T: float, samples: int = 33) -> float:
        """Largest boundary value/slope relative to the field scale."""
        ts = np.linspace(0.0, T, samples)
        worst = 0.0
        for order in (0, 1):
            for xb in (interval.a, interval.b):
                worst = max(worst, float(np.abs(self.partial(ts, xb, order, 0)).max()))
        scale = max(1e-300, float(np.abs(self.partial(
            ts[:, None], np.linspace(interval.a, interval.b, samples)[None, :])).max()))
        return worst / scale

    def zero_end_residual(self, interval, T: float, samples: int = 33) -> float:
        """Largest end-time value of the field and its velocity, relative."""
        xs = np.linspace(interval.a, interval.b, samples)
        worst = 0.0
        for order in (0, 1):
            for tb in (0.0, T):
                worst = max(worst, float(np.abs(self.partial(tb, xs, 0, order)).max()))
        scale = max(1e-300, float(np.abs(self.partial(
            np.linspace(0, T, samples)[:, None], xs[None, :])).max()))
        return worst / scale


class _Scaled:
    def __init__(self, profile, factor: float):
        self.profile = profile
        self.factor = float(factor)

    def eval(self, s, order: int = 0):
        return self.factor * self.profile.eval(s, order)


def clamped_bump(interval, extra_roots=()) -> PolyProfile:
    """(x-a)^2 (b-x)^2 times optional extra linear factors."""
    roots = [interval.a, interval.a, interval.b, interval.b, *extra_roots]
    return PolyProfile.from_roots(roots)


def time_bump(T: float, extra_roots=()) -> PolyProfile:
    """t^3 (T-t)^3 times optional extra linear factors."""
    roots = [0.0, 0.0, 0.0, T, T, T, *extra_roots]
    return PolyProfile.from_roots(roots, scale=-1.0)


def identity_corpus(interval, T: float, count: int = 5, seed: int = 42):
    """Fields for pointwise identity checks; smoothness is all that matters.

    The first entry is the clamped polynomial bump; the rest mix random
    harmonic and polynomial separable terms.
    """
    rng = np.random.default_rng(seed)
    fields = [ManufacturedField(terms=((time_bump(T), clamped_bump(interval)),))]
    while len(fields) < count:
        terms = []
        for _ in range(3):
            if rng.random() < 0.5:
                tp = HarmonicProfile([(rng.uniform(0.5, 2.0), rng.uniform(0.5, 3.0) / T, rng.uniform(0, 2 * np.pi))])
            else:
                tp = PolyProfile(np.polynomial.Polynomial(rng.uniform(-1, 1, size=4) / max(T, 1.0) ** np.arange(4)))
            if rng.random() < 0.5:
                sp = HarmonicProfile([(rng.uniform(0.5, 2.0), rng.uniform(0.5, 4.0), rng.uniform(0, 2 * np.pi))])
            else:
                sp = PolyProfile(np.polynomial.Polynomial(rng.uniform(-1, 1, size=5)))
            terms.append((tp, sp))
        fields.append(ManufacturedField(terms=tuple(terms)))
    return fields


def solution_corpus(interval, T: float, count: int = 5):
    """Clamped zero-end closed-form solutions for the estimate sweeps."""
    a, b = interval.a, interval.b
    mid = 0.5 * (a + b)
    fields = [
        ManufacturedField(terms=((time_bump(T), clamped_bump(interval)),)),
        ManufacturedField(terms=((time_bump(T, extra_roots=(1.5 * T,)), clamped_bump(interval, extra_roots=(mid,))),)),
        ManufacturedField(terms=((
            HarmonicProfile([(0.75, np.pi / T, 0.0), (-0.25, 3 * np.pi / T, 0.0)]),  # sin^3(pi t / T)
            clamped_bump(interval),
        ),)),
        ManufacturedField(terms=((time_bump(T), PolyProfile.from_roots([a, a, a, b, b], scale=-1.0)),)),
        ManufacturedField(terms=(
            (time_bump(T), clamped_bump(interval, extra_roots=(2 * b - a,))),
            (time_bump(T, extra_roots=(-0.5 * T,)), clamped_bump(interval)),
        )),
    ]
    return fields[:count]
