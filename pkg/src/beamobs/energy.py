"""Energy functional, discrete energy-balance residual, two-way growth check.

The energy is the squared velocity norm plus the squared curvature norm; in
modal coordinates that is sum cp_k^2 + lam_k c_k^2, which is exact for the
truncated system by orthonormality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import Quadrature
from .sde import Forcing, ModalEnsemble, ModalTrajectory

__all__ = [
    "energy",
    "energy_series",
    "EnergyRecord",
    "ensemble_energy",
    "fourth_order_boundedness",
    "ito_identity_residual",
    "energy_estimate_check",
]


def energy(c, cp, lambdas) -> float:
    """Modal energy sum cp_k^2 + lam_k c_k^2 of one state."""
    c = np.asarray(c, dtype=float)
    cp = np.asarray(cp, dtype=float)
    return float(np.dot(cp, cp) + np.dot(np.asarray(lambdas), c * c))


def energy_series(traj: ModalTrajectory, lambdas) -> np.ndarray:
    lam = np.asarray(lambdas)[: traj.modes_count]
    return (traj.cp**2).sum(axis=1) + (lam * traj.c**2).sum(axis=1)


@dataclass(frozen=True)
class EnergyRecord:
    """Ensemble energy statistics on the time grid, per-trial samples kept."""

    t: np.ndarray
    samples: np.ndarray            # (trials, len(t))
    mean: np.ndarray
    stderr: np.ndarray
    theory: np.ndarray | None = None

    def csv(self) -> str:
        header = "t,mean_energy,stderr" + (",theory" if self.theory is not None else "")
        lines = [header]
        for i in range(self.t.size):
            row = [self.t[i], self.mean[i], self.stderr[i]]
            if self.theory is not None:
                row.append(self.theory[i])
            lines.append(",".join(format(v, ".17g") for v in row))
        return "\n".join(lines) + "\n"


def ensemble_energy(ens: ModalEnsemble, lambdas, theory=None) -> EnergyRecord:
    lam = np.asarray(lambdas)[: ens.c.shape[2]]
    E = (ens.cp**2).sum(axis=2) + (lam * ens.c**2).sum(axis=2)
    mean = E.mean(axis=0)
    if ens.trials > 1:
        stderr = E.std(axis=0, ddof=1) / np.sqrt(ens.trials)
    else:
        stderr = np.zeros_like(mean)
    th = None if theory is None else np.asarray(theory, dtype=float)
    return EnergyRecord(t=ens.t, samples=E, mean=mean, stderr=stderr, theory=th)


def fourth_order_boundedness(ens: ModalEnsemble, lambdas) -> dict:
    """Qualitative no-blow-up check of the modal fourth-derivative norm.

    The squared norm of the fourth space derivative is sum lam_k^2 c_k^2 in
    modal coordinates.  Returns its ensemble-mean initial, final, and peak
    values plus a finiteness flag; no constant is asserted.
    """
    lam = np.asarray(lambdas)[: ens.c.shape[2]]
    h4 = (lam**2 * ens.c**2).sum(axis=2).mean(axis=0)
    return {
        "initial": float(h4[0]),
        "final": float(h4[-1]),
        "peak": float(h4.max()),
        "finite": bool(np.isfinite(h4).all()),
    }


def ito_identity_residual(traj: ModalTrajectory, modes, forcing: Forcing, quad: Quadrature):
    """Residual of the pathwise energy balance on the stored grid.

    r(t) = E(t) - E(0) - 2 int <f, y_t> ds - 2 sum <g, y_t> dB - int |g|_M^2 ds
    with the drift integral by trapezoid, the martingale sum with left-point
    states, and |g|_M^2 the modal-truncated squared norm.  Returns (r, max|r|).
    """
    if traj.increments is None:
        raise ValueError("trajectory carries no Brownian increments")
    m = traj.modes_count
    lam = np.array([mo.lam for mo in modes[:m]])
    E = energy_series(traj, lam)
    ftab, gtab = forcing.modal_tables(modes[:m], quad, traj.t)

    r = E - E[0]
    if ftab is not None:
        integrand = 2.0 * (ftab * traj.cp).sum(axis=1)
        h = np.diff(traj.t)
        drift = np.concatenate([[0.0], np.cumsum(0.5 * h * (integrand[:-1] + integrand[1:]))])
        r = r - drift
    if gtab is not None:
        mart_steps = 2.0 * (gtab[:-1] * traj.cp[:-1]).sum(axis=1) * traj.increments
        r[1:] -= np.cumsum(mart_steps)
        qv_steps = (gtab[:-1] ** 2).sum(axis=1) * np.diff(traj.t)
        r[1:] -= np.cumsum(qv_steps)
    return r, float(np.abs(r).max())


@dataclass(frozen=True)
class EstimateCheck:
    """Two-way growth-estimate report over an (s, t) grid."""

    times: np.ndarray
    ratios: np.ndarray       # (grid, grid); ratios[i, j] = norm(t_j) / denom(s_i)
    empirical_c: float
    degenerate: bool


def energy_estimate_check(
    ens: ModalEnsemble,
    lambdas,
    forcing_sq_norm: float = 0.0,
    grid: int = 9,
) -> EstimateCheck:
    """Empirical constant of the two-way bound between states at any two times.

    For all grid pairs (s, t) in both orders, the ratio of the mean-square
    state norm at t to (state norm at s + forcing norms).  ``forcing_sq_norm``
    is the squared combined forcing norm entering the denominator.
    """
    lam = np.asarray(lambdas)[: ens.c.shape[2]]
    E = (ens.cp**2).sum(axis=2) + (lam * ens.c**2).sum(axis=2)
    idx = np.linspace(0, ens.t.size - 1, grid).round().astype(int)
    norms = np.sqrt(E[:, idx].mean(axis=0))
    fn = np.sqrt(max(forcing_sq_norm, 0.0))
    if norms.max() == 0.0 and fn == 0.0:
        return EstimateCheck(times=ens.t[idx], ratios=np.zeros((grid, grid)),
                             empirical_c=0.0, degenerate=True)
    denom = norms[:, None] + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(denom > 0.0, norms[None, :] / denom, np.nan)
    finite = ratios[np.isfinite(ratios)]
    return EstimateCheck(
        times=ens.t[idx],
        ratios=ratios,
        empirical_c=float(finite.max()) if finite.size else 0.0,
        degenerate=False,
    )
