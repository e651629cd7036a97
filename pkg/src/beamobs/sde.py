"""Modal SDE integration for the stochastic beam, one shared Brownian motion.

Each retained mode k is a stochastic oscillator c'' + lam_k c = f_k + g_k dB/dt
driven by the same scalar increments.  The homogeneous part advances by the
exact phase rotation, so stiffness from lam_k ~ k^4 never constrains the step.
Forcings enter through the exact constant-source convolution weights, the
drift sampled at the step midpoint (second order globally) and the noise at
the left endpoint (the non-anticipating choice the stochastic integral needs).

Per-trial Brownian increments come from counter-keyed Philox streams, so a
trial's path depends only on (master seed, trial index), never on scheduling
or on how many modes are retained.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import EigenMode, Interval, Quadrature, eval_mode, mode_matrix, project

__all__ = [
    "SimulationConfig",
    "Forcing",
    "ModalTrajectory",
    "ModalEnsemble",
    "FieldSnapshot",
    "rotation_weights",
    "step_mode",
    "simulate_path",
    "simulate_ensemble",
    "reconstruct",
    "boundary_trace",
    "trajectory_csv",
]


@dataclass(frozen=True)
class SimulationConfig:
    interval: Interval
    horizon: float
    modes: int
    steps: int
    master_seed: int
    trials: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"need at least one step, got {self.steps}")
        if self.modes < 1 or self.trials < 1:
            raise ValueError("modes and trials must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must fit in 64 bits")

    @property
    def step_size(self) -> float:
        return self.horizon / self.steps

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)


@dataclass(frozen=True)
class Forcing:
    """Drift f and noise amplitude g, as fields, modal tables, or feedback.

    ``drift``/``noise`` are callables (t, x)->values; ``drift_modal`` /
    ``noise_modal`` map a time to the modal coefficient vector directly and
    take precedence.  ``drift_feedback(t, c, cp)`` adds an adapted modal drift
    evaluated on the pre-step state (left-endpoint convention).
    """

    drift: object = None
    noise: object = None
    drift_modal: object = None
    noise_modal: object = None
    drift_feedback: object = None

    @classmethod
    def none(cls) -> "Forcing":
        return cls()

    def modal_tables(self, modes, quad: Quadrature, tgrid: np.ndarray, which: str = "both"):
        """Projected (len(tgrid), M) drift and noise tables (None when absent)."""
        weighted = None
        if modes:
            weighted = mode_matrix(modes, quad.nodes, 0) * quad.weights

        def table(field, modal):
            if modal is not None:
                return np.stack([np.asarray(modal(t), dtype=float) for t in tgrid])
            if field is None or weighted is None:
                return None
            vals = np.asarray(field(tgrid[:, None], quad.nodes[None, :]), dtype=float)
            vals = np.broadcast_to(vals, (tgrid.size, quad.nodes.size))
            return vals @ weighted.T

        ftab = table(self.drift, self.drift_modal) if which in ("both", "drift") else None
        gtab = table(self.noise, self.noise_modal) if which in ("both", "noise") else None
        return ftab, gtab


@dataclass(frozen=True)
class ModalTrajectory:
    """One trial: modal positions/velocities on the grid plus its increments."""

    t: np.ndarray            # (n+1,)
    c: np.ndarray            # (n+1, M)
    cp: np.ndarray           # (n+1, M)
    increments: np.ndarray   # (n,)
    master_seed: int
    trial_index: int

    @property
    def modes_count(self) -> int:
        return self.c.shape[1]


@dataclass(frozen=True)
class ModalEnsemble:
    """Trial-stacked trajectories sharing a config: arrays lead with the trial axis."""

    t: np.ndarray            # (n+1,)
    c: np.ndarray            # (N, n+1, M)
    cp: np.ndarray           # (N, n+1, M)
    increments: np.ndarray   # (N, n)
    master_seed: int
    trial_indices: np.ndarray

    @property
    def trials(self) -> int:
        return self.c.shape[0]

    def trial(self, i: int) -> ModalTrajectory:
        return ModalTrajectory(
            t=self.t, c=self.c[i], cp=self.cp[i], increments=self.increments[i],
            master_seed=self.master_seed, trial_index=int(self.trial_indices[i]),
        )


@dataclass(frozen=True)
class FieldSnapshot:
    x: np.ndarray
    y: np.ndarray
    y_x: np.ndarray
    y_xx: np.ndarray
    y_xxx: np.ndarray
    y_xxxx: np.ndarray
    y_t: np.ndarray


def rotation_weights(omega, h: float):
    """(cos, sin/w, (1-cos)/w^2) for the one-step oscillator map, w -> 0 safe."""
    omega = np.asarray(omega, dtype=float)
    z = omega * h
    small = np.abs(z) < 1e-6
    zs = np.where(small, 1.0, z)
    cosv = np.cos(z)
    sinc = np.where(small, h * (1.0 - z * z / 6.0), np.sin(z) / np.where(omega == 0, 1.0, omega))
    qconv = np.where(
        small,
        0.5 * h * h * (1.0 - z * z / 12.0),
        (1.0 - cosv) / np.where(omega == 0, 1.0, omega) ** 2,
    )
    # the omega == 0 guards only suppress divide warnings; values come from the series
    sinc = np.where(omega == 0, h, sinc)
    qconv = np.where(omega == 0, 0.5 * h * h, qconv)
    return cosv, sinc, qconv


def step_mode(state, omega, f_k=0.0, g_k=0.0, dB=0.0, h: float = 0.0):
    """Advance (c, c') one step of c'' + w^2 c = f + g dB/dt.

    Homogeneous part: exact rotation by w*h.  Drift f_k (left endpoint) enters
    through the exact constant-source convolution ((1-cos)/w^2, sin/w); the
    noise increment enters with the left-endpoint kernel (sin/w for c, cos for
    c').
    """
    c, cp = state
    cosv, sinc, qconv = rotation_weights(omega, h)
    omega = np.asarray(omega, dtype=float)
    c_new = c * cosv + cp * sinc + f_k * qconv + g_k * sinc * dB
    cp_new = -c * omega * omega * sinc + cp * cosv + f_k * sinc + g_k * cosv * dB
    return c_new, cp_new


def _trial_increments(master_seed: int, trial_index: int, steps: int, h: float) -> np.ndarray:
    key = np.array([master_seed, trial_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(steps) * np.sqrt(h)


def simulate_ensemble(
    config: SimulationConfig,
    forcing: Forcing,
    initial,
    modes=None,
    quad: Quadrature | None = None,
    trial_indices=None,
) -> ModalEnsemble:
    """Integrate all trials of the modal system, vectorized over the trial axis.

    ``initial`` is the pair (c0, cp0) of modal coefficient vectors shared by
    every trial.  ``modes``/``quad`` are needed whenever the forcing is given
    as fields that must be projected.
    """
    m = config.modes
    n = config.steps
    h = config.step_size
    tgrid = config.time_grid()
    if trial_indices is None:
        trial_indices = np.arange(config.trials)
    trial_indices = np.asarray(trial_indices, dtype=np.int64)
    N = trial_indices.size

    c0 = np.asarray(initial[0], dtype=float)
    cp0 = np.asarray(initial[1], dtype=float)
    if c0.shape != (m,) or cp0.shape != (m,):
        raise ValueError(f"initial modal data must have shape ({m},)")

    if forcing.drift is not None or forcing.noise is not None:
        if modes is None:
            raise ValueError("field forcing needs the eigenmode list for projection")
        if quad is None:
            quad = Quadrature.gauss_legendre(config.interval)
    # drift at step midpoints, noise at left endpoints
    qq = quad or Quadrature.gauss_legendre(config.interval)
    retained = list(modes[:m]) if modes is not None else []
    ftab, _ = forcing.modal_tables(retained, qq, tgrid[:-1] + 0.5 * h, which="drift")
    _, gtab = forcing.modal_tables(retained, qq, tgrid[:-1], which="noise")
    if ftab is not None and ftab.shape[1] != m:
        raise ValueError("drift table width does not match the mode count")
    if gtab is not None and gtab.shape[1] != m:
        raise ValueError("noise table width does not match the mode count")

    lam = None
    if modes is not None:
        lam = np.array([mo.lam for mo in modes[:m]])
    else:
        raise ValueError("simulate needs the eigenmode list")
    omega = np.sqrt(lam)
    cosv, sinc, qconv = rotation_weights(omega, h)
    om2sinc = omega * omega * sinc

    dB = np.empty((N, n))
    for row, idx in enumerate(trial_indices):
        dB[row] = _trial_increments(config.master_seed, int(idx), n, h)

    c = np.empty((N, n + 1, m))
    cp = np.empty((N, n + 1, m))
    c[:, 0, :] = c0
    cp[:, 0, :] = cp0
    cur_c = np.broadcast_to(c0, (N, m)).copy()
    cur_p = np.broadcast_to(cp0, (N, m)).copy()
    for i in range(n):
        fk = ftab[i] if ftab is not None else None
        if forcing.drift_feedback is not None:
            fb = forcing.drift_feedback(tgrid[i], cur_c, cur_p)
            fk = fb if fk is None else fk + fb
        gk = gtab[i] if gtab is not None else None
        with np.errstate(over="ignore", invalid="ignore"):
            new_c = cur_c * cosv + cur_p * sinc
            new_p = -cur_c * om2sinc + cur_p * cosv
            if fk is not None:
                new_c += fk * qconv
                new_p += fk * sinc
            if gk is not None:
                kick = dB[:, i : i + 1]
                new_c += gk * sinc * kick
                new_p += gk * cosv * kick
        if not (np.isfinite(new_c).all() and np.isfinite(new_p).all()):
            bad = np.argwhere(~np.isfinite(new_c) | ~np.isfinite(new_p))
            trial, mode_idx = int(bad[0][0]), int(bad[0][1])
            raise FloatingPointError(
                f"non-finite modal state at step {i + 1}, trial {int(trial_indices[trial])}, mode {mode_idx + 1}"
            )
        cur_c, cur_p = new_c, new_p
        c[:, i + 1, :] = cur_c
        cp[:, i + 1, :] = cur_p
    return ModalEnsemble(
        t=tgrid, c=c, cp=cp, increments=dB,
        master_seed=config.master_seed, trial_indices=trial_indices,
    )


def simulate_path(
    config: SimulationConfig,
    forcing: Forcing,
    initial,
    trial_index: int = 0,
    modes=None,
    quad: Quadrature | None = None,
) -> ModalTrajectory:
    """Single-trial convenience wrapper around simulate_ensemble."""
    ens = simulate_ensemble(config, forcing, initial, modes=modes, quad=quad,
                            trial_indices=np.array([trial_index]))
    return ens.trial(0)


def reconstruct(trajectory: ModalTrajectory, modes, t_index: int, x_grid) -> FieldSnapshot:
    """Field values and derivatives at one grid time from the modal sums."""
    x = np.asarray(x_grid, dtype=float)
    m = trajectory.modes_count
    tables = [mode_matrix(modes[:m], x, order) for order in range(5)]
    ci = trajectory.c[t_index]
    vi = trajectory.cp[t_index]
    return FieldSnapshot(
        x=x,
        y=ci @ tables[0],
        y_x=ci @ tables[1],
        y_xx=ci @ tables[2],
        y_xxx=ci @ tables[3],
        y_xxxx=ci @ tables[4],
        y_t=vi @ tables[0],
    )


def boundary_trace(trajectory: ModalTrajectory, modes):
    """Time series of the second and third space derivatives at the right end."""
    m = trajectory.modes_count
    b = modes[0].interval.b
    v2 = np.array([eval_mode(mo, b, 2) for mo in modes[:m]])
    v3 = np.array([eval_mode(mo, b, 3) for mo in modes[:m]])
    return trajectory.c @ v2, trajectory.c @ v3


def trajectory_csv(trajectory: ModalTrajectory) -> str:
    """CSV dump with columns t, dB, then per-mode position and velocity."""
    m = trajectory.modes_count
    header = ["t", "dB"] + [f"c{k+1}" for k in range(m)] + [f"cp{k+1}" for k in range(m)]
    lines = [",".join(header)]
    n = trajectory.increments.size
    for i, t in enumerate(trajectory.t):
        db = trajectory.increments[i] if i < n else 0.0
        row = [t, db, *trajectory.c[i], *trajectory.cp[i]]
        lines.append(",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def project_initial(y0, y1, modes, quad: Quadrature):
    """Project closed-form initial data onto the modal basis."""
    zero = np.zeros(len(modes))
    c0 = project(y0, modes, quad) if y0 is not None else zero.copy()
    cp0 = project(y1, modes, quad) if y1 is not None else zero.copy()
    return c0, cp0
