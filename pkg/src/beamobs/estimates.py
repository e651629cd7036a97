"""Weighted-inequality verification: sweeps, ratios, and empirical constants.

Checks three inequalities on manufactured solutions and simulated ensembles:
the weighted interior bound for the zero-end system, its cutoff-windowed
variant for general data, and the boundary observability bound.  None of the
constants are known a priori; every report records the raw ratio of the two
sides so the harness can estimate the constant and regress it against its own
audited goldens.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .beam import Quadrature, eval_mode, mode_matrix
from .manufactured import ManufacturedField
from .sde import Forcing, ModalEnsemble, SimulationConfig, simulate_ensemble
from .weights import Cutoff, WeightField

__all__ = [
    "ManufacturedSolutionSpec",
    "SweepRow",
    "EstimateReport",
    "ObservabilityReport",
    "carleman_lhs_field",
    "carleman_rhs_field",
    "verify_carleman",
    "verify_revised_carleman",
    "verify_observability",
    "lambda_sweep",
    "random_modal_corpus",
]


@dataclass(frozen=True)
class ManufacturedSolutionSpec:
    """Closed-form solution with the drift that makes it exact and no noise."""

    field: ManufacturedField
    amplitude: float = 1.0
    name: str = "manufactured"

    def scaled(self) -> ManufacturedField:
        return self.field if self.amplitude == 1.0 else self.field.scaled(self.amplitude)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    lam: float
    lhs: float
    rhs: float
    ratio: float
    lhs_stderr: float = 0.0
    flag: str = "ok"
    extras: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class EstimateReport:
    inequality: str
    rows: tuple
    empirical_lambda0: float | None
    empirical_constant: float | None
    metadata: dict
    passed: bool

    def csv(self) -> str:
        extra_keys = sorted({k for r in self.rows for k in r.extras})
        header = ["scenario", "lambda", "lhs", "rhs", "ratio", "lhs_stderr", "flag"] + extra_keys
        lines = [",".join(header)]
        for r in self.rows:
            vals = [r.scenario, format(r.lam, ".17g"), format(r.lhs, ".17g"),
                    format(r.rhs, ".17g"), format(r.ratio, ".17g"),
                    format(r.lhs_stderr, ".17g"), r.flag]
            vals += [format(float(r.extras.get(k, float("nan"))), ".17g") for k in extra_keys]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def to_jsonable(self):
        return {
            "inequality": self.inequality,
            "rows": [
                {
                    "scenario": r.scenario, "lambda": r.lam, "lhs": r.lhs, "rhs": r.rhs,
                    "ratio": r.ratio, "lhs_stderr": r.lhs_stderr, "flag": r.flag,
                    **{f"extra_{k}": v for k, v in sorted(r.extras.items())},
                }
                for r in self.rows
            ],
            "empirical_lambda0": self.empirical_lambda0,
            "empirical_constant": self.empirical_constant,
            "metadata": self.metadata,
            "passed": self.passed,
        }


def _time_quadrature(T: float, panels: int = 8, order: int = 16):
    ref_x, ref_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, T, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return nodes, weights


def carleman_lhs_field(field: ManufacturedField, w: WeightField, interval, T: float,
                       xquad: Quadrature, tpanels: int = 8, torder: int = 16) -> float:
    """Weighted interior integral of the solution derivatives, closed form."""
    tn, tw = _time_quadrature(T, tpanels, torder)
    t2 = tn[:, None]
    xg = xquad.nodes[None, :]
    lam = w.lam
    th2 = w.theta(t2, xg) ** 2
    integrand = th2 * (
        lam * field.partial(t2, xg, 3, 0) ** 2
        + lam**3 * field.partial(t2, xg, 2, 0) ** 2
        + lam**5 * field.partial(t2, xg, 1, 0) ** 2
        + lam**7 * field.partial(t2, xg, 0, 0) ** 2
        + lam**3 * field.partial(t2, xg, 0, 1) ** 2
    )
    return float(tw @ (integrand @ xquad.weights))


def carleman_rhs_field(field: ManufacturedField, w: WeightField, interval, T: float,
                       xquad: Quadrature, tpanels: int = 8, torder: int = 16) -> float:
    """Boundary-trace plus weighted-forcing integral for a manufactured solution."""
    tn, tw = _time_quadrature(T, tpanels, torder)
    lam = w.lam
    theta_b2 = w.theta(tn, interval.b) ** 2
    boundary = float(tw @ (theta_b2 * (
        lam**3 * field.partial(tn, interval.b, 2, 0) ** 2
        + lam * field.partial(tn, interval.b, 3, 0) ** 2
    )))
    t2 = tn[:, None]
    xg = xquad.nodes[None, :]
    th2 = w.theta(t2, xg) ** 2
    f2 = field.forcing(t2, xg) ** 2
    volume = float(tw @ ((th2 * lam**2 * f2) @ xquad.weights))
    return boundary + volume


def _lambda0_from_profile(lams: np.ndarray, profile: np.ndarray) -> float:
    """Smallest grid value past which the ratio profile is non-increasing."""
    n = lams.size
    start = n - 1
    for i in range(n - 1, -1, -1):
        if i == n - 1 or profile[i] >= profile[i + 1]:
            start = i
        else:
            break
    return float(lams[start])


def verify_carleman(
    corpus,
    lambdas,
    interval,
    T: float,
    xquad: Quadrature,
    end_tol: float = 1e-8,
    tpanels: int = 8,
    torder: int = 16,
) -> EstimateReport:
    """Sweep the zero-end inequality over manufactured solutions and lambdas."""
    lams = np.asarray(sorted(float(v) for v in np.atleast_1d(lambdas)))
    if lams.size == 0:
        raise ValueError("lambda grid must be non-empty")
    rows = []
    per_lambda_max = np.zeros(lams.size)
    for spec in corpus:
        fld = spec.scaled()
        endr = fld.zero_end_residual(interval, T)
        if endr > end_tol:
            raise ValueError(
                f"{spec.name}: end values violate the zero-end requirement "
                f"(relative size {endr:.3e} > {end_tol:.1e})"
            )
        for i, lam in enumerate(lams):
            w = WeightField(lam=float(lam), T=T)
            lhs = carleman_lhs_field(fld, w, interval, T, xquad, tpanels, torder)
            rhs = carleman_rhs_field(fld, w, interval, T, xquad, tpanels, torder)
            if lhs == 0.0 and rhs == 0.0:
                rows.append(SweepRow(spec.name, float(lam), 0.0, 0.0, float("nan"), flag="degenerate"))
                continue
            ratio = lhs / rhs
            per_lambda_max[i] = max(per_lambda_max[i], ratio)
            rows.append(SweepRow(spec.name, float(lam), lhs, rhs, ratio))
    ok_rows = [r for r in rows if r.flag == "ok"]
    finite = all(np.isfinite(r.ratio) for r in ok_rows)
    lam0 = _lambda0_from_profile(lams, per_lambda_max) if ok_rows else None
    const = float(max(r.ratio for r in ok_rows if r.lam >= lam0)) if ok_rows else None
    return EstimateReport(
        inequality="carleman_zero_end",
        rows=tuple(rows),
        empirical_lambda0=lam0,
        empirical_constant=const,
        metadata={"corpus": [s.name for s in corpus], "end_tol": end_tol},
        passed=finite and bool(ok_rows),
    )


def lambda_sweep(spec: ManufacturedSolutionSpec, lambdas, interval, T: float,
                 xquad: Quadrature) -> EstimateReport:
    """Single-scenario sweep; identical mechanics, one scenario per row."""
    return verify_carleman([spec], lambdas, interval, T, xquad)


# --------------------------------------------------------------------------
# ensemble-based checks
# --------------------------------------------------------------------------

def _trapezoid_weights(ts: np.ndarray) -> np.ndarray:
    wt = np.zeros(ts.size)
    seg = np.diff(ts)
    wt[:-1] += 0.5 * seg
    wt[1:] += 0.5 * seg
    return wt


def _ensemble_weighted_interior(
    ens: ModalEnsemble, modes, w: WeightField, xquad: Quadrature,
    sel: np.ndarray, powers=(1, 3, 5, 7, 3),
):
    """Per-trial weighted interior integrals over the selected time indices."""
    m = ens.c.shape[2]
    V = [mode_matrix(modes[:m], xquad.nodes, order) for order in range(4)]
    ts = ens.t[sel]
    wt = _trapezoid_weights(ts)
    lam = w.lam
    out = np.zeros(ens.trials)
    for si, ti in enumerate(ts):
        th2 = w.theta(ti, xquad.nodes) ** 2
        ci = ens.c[:, sel[si], :]
        pi = ens.cp[:, sel[si], :]
        y0 = ci @ V[0]; y1 = ci @ V[1]; y2 = ci @ V[2]; y3 = ci @ V[3]
        yt = pi @ V[0]
        integrand = th2 * (
            lam ** powers[0] * y3**2
            + lam ** powers[1] * y2**2
            + lam ** powers[2] * y1**2
            + lam ** powers[3] * y0**2
            + lam ** powers[4] * yt**2
        )
        out += wt[si] * (integrand @ xquad.weights)
    return out


def _ensemble_tail_mass(ens: ModalEnsemble, modes, w: WeightField, xquad: Quadrature,
                        sel: np.ndarray):
    """Per-trial integral of theta^2 (y_t^2 + y^2) over the selected times."""
    m = ens.c.shape[2]
    V0 = mode_matrix(modes[:m], xquad.nodes, 0)
    ts = ens.t[sel]
    wt = _trapezoid_weights(ts)
    out = np.zeros(ens.trials)
    for si, ti in enumerate(ts):
        th2 = w.theta(ti, xquad.nodes) ** 2
        y0 = ens.c[:, sel[si], :] @ V0
        yt = ens.cp[:, sel[si], :] @ V0
        out += wt[si] * ((th2 * (yt**2 + y0**2)) @ xquad.weights)
    return out


def _ensemble_boundary_weighted(ens: ModalEnsemble, modes, w: WeightField, stride: int = 1):
    """Per-trial weighted squared boundary traces integrated in time."""
    m = ens.c.shape[2]
    b = modes[0].interval.b
    v2 = np.array([eval_mode(mo, b, 2) for mo in modes[:m]])
    v3 = np.array([eval_mode(mo, b, 3) for mo in modes[:m]])
    sel = np.arange(0, ens.t.size, stride)
    if sel[-1] != ens.t.size - 1:
        sel = np.append(sel, ens.t.size - 1)
    ts = ens.t[sel]
    wt = _trapezoid_weights(ts)
    th2 = w.theta(ts, b) ** 2
    lam = w.lam
    tr2 = ens.c[:, sel, :] @ v2
    tr3 = ens.c[:, sel, :] @ v3
    return (th2 * (lam**3 * tr2**2 + lam * tr3**2)) @ wt


def _forcing_sq_time_integral(tab: np.ndarray | None, ts: np.ndarray) -> float:
    """Trapezoid of the modal-truncated squared field norm."""
    if tab is None:
        return 0.0
    return float(_trapezoid_weights(ts) @ (tab**2).sum(axis=1))


def _weighted_forcing_volume(forcing: Forcing, modes, w: WeightField, xquad: Quadrature,
                             ts: np.ndarray) -> float:
    """int theta^2 lam^2 (f^2 + g^2) with modal-truncated forcing fields."""
    ftab, gtab = forcing.modal_tables(modes, xquad, ts)
    if ftab is None and gtab is None:
        return 0.0
    V0 = mode_matrix(modes, xquad.nodes, 0)
    wt = _trapezoid_weights(ts)
    total = 0.0
    th2 = w.theta(ts[:, None], xquad.nodes[None, :]) ** 2
    if ftab is not None:
        total += float(wt @ ((th2 * (ftab @ V0) ** 2) @ xquad.weights))
    if gtab is not None:
        total += float(wt @ ((th2 * (gtab @ V0) ** 2) @ xquad.weights))
    return w.lam**2 * total


def verify_revised_carleman(
    config: SimulationConfig,
    forcing: Forcing,
    initial,
    modes,
    xquad: Quadrature,
    epsilon: float,
    lambdas,
    time_stride: int = 2,
) -> EstimateReport:
    """Windowed inequality for general data: interior window versus boundary,
    forcing, and end-window tail terms carrying the 1/eps^4 coefficient."""
    T = config.horizon
    if not 0.0 < epsilon < T / 2.0:
        raise ValueError(f"epsilon must lie in (0, T/2), got {epsilon}")
    lams = np.asarray(sorted(float(v) for v in np.atleast_1d(lambdas)))
    if lams.size == 0:
        raise ValueError("lambda grid must be non-empty")
    ens = simulate_ensemble(config, forcing, initial, modes=modes, quad=xquad)
    tgrid = ens.t
    i_eps = int(round(epsilon / config.step_size))
    i_top = tgrid.size - 1 - i_eps

    inner = np.arange(i_eps, i_top + 1, time_stride)
    if inner[-1] != i_top:
        inner = np.append(inner, i_top)
    head = np.arange(0, i_eps + 1)
    tail = np.arange(i_top, tgrid.size)

    cut = Cutoff(epsilon=epsilon, T=T)
    rows = []
    per_lambda = np.zeros(lams.size)
    for i, lam in enumerate(lams):
        w = WeightField(lam=float(lam), T=T)
        lhs_trials = _ensemble_weighted_interior(ens, modes, w, xquad, inner)
        bdry_trials = _ensemble_boundary_weighted(ens, modes, w, stride=time_stride)
        fvol = _weighted_forcing_volume(forcing, modes[: config.modes], w, xquad,
                                        tgrid[:: time_stride])
        tail_mass = (_ensemble_tail_mass(ens, modes, w, xquad, head)
                     + _ensemble_tail_mass(ens, modes, w, xquad, tail))
        tail_coef = float(lam) ** 2 / epsilon**4
        rhs_trials = bdry_trials + fvol + tail_coef * tail_mass
        lhs = float(lhs_trials.mean())
        rhs = float(rhs_trials.mean())
        if rhs == 0.0 and lhs == 0.0:
            rows.append(SweepRow("ensemble", float(lam), 0.0, 0.0, float("nan"), flag="degenerate"))
            continue
        ratio = lhs / rhs
        per_lambda[i] = ratio
        stderr = float(lhs_trials.std(ddof=1) / np.sqrt(ens.trials)) if ens.trials > 1 else 0.0
        rows.append(SweepRow(
            "ensemble", float(lam), lhs, rhs, ratio, lhs_stderr=stderr,
            extras={
                "tail_coefficient": tail_coef,
                "tail_mass": float(tail_mass.mean()),
                "boundary": float(bdry_trials.mean()),
                "forcing_volume": fvol,
            },
        ))
    ok_rows = [r for r in rows if r.flag == "ok"]
    lam0 = _lambda0_from_profile(lams, per_lambda) if ok_rows else None
    const = float(max(r.ratio for r in ok_rows if r.lam >= lam0)) if ok_rows else None
    return EstimateReport(
        inequality="carleman_windowed",
        rows=tuple(rows),
        empirical_lambda0=lam0,
        empirical_constant=const,
        metadata={
            "epsilon": epsilon,
            "cutoff_c1": cut.c1,
            "cutoff_c2": cut.c2,
            "commutator_bound": 2.0 * cut.c2**2 + 8.0 * cut.c1**2 * epsilon**2,
            "trials": config.trials,
            "seed": config.master_seed,
        },
        passed=all(np.isfinite(r.ratio) for r in ok_rows) and bool(ok_rows),
    )


# --------------------------------------------------------------------------
# observability
# --------------------------------------------------------------------------

def random_modal_corpus(count: int, modes_count: int, seed: int) -> np.ndarray:
    """Reproducible family of initial modal data, iid uniform on [-1, 1].

    Shape (count, 2, modes_count): per datum the position and velocity rows.
    """
    out = np.empty((count, 2, modes_count))
    for i in range(count):
        key = np.array([seed, (1 << 48) + i], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        out[i] = gen.uniform(-1.0, 1.0, size=(2, modes_count))
    return out


@dataclass(frozen=True)
class ObservabilityReport:
    rows: tuple              # per-datum dicts
    empirical_constant: float | None
    worst_datum: int | None
    degenerate: bool
    metadata: dict
    passed: bool

    def csv(self) -> str:
        header = "datum,lhs,rhs,ratio,boundary_term,flag"
        lines = [header]
        for r in self.rows:
            lines.append(",".join([
                str(r["datum"]), format(r["lhs"], ".17g"), format(r["rhs"], ".17g"),
                format(r["ratio"], ".17g"), format(r["boundary_term"], ".17g"), r["flag"],
            ]))
        return "\n".join(lines) + "\n"

    def to_jsonable(self):
        return {
            "rows": list(self.rows),
            "empirical_constant": self.empirical_constant,
            "worst_datum": self.worst_datum,
            "degenerate": self.degenerate,
            "metadata": self.metadata,
            "passed": self.passed,
        }


def verify_observability(
    corpus: np.ndarray,
    config: SimulationConfig,
    forcing: Forcing,
    modes,
    xquad: Quadrature,
    recorded_lambda: float | None = None,
    trace_stride: int = 1,
) -> ObservabilityReport:
    """Terminal-state norm against unweighted boundary observation plus forcing.

    Both sides are squared mean-square quantities: the left side is the
    expected terminal energy (curvature seminorm plus velocity), the right
    side the expected time integral of the squared boundary traces plus the
    squared forcing norms.
    """
    m = config.modes
    lam_vec = np.array([mo.lam for mo in modes[:m]])
    b = modes[0].interval.b
    v2 = np.array([eval_mode(mo, b, 2) for mo in modes[:m]])
    v3 = np.array([eval_mode(mo, b, 3) for mo in modes[:m]])

    ftab, gtab = forcing.modal_tables(modes[:m], xquad, np.linspace(0.0, config.horizon, config.steps + 1))
    tgrid = np.linspace(0.0, config.horizon, config.steps + 1)
    f_sq = _forcing_sq_time_integral(ftab, tgrid)
    g_sq = _forcing_sq_time_integral(gtab, tgrid)

    rows = []
    ratios = []
    for i in range(corpus.shape[0]):
        c0, cp0 = corpus[i, 0], corpus[i, 1]
        cfg_i = SimulationConfig(
            interval=config.interval, horizon=config.horizon, modes=m,
            steps=config.steps, master_seed=config.master_seed + i + 1,
            trials=config.trials,
        )
        ens = simulate_ensemble(cfg_i, forcing, (c0, cp0), modes=modes, quad=xquad)
        term = (lam_vec * ens.c[:, -1, :] ** 2).sum(axis=1) + (ens.cp[:, -1, :] ** 2).sum(axis=1)
        lhs = float(term.mean())

        sel = np.arange(0, tgrid.size, trace_stride)
        if sel[-1] != tgrid.size - 1:
            sel = np.append(sel, tgrid.size - 1)
        wt = _trapezoid_weights(tgrid[sel])
        tr2 = ens.c[:, sel, :] @ v2
        tr3 = ens.c[:, sel, :] @ v3
        boundary = float((((tr2**2 + tr3**2) @ wt)).mean())
        rhs = boundary + f_sq + g_sq
        if lhs == 0.0 and rhs == 0.0:
            rows.append({"datum": i, "lhs": 0.0, "rhs": 0.0, "ratio": float("nan"),
                         "boundary_term": 0.0, "flag": "degenerate"})
            continue
        ratio = lhs / rhs
        ratios.append((ratio, i))
        rows.append({"datum": i, "lhs": lhs, "rhs": rhs, "ratio": ratio,
                     "boundary_term": boundary, "flag": "ok"})
    if not ratios:
        return ObservabilityReport(
            rows=tuple(rows), empirical_constant=None, worst_datum=None,
            degenerate=True, metadata={"trials": config.trials}, passed=True,
        )
    const, worst = max(ratios)
    return ObservabilityReport(
        rows=tuple(rows),
        empirical_constant=float(const),
        worst_datum=int(worst),
        degenerate=False,
        metadata={
            "trials": config.trials,
            "seed": config.master_seed,
            "recorded_lambda": recorded_lambda,
            "forcing_sq_norm": f_sq + g_sq,
        },
        passed=bool(np.isfinite(const)),
    )
