"""Pointwise and integrated verification of the weighted multiplier identity.

Two fully independent code paths evaluate the identity's two sides:

* the left side multiplies the raw equation residual by the weighted
  multiplier and adds the exact time-boundary derivative, all from
  hand-written product expansions of u = exp(l) * y;
* the right side evaluates the expanded brace groups through the jet algebra,
  building every coefficient from its defining combination of weight partials.

One transcription slip in the published expansion is corrected here: the
u_x^2 volume group needs the third x-derivative of B - (G - Phi1)_x, not the
second.  With that correction the identity balances exactly (symbolically for
generic weights); audit_coefficients quantifies the induced difference in the
expanded f3/h3 polynomials instead of hiding it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, asdict

import numpy as np

from .beam import Quadrature, eval_mode, mode_matrix
from .jets import Jet
from .manufactured import ManufacturedField
from .sde import Forcing, ModalEnsemble
from .weights import (
    Cutoff,
    WeightField,
    printed_volume_weights,
    volume_weights_consistent,
)

__all__ = [
    "pointwise_identity_residual",
    "identity_lhs",
    "identity_rhs",
    "rederived_volume_weights",
    "audit_coefficients",
    "AuditReport",
    "IdentityBreakdown",
    "integrated_balance",
    "boundary_term_check",
]


# --------------------------------------------------------------------------
# jet-based right side
# --------------------------------------------------------------------------

def _weight_jet(w: WeightField, t, x, nx: int = 8, nt: int = 4) -> Jet:
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    shape = np.broadcast_shapes(t.shape, x.shape)
    tab = np.zeros((nx + 1, nt + 1) + shape)
    for i in range(nx + 1):
        for j in range(nt + 1):
            tab[i, j] = w.partial(t, x, i, j)
    return Jet(tab)


def _coefficient_jets(w: WeightField, t, x):
    l = _weight_jet(w, t, x)
    lx = l.dx()
    lxx = l.dx(2)
    lxxx = l.dx(3)
    lxxxx = l.dx(4)
    lt = l.dt()
    ltt = l.dt(2)
    A = lx**4 + 4 * lx * lxxx - lxxxx - 6 * lx**2 * lxx + 3 * lxx**2 + lt**2 - ltt
    G = 6 * lx**2 - 6 * lxx
    B = 12 * lx * lxx - 4 * lx**3 - 4 * lxxx
    D = -4 * lx
    phi1 = -6 * lxx
    phi = -8 * lx**2 * lxx
    gp = G - phi1
    e = B - gp.dx()
    return {
        "l": l, "lx": lx, "lt": lt, "ltt": ltt,
        "A": A, "B": B, "G": G, "D": D, "phi": phi, "phi1": phi1, "gp": gp, "e": e,
    }


def _volume_coefficient_jets(cj):
    """Coefficient multipliers of the squared-derivative volume terms."""
    A, D, phi, phi1, gp, e = cj["A"], cj["D"], cj["phi"], cj["phi1"], cj["gp"], cj["e"]
    lt = cj["lt"]
    a_phi = A - phi
    c_u2 = (
        -(gp.dx() * phi).dx()
        - (a_phi * e).dx()
        + phi.dt(2)
        + (gp * phi).dx(2)
        + phi.dx(4)
        + (a_phi * phi1).dx(2)
        - (a_phi * D).dx(3)
        + 2 * a_phi * phi
        + 2 * (lt * a_phi).dt()
    )
    # third derivative here; the published statement's second is the known slip
    c_ux2 = (
        -e.dx(3)
        - 4 * phi.dx(2)
        + 2 * gp.dx() * e
        - (gp * e).dx()
        - (gp.dx() * phi1).dx()
        + (gp.dx() * D).dx(2)
        - 2 * gp * phi
        - 2 * a_phi * phi1
        + 3 * (a_phi * D).dx()
    )
    c_uxx2 = (
        3 * e.dx()
        + phi1.dx(2)
        + 2 * phi
        + 2 * gp * phi1
        - 2 * gp.dx() * D
        - (gp * D).dx()
    )
    c_uxxx2 = -D.dx() - 2 * phi1
    return c_u2, c_ux2, c_uxx2, c_uxxx2


def identity_rhs(field: ManufacturedField, w: WeightField, t, x):
    """Expanded right side of the identity, deterministic reduction, via jets."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    cj = _coefficient_jets(w, t, x)
    theta = cj["l"].exp()
    u = theta * field.jet(t, x, nx=4, nt=2)
    A, D, phi, phi1, gp, e = cj["A"], cj["D"], cj["phi"], cj["phi1"], cj["gp"], cj["e"]
    lt, ltt = cj["lt"], cj["ltt"]
    a_phi = A - phi

    ux = u.dx()
    uxx = u.dx(2)
    uxxx = u.dx(3)
    u2 = u * u
    ux2 = ux * ux
    uxx2 = uxx * uxx

    g3 = (e * ux2 - phi.dx() * u2 + a_phi * D * u2).value(3, 0)
    g2 = (
        -3 * e.dx() * ux2
        + phi1 * uxx2
        - phi * ux2
        + gp.dx() * D * ux2
        + 3 * phi.dx(2) * u2
        + gp * phi * u2
        + a_phi * phi1 * u2
        - 3 * (a_phi * D).dx() * u2
    ).value(2, 0)
    g1 = (
        3 * e.dx(2) * ux2
        - 3 * e * uxx2
        - 2 * phi1.dx() * uxx2
        + 2 * uxxx * phi * u
        + D * (uxxx * uxxx)
        + 5 * phi.dx() * ux2
        - 3 * phi.dx(3) * u2
        + gp * e * ux2
        + gp.dx() * phi1 * ux2
        - 2 * (gp.dx() * D).dx() * ux2
        + gp * D * uxx2
        + gp.dx() * phi * u2
        - 2 * (gp * phi).dx() * u2
        - 2 * (a_phi * phi1).dx() * u2
        + a_phi * e * u2
        + 3 * (a_phi * D).dx(2) * u2
        - 3 * a_phi * D * ux2
    ).value(1, 0)

    c_u2, c_ux2, c_uxx2, c_uxxx2 = _volume_coefficient_jets(cj)
    vol = (
        c_u2.value() * u.value() ** 2
        + c_ux2.value() * ux.value() ** 2
        + c_uxx2.value() * uxx.value() ** 2
        + c_uxxx2.value() * uxxx.value() ** 2
    )

    ut = u.value(0, 1)
    vel = 2.0 * (ltt.value() - phi.value()) * ut**2

    q = e * ux + phi1 * uxx + D * uxxx
    mixer = uxxx + gp * ux
    cross1 = -2.0 * (
        ut * q.value(0, 1)
        + 2.0 * (lt * u.dt() * mixer).value(1, 0)
    )
    cross2 = -2.0 * (
        2.0 * (lt * mixer).value(0, 1) * ux.value()
        - 2.0 * cj["l"].value(1, 1) * ut * mixer.value()
    )

    p = -2.0 * lt.value() * ut + q.value() + phi.value() * u.value()
    end = -2.0 * (lt * a_phi * u2 - 2 * lt * ux * mixer).value(0, 1)

    return g3 + g2 + g1 + vol + vel + cross1 + cross2 + 2.0 * p**2 + end


# --------------------------------------------------------------------------
# direct left side
# --------------------------------------------------------------------------

def _u_partials(field: ManufacturedField, w: WeightField, t, x):
    """Hand-expanded partials of u = exp(l) y for the additively separable weight."""
    th = w.theta(t, x)
    lx = w.l_x(x)
    lxx = w.l_xx()
    lt = w.l_t(t)
    ltt = w.l_tt(t)
    y = lambda i, j: field.partial(t, x, i, j)
    qx2 = lx * lx + lxx
    qx3 = lx**3 + 3.0 * lx * lxx
    out = {
        "u": th * y(0, 0),
        "u_t": th * (lt * y(0, 0) + y(0, 1)),
        "u_tt": th * ((lt * lt + ltt) * y(0, 0) + 2.0 * lt * y(0, 1) + y(0, 2)),
        "u_x": th * (lx * y(0, 0) + y(1, 0)),
        "u_xx": th * (qx2 * y(0, 0) + 2.0 * lx * y(1, 0) + y(2, 0)),
        "u_xxx": th * (qx3 * y(0, 0) + 3.0 * qx2 * y(1, 0) + 3.0 * lx * y(2, 0) + y(3, 0)),
    }
    # mixed orders: the weight is additively separable, so d/dt just multiplies
    # the x-expansion by l_t and advances each y slot one t-order
    out["u_xt"] = lt * out["u_x"] + th * (lx * y(0, 1) + y(1, 1))
    out["u_xxt"] = lt * out["u_xx"] + th * (qx2 * y(0, 1) + 2.0 * lx * y(1, 1) + y(2, 1))
    out["u_xxxt"] = lt * out["u_xxx"] + th * (
        qx3 * y(0, 1) + 3.0 * qx2 * y(1, 1) + 3.0 * lx * y(2, 1) + y(3, 1)
    )
    return out, th, lx, lxx, lt, ltt


def identity_lhs(field: ManufacturedField, w: WeightField, t, x):
    """Multiplier times the raw operator plus the exact time-derivative term."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    up, th, lx, lxx, lt, ltt = _u_partials(field, w, t, x)
    e = -4.0 * lx**3            # B - (G - Phi1)_x for this weight (l_xxx = 0)
    d = -4.0 * lx
    phi1 = -6.0 * lxx
    phi = -8.0 * lx * lx * lxx

    ptilde = e * up["u_x"] + phi1 * up["u_xx"] + d * up["u_xxx"] + phi * up["u"]
    p = -2.0 * lt * up["u_t"] + ptilde
    operator = th * (field.partial(t, x, 0, 2) + field.partial(t, x, 4, 0))

    # time derivatives of the static-in-time coefficients vanish
    ptilde_t = (
        e * up["u_xt"] + phi1 * up["u_xxt"] + d * up["u_xxxt"] + phi * up["u_t"]
    )
    boundary_t = (
        ltt * up["u_t"] ** 2
        + 2.0 * lt * up["u_t"] * up["u_tt"]
        - ptilde_t * up["u_t"]
        - ptilde * up["u_tt"]
    )
    return 2.0 * p * operator + 2.0 * boundary_t


def pointwise_identity_residual(field: ManufacturedField, w: WeightField, t, x):
    """Normalized gap between the two sides: (lhs - rhs)/max(|lhs|, |rhs|, 1)."""
    lhs = identity_lhs(field, w, t, x)
    rhs = identity_rhs(field, w, t, x)
    return (lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))


# --------------------------------------------------------------------------
# coefficient audit
# --------------------------------------------------------------------------

def rederived_volume_weights(w: WeightField, t, x):
    """Volume-term weights recomputed from their defining brace groups."""
    cj = _coefficient_jets(w, t, x)
    c_u2, c_ux2, c_uxx2, c_uxxx2 = _volume_coefficient_jets(cj)
    lt, ltt = cj["lt"], cj["ltt"]
    lx = cj["lx"].value()
    lxx = cj["l"].value(2, 0)
    f1 = c_uxxx2.value()
    f2 = c_uxx2.value()
    f3 = c_ux2.value()
    f4 = c_u2.value()
    return {
        "f1": f1,
        "f2": f2,
        "f3": f3,
        "f4": f4,
        "h1": 2.0 * (ltt.value() - cj["phi"].value()) - 12.0 * lx**2 * lxx,
        "h2": f4,
        "h3": f3 - 12.0 * ltt.value() * lx**2,
        "h4": f2 + 2.0 * ltt.value(),
        "h5": f1,
    }


@dataclass(frozen=True)
class AuditReport:
    """Printed-versus-rederived comparison of the expanded volume weights."""

    samples: int
    tolerance: float
    max_rel_dev: dict
    worst_point: dict
    agrees: dict
    findings: tuple

    def to_jsonable(self):
        d = asdict(self)
        d["findings"] = list(self.findings)
        return d


def audit_coefficients(
    interval,
    T: float,
    lambdas=(1.0, 2.0, 4.0, 8.0),
    samples: int = 1000,
    seed: int = 2024,
    tolerance: float = 1e-10,
) -> AuditReport:
    """Compare the published f/h polynomials with their re-derivation.

    Random points (lambda, t, x) are drawn over the given ranges; for each
    coefficient the largest relative deviation between the published expansion
    and the brace-group re-derivation is recorded.  The audit always completes
    and reports disagreements as findings.
    """
    rng = np.random.default_rng(seed)
    lam_pool = np.asarray(lambdas, dtype=float)
    names = ["f1", "f2", "f3", "f4", "h1", "h2", "h3", "h4", "h5"]
    max_dev = {n: 0.0 for n in names}
    worst = {n: None for n in names}
    per_lam = max(1, samples // lam_pool.size)
    for lam in lam_pool:
        t = rng.uniform(0.0, T, size=per_lam)
        x = rng.uniform(interval.a, interval.b, size=per_lam)
        w = WeightField(lam=float(lam), T=T)
        pr = printed_volume_weights(w, t, x)
        derived = rederived_volume_weights(w, t, x)
        for n in names:
            pv = np.asarray(pr[n])
            dv = np.asarray(derived[n])
            dev = np.abs(pv - dv) / np.maximum(1.0, np.maximum(np.abs(pv), np.abs(dv)))
            k = int(np.argmax(dev))
            if dev[k] > max_dev[n]:
                max_dev[n] = float(dev[k])
                worst[n] = {
                    "lam": float(lam), "t": float(t[k]), "x": float(x[k]),
                    "printed": float(pv[k]), "rederived": float(dv[k]),
                }
    agrees = {n: max_dev[n] <= tolerance for n in names}
    findings = tuple(
        f"{n}: published expansion deviates from re-derivation by max rel {max_dev[n]:.3e}"
        for n in names
        if not agrees[n]
    )
    return AuditReport(
        samples=samples,
        tolerance=tolerance,
        max_rel_dev=max_dev,
        worst_point=worst,
        agrees=agrees,
        findings=findings,
    )


# --------------------------------------------------------------------------
# integrated balance on simulated ensembles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityBreakdown:
    """Expectations of every integrated term plus the balance residual."""

    boundary: float            # divergence groups collapsed to endpoint traces
    volume: float              # squared-derivative volume terms
    velocity_coupling: float   # 2 E int u_t q_t
    time_coupling: float       # the paired l_t transport terms
    end_coupling: float        # pure time-derivative group (zero end weight)
    multiplier_sq: float       # 2 E int p^2
    forcing: float             # 2 E int p theta f
    ito: float                 # 2 E int l_t theta^2 g^2
    end_values: float          # time-boundary evaluation of the d{...} term
    residual: float
    residual_stderr: float
    scale: float
    trials: int

    @property
    def normalized_residual(self) -> float:
        return self.residual / self.scale

    def to_jsonable(self):
        return asdict(self)


def _iter_blocks(ensembles):
    """Yield ensemble blocks lazily so refinement studies stream over trials."""
    if isinstance(ensembles, ModalEnsemble):
        yield ensembles
    else:
        yield from ensembles


def integrated_balance(
    ensembles,
    modes,
    forcing: Forcing,
    w: WeightField,
    quad: Quadrature,
    cutoff: Cutoff | None = None,
    time_stride: int = 2,
    end_tol: float = 1e-6,
) -> IdentityBreakdown:
    """Integrate every term of the expectation identity over simulated trials.

    Quadrature in space, trapezoid in time on the stored grid (optionally
    strided), mean over trials.  With ``cutoff`` the trajectories are
    multiplied by the time cutoff first, which restores exact zero end values
    and adds the commutator drift; without it the trajectories must satisfy
    the zero end values within ``end_tol`` relative.
    """
    block_iter = _iter_blocks(ensembles)
    try:
        first_block = next(block_iter)
    except StopIteration:
        raise ValueError("no ensembles given") from None
    tgrid = first_block.t
    m = first_block.c.shape[2]

    sel = np.arange(0, tgrid.size, time_stride)
    if sel[-1] != tgrid.size - 1:
        sel = np.append(sel, tgrid.size - 1)
    ts = tgrid[sel]
    wt = np.zeros(ts.size)
    dt_seg = np.diff(ts)
    wt[:-1] += 0.5 * dt_seg
    wt[1:] += 0.5 * dt_seg

    xg = quad.nodes
    xw = quad.weights
    V = [mode_matrix(modes[:m], xg, order) for order in range(4)]
    b_pt = modes[0].interval.b
    a_pt = modes[0].interval.a
    v2b = np.array([eval_mode(mo, b_pt, 2) for mo in modes[:m]])
    v3b = np.array([eval_mode(mo, b_pt, 3) for mo in modes[:m]])
    v2a = np.array([eval_mode(mo, a_pt, 2) for mo in modes[:m]])
    v3a = np.array([eval_mode(mo, a_pt, 3) for mo in modes[:m]])

    ftab_all, gtab_all = forcing.modal_tables(modes[:m], quad, ts)
    if cutoff is not None:
        chi, chi1, chi2 = cutoff.evaluate(ts)
    else:
        chi = chi1 = chi2 = None

    lx = w.l_x(xg)
    lxx = w.l_xx()
    lam = w.lam
    e_c = -4.0 * lx**3
    d_c = -4.0 * lx
    phi1_c = -6.0 * lxx
    phi_c = -8.0 * lx * lx * lxx
    gp_c = 6.0 * lx * lx
    vw = volume_weights_consistent(w, ts[:, None], xg[None, :])

    lx_b, lx_a = 2.0 * lam * (b_pt - w.x0), 2.0 * lam * (a_pt - w.x0)

    n_trials = 0
    sums = {k: 0.0 for k in (
        "boundary", "volume", "vel", "time", "psq", "forcing", "end_values")}
    resid_sum = 0.0
    resid_sq_sum = 0.0
    ito_total = 0.0

    first = True
    for ens in itertools.chain([first_block], block_iter):
        if ens.increments is None:
            raise ValueError("ensemble lacks Brownian increments")
        N = ens.trials
        c_sel = ens.c[:, sel, :]
        cp_sel = ens.cp[:, sel, :]
        if cutoff is not None:
            z = chi[None, :, None] * c_sel
            zp = chi1[None, :, None] * c_sel + chi[None, :, None] * cp_sel
        else:
            z, zp = c_sel, cp_sel
            scale0 = max(np.abs(ens.c).max(), np.abs(ens.cp).max(), 1e-300)
            worst_end = max(
                np.abs(ens.c[:, 0]).max(), np.abs(ens.c[:, -1]).max(),
                np.abs(ens.cp[:, 0]).max(), np.abs(ens.cp[:, -1]).max(),
            )
            if worst_end / scale0 > end_tol:
                raise ValueError(
                    f"trajectories violate the zero end values: relative end size "
                    f"{worst_end / scale0:.3e} exceeds {end_tol:.1e}; apply a cutoff"
                )

        if first and gtab_all is not None:
            gm = gtab_all @ V[0]
            if cutoff is not None:
                gm = chi[:, None] * gm
            theta_tx = w.theta(ts[:, None], xg[None, :])
            lt_ts = w.l_t(ts)
            ito_total = 2.0 * float(
                wt @ ((lt_ts[:, None] * theta_tx**2 * gm**2) @ xw)
            )
        first = False

        # boundary term: traces need no x-quadrature
        theta_b = w.theta(ts, b_pt)
        theta_a = w.theta(ts, a_pt)
        uxx_b = theta_b[None, :] * (z @ v2b)
        uxxx_b = theta_b[None, :] * ((z @ v3b) + 3.0 * lx_b * (z @ v2b))
        uxx_a = theta_a[None, :] * (z @ v2a)
        uxxx_a = theta_a[None, :] * ((z @ v3a) + 3.0 * lx_a * (z @ v2a))
        bnd_t = (
            -20.0 * lx_b**3 * uxx_b**2 - 12.0 * lxx * uxx_b * uxxx_b - 4.0 * lx_b * uxxx_b**2
        ) - (
            -20.0 * lx_a**3 * uxx_a**2 - 12.0 * lxx * uxx_a * uxxx_a - 4.0 * lx_a * uxxx_a**2
        )
        t_boundary = bnd_t @ wt

        t_volume = np.zeros(N)
        t_vel = np.zeros(N)
        t_time = np.zeros(N)
        t_psq = np.zeros(N)
        t_forcing = np.zeros(N)

        for si, ti in enumerate(ts):
            th = w.theta(ti, xg)
            lt_i = float(w.l_t(ti))
            ltt_i = float(w.l_tt(ti))
            ci = z[:, si, :]
            pi = zp[:, si, :]
            y0 = ci @ V[0]; y1 = ci @ V[1]; y2 = ci @ V[2]; y3 = ci @ V[3]
            w0 = pi @ V[0]; w1 = pi @ V[1]; w2 = pi @ V[2]; w3 = pi @ V[3]
            qx2 = lx * lx + lxx
            qx3 = lx**3 + 3.0 * lx * lxx
            u = th * y0
            u_x = th * (lx * y0 + y1)
            u_xx = th * (qx2 * y0 + 2.0 * lx * y1 + y2)
            u_xxx = th * (qx3 * y0 + 3.0 * qx2 * y1 + 3.0 * lx * y2 + y3)
            u_t = th * (lt_i * y0 + w0)
            u_xt = lt_i * u_x + th * (lx * w0 + w1)
            u_xxt = lt_i * u_xx + th * (qx2 * w0 + 2.0 * lx * w1 + w2)
            u_xxxt = lt_i * u_xxx + th * (qx3 * w0 + 3.0 * qx2 * w1 + 3.0 * lx * w2 + w3)

            vol = (
                vw["f4"][si] * u**2 + vw["f3"][si] * u_x**2 + vw["f2"][si] * u_xx**2
                + vw["f1"][si] * u_xxx**2 + vw["ut2"][si] * u_t**2
            )
            t_volume += wt[si] * (vol @ xw)

            qt = e_c * u_xt + phi1_c * u_xxt + d_c * u_xxxt
            t_vel += wt[si] * (2.0 * (u_t * qt) @ xw)

            mixer = u_xxx + gp_c * u_x
            mixer_t = u_xxxt + gp_c * u_xt
            flux = 4.0 * lt_i * (u_t[:, -1] * mixer[:, -1] - u_t[:, 0] * mixer[:, 0])
            t_time += wt[si] * (
                4.0 * ((ltt_i * mixer + lt_i * mixer_t) * u_x) @ xw + flux
            )

            p = -2.0 * lt_i * u_t + e_c * u_x + phi1_c * u_xx + d_c * u_xxx + phi_c * u
            t_psq += wt[si] * (2.0 * (p * p) @ xw)

            if ftab_all is not None or cutoff is not None:
                if ftab_all is not None:
                    fmod = np.broadcast_to(ftab_all[si], (N, m)).copy()
                else:
                    fmod = np.zeros((N, m))
                if cutoff is not None:
                    fmod = chi[si] * fmod + chi2[si] * ens.c[:, sel[si], :] \
                        + 2.0 * chi1[si] * ens.cp[:, sel[si], :]
                ffield = fmod @ V[0]
                t_forcing += wt[si] * (2.0 * (p * th * ffield) @ xw)

        # time-boundary evaluation of the total-derivative term (l_t = 0 there,
        # so only the multiplier-velocity product can contribute)
        t_end = np.zeros(N)
        for si in (0, ts.size - 1):
            th = w.theta(ts[si], xg)
            ci = z[:, si, :]
            pi = zp[:, si, :]
            y0 = ci @ V[0]; y1 = ci @ V[1]; y2 = ci @ V[2]; y3 = ci @ V[3]
            w0 = pi @ V[0]
            qx2 = lx * lx + lxx
            qx3 = lx**3 + 3.0 * lx * lxx
            u = th * y0
            u_x = th * (lx * y0 + y1)
            u_xx = th * (qx2 * y0 + 2.0 * lx * y1 + y2)
            u_xxx = th * (qx3 * y0 + 3.0 * qx2 * y1 + 3.0 * lx * y2 + y3)
            lt_i = float(w.l_t(ts[si]))
            u_t = th * (lt_i * y0 + w0)
            content = lt_i * u_t**2 - (
                e_c * u_x + phi1_c * u_xx + d_c * u_xxx + phi_c * u
            ) * u_t
            sign = 1.0 if si else -1.0
            t_end += sign * 2.0 * (content @ xw)

        t_resid = (t_forcing + t_end) - (
            t_boundary + t_volume - t_vel - t_time + t_psq + ito_total
        )
        n_trials += N
        sums["boundary"] += t_boundary.sum()
        sums["volume"] += t_volume.sum()
        sums["vel"] += t_vel.sum()
        sums["time"] += t_time.sum()
        sums["psq"] += t_psq.sum()
        sums["forcing"] += t_forcing.sum()
        sums["end_values"] += t_end.sum()
        resid_sum += t_resid.sum()
        resid_sq_sum += (t_resid**2).sum()

    means = {k: v / n_trials for k, v in sums.items()}
    resid_mean = resid_sum / n_trials
    if n_trials > 1:
        var = max(resid_sq_sum / n_trials - resid_mean**2, 0.0) * n_trials / (n_trials - 1)
        stderr = float(np.sqrt(var / n_trials))
    else:
        stderr = 0.0
    scale = max(
        abs(means["boundary"]), abs(means["volume"]), abs(means["vel"]),
        abs(means["time"]), abs(means["psq"]), abs(means["forcing"]),
        abs(ito_total), 1e-300,
    )
    return IdentityBreakdown(
        boundary=means["boundary"],
        volume=means["volume"],
        velocity_coupling=means["vel"],
        time_coupling=means["time"],
        end_coupling=0.0,
        multiplier_sq=means["psq"],
        forcing=means["forcing"],
        ito=ito_total,
        end_values=means["end_values"],
        residual=resid_mean,
        residual_stderr=stderr,
        scale=scale,
        trials=n_trials,
    )


@dataclass(frozen=True)
class BoundaryTermReport:
    value: float               # the collapsed boundary term
    majorant: float            # E int (lam^3 u_xx(b)^2 + lam u_xxx(b)^2) dt
    empirical_c: float
    holds: bool


def boundary_term_check(
    ensembles,
    modes,
    w: WeightField,
    cutoff: Cutoff | None = None,
    time_stride: int = 2,
) -> BoundaryTermReport:
    """Empirical constant in the lower bound of the collapsed boundary term."""
    blocks = list(_iter_blocks(ensembles))
    tgrid = blocks[0].t
    m = blocks[0].c.shape[2]
    sel = np.arange(0, tgrid.size, time_stride)
    if sel[-1] != tgrid.size - 1:
        sel = np.append(sel, tgrid.size - 1)
    ts = tgrid[sel]
    wt = np.zeros(ts.size)
    dt_seg = np.diff(ts)
    wt[:-1] += 0.5 * dt_seg
    wt[1:] += 0.5 * dt_seg

    iv = modes[0].interval
    lam = w.lam
    v2b = np.array([eval_mode(mo, iv.b, 2) for mo in modes[:m]])
    v3b = np.array([eval_mode(mo, iv.b, 3) for mo in modes[:m]])
    v2a = np.array([eval_mode(mo, iv.a, 2) for mo in modes[:m]])
    v3a = np.array([eval_mode(mo, iv.a, 3) for mo in modes[:m]])
    theta_b = w.theta(ts, iv.b)
    theta_a = w.theta(ts, iv.a)
    lx_b, lx_a = w.l_x(iv.b), w.l_x(iv.a)
    lxx = w.l_xx()
    chi = cutoff.evaluate(ts)[0] if cutoff is not None else None

    total = 0.0
    major = 0.0
    n = 0
    for ens in blocks:
        z = ens.c[:, sel, :]
        if chi is not None:
            z = chi[None, :, None] * z
        uxx_b = theta_b[None, :] * (z @ v2b)
        uxxx_b = theta_b[None, :] * ((z @ v3b) + 3.0 * lx_b * (z @ v2b))
        uxx_a = theta_a[None, :] * (z @ v2a)
        uxxx_a = theta_a[None, :] * ((z @ v3a) + 3.0 * lx_a * (z @ v2a))
        bnd = (
            -20.0 * lx_b**3 * uxx_b**2 - 12.0 * lxx * uxx_b * uxxx_b - 4.0 * lx_b * uxxx_b**2
        ) - (
            -20.0 * lx_a**3 * uxx_a**2 - 12.0 * lxx * uxx_a * uxxx_a - 4.0 * lx_a * uxxx_a**2
        )
        total += float((bnd @ wt).sum())
        major += float((((lam**3 * uxx_b**2 + lam * uxxx_b**2) @ wt)).sum())
        n += ens.trials
    value = total / n
    majorant = major / n
    if majorant > 0:
        c_emp = max(0.0, -value) / majorant
    else:
        c_emp = 0.0
    return BoundaryTermReport(
        value=value, majorant=majorant, empirical_c=c_emp,
        holds=value >= -c_emp * majorant - 1e-12 * max(1.0, abs(value)),
    )
