"""Deterministic file emission: CSV tables, JSON reports, rendered figures."""
from __future__ import annotations

import hashlib
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .beam import eval_mode

__all__ = [
    "write_text",
    "write_json",
    "sha256_file",
    "modes_figure",
    "sweep_figure",
    "energy_figure",
    "bounds_figure",
    "observability_figure",
]

_FIGURE_KW = dict(dpi=110)
_SAVE_KW = dict(metadata={"Software": "beamobs"})


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_json(path: str, obj) -> str:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _finish(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def modes_figure(path: str, modes, count: int = 4) -> str:
    iv = modes[0].interval
    x = np.linspace(iv.a, iv.b, 401)
    fig, ax = plt.subplots(figsize=(6.4, 4.0), **_FIGURE_KW)
    for m in modes[:count]:
        ax.plot(x, eval_mode(m, x, 0), lw=1.2, label=f"mode {m.k}")
    ax.set_xlabel("x")
    ax.set_ylabel("normalized shape")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("clamped-beam eigenmodes")
    return _finish(fig, path)


def sweep_figure(path: str, report) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.0), **_FIGURE_KW)
    scenarios = []
    for r in report.rows:
        if r.scenario not in scenarios:
            scenarios.append(r.scenario)
    for name in scenarios:
        pts = [(r.lam, r.ratio) for r in report.rows if r.scenario == name and r.flag == "ok"]
        if not pts:
            continue
        lam, ratio = zip(*pts)
        ax.semilogy(lam, ratio, marker="o", ms=3, lw=1.0, label=name)
    ax.set_xlabel("weight parameter")
    ax.set_ylabel("lhs / rhs")
    ax.set_title(report.inequality)
    if scenarios:
        ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def energy_figure(path: str, record) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.0), **_FIGURE_KW)
    ax.fill_between(record.t, record.mean - 3 * record.stderr,
                    record.mean + 3 * record.stderr, alpha=0.25, lw=0,
                    label="mean +/- 3 se")
    ax.plot(record.t, record.mean, lw=1.2, label="ensemble mean")
    if record.theory is not None:
        ax.plot(record.t, record.theory, "--", lw=1.0, label="theory")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.set_title("ensemble energy growth")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def bounds_figure(path: str, table) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.0), **_FIGURE_KW)
    names = ["h1/l^3", "h2/l^7", "h3/l^5", "h4/l^3", "h5/l"]
    for j, name in enumerate(names):
        ax.plot(table.lambdas, table.minima[:, j], marker="o", ms=3, lw=1.0, label=name)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("weight parameter")
    ax.set_ylabel("grid minimum of scaled coefficient")
    ax.set_title("coefficient positivity margins")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def observability_figure(path: str, report) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.0), **_FIGURE_KW)
    ok = [r for r in report.rows if r["flag"] == "ok"]
    ax.plot([r["datum"] for r in ok], [r["ratio"] for r in ok], ".", ms=5)
    if report.empirical_constant is not None:
        ax.axhline(report.empirical_constant, color="r", lw=0.8,
                   label=f"empirical constant {report.empirical_constant:.4g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("datum")
    ax.set_ylabel("lhs / rhs")
    ax.set_title("boundary observability ratios")
    return _finish(fig, path)
