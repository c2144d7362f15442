"""Static SVG figures for the CLI report path.

Rendering goes through the Agg backend with a fixed SVG hash salt and no
date stamp, so identical data gives identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "qnnlab"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def indicator_figure(path, points, member, phi):
    """Membership against network output on the evaluation grid (one or two inputs)."""
    fig, ax = plt.subplots(figsize=(5, 4))
    if points.shape[1] == 1:
        ax.step(points[:, 0], member, where="post", color="0.7", lw=3, label="membership")
        ax.plot(points[:, 0], phi, ".", ms=3, label="network")
        ax.set_xlabel("x1")
        ax.legend()
    else:
        ok = phi == member
        inside = phi == 1
        ax.scatter(points[inside & ok, 0], points[inside & ok, 1], s=4, marker="s", label="output 1")
        ax.scatter(points[~inside & ok, 0], points[~inside & ok, 1], s=4, marker="s", color="0.85",
                   label="output 0")
        if not ok.all():
            ax.scatter(points[~ok, 0], points[~ok, 1], s=12, marker="x", color="tab:red", label="mismatch")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.legend(fontsize=7, loc="upper right")
    _save(fig, path)


def approximation_figure(path, points, fvals, phi, grid):
    """Network output and absolute error over a square grid (two inputs)."""
    x = points[:, 0].reshape(grid, grid)
    y = points[:, 1].reshape(grid, grid)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    extent = (x.min(), x.max(), y.min(), y.max())
    for ax, values, title in ((axes[0], phi, "network output"), (axes[1], np.abs(phi - fvals), "absolute error")):
        im = ax.imshow(values.reshape(grid, grid).T, origin="lower", extent=extent, cmap="viridis",
                       interpolation="nearest")
        ax.set_title(title)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        fig.colorbar(im, ax=ax, shrink=0.85)
    _save(fig, path)


def bound_figure(path, report):
    layers = np.arange(1, len(report.theta) + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(layers, report.theta, "o-", label="theta bound")
    emp = np.maximum(np.asarray(report.empirical_sup_error), 1e-300)
    ax.semilogy(layers, emp, "s--", label="empirical sup error")
    ax.set_xlabel("layer")
    ax.set_ylabel("error")
    ax.set_xticks(layers)
    ax.legend()
    _save(fig, path)


def budget_figure(path, budgets, bounds, eps):
    layers = np.arange(1, len(budgets) + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(layers, budgets, "o-", label="Var1 budget")
    ax.semilogy(layers, bounds, "s-", label="bound")
    ax.axhline(eps, color="k", lw=0.8, ls=":", label="target")
    ax.set_xlabel("layer")
    ax.set_xticks(layers)
    ax.legend()
    _save(fig, path)


def rate_figure(path, report):
    conds = ["i", "ii", "iii", "iv"] if report.schedule.L >= 2 else ["i", "ii", "iii"]
    fig, axes = plt.subplots(1, len(conds), figsize=(3.2 * len(conds), 3.2), sharex=True)
    for ax, cond in zip(np.atleast_1d(axes), conds):
        for ell in range(1, report.schedule.L + 1):
            pts = [(r.lam, r.log10_abs) for r in report.rows
                   if r.condition == cond and r.layer == ell and r.in_domain and np.isfinite(r.log10_abs)]
            if pts:
                lam, val = zip(*pts)
                ax.semilogx(lam, val, "o-", ms=3, label=f"layer {ell}")
        ax.set_title(f"({cond})")
        ax.set_xlabel("lambda")
        ax.invert_xaxis()
    np.atleast_1d(axes)[0].set_ylabel("log10 |value|")
    np.atleast_1d(axes)[0].legend(fontsize=7)
    _save(fig, path)


def pointwise_figure(path, reports):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, rep in enumerate(reports):
        layers = sorted({r.layer for r in rep.rows})
        for ell in layers:
            pts = [(r.lam, r.ratio) for r in rep.rows if r.layer == ell and r.ratio > 0]
            if pts:
                lam, ratio = zip(*pts)
                ax.loglog(lam, ratio, "-", lw=1, alpha=0.8, label=f"input {k}, layer {ell}" if k < 2 else None)
    ax.set_xlabel("lambda")
    ax.set_ylabel("error / rate")
    ax.invert_xaxis()
    ax.legend(fontsize=7)
    _save(fig, path)


def counterexample_figure(path, report):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for p in report.points:
        pts = [(r.lam, r.phi_lam) for r in report.rows if r.x0 == p.x0]
        lam, val = zip(*pts)
        ax.loglog(lam, np.maximum(val, 1e-300), "-", lw=1, alpha=0.6)
    lam = sorted({r.lam for r in report.rows})
    ax.loglog(lam, lam, "k:", lw=1, label="lambda")
    ax.set_xlabel("lambda")
    ax.set_ylabel("regularised output")
    ax.invert_xaxis()
    ax.legend()
    _save(fig, path)


def ternary_figure(path, ds, samples, best):
    x, y = ds.arrays()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(x[y == 1, 0], x[y == 1, 1], marker="o", label="label 1")
    ax.scatter(x[y == 0, 0], x[y == 0, 1], marker="x", label="label 0")
    t = np.linspace(-1.2 * ds.D, 1.2 * ds.D, 3)
    for k, (w1, w2) in enumerate(samples):
        ax.plot(t, -w1 * t / w2, color="tab:green", lw=0.6, alpha=0.5, label="separating" if k == 0 else None)
    ax.axhline(0.0, color="tab:red", lw=1.2, label="projected (0, 1)")
    if best[1] == 0 and best[0] != 0:
        ax.axvline(0.0, color="tab:purple", lw=1.2, label=f"ternary best {best}")
    elif best[1] != 0:
        ax.plot(t, -best[0] * t / best[1], color="tab:purple", lw=1.2, label=f"ternary best {best}")
    ax.set_ylim(-2.5, max(2.5, float(x[:, 1].max()) * 1.1))
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.legend(fontsize=7)
    _save(fig, path)
