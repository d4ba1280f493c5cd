"""PNG figures written next to the CSV artifacts (``--plot``)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_density(field, path, title: str = "") -> Path:
    """|psi|^2 over the (x, t) grid, or a line plot for a single slice."""
    fig, ax = plt.subplots(figsize=(6, 4))
    dens = np.abs(field.values) ** 2
    if len(field.t) == 1:
        ax.plot(field.x, dens[0])
        ax.set_ylabel("|psi|^2")
    else:
        mesh = ax.pcolormesh(field.x, field.t, dens, shading="auto")
        fig.colorbar(mesh, ax=ax, label="|psi|^2")
        ax.set_ylabel("t")
    ax.set_xlabel("x")
    ax.set_title(title)
    return _save(fig, path)


def plot_fundamental(t, columns: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("mu0", "mu1", "lam"):
        ax.plot(t, columns[name], label=name)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)


def plot_greens(x, y, values, t, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, part, name in zip(axes, (values.real, values.imag), ("Re G", "Im G")):
        mesh = ax.pcolormesh(y, x, part, shading="auto", cmap="RdBu_r")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel("y")
        ax.set_ylabel("x")
        ax.set_title(f"{name}, t = {t:.4g}")
    return _save(fig, path)


def plot_trajectory(traj, xi_bar, tau, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    axes[0].plot(traj.t, traj.xbar)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("<x>")
    if xi_bar is not None:
        axes[1].plot(tau, xi_bar)
    axes[1].set_xlabel("tau")
    axes[1].set_ylabel("xi_bar")
    return _save(fig, path)


def plot_report(results, path) -> Path:
    """Measured/threshold ratio per check on a log scale (pass below/above 1 by relation)."""
    names = [r.check_name for r in results]
    ratio = []
    for r in results:
        if not np.isfinite(r.measured) or r.threshold == 0:
            ratio.append(np.nan)
        elif r.relation == "<=":
            ratio.append(max(r.measured, 1e-300) / r.threshold)
        else:
            ratio.append(r.threshold / r.measured)
    colors = ["tab:green" if r.passed else "tab:red" for r in results]
    fig, ax = plt.subplots(figsize=(7, 0.3 * len(names) + 1.5))
    ax.barh(names, np.nan_to_num(ratio, nan=1.0), color=colors)
    ax.set_xscale("log")
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_xlabel("measured / threshold (pass < 1)")
    return _save(fig, path)
