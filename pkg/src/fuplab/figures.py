"""Matplotlib renderers for the report path.

Every runner that writes a CSV can also drop a PNG next to it.  Figures are
advisory; the CSVs remain the stable interface.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 130


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_intervals(sets: dict, title: str, path: Path,
                     witness=None) -> Path:
    """Horizontal bars, one row per named interval set."""
    fig, ax = plt.subplots(figsize=(8, 1.2 + 0.6 * len(sets)))
    for row, (name, s) in enumerate(sets.items()):
        for lo, hi in s.intervals:
            ax.plot([float(lo), float(hi)], [row, row], lw=6,
                    solid_capstyle="butt", color=f"C{row}")
        ax.text(-0.02, row, name, ha="right", va="center", fontsize=9)
    if witness is not None:
        ax.axvspan(float(witness[0]), float(witness[1]), color="red",
                   alpha=0.2, label="witness")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_yticks([])
    ax.set_title(title, fontsize=10)
    return _save(fig, path)


def render_sweep(entries, fit, path: Path) -> Path:
    ns = [e.n for e in entries if not e.error]
    sigmas = [e.sigma for e in entries if not e.error]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(ns, sigmas, "o-", label="sigma(N)")
    if fit is not None:
        xs = np.array(ns, dtype=float)
        ax.loglog(xs, np.exp(fit.logC) * xs ** (-fit.beta), "--",
                  label=f"fit: beta={fit.beta:.4f}, r2={fit.r_squared:.3f}")
    ax.set_xlabel("N")
    ax.set_ylabel("largest singular value")
    ax.set_title("restricted Fourier norm decay", fontsize=10)
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_chain(rows, threshold: float, path: Path) -> Path:
    """rows: list of (function index, level, norm, ratio)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    by_fn: dict = {}
    for fn, level, norm, ratio in rows:
        by_fn.setdefault(fn, []).append((level, norm, ratio))
    for fn, data in by_fn.items():
        levels = [d[0] for d in data]
        norms = [d[1] for d in data]
        ax1.semilogy(levels, norms, "-", color="C0", alpha=0.25)
        ratios = [(d[0], d[2]) for d in data if not math.isnan(d[2])]
        if ratios:
            ax2.plot([r[0] for r in ratios], [r[1] for r in ratios], ".",
                     color="C0", alpha=0.3)
    ax2.axhline(threshold, color="red", ls="--", lw=1,
                label=f"bound {threshold:.6f}")
    ax1.set_xlabel("level k")
    ax1.set_ylabel("|f_k|")
    ax2.set_xlabel("level k")
    ax2.set_ylabel("ratio")
    ax2.legend(fontsize=8)
    fig.suptitle("mollifier contraction chain", fontsize=10)
    return _save(fig, path)


def render_harmonic(rs, p_hats, cis, fit, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(rs, p_hats, yerr=cis, fmt="o", capsize=3, label="estimate")
    if fit is not None and fit.C_fit > 0:
        xs = np.linspace(min(rs), max(rs), 200)
        ax.plot(xs, np.exp(-(fit.C_fit / xs + fit.intercept)), "--",
                label=f"exp(-{fit.C_fit:.3f}/r {fit.intercept:+.3f})")
    ax.set_xlabel("strip half-height r")
    ax.set_ylabel("slit harmonic measure")
    ax.set_title("walk-on-spheres exit probabilities", fontsize=10)
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_cover(bands, theta, epsilon, path: Path) -> Path:
    ks = [b.k for b in bands]
    counts = [b.count for b in bands]
    bound = [float(theta(2 ** k)) ** (-(1.0 - epsilon)) for k in ks]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(ks, [max(c, 1e-1) for c in counts], "o-", label="N_k")
    ax.semilogy(ks, bound, "--", label="theta(2^k)^-(1-eps)")
    ax.set_xlabel("band k")
    ax.set_ylabel("covering count")
    ax.set_title("dyadic band coverings", fontsize=10)
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_weight(w, path: Path, halfwidth: float = 64.0) -> Path:
    xs = np.linspace(-halfwidth, halfwidth, 4001)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, w(xs), label="w")
    ax.plot(xs, w.theta.xi_theta(xs), "--", label="|xi| theta(xi)")
    ax.set_xlabel("xi")
    ax.set_ylabel("weight")
    ax.set_title("admissible weight vs its target", fontsize=10)
    ax.legend(fontsize=8)
    return _save(fig, path)
