"""Optional figures for a run report (Agg backend, PNG files)."""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ValidationError


def _plt():
    try:
        import matplotlib
    except ImportError:
        raise ValidationError("--figures needs matplotlib (pip install 'artifact[figures]')") from None

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _floats(xs):
    return [float(x) for x in xs if not isinstance(x, str)]


def render_figures(report: dict, outdir: str) -> list[str]:
    """Write one PNG per available suite result; returns the paths."""
    plt = _plt()
    os.makedirs(outdir, exist_ok=True)
    written = []
    suites = report.get("suites", {})

    def save(fig, name):
        path = os.path.join(outdir, name)
        fig.tight_layout()
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)

    mu = suites.get("mu", {}).get("data", {})
    if mu.get("mu_spectrum"):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        spec = _floats(mu["mu_spectrum"])
        ax.bar(range(1, len(spec) + 1), spec)
        ax.set_yscale("log")
        ax.set_xlabel("index")
        ax.set_ylabel("eigenvalue of μ")
        save(fig, "mu_spectrum.png")
        reports = mu.get("reports", [])
        if reports:
            fig, ax = plt.subplots(figsize=(5, 3.5))
            x = np.arange(len(reports))
            for key, off in (("H_lower", -0.2), ("H_upper", 0.2)):
                ax.bar(x + off, _floats(r[key] for r in reports), width=0.4, label=key)
            ax.set_xticks(x, [r["state_id"] for r in reports])
            ax.set_ylabel("bits")
            ax.legend()
            save(fig, "basis_complexities.png")

    if "caps" in suites:
        from .caps import CapQuery, cap_fraction_bound, cap_fraction_exact
        from .config import CAP_BOUND_C

        C = float(report.get("config", {}).get("cap_bound_C", CAP_BOUND_C))
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ys = np.linspace(0.05, math.pi / 2, 60)
        for n in (8, 32, 128):
            ax.plot(ys, [cap_fraction_exact(CapQuery(n, math.pi / 2 - y)) for y in ys], label=f"exact n={n}")
            ax.plot(ys, [cap_fraction_bound(n, y, C) for y in ys], "--", label=f"bound n={n}")
        ax.set_yscale("log")
        ax.set_ylim(1e-30, 10)
        ax.set_xlabel("y")
        ax.set_ylabel("cap fraction")
        ax.legend(fontsize=7)
        save(fig, "cap_bound.png")

    kq = suites.get("kq-scenario", {}).get("checks", [])
    if kq and not isinstance(kq[0].get("kq_min"), str):
        from .caps import kq_exponent

        fig, ax = plt.subplots(figsize=(5, 3.5))
        ns = np.linspace(1, 8, 200)
        ax.plot(ns, [kq_exponent(n) for n in ns])
        ax.axhline(0, color="grey", lw=0.8)
        ax.set_xlabel("n")
        ax.set_ylabel("exponent")
        save(fig, "kq_exponent.png")
    return written
