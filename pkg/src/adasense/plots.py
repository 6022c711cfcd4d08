"""Matplotlib figures for the report path.

The CLI writes these next to the delimited output when asked for a figure
file.  Styling is kept plain; anything publication-grade belongs in the
caller's own rc settings.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bounds import BoundSpec
from .errors import EmptyCurve
from .harness import PhaseDiagram, RiskCurve

_BOUND_COLORS = ("tab:orange", "tab:purple", "tab:green", "tab:red")


def risk_curve_figure(
    curve: RiskCurve, reference_bounds: list[BoundSpec] | None = None
):
    if not curve.points:
        raise EmptyCurve("cannot plot an empty curve")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    mus = np.array([p.mu for p in curve.points])
    risks = np.array([p.risk for p in curve.points])
    ses = np.array([p.se for p in curve.points])
    ax.errorbar(mus, risks, yerr=2 * ses, fmt="o-", color="tab:blue", capsize=3,
                label="Monte Carlo risk")
    for j, bound in enumerate(reference_bounds or []):
        ax.axvline(bound.value, color=_BOUND_COLORS[j % len(_BOUND_COLORS)],
                   linestyle="--", linewidth=1.2,
                   label=f"{bound.name} = {bound.value:.4g}")
    cfg = curve.metadata.get("config", {})
    if cfg:
        ax.set_title(
            f"{cfg.get('strategy', '?')}: n={cfg.get('n')}, s={cfg.get('s')}, "
            f"m={cfg.get('m')}", fontsize=11
        )
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("risk")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=9)
    fig.tight_layout()
    return fig


def phase_figure(diagram: PhaseDiagram):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    s_vals = [s for s, scan in zip(diagram.s_grid, diagram.scans)
              if scan.mu_star is not None]
    mu_stars = [scan.mu_star for scan in diagram.scans if scan.mu_star is not None]
    if mu_stars:
        ax.plot(s_vals, mu_stars, "o-", color="tab:blue")
    missing = [s for s, scan in zip(diagram.s_grid, diagram.scans)
               if scan.mu_star is None]
    for s in missing:
        ax.axvline(s, color="tab:red", linestyle=":", linewidth=1,
                   label="target not reached" if s == missing[0] else None)
    ax.set_xlabel("s")
    ax.set_ylabel(r"$\mu^{*}$")
    ax.set_title(f"amplitude reaching risk {diagram.target:g}", fontsize=11)
    if missing:
        ax.legend(fontsize=9)
    fig.tight_layout()
    return fig


def save_figure(fig, path: str) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
