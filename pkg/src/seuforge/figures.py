"""Report figures rendered straight to files.

Only the report path draws; the data subcommands stay figure-free. The Agg
backend is forced before pyplot loads so no display is ever needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_DPI = 150


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_PNG_DPI)
    plt.close(fig)
    return path


def save_let_curve(curve, path: str | Path, peak=None) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogx(curve.energies_mev, curve.let_mev_cm2_mg, lw=1.4)
    if peak is not None:
        ax.plot([peak.energy_mev], [peak.let_mev_cm2_mg], "o", ms=5)
        ax.annotate(f"{peak.let_mev_cm2_mg:.3g} at {peak.energy_mev:.3g} MeV",
                    (peak.energy_mev, peak.let_mev_cm2_mg),
                    textcoords="offset points", xytext=(8, -2), fontsize=8)
    ax.set_xlabel("energy (MeV)")
    ax.set_ylabel("LET (MeV cm$^2$/mg)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def save_butterfly(curves, snm_v: float, mode: str, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    ax.plot(curves.forced_v, curves.response_from_ch, lw=1.3)
    ax.plot(curves.response_from_cl, curves.forced_v, lw=1.3)
    lim = float(curves.forced_v[-1])
    ax.plot([0, lim], [0, lim], ls=":", lw=0.8, color="gray")
    ax.set_xlabel("node voltage (V)")
    ax.set_ylabel("opposite node (V)")
    ax.set_title(f"{mode}: margin {1e3 * snm_v:.1f} mV", fontsize=10)
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def save_waveforms(waves, path: str | Path, label: str = "",
                   nodes=None) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for node in (sorted(waves.voltages) if nodes is None else nodes):
        ax.plot(1e12 * waves.times_s, waves.node(node), lw=1.2, label=node)
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("node voltage (V)")
    if label:
        ax.set_title(label, fontsize=10)
    ax.legend(fontsize=8, loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)
