"""PNG figures written next to the CSV/JSON reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .channel import theoretical_ber_mpsk  # noqa: E402


def figure_path(report_path, suffix=".png") -> Path:
    return Path(report_path).with_suffix(suffix)


def ber_curve(points, path, modulation="QPSK"):
    """Simulated BER markers over the analytic curve, log scale."""
    m = 2 if str(modulation).upper().endswith("BPSK") else 4
    ebn0 = np.array([p.ebn0_db for p in points])
    sim = np.array([p.sim_ber for p in points])
    fig, ax = plt.subplots(figsize=(6, 4))
    grid = np.linspace(ebn0.min() - 1, ebn0.max() + 1, 200)
    ax.semilogy(grid, [theoretical_ber_mpsk(m, e) for e in grid], "k-", label="theory")
    shown = sim > 0
    ax.semilogy(ebn0[shown], sim[shown], "o", label=f"simulated {modulation}")
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def timing_chart(report, path):
    """Authentication time per scheme and platform: recomputed vs printed."""
    labels = [f"{h['scheme']}\n{h['platform']}" for h in report.handshake]
    ours = [h["auth_ms"] for h in report.handshake]
    golden = [h["golden_auth_ms"] for h in report.handshake]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - 0.2, ours, 0.4, label="recomputed")
    ax.bar(x + 0.2, golden, 0.4, label="published")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("authentication time [ms]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
