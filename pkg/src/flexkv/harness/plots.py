"""Figure rendering for experiment reports (PNG files next to the CSVs)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_latency_figure(rows, path: str | Path) -> Path:
    """Per-mission simulated latency with the level-1 policy on a twin axis."""
    path = Path(path)
    missions = [r.mission for r in rows]
    latency = [r.t_prime / r.ops if r.ops else 0.0 for r in rows]
    k1 = [r.policies[0] for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(missions, latency, lw=1.0, color="tab:blue", label="simulated latency/op")
    ax.set_xlabel("mission")
    ax.set_ylabel("simulated time per op")
    for i in range(1, len(rows)):
        if rows[i].session != rows[i - 1].session:
            ax.axvline(rows[i].mission, color="grey", ls=":", lw=0.8)
    ax2 = ax.twinx()
    ax2.step(missions, k1, where="post", color="tab:red", lw=1.0, alpha=0.7,
             label="K1")
    ax2.set_ylabel("level-1 policy K")
    ax.legend(loc="upper left", fontsize=8)
    ax2.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_sweep_figure(entries, path: str | Path) -> Path:
    """Mean latency per fixed policy K."""
    path = Path(path)
    ks = [e.k for e in entries]
    lat = [e.mean_latency for e in entries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(ks, lat, color="tab:blue")
    best = min(entries, key=lambda e: e.mean_latency)
    ax.bar([best.k], [best.mean_latency], color="tab:green")
    ax.set_xlabel("fixed policy K")
    ax.set_ylabel("mean simulated time per op")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_microbench_figure(results, path: str | Path) -> Path:
    """Read/write per-mission latency for each transition kind."""
    path = Path(path)
    fig, (ax_w, ax_r) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for res in results:
        xs = list(range(len(res.write_series)))
        ax_w.plot(xs, res.write_series, lw=1.0, label=res.kind.value)
        ax_r.plot(xs, res.read_series, lw=1.0, label=res.kind.value)
    if results:
        for ax in (ax_w, ax_r):
            ax.axvline(results[0].transition_mission, color="grey", ls=":")
    ax_w.set_ylabel("write time / op")
    ax_r.set_ylabel("read time / op")
    ax_r.set_xlabel("mission")
    ax_w.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
