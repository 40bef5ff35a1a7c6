"""Figure rendering for the report paths. PNGs land next to the CSV output;
the CSV stays the canonical machine-readable contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_slowdowns(rows: list[dict], out_png: str):
    """Grouped bars of slowdown by tracker for each workload.

    `rows` are CSV-row dicts with tracker, workload, slowdown fields.
    """
    usable = [r for r in rows if r.get("slowdown") not in ("", None)]
    if not usable:
        return False
    workloads = sorted({r["workload"] for r in usable})
    trackers = sorted({r["tracker"] for r in usable})
    fig, ax = plt.subplots(figsize=(1.8 + 1.1 * len(workloads), 3.6))
    width = 0.8 / max(1, len(trackers))
    for ti, tr in enumerate(trackers):
        xs, ys = [], []
        for wi, wl in enumerate(workloads):
            vals = [float(r["slowdown"]) for r in usable
                    if r["tracker"] == tr and r["workload"] == wl]
            if vals:
                xs.append(wi + ti * width)
                ys.append(sum(vals) / len(vals))
        ax.bar(xs, ys, width=width, label=tr)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(workloads))])
    ax.set_xticklabels(workloads, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("slowdown (makespan ratio)")
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return True


def plot_vulnerability(table_rows: list[dict], out_png: str):
    """Expected capture iterations vs reset period for the single-table tracker."""
    xs = [r["t_reset_ns"] / 1000 for r in table_rows]
    ys = [r["at_iter"] for r in table_rows]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(xs, ys, "o-")
    ax.set_xlabel("reset period (us)")
    ax.set_ylabel("expected attack iterations")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return True


def plot_capture_probability(n_groups: int, trials_axis: list[int], p_s: list[float],
                             out_png: str):
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(trials_axis, p_s, "-")
    ax.set_xlabel("trials per window")
    ax.set_ylabel("overall capture probability")
    ax.set_title(f"{n_groups} groups per table", fontsize=9)
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return True


def plot_blocked_time(report, out_png: str):
    """Per-bank mitigation blocking from one run."""
    fig, ax = plt.subplots(figsize=(6.0, 2.8))
    vals = [v / 1e6 for v in report.blocked_ns_per_bank]
    ax.bar(range(len(vals)), vals, width=0.9)
    ax.set_xlabel("bank")
    ax.set_ylabel("blocked (ms)")
    ax.set_title(f"{report.tracker} / {report.workload}", fontsize=9)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return True
