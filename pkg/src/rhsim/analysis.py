"""Closed-form attack/defense arithmetic, the storage calculator, and
report emission (CSV rows plus human-readable tables).

Tiny probabilities are evaluated in log space so terms like
(1 - 6e-8)^2500 do not collapse to 1.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

from .geometry import Geometry, TimingParams, max_acts_per_bank_refresh_adjusted


@dataclass(frozen=True)
class AttackModelParams:
    t_reset_ns: float
    t_rc_ns: float = 48.0
    t_rrd_s_ns: float = 2.5
    n_m: int = 250
    n_rg: int = 8192
    trials: int = 2500

    def __post_init__(self):
        if min(self.t_reset_ns, self.t_rc_ns, self.t_rrd_s_ns) <= 0:
            raise ValueError("all times must be positive")
        if self.n_m < 2 or self.n_rg < 1:
            raise ValueError("n_m >= 2 and n_rg >= 1 required")


def t_left(params: AttackModelParams) -> float:
    """Attack time remaining in a reset period after hammering to n_m - 1."""
    left = params.t_reset_ns - params.t_rc_ns * (params.n_m - 1)
    if left < 0:
        warnings.warn("reset period shorter than the hammer phase; attack infeasible")
        return 0.0
    return left


def act_max(params: AttackModelParams) -> int:
    """Probe activations that fit into the remaining attack time."""
    return int(t_left(params) // params.t_rrd_s_ns)


def capture_success_s(params: AttackModelParams) -> dict:
    """Single-table capture: P_S = 1 - (1 - 1/N_RG)^ACT_MAX, plus expected
    iterations (1/P_S) and expected wall time (t_reset / P_S)."""
    a = act_max(params)
    if a == 0 or params.n_rg < 1:
        return {"act_max": a, "p_s": 0.0, "at_iter": math.inf, "at_time_ns": math.inf}
    if params.n_rg == 1:
        p_s = 1.0
    else:
        p_s = -math.expm1(a * math.log1p(-1.0 / params.n_rg))
    return {
        "act_max": a,
        "p_s": p_s,
        "at_iter": 1.0 / p_s,
        "at_time_ns": params.t_reset_ns / p_s,
    }


def capture_success_h(n_groups: int, trials: int) -> dict:
    """Dual-table capture: per-trial p = (1-(1-1/N)^2)^2; overall
    P_S = 1 - (1-p)^T."""
    if n_groups < 1 or trials < 0:
        raise ValueError("n_groups >= 1 and trials >= 0 required")
    if n_groups == 1:
        p = 1.0
    else:
        cover = -math.expm1(2 * math.log1p(-1.0 / n_groups))
        p = cover * cover
    if trials == 0 or p == 0.0:
        p_s = 0.0
    elif p == 1.0:
        p_s = 1.0
    else:
        p_s = -math.expm1(trials * math.log1p(-p))
    return {"p": p, "p_s": p_s}


def capture_h_trial_budget(timing: TimingParams, n_m: int) -> int:
    """Trials per refresh window: the bit-vector pins the attacker to one
    bank's activation budget and each trial consumes the full n_m."""
    return max_acts_per_bank_refresh_adjusted(timing) // n_m


def streaming_bound(geometry: Geometry, timing: TimingParams, group_size: int,
                    act_budget: int | None = None) -> int:
    """Upper bound on a gated group counter under the full-rank streaming
    attack: acts per row times the group's rows per bank."""
    if group_size <= 0:
        return 0
    if act_budget is None:
        act_budget = int(timing.t_refw_ns // timing.t_rrd_s_ns)
    acts_per_row = act_budget // geometry.rows_per_rank
    rows_per_group_per_bank = group_size // geometry.banks_per_rank
    return acts_per_row * rows_per_group_per_bank


def storage_overhead(geometry: Geometry, n_m: int, group_size: int,
                     ranks_per_32gb: int | None = None,
                     row_bytes: int = 8192) -> dict:
    """SRAM bytes for the dual-table tracker, per rank and per 32 GB."""
    if group_size <= 0 or geometry.rows_per_rank % group_size:
        raise ValueError("group_size must divide rows_per_rank")
    n_rg = geometry.rows_per_rank // group_size
    counter_bytes = max(1, (n_m.bit_length() + 7) // 8)
    table_bytes = 2 * n_rg * counter_bytes
    bitvec_bytes = n_rg * geometry.banks_per_rank // 8
    per_rank = table_bytes + bitvec_bytes
    if ranks_per_32gb is None:
        rank_bytes = geometry.rows_per_rank * row_bytes
        ranks_per_32gb = max(1, (32 * 1024 ** 3) // rank_bytes)
    return {
        "n_rg": n_rg,
        "counter_table_bytes_per_rank": table_bytes,
        "bitvector_bytes_per_rank": bitvec_bytes,
        "bytes_per_rank": per_rank,
        "ranks_per_32gb": ranks_per_32gb,
        "bytes_per_32gb": per_rank * ranks_per_32gb,
        "kib_per_32gb": per_rank * ranks_per_32gb / 1024,
    }


def rcc_conflict_miss_rate(rows: int, ways: int = 32) -> float:
    """Closed-form set-conflict miss estimate: 1 - (1 - 1/ways)^rows."""
    return -math.expm1(rows * math.log1p(-1.0 / ways))


def rcc_conflict_fixed_point(rows: int, ways: int = 32, iters: int = 200) -> float:
    """Self-consistent steady-state miss rate for cyclic access to `rows`
    same-set rows under evict-on-miss random replacement: solves
    m = 1 - (1 - m/ways)^(rows-1)."""
    m = 0.5
    for _ in range(iters):
        m = -math.expm1((rows - 1) * math.log1p(-m / ways))
    return m


def abacus_spill_estimate(entries: int, n_m: int, t_rrd_s_ns: float = 2.5) -> dict:
    """Activations and ideal time until the spillover counter overflows under
    the all-distinct-rows attack: fill the table, then one spillover step per
    (entries + 1) activations."""
    acts = entries + n_m * (entries + 1)
    return {"acts": acts, "time_ns": acts * t_rrd_s_ns}


def vulnerability_table(t_resets_ns, n_m: int = 250, n_rg: int = 8192,
                        t_rc_ns: float = 48.0, t_rrd_s_ns: float = 3.6) -> list[dict]:
    rows = []
    for tr in t_resets_ns:
        p = AttackModelParams(t_reset_ns=tr, t_rc_ns=t_rc_ns,
                              t_rrd_s_ns=t_rrd_s_ns, n_m=n_m, n_rg=n_rg)
        r = capture_success_s(p)
        rows.append({"t_reset_ns": tr, "t_rrd_s_ns": t_rrd_s_ns, **r})
    return rows


# -- report emission ----------------------------------------------------------

CSV_COLUMNS = ["config_hash", "tracker", "workload", "n_rh", "seed",
               "makespan_ns", "slowdown", "mit_vrr", "mit_drfm_sb", "mit_rfm_sb",
               "counter_reads", "counter_writes", "full_resets", "max_hammer",
               "security_violation"]


def report_csv_row(report, slowdown_value=None) -> list:
    return [
        report.config_hash, report.tracker, report.workload, report.n_rh,
        report.seed, f"{report.makespan_ns:.3f}",
        "" if slowdown_value is None else f"{slowdown_value:.6f}",
        report.mitigation_count("vrr"), report.mitigation_count("drfm_sb"),
        report.mitigation_count("rfm_sb"), report.counter_reads,
        report.counter_writes, report.full_resets, report.max_hammer,
        int(report.security_violation),
    ]


def emit_report(reports, slowdowns=None) -> str:
    """Render reports as CSV text with the fixed column schema, deterministic order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    slowdowns = slowdowns or {}
    keyed = sorted(reports, key=lambda r: (r.config_hash, r.seed))
    for r in keyed:
        w.writerow(report_csv_row(r, slowdowns.get(id(r))))
    return buf.getvalue()


def format_table(headers: list[str], rows: list[list], title: str = "") -> str:
    cols = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
            for i, h in enumerate(headers)]
    out = []
    if title:
        out.append(title)
    out.append("  ".join(str(h).rjust(c) for h, c in zip(headers, cols)))
    out.append("  ".join("-" * c for c in cols))
    for r in rows:
        out.append("  ".join(str(v).rjust(c) for v, c in zip(r, cols)))
    return "\n".join(out) + "\n"
