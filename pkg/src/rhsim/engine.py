"""Command-level timing engine for one DRAM channel.

Single-threaded and deterministic: integer picosecond clock, closed-loop
issue (each desired activation goes out as soon as tRC/tRRD_S/blocking
allow), periodic auto-refresh sweeps, tracker-ordered mitigations with their
blocking costs, and an exact per-victim ground-truth hammer counter that
flags any row reaching the RowHammer threshold unmitigated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import actions as act
from .geometry import ExperimentConfig, config_hash, serialize_config


def _ps(ns: float) -> int:
    v = round(ns * 1000)
    if abs(v - ns * 1000) > 1e-6:
        raise ValueError(f"time {ns} ns is not picosecond-exact")
    return v


@dataclass
class SimReport:
    config_hash: str = ""
    tracker: str = ""
    workload: str = ""
    n_rh: int = 0
    seed: int = 0
    makespan_ns: float = 0.0
    total_acts: int = 0
    refs: int = 0
    mitigations: dict = field(default_factory=dict)   # kind -> count
    counter_reads: int = 0
    counter_writes: int = 0
    full_resets: int = 0
    blocked_ns_per_bank: list = field(default_factory=list)
    max_hammer: int = 0
    security_violation: bool = False
    violations: list = field(default_factory=list)    # first few (t_ns, rank, bank, row)
    windows_completed: int = 0
    tracker_stats: dict = field(default_factory=dict)
    config_echo: str = ""

    def mitigation_count(self, kind: str) -> int:
        return self.mitigations.get(kind, 0)

    def text_block(self) -> str:
        lines = [
            f"config {self.config_hash}  tracker={self.tracker} workload={self.workload} "
            f"n_rh={self.n_rh} seed={self.seed}",
            f"makespan_ns        {self.makespan_ns:.3f}",
            f"total_acts         {self.total_acts}",
            f"auto_refreshes     {self.refs}",
            f"mitigations        " + (" ".join(f"{k}={v}" for k, v in sorted(self.mitigations.items())) or "none"),
            f"counter_traffic    reads={self.counter_reads} writes={self.counter_writes}",
            f"full_resets        {self.full_resets}",
            f"max_hammer         {self.max_hammer}",
            f"security_violation {self.security_violation}",
            f"blocked_ns(total)  {sum(self.blocked_ns_per_bank):.1f}",
        ]
        for k, v in sorted(self.tracker_stats.items()):
            lines.append(f"  tracker.{k} = {v}")
        return "\n".join(lines) + "\n"


class Engine:
    """One channel; one tracker instance; one workload stream."""

    def __init__(self, config: ExperimentConfig, tracker, workload,
                 log: list | None = None):
        self.cfg = config
        self.tracker = tracker
        self.workload = workload
        self.log = log
        g, t = config.geometry, config.timing
        self.t_rc = _ps(t.t_rc_ns)
        self.t_rrd = _ps(t.t_rrd_s_ns)
        self.t_refw = _ps(t.t_refw_ns)
        self.t_refi = _ps(t.t_refi_ns)
        self.t_rfc = _ps(t.t_rfc_ns)
        self.t_vrr = _ps(t.vrr_per_victim_ns)
        self.t_drfm = _ps(t.drfm_sb_ns)
        self.t_rfm = _ps(t.rfm_sb_ns)
        self.t_col = _ps(t.col_slot_ns)
        self.br = t.blast_radius
        self.refs_per_window = t.refs_per_window
        self.rows_per_ref = g.rows_per_bank // self.refs_per_window
        if self.rows_per_ref < 1:
            self.rows_per_ref = 1
        self.n_sweep_chunks = g.rows_per_bank // self.rows_per_ref
        self.reset_cost = self.n_sweep_chunks * self.t_rfc
        self.geometry = g
        self.n_rh = config.n_rh
        nb = g.banks_per_channel
        self.rows_per_bank = g.rows_per_bank
        self.banks_per_rank = g.banks_per_rank
        self.banks_per_bankgroup = g.banks_per_bankgroup
        # per-bank / per-rank clocks (ps)
        self.bank_next = [0] * nb
        self.bank_blocked = [0] * nb
        self.blocked_accum = [0] * nb
        self.rank_rrd = [0] * g.ranks_per_channel
        self.rank_blocked = [0] * g.ranks_per_channel
        self.ref_next = [self.t_refi] * g.ranks_per_channel
        self.sweep = [0] * g.ranks_per_channel
        self.window_next = self.t_refw
        self.windows_completed = 0
        self.drfm_next = 0
        # ground truth: victim hammer counters per bank
        self.ham = [[0] * g.rows_per_bank for _ in range(nb)]
        self.max_hammer = 0
        self.violations = []
        self.refs = 0
        self.total_acts = 0
        self.last_act_ps = 0
        self.mit_counts = {}
        self.counter_reads = 0
        self.counter_writes = 0
        self.full_resets = 0

    # -- refresh & reset plumbing -------------------------------------------

    def _do_ref(self, rank: int):
        t0 = self.ref_next[rank]
        chunk = self.sweep[rank]
        lo = chunk * self.rows_per_ref
        zeros = [0] * self.rows_per_ref
        base = rank * self.banks_per_rank
        for b in range(base, base + self.banks_per_rank):
            self.ham[b][lo:lo + self.rows_per_ref] = zeros
        self.sweep[rank] = (chunk + 1) % self.n_sweep_chunks
        end = t0 + self.t_rfc
        if end > self.rank_blocked[rank]:
            self.rank_blocked[rank] = end
        self.ref_next[rank] = t0 + self.t_refi
        self.refs += 1
        if self.log is not None:
            self.log.append(f"REF {t0 / 1000:.3f} {rank} {chunk}")

    def _refresh_victims(self, rank: int, bank: int, row: int, br: int):
        ham = self.ham[rank * self.banks_per_rank + bank]
        lo = row - br
        if lo < 0:
            lo = 0
        hi = row + br
        last = self.rows_per_bank - 1
        if hi > last:
            hi = last
        for v in range(lo, hi + 1):
            if v != row:
                ham[v] = 0

    def _hammer(self, gid: int, row: int, t: int):
        ham = self.ham[gid]
        n_rh = self.n_rh
        mx = self.max_hammer
        lo = row - self.br
        hi = row + self.br
        if lo < 0:
            lo = 0
        last = self.rows_per_bank - 1
        if hi > last:
            hi = last
        for v in range(lo, hi + 1):
            if v == row:
                continue
            c = ham[v] + 1
            ham[v] = c
            if c > mx:
                mx = c
                if c >= n_rh and len(self.violations) < 16:
                    self.violations.append((t / 1000, gid, v, c))
        self.max_hammer = mx

    def _block_bank(self, gid: int, start: int, dur: int):
        b = self.bank_blocked[gid]
        if b < start:
            b = start
        self.bank_blocked[gid] = b + dur
        self.blocked_accum[gid] += dur

    def apply_mitigation(self, a, now: int):
        """Apply one tracker-ordered action: refresh effect + blocking cost."""
        start = now + self.t_rc
        kind = a.kind
        if kind != act.COUNTER_READ and kind != act.COUNTER_WRITE:
            self.mit_counts[kind] = self.mit_counts.get(kind, 0) + 1
        if kind == act.VRR:
            br = a.br or self.br
            dur = 2 * br * self.t_vrr
            self._refresh_victims(a.rank, a.bank, a.row, br)
            self._block_bank(a.rank * self.banks_per_rank + a.bank, start, dur)
        elif kind == act.DRFM_SB or kind == act.RFM_SB:
            dur = self.t_drfm if kind == act.DRFM_SB else self.t_rfm
            br = a.br or (2 if kind == act.DRFM_SB else self.br)
            if self.cfg.timing.drfm_rate_limited and kind == act.DRFM_SB:
                if start < self.drfm_next:
                    start = self.drfm_next
                self.drfm_next = start + 2 * self.t_refi
            self._refresh_victims(a.rank, a.bank, a.row, br)
            bank_num = a.bank % self.banks_per_bankgroup
            base = a.rank * self.banks_per_rank
            for g in range(self.geometry.bankgroups_per_rank):
                self._block_bank(base + g * self.banks_per_bankgroup + bank_num, start, dur)
        elif kind == act.COUNTER_READ or kind == act.COUNTER_WRITE:
            if kind == act.COUNTER_READ:
                self.counter_reads += 1
            else:
                self.counter_writes += 1
            self._block_bank(a.rank * self.banks_per_rank + a.bank, start, self.t_col)
        elif kind == act.RANK_RESET:
            self.full_resets += 1
            end = start + self.reset_cost
            if end > self.rank_blocked[a.rank]:
                self.rank_blocked[a.rank] = end
            base = a.rank * self.banks_per_rank
            for b in range(base, base + self.banks_per_rank):
                self.blocked_accum[b] += self.reset_cost
                self.ham[b] = [0] * self.rows_per_bank
        elif kind == act.CHANNEL_RESET:
            self.full_resets += 1
            end = start + self.reset_cost
            for r in range(self.geometry.ranks_per_channel):
                if end > self.rank_blocked[r]:
                    self.rank_blocked[r] = end
            for b in range(self.geometry.banks_per_channel):
                self.blocked_accum[b] += self.reset_cost
                self.ham[b] = [0] * self.rows_per_bank
        else:
            raise ValueError(f"unknown mitigation kind {kind!r}")
        if self.log is not None:
            if kind == act.RANK_RESET:
                self.log.append(f"RANK_RESET {start / 1000:.3f} {a.rank}")
            elif kind == act.CHANNEL_RESET:
                self.log.append(f"CHANNEL_RESET {start / 1000:.3f}")
            else:
                bpb = self.banks_per_bankgroup
                self.log.append(f"{kind.upper()} {start / 1000:.3f} {a.rank} "
                                f"{a.bank // bpb} {a.bank % bpb} {a.row}")

    # -- main loop ------------------------------------------------------------

    def run(self, max_acts: int | None = None) -> SimReport:
        cfg = self.cfg
        if max_acts is None:
            max_acts = cfg.duration_windows * (self.t_refw // self.t_rrd)
        g = self.geometry
        banks_per_rank = self.banks_per_rank
        rows_per_bank = self.rows_per_bank
        bank_next = self.bank_next
        bank_blocked = self.bank_blocked
        rank_rrd = self.rank_rrd
        rank_blocked = self.rank_blocked
        ref_next = self.ref_next
        tracker = self.tracker
        t_rc = self.t_rc
        t_rrd = self.t_rrd
        log = self.log
        timed = getattr(self.workload, "timed", False)
        n = 0
        for item in self.workload:
            if n >= max_acts:
                break
            if timed:
                t_min, rank, bank, row = item
            else:
                rank, bank, row = item
                t_min = 0
            gid = rank * banks_per_rank + bank
            while True:
                t = bank_next[gid]
                if bank_blocked[gid] > t:
                    t = bank_blocked[gid]
                if rank_rrd[rank] > t:
                    t = rank_rrd[rank]
                if rank_blocked[rank] > t:
                    t = rank_blocked[rank]
                if t_min > t:
                    t = t_min
                # deliver due refreshes and window boundaries in time order
                due = ref_next[0]
                due_rank = 0
                for r in range(1, len(ref_next)):
                    if ref_next[r] < due:
                        due = ref_next[r]
                        due_rank = r
                if due <= t:
                    self._do_ref(due_rank)
                    continue
                if self.window_next <= t:
                    tracker.window_reset(self.window_next)
                    self.windows_completed += 1
                    self.window_next += self.t_refw
                    continue
                break
            # issue the activation
            bank_next[gid] = t + t_rc
            rank_rrd[rank] = t + t_rrd
            self.last_act_ps = t
            n += 1
            flat = bank * rows_per_bank + row
            self._hammer(gid, row, t)
            out = tracker.activate(rank, bank, flat, t)
            if out:
                for a in out:
                    self.apply_mitigation(a, t)
            if log is not None:
                log.append(f"ACT {t / 1000:.3f} {rank} "
                           f"{bank // g.banks_per_bankgroup} {bank % g.banks_per_bankgroup} {row}")
        self.total_acts = n
        return self._report()

    def _report(self) -> SimReport:
        cfg = self.cfg
        return SimReport(
            config_hash=config_hash(cfg),
            tracker=getattr(self.tracker, "name", cfg.tracker),
            workload=getattr(self.workload, "kind", cfg.workload),
            n_rh=cfg.n_rh,
            seed=cfg.seed,
            makespan_ns=(self.last_act_ps + self.t_rc) / 1000,
            total_acts=self.total_acts,
            refs=self.refs,
            mitigations=dict(sorted(self.mit_counts.items())),
            counter_reads=self.counter_reads,
            counter_writes=self.counter_writes,
            full_resets=self.full_resets,
            blocked_ns_per_bank=[v / 1000 for v in self.blocked_accum],
            max_hammer=self.max_hammer,
            security_violation=bool(self.violations),
            violations=list(self.violations),
            windows_completed=self.windows_completed,
            tracker_stats=self.tracker.stats(),
            config_echo=serialize_config(cfg),
        )


def slowdown(report: SimReport, baseline: SimReport) -> float:
    """Makespan ratio against a baseline run of the same workload and seed."""
    if (report.workload, report.seed, report.total_acts) != \
            (baseline.workload, baseline.seed, baseline.total_acts):
        raise ValueError("reports ran different workloads; slowdown undefined")
    return report.makespan_ns / baseline.makespan_ns


def build_tracker(cfg: ExperimentConfig, kind: str | None = None):
    """Instantiate the tracker a config names, applying derived thresholds."""
    from .baselines import (AbacusTracker, CometTracker, HydraTracker,
                            NullTracker, ParaTracker)
    from .dapper import DualGroupTracker, GroupTracker

    kind = kind or cfg.tracker
    g, t = cfg.geometry, cfg.timing
    t_refw_ps = _ps(t.t_refw_ns)
    n_m = cfg.n_rh // 2
    if kind == "null":
        return NullTracker()
    if kind == "dapper-s":
        t_reset = _ps(cfg.dapper_s_t_reset_ns) if cfg.dapper_s_t_reset_ns else t_refw_ps
        return GroupTracker(g, n_m, cfg.seed, cfg.group_size, t_reset)
    if kind == "dapper-h":
        # trigger margin keeps the +1 bit-vector slack and clamped reset
        # propagation strictly below the window-straddle budget
        n_m_h = max(2, n_m - cfg.dapper_h_margin)
        return DualGroupTracker(g, n_m_h, cfg.seed, cfg.group_size, t_refw_ps)
    if kind == "para":
        return ParaTracker(g, min(1.0, cfg.para_k / cfg.n_rh), cfg.seed)
    if kind == "hydra":
        return HydraTracker(g, n_m, cfg.seed, cfg.hydra_group_size,
                            cfg.hydra_rcc_entries, cfg.hydra_rcc_ways)
    if kind == "comet":
        return CometTracker(g, cfg.n_rh, cfg.seed, t_refw_ps, cfg.comet_counters,
                            cfg.comet_hashes, cfg.comet_rat_entries, cfg.comet_history)
    if kind == "abacus":
        return AbacusTracker(g, cfg.n_rh, cfg.seed, cfg.abacus_entries)
    raise ValueError(f"unknown tracker kind {kind!r}")


def run_experiment(cfg: ExperimentConfig, tracker=None, workload=None,
                   max_acts: int | None = None, log: list | None = None) -> SimReport:
    from .workloads import build_workload
    if tracker is None:
        tracker = build_tracker(cfg)
    if workload is None:
        workload = build_workload(cfg)
    if log is None and cfg.log_commands:
        log = []
    eng = Engine(cfg, tracker, workload, log=log)
    report = eng.run(max_acts=max_acts)
    report.command_log = log
    return report
