"""Independent verifiers: plainly-written reference trackers for exhaustive
equivalence checking at tiny scale, a shadow-counter security fuzzer, pure
Monte-Carlo estimators for the closed forms, and the command-log legality
auditor. Reference logic here is deliberately naive and kept separate from
the tracker implementations it checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .actions import REFRESH_KINDS, VRR
from .baselines import NullTracker
from .dapper import DualGroupTracker, GroupTracker
from .engine import build_tracker
from .geometry import Geometry, TimingParams, desk_preset
from .llbc import LlbcCipher


# -- reference trackers (spec-following, unoptimized) -------------------------

class RefGroupTracker:
    """Dictionary re-derivation of the single-table tracker's behavior."""

    def __init__(self, geometry: Geometry, n_m: int, seed: int, group_size: int):
        self.geometry = geometry
        self.n_m = n_m
        self.group_size = group_size
        self.ciphers = [LlbcCipher(geometry.row_bits, seed, 0, r)
                        for r in range(geometry.ranks_per_channel)]
        self.counts: dict[tuple[int, int], int] = {}

    def snapshot(self):
        return dict(self.counts)

    def restore(self, snap):
        self.counts = dict(snap)

    def act(self, rank: int, flat: int):
        g = self.ciphers[rank].encrypt(flat) // self.group_size
        c = self.counts.get((rank, g), 0) + 1
        if c >= self.n_m:
            self.counts[(rank, g)] = 0
            members = sorted(self.ciphers[rank].decrypt(g * self.group_size + j)
                             for j in range(self.group_size))
            return members
        self.counts[(rank, g)] = c
        return None


class RefDualTracker:
    """Dictionary re-derivation of the dual-table tracker's behavior."""

    def __init__(self, geometry: Geometry, n_m: int, seed: int, group_size: int):
        self.geometry = geometry
        self.n_m = n_m
        self.group_size = group_size
        nr = geometry.ranks_per_channel
        self.c1 = [LlbcCipher(geometry.row_bits, seed, 0, 2 * r) for r in range(nr)]
        self.c2 = [LlbcCipher(geometry.row_bits, seed, 0, 2 * r + 1) for r in range(nr)]
        self.t1: dict[tuple[int, int], int] = {}
        self.t2: dict[tuple[int, int], int] = {}
        self.banks_seen: dict[tuple[int, int], set] = {}

    def snapshot(self):
        return (dict(self.t1), dict(self.t2),
                {k: set(v) for k, v in self.banks_seen.items()})

    def restore(self, snap):
        self.t1 = dict(snap[0])
        self.t2 = dict(snap[1])
        self.banks_seen = {k: set(v) for k, v in snap[2].items()}

    def groups(self, rank: int, flat: int):
        return (self.c1[rank].encrypt(flat) // self.group_size,
                self.c2[rank].encrypt(flat) // self.group_size)

    def members(self, rank: int, table: int, g: int):
        cipher = (self.c1 if table == 1 else self.c2)[rank]
        return [cipher.decrypt(g * self.group_size + j) for j in range(self.group_size)]

    def act(self, rank: int, bank: int, flat: int):
        n_m = self.n_m
        g1, g2 = self.groups(rank, flat)
        k1, k2 = (rank, g1), (rank, g2)
        self.t2[k2] = min(n_m, self.t2.get(k2, 0) + 1)
        seen = self.banks_seen.setdefault(k1, set())
        if bank in seen:
            self.t1[k1] = min(n_m, self.t1.get(k1, 0) + 1)
            self.banks_seen[k1] = {bank}
        else:
            seen.add(bank)
        if self.t1.get(k1, 0) >= n_m and self.t2.get(k2, 0) >= n_m:
            return self._mitigate(rank, g1, g2)
        return None

    def _mitigate(self, rank: int, g1: int, g2: int):
        m1 = self.members(rank, 1, g1)
        m2 = self.members(rank, 2, g2)
        shared = sorted(set(m1) & set(m2))
        reset1 = max((self.t2.get((rank, self.groups(rank, x)[1]), 0)
                      for x in m1 if x not in shared), default=0)
        reset2 = max((self.t1.get((rank, self.groups(rank, y)[0]), 0)
                      for y in m2 if y not in shared), default=0)
        self.t1[(rank, g1)] = min(reset1, self.n_m - 1)
        self.t2[(rank, g2)] = min(reset2, self.n_m - 1)
        self.banks_seen[(rank, g1)] = set()
        return shared


class RefMisraGries:
    """Naive shared Misra-Gries summary with spillover and per-bank bits."""

    def __init__(self, entries: int, n_m: int, banks: int):
        self.cap = entries
        self.n_m = n_m
        self.banks = banks
        self.table: dict[int, tuple[int, frozenset]] = {}
        self.spillover = 0

    def snapshot(self):
        return (dict(self.table), self.spillover)

    def restore(self, snap):
        self.table = dict(snap[0])
        self.spillover = snap[1]

    def estimate(self, row: int) -> int:
        e = self.table.get(row)
        return e[0] if e is not None else self.spillover

    def act(self, bank: int, row: int):
        """Returns 'mitigate', 'reset', or None."""
        e = self.table.get(row)
        if e is not None:
            count, bits = e
            if bank in bits:
                count += 1
                self.table[row] = (count, frozenset((bank,)))
                if count >= self.n_m:
                    self.table[row] = (self.spillover, frozenset(range(self.banks)))
                    return "mitigate"
            else:
                self.table[row] = (count, bits | {bank})
            return None
        if len(self.table) < self.cap:
            self.table[row] = (self.spillover + 1, frozenset((bank,)))
            return None
        victims = [r for r, (c, _) in self.table.items() if c == self.spillover]
        if victims:
            del self.table[min(victims)]
            self.table[row] = (self.spillover + 1, frozenset((bank,)))
            return None
        self.spillover += 1
        if self.spillover >= self.n_m:
            self.table.clear()
            self.spillover = 0
            return "reset"
        return None


# -- exhaustive equivalence ----------------------------------------------------

@dataclass
class Verdict:
    ok: bool
    checked: int
    detail: str = ""


def _tiny_geometry() -> Geometry:
    # 16 rows in 4 banks of 4 rows
    return Geometry(ranks_per_channel=1, bankgroups_per_rank=4,
                    banks_per_bankgroup=1, rows_per_bank=4)


def exhaustive_group_tracker(max_len: int = 6, n_m: int = 4, group_size: int = 4,
                             seed: int = 11) -> Verdict:
    """Compare the single-table tracker against the reference on every
    activation sequence up to max_len over a 16-row space."""
    geo = _tiny_geometry()
    impl = GroupTracker(geo, n_m, seed, group_size, t_reset_ps=1 << 62)
    ref = RefGroupTracker(geo, n_m, seed, group_size)
    rpb = geo.rows_per_bank
    flats = list(range(geo.rows_per_rank))
    checked = 0
    seq: list[int] = []

    def step(depth: int):
        nonlocal checked
        if depth == 0:
            return None
        for flat in flats:
            impl_snap = (list(impl.counters[0]), impl.mitigations, impl.rows_refreshed)
            ref_snap = ref.snapshot()
            out = impl.activate(0, flat // rpb, flat, 1)
            impl_rows = sorted(a.bank * rpb + a.row for a in out) if out else None
            ref_rows = ref.act(0, flat)
            checked += 1
            seq.append(flat)
            if impl_rows != ref_rows:
                return (f"divergence on sequence {seq}: impl refreshed "
                        f"{impl_rows}, reference {ref_rows}")
            bad = step(depth - 1)
            seq.pop()
            impl.counters[0][:] = impl_snap[0]
            impl.mitigations, impl.rows_refreshed = impl_snap[1], impl_snap[2]
            ref.restore(ref_snap)
            if bad:
                return bad
        return None

    detail = step(max_len) or ""
    return Verdict(ok=not detail, checked=checked, detail=detail)


def exhaustive_dual_tracker(max_len: int = 6, n_m: int = 4, group_size: int = 4,
                            seed: int = 5, rows: int = 12) -> Verdict:
    """Sequence-exhaustive comparison of the dual-table tracker against the
    reference, plus the per-step upper-bound invariant
    count(r) <= min(table1[g1(r)], table2[g2(r)]) + 1 for unrefreshed rows."""
    geo = _tiny_geometry()
    impl = DualGroupTracker(geo, n_m, seed, group_size, t_reset_ps=1 << 62)
    ref = RefDualTracker(geo, n_m, seed, group_size)
    rpb = geo.rows_per_bank
    flats = list(range(min(rows, geo.rows_per_rank)))
    groups_of = {f: ref.groups(0, f) for f in range(geo.rows_per_rank)}
    true_counts = [0] * geo.rows_per_rank
    checked = 0
    seq: list[int] = []

    def invariant_failure():
        for r, cnt in enumerate(true_counts):
            if cnt == 0:
                continue
            g1, g2 = groups_of[r]
            bound = min(impl.counters1[0][g1], impl.counters2[0][g2]) + 1
            if cnt > bound:
                return f"row {r} count {cnt} exceeds min-counter bound {bound}"
        return None

    def step(depth: int):
        nonlocal checked
        if depth == 0:
            return None
        for flat in flats:
            snap = (list(impl.counters1[0]), list(impl.counters2[0]),
                    list(impl.bits1[0]), impl.mitigations,
                    impl.single_row_mitigations, impl.rows_refreshed,
                    impl.max_c1, impl.max_c2)
            ref_snap = ref.snapshot()
            counts_snap = list(true_counts)
            out = impl.activate(0, flat // rpb, flat, 1)
            impl_rows = sorted(a.bank * rpb + a.row for a in out) if out else None
            ref_rows = ref.act(0, flat // rpb, flat)
            checked += 1
            seq.append(flat)
            true_counts[flat] += 1
            bad = None
            if impl_rows != ref_rows:
                bad = (f"divergence on sequence {seq}: impl refreshed "
                       f"{impl_rows}, reference {ref_rows}")
            if not bad and impl_rows:
                for r in impl_rows:
                    true_counts[r] = 0
            if not bad:
                bad = invariant_failure()
                if bad:
                    bad = f"sequence {seq}: {bad}"
            if not bad:
                bad = step(depth - 1)
            seq.pop()
            true_counts[:] = counts_snap
            impl.counters1[0][:] = snap[0]
            impl.counters2[0][:] = snap[1]
            impl.bits1[0][:] = snap[2]
            (impl.mitigations, impl.single_row_mitigations, impl.rows_refreshed,
             impl.max_c1, impl.max_c2) = snap[3:]
            ref.restore(ref_snap)
            if bad:
                return bad
        return None

    detail = step(max_len) or ""
    return Verdict(ok=not detail, checked=checked, detail=detail)


def exhaustive_abacus_deficit(max_len: int = 10, entries: int = 4, rows: int = 8,
                              n_m: int = 6) -> Verdict:
    """Breadth-first reachable-state check (states deduplicated, which covers
    every activation sequence) of the Misra-Gries deficit bound
    true_count - estimate <= spillover for a single-bank tracker."""
    ref = RefMisraGries(entries, n_m, banks=1)
    start = (ref.snapshot(), (0,) * rows)
    seen = {_freeze_state(start)}
    frontier = [start]
    checked = 0
    for _depth in range(max_len):
        nxt = []
        for state, counts in frontier:
            for row in range(rows):
                ref.restore(state)
                res = ref.act(0, row)
                new_counts = list(counts)
                new_counts[row] += 1
                if res == "mitigate":
                    new_counts[row] = 0
                elif res == "reset":
                    new_counts = [0] * rows
                checked += 1
                for r in range(rows):
                    deficit = new_counts[r] - ref.estimate(r)
                    if deficit > ref.spillover:
                        return Verdict(False, checked,
                                       f"row {r} deficit {deficit} > spillover "
                                       f"{ref.spillover} (depth {_depth + 1})")
                ns = (ref.snapshot(), tuple(new_counts))
                key = _freeze_state(ns)
                if key not in seen:
                    seen.add(key)
                    nxt.append(ns)
        frontier = nxt
        if not frontier:
            break
    return Verdict(True, checked)


def _freeze_state(state):
    snap, counts = state
    table, spill = snap
    return (tuple(sorted(table.items())), spill, counts)


def exhaustive_equivalence(tracker_kind: str, max_len: int = 6) -> Verdict:
    if tracker_kind == "dapper-s":
        return exhaustive_group_tracker(max_len=max_len)
    if tracker_kind == "dapper-h":
        return exhaustive_dual_tracker(max_len=max_len)
    if tracker_kind == "abacus":
        return exhaustive_abacus_deficit(max_len=max(max_len, 10))
    raise ValueError(f"no exhaustive oracle for {tracker_kind!r}")


# -- security fuzzing ----------------------------------------------------------

class ShadowCounters:
    """Exact per-victim hammer counts, the authoritative ground truth."""

    def __init__(self, geometry: Geometry, n_rh: int, blast_radius: int = 1):
        self.geometry = geometry
        self.n_rh = n_rh
        self.br = blast_radius
        self.ham = [[0] * geometry.rows_per_bank
                    for _ in range(geometry.banks_per_channel)]
        self.violations = 0
        self.max_seen = 0

    def on_act(self, gid: int, row: int):
        ham = self.ham[gid]
        last = self.geometry.rows_per_bank - 1
        lo = row - self.br
        hi = row + self.br
        if lo < 0:
            lo = 0
        if hi > last:
            hi = last
        for v in range(lo, hi + 1):
            if v == row:
                continue
            c = ham[v] + 1
            if c >= self.n_rh:
                self.violations += 1
                c = 0          # count each crossing once, keep hunting
            ham[v] = c
            if c > self.max_seen:
                self.max_seen = c

    def on_refresh(self, gid: int, row: int, br: int):
        ham = self.ham[gid]
        last = self.geometry.rows_per_bank - 1
        for v in range(max(0, row - br), min(last, row + br) + 1):
            if v != row:
                ham[v] = 0

    def on_sweep(self, gid: int, lo: int, n: int):
        self.ham[gid][lo:lo + n] = [0] * n


def fuzz_security(tracker_kind: str, n_seeds: int = 100,
                  acts_per_seed: int = 1_000_000, n_rh: int = 64,
                  blast_radius: int = 1) -> dict[int, int]:
    """Adversarially-biased random campaign on the desk-scale geometry.

    Returns per-seed ground-truth violation counts; secure trackers must
    return all zeros, the null tracker must violate on every seed.
    """
    results = {}
    for seed in range(n_seeds):
        # 2^18 ns window is picosecond-exact and small enough that every run
        # straddles several window boundaries; 128 groups keep mitigation
        # scans short while preserving heavy counter sharing
        cfg = desk_preset(seed=seed, n_rh=n_rh, group_size=64)
        cfg.timing = TimingParams(t_refw_ns=262144.0, t_refi_ns=512.0)
        tracker = build_tracker(cfg, tracker_kind)
        results[seed] = _fuzz_one(cfg, tracker, acts_per_seed, blast_radius)
    return results


def _fuzz_one(cfg, tracker, acts: int, br: int) -> int:
    g = cfg.geometry
    n_rh = cfg.n_rh
    rng = random.Random(cfg.seed * 0x9E3779B1 + 7)
    rpb = g.rows_per_bank
    bpr = g.banks_per_rank
    n_banks = g.banks_per_channel
    n_flats = g.rows_per_rank
    last = rpb - 1
    ham = [[0] * rpb for _ in range(n_banks)]
    violations = 0
    t_rrd = 2500
    t_refw = round(cfg.timing.t_refw_ns * 1000)
    refs_per_window = cfg.timing.refs_per_window
    t_refi = t_refw // refs_per_window
    chunk = max(1, rpb // refs_per_window)
    n_chunks = (rpb + chunk - 1) // chunk
    ref_due, sweep = t_refi, 0
    window_next = t_refw
    now = 0
    phase_left = 0
    hot: list[int] = [0]
    n_hot = 1
    random_u = rng.random
    activate = tracker.activate
    zeros_chunk = [0] * chunk
    for _ in range(acts):
        now += t_rrd
        if ref_due <= now:
            while ref_due <= now:
                lo = (sweep % n_chunks) * chunk
                hi = lo + chunk
                for gid in range(n_banks):
                    ham[gid][lo:hi] = zeros_chunk
                sweep += 1
                ref_due += t_refi
            if window_next <= now:
                tracker.window_reset(window_next)
                window_next += t_refw
                phase_left = 0
        if phase_left == 0:
            phase_left = rng.randrange(20_000, 60_000)
            mode = rng.randrange(3)
            if mode == 0:
                hot = [rng.randrange(n_flats) for _ in range(rng.choice((1, 2, 4)))]
            elif mode == 1:
                hot = _collision_rows(tracker, rng, n_flats)
            else:
                target = rng.randrange(n_flats)
                hot = [target, min(n_flats - 1, target + 2)]   # double-sided-style pair
            n_hot = len(hot)
        phase_left -= 1
        u = random_u()
        if u < 0.85:
            flat = hot[int(u * 1.176470588 * n_hot) % n_hot]
        else:
            flat = int((u - 0.85) * 6.666666667 * n_flats) % n_flats
        gid, row = divmod(flat, rpb)
        bank_ham = ham[gid]
        if row:
            c = bank_ham[row - 1] + 1
            if c >= n_rh:
                violations += 1
                c = 0
            bank_ham[row - 1] = c
        if row != last:
            c = bank_ham[row + 1] + 1
            if c >= n_rh:
                violations += 1
                c = 0
            bank_ham[row + 1] = c
        out = activate(gid // bpr, gid % bpr, flat, now)
        if out:
            for a in out:
                if a.kind == VRR:
                    b_ham = ham[a.rank * bpr + a.bank]
                    r = a.row
                    rad = a.br or br
                    for v in range(r - rad if r >= rad else 0,
                                   (r + rad if r + rad <= last else last) + 1):
                        if v != r:
                            b_ham[v] = 0
                elif a.kind in REFRESH_KINDS:
                    for b in range(n_banks):
                        ham[b] = [0] * rpb
    return violations


def _collision_rows(tracker, rng, n_flats):
    """Rows sharing a randomized group, so shared counters get honest pressure."""
    if isinstance(tracker, GroupTracker):
        cipher = tracker.ciphers[0]
        s = tracker.group_size
    elif isinstance(tracker, DualGroupTracker):
        cipher = (tracker.ciphers1 if rng.random() < 0.5 else tracker.ciphers2)[0]
        s = tracker.group_size
    else:
        return [rng.randrange(n_flats) for _ in range(4)]
    g = rng.randrange(n_flats // s)
    members = cipher.group_members(g, s)
    rng.shuffle(members)
    return members[:8]


# -- Monte-Carlo estimators ------------------------------------------------------

def mc_capture_s(n_rg: int, act_max: int, trials: int, seed: int = 0) -> float:
    """Direct sampling of the single-table capture experiment: probability that
    act_max uniform group picks hit the target group at least once."""
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        n = min(200_000, trials - done)
        draws = rng.integers(0, n_rg, size=(n, act_max))
        hits += int((draws == 0).any(axis=1).sum())
        done += n
    return hits / trials


def mc_capture_h(n_groups: int, trials: int, seed: int = 0) -> float:
    """Direct sampling of the dual-table coverage experiment: two probe rows
    must cover the target group in both tables."""
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        n = min(500_000, trials - done)
        a = rng.integers(0, n_groups, size=(n, 2))
        b = rng.integers(0, n_groups, size=(n, 2))
        hits += int(((a == 0).any(axis=1) & (b == 0).any(axis=1)).sum())
        done += n
    return hits / trials


# -- command-log auditor ---------------------------------------------------------

BLOCK_DURATIONS = {
    "VRR": lambda t, br: 2 * br * t.vrr_per_victim_ns,
    "DRFM_SB": lambda t, br: t.drfm_sb_ns,
    "RFM_SB": lambda t, br: t.rfm_sb_ns,
    "COUNTER_READ": lambda t, br: t.col_slot_ns,
    "COUNTER_WRITE": lambda t, br: t.col_slot_ns,
}


class _IntervalTrack:
    """Time-ordered blocking intervals with a prune pointer; ACT queries arrive
    in non-decreasing time order, so passed intervals drop off the front."""

    __slots__ = ("items", "ptr")

    def __init__(self):
        self.items = []
        self.ptr = 0

    def add_serialized(self, ts, dur):
        start = ts
        if self.items and self.items[-1][1] > start:
            start = self.items[-1][1]
        self.items.append((start, start + dur))

    def add(self, ts, dur):
        self.items.append((ts, ts + dur))

    def hit(self, at):
        items = self.items
        p = self.ptr
        n = len(items)
        while p < n and items[p][1] <= at:
            p += 1
        self.ptr = p
        for i in range(p, n):
            s, e = items[i]
            if s > at:
                break
            if at < e:
                return (s, e)
        return None


_EPS = 1e-6     # ns; command logs carry picosecond-exact decimals


def audit_log(lines, cfg) -> Verdict:
    """Replay a command log asserting tRC/tRRD_S spacing, no activation inside
    a blocked interval, and once-per-window refresh completeness."""
    g, t = cfg.geometry, cfg.timing
    bpb = g.banks_per_bankgroup
    bpr = g.banks_per_rank
    last_bank_act = {}
    last_rank_act = {}
    bank_blocks = {}            # gid -> _IntervalTrack
    rank_blocks = {}            # rank -> _IntervalTrack
    ref_chunks = {}             # (rank, window) -> list of chunks
    n_chunks = g.rows_per_bank // max(1, g.rows_per_bank // t.refs_per_window)
    refw_ps = round(t.t_refw_ns * 1000)
    errors = []
    checked = 0
    max_t = 0.0

    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        kind = parts[0]
        ts = float(parts[1])
        if ts > max_t:
            max_t = ts
        if kind == "ACT":
            rank, bg, bank = int(parts[2]), int(parts[3]), int(parts[4])
            gid = rank * bpr + bg * bpb + bank
            checked += 1
            lb = last_bank_act.get(gid)
            if lb is not None and ts - lb < t.t_rc_ns - _EPS:
                errors.append(f"line {lineno}: ACT to bank {gid} at {ts} violates "
                              f"tRC (previous at {lb})")
            lr = last_rank_act.get(rank)
            if lr is not None and ts - lr < t.t_rrd_s_ns - _EPS:
                errors.append(f"line {lineno}: ACT in rank {rank} at {ts} violates "
                              f"tRRD_S (previous at {lr})")
            tr = bank_blocks.get(gid)
            hit = tr.hit(ts + _EPS) if tr else None
            if hit is None:
                tr = rank_blocks.get(rank)
                hit = tr.hit(ts + _EPS) if tr else None
            if hit is not None and ts < hit[1] - _EPS and ts > hit[0] - _EPS:
                errors.append(f"line {lineno}: ACT at {ts} inside blocked interval {hit}")
            last_bank_act[gid] = ts
            last_rank_act[rank] = ts
        elif kind == "REF":
            rank, chunk = int(parts[2]), int(parts[3])
            rank_blocks.setdefault(rank, _IntervalTrack()).add(ts, t.t_rfc_ns)
            window = (round(ts * 1000) - 1) // refw_ps
            ref_chunks.setdefault((rank, window), []).append(chunk)
        elif kind in BLOCK_DURATIONS:
            rank, bg, bank = int(parts[2]), int(parts[3]), int(parts[4])
            dur = BLOCK_DURATIONS[kind](t, t.blast_radius)
            if kind in ("DRFM_SB", "RFM_SB"):
                for grp in range(g.bankgroups_per_rank):
                    gid2 = rank * bpr + grp * bpb + bank
                    bank_blocks.setdefault(gid2, _IntervalTrack()).add_serialized(ts, dur)
            else:
                gid = rank * bpr + bg * bpb + bank
                bank_blocks.setdefault(gid, _IntervalTrack()).add_serialized(ts, dur)
        elif kind == "RANK_RESET":
            rank = int(parts[2])
            rank_blocks.setdefault(rank, _IntervalTrack()).add(ts, n_chunks * t.t_rfc_ns)
        elif kind == "CHANNEL_RESET":
            for rank in range(g.ranks_per_channel):
                rank_blocks.setdefault(rank, _IntervalTrack()).add(ts, n_chunks * t.t_rfc_ns)
        else:
            errors.append(f"line {lineno}: unknown command {kind!r}")
    # refresh completeness on completed windows
    full_windows = int(max_t // t.t_refw_ns)
    for rank in range(g.ranks_per_channel):
        for w in range(full_windows):
            chunks = sorted(ref_chunks.get((rank, w), []))
            if chunks != list(range(n_chunks)):
                errors.append(f"rank {rank} window {w}: refresh sweep covered "
                              f"{len(chunks)} chunks, expected {n_chunks} exactly once")
    return Verdict(ok=not errors, checked=checked,
                   detail="; ".join(errors[:8]))
