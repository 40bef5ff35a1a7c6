"""Comparison trackers behind the same interface: PARA, a Hydra-style
group-then-per-row tracker with a counter cache, a CoMeT-style count-min
sketch with a recent-aggressor table, and an ABACUS-style shared Misra-Gries
tracker with a spillover counter.

These reproduce each design's behavior at the fidelity the performance
attacks exercise; storage layouts and replacement details that the original
proposals leave open are documented inline.
"""

from __future__ import annotations

import random
from collections import OrderedDict, deque

from .actions import (MitigationAction, VRR, counter_read, counter_write,
                      rank_reset, channel_reset)
from .geometry import Geometry

# MG entry counts from the published ABACUS configuration, keyed by N_RH.
ABACUS_ENTRIES = {4000: 309, 2000: 617, 1000: 1233, 500: 2466, 250: 4931, 125: 9783}


class NullTracker:
    """No mitigation at all; exists so the ground-truth oracle has a known-bad control."""

    name = "null"

    def __init__(self, *_a, **_k):
        pass

    def activate(self, rank, bank, flat, now_ps):
        return None

    def window_reset(self, now_ps):
        pass

    def stats(self):
        return {}


class ParaTracker:
    """Stateless probabilistic mitigation: refresh the activated row's victims w.p. p."""

    name = "para"

    def __init__(self, geometry: Geometry, p: float, seed: int):
        if not 0 < p <= 1:
            raise ValueError("p must be in (0, 1]")
        self.geometry = geometry
        self.p = p
        self._rng = random.Random(seed ^ 0x5041_5241)
        self._rows_per_bank = geometry.rows_per_bank
        self.mitigations = 0

    def activate(self, rank, bank, flat, now_ps):
        if self._rng.random() < self.p:
            self.mitigations += 1
            return [MitigationAction(VRR, rank, bank, flat % self._rows_per_bank)]
        return None

    def window_reset(self, now_ps):
        pass

    def stats(self):
        return {"mitigations": self.mitigations, "p": self.p}


class HydraTracker:
    """Group counters that hand hot groups to cached per-row counters.

    The row-counter cache (RCC) is set-associative with random eviction; a
    miss fetches the row's counter (one read) and a dirty eviction writes the
    old one back (one write). Row counters conceptually live in a reserved
    DRAM region, modeled as a flat map plus those traffic actions.
    """

    name = "hydra"

    def __init__(self, geometry: Geometry, n_m: int, seed: int,
                 group_size: int = 128, rcc_entries: int = 4096, rcc_ways: int = 32):
        if rcc_entries % rcc_ways:
            raise ValueError("rcc_entries must be a multiple of rcc_ways")
        self.geometry = geometry
        self.n_m = n_m
        self.n_gc = int(0.8 * n_m)
        self.group_size = group_size
        self._g_bits = (group_size - 1).bit_length()
        self.ways = rcc_ways
        self.n_sets = rcc_entries // rcc_ways
        self._set_mask = self.n_sets - 1
        self._rows_per_bank = geometry.rows_per_bank
        self._rng = random.Random(seed ^ 0x4859_4452)
        nr = geometry.ranks_per_channel
        n_groups = geometry.rows_per_rank // group_size
        self._n_groups = n_groups
        self.gct = [[0] * n_groups for _ in range(nr)]
        self.rcc = [[{} for _ in range(self.n_sets)] for _ in range(nr)]   # flat -> [count, dirty]
        self.rct = [{} for _ in range(nr)]
        self.mitigations = 0
        self.rcc_hits = 0
        self.rcc_misses = 0
        self.counter_reads = 0
        self.counter_writes = 0

    def activate(self, rank, bank, flat, now_ps):
        g = flat >> self._g_bits
        gct = self.gct[rank]
        c = gct[g]
        if c < self.n_gc:
            gct[g] = c + 1
            return None
        # per-row phase
        s = self.rcc[rank][flat & self._set_mask]
        entry = s.get(flat)
        actions = None
        if entry is None:
            self.rcc_misses += 1
            actions = []
            if len(s) >= self.ways:
                keys = list(s)
                victim = keys[self._rng.randrange(len(keys))]
                vcount, vdirty = s.pop(victim)
                self.rct[rank][victim] = vcount
                if vdirty:
                    self.counter_writes += 1
                    actions.append(counter_write(rank, victim // self._rows_per_bank))
            self.counter_reads += 1
            actions.append(counter_read(rank, bank))
            # rows of a transitioned group start at the group threshold
            entry = [self.rct[rank].get(flat, self.n_gc), False]
            s[flat] = entry
        else:
            self.rcc_hits += 1
        entry[0] += 1
        entry[1] = True
        if entry[0] >= self.n_m:
            entry[0] = 0
            self.mitigations += 1
            if actions is None:
                actions = []
            actions.append(MitigationAction(VRR, rank, bank, flat % self._rows_per_bank))
        return actions

    def window_reset(self, now_ps):
        nr = self.geometry.ranks_per_channel
        self.gct = [[0] * self._n_groups for _ in range(nr)]
        self.rcc = [[{} for _ in range(self.n_sets)] for _ in range(nr)]
        self.rct = [{} for _ in range(nr)]

    def stats(self):
        total = self.rcc_hits + self.rcc_misses
        return {
            "mitigations": self.mitigations,
            "rcc_hits": self.rcc_hits,
            "rcc_misses": self.rcc_misses,
            "rcc_miss_rate": (self.rcc_misses / total) if total else 0.0,
            "counter_reads": self.counter_reads,
            "counter_writes": self.counter_writes,
        }


class CometTracker:
    """Count-min sketch plus a recent-aggressor table of precise counters.

    Structures reset every tREFW/3 by refreshing every row in the rank; a
    sustained RAT miss rate above 25% over the trailing history window forces
    an extra reset. RAT eviction is LRU (unspecified by the original design).
    """

    name = "comet"

    def __init__(self, geometry: Geometry, n_rh: int, seed: int, t_refw_ps: int,
                 counters: int = 512, hashes: int = 4, rat_entries: int = 128,
                 history: int = 256):
        self.geometry = geometry
        self.threshold = n_rh // 4
        self.counters = counters
        self.hashes = hashes
        self.rat_entries = rat_entries
        self.history_len = history
        self.reset_period_ps = t_refw_ps // 3
        rng = random.Random(seed ^ 0x434F_4D45)
        self._salts = [rng.getrandbits(64) | 1 for _ in range(hashes)]
        nr = geometry.ranks_per_channel
        self._rows_per_bank = geometry.rows_per_bank
        self.ct = [[[0] * counters for _ in range(hashes)] for _ in range(nr)]
        self.rat = [OrderedDict() for _ in range(nr)]
        self.history = [deque(maxlen=history) for _ in range(nr)]
        self.next_reset_ps = [self.reset_period_ps] * nr
        self.mitigations = 0
        self.rat_hits = 0
        self.rat_misses = 0
        self.full_resets = 0
        self.miss_rate_resets = 0

    def _indices(self, flat: int):
        c = self.counters
        for salt in self._salts:
            z = (flat ^ salt) * 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF
            z ^= z >> 29
            yield z % c

    def _clear(self, rank: int):
        self.ct[rank] = [[0] * self.counters for _ in range(self.hashes)]
        self.rat[rank] = OrderedDict()
        self.history[rank] = deque(maxlen=self.history_len)

    def activate(self, rank, bank, flat, now_ps):
        actions = None
        if now_ps >= self.next_reset_ps[rank]:
            self.next_reset_ps[rank] += self.reset_period_ps * (
                1 + (now_ps - self.next_reset_ps[rank]) // self.reset_period_ps)
            self._clear(rank)
            self.full_resets += 1
            actions = [rank_reset(rank)]
        # the sketch counts every activation so its estimate never undercounts
        est = 1 << 30
        tables = self.ct[rank]
        for h, idx in enumerate(self._indices(flat)):
            row = tables[h]
            row[idx] += 1
            if row[idx] < est:
                est = row[idx]
        rat = self.rat[rank]
        entry = rat.get(flat)
        if entry is not None:
            self.rat_hits += 1
            rat.move_to_end(flat)
            entry += 1
            if entry >= self.threshold:
                rat[flat] = 0
                self.mitigations += 1
                self.history[rank].append(0)
                mit = MitigationAction(VRR, rank, bank, flat % self._rows_per_bank)
                return actions + [mit] if actions else [mit]
            rat[flat] = entry
            return actions
        if est >= self.threshold:
            self.rat_misses += 1
            self.mitigations += 1
            hist = self.history[rank]
            hist.append(1)
            if len(rat) >= self.rat_entries:
                rat.popitem(last=False)
            rat[flat] = 0
            if actions is None:
                actions = []
            actions.append(MitigationAction(VRR, rank, bank, flat % self._rows_per_bank))
            if len(hist) == self.history_len and sum(hist) > self.history_len // 4:
                self._clear(rank)
                self.full_resets += 1
                self.miss_rate_resets += 1
                actions.append(rank_reset(rank))
        return actions

    def window_reset(self, now_ps):
        for r in range(self.geometry.ranks_per_channel):
            self._clear(r)

    def estimate(self, rank: int, flat: int) -> int:
        return min(self.ct[rank][h][idx] for h, idx in enumerate(self._indices(flat)))

    def stats(self):
        lookups = self.rat_hits + self.rat_misses
        return {
            "mitigations": self.mitigations,
            "rat_hits": self.rat_hits,
            "rat_misses": self.rat_misses,
            "rat_miss_rate": (self.rat_misses / lookups) if lookups else 0.0,
            "full_resets": self.full_resets,
            "miss_rate_resets": self.miss_rate_resets,
        }


class AbacusTracker:
    """One Misra-Gries table shared by every bank in the channel.

    Entries carry a per-bank bit-vector suppressing duplicate same-count
    increments from one bank (set bit -> increment and clear the other
    banks' bits; unset -> just set it). A new row replaces an entry whose
    count equals the spillover counter, entering at spillover+1; otherwise
    the spillover counter absorbs the activation. An entry reaching the
    mitigation threshold refreshes that row address in every bank of the
    channel; the spillover counter reaching it resets the whole channel.
    """

    name = "abacus"

    def __init__(self, geometry: Geometry, n_rh: int, seed: int, entries: int = 0):
        self.geometry = geometry
        self.n_m = n_rh // 2
        self.entries_cap = entries or ABACUS_ENTRIES.get(n_rh, 0)
        if not self.entries_cap:
            raise ValueError(f"no ABACUS entry count for n_rh={n_rh}; set abacus_entries")
        self._banks_per_rank = geometry.banks_per_rank
        self._rows_per_bank = geometry.rows_per_bank
        self.table: dict[int, list] = {}          # row_id -> [count, bits]
        self.buckets: dict[int, dict] = {}        # count -> ordered set of row_ids
        self.spillover = 0
        self.mitigations = 0
        self.channel_resets = 0
        self.first_reset_ps = -1

    def _bucket_move(self, row_id: int, old: int, new: int):
        b = self.buckets.get(old)
        if b is not None:
            b.pop(row_id, None)
            if not b:
                del self.buckets[old]
        self.buckets.setdefault(new, {})[row_id] = None

    def activate(self, rank, bank, flat, now_ps):
        row_id = flat % self._rows_per_bank
        bank_ch = rank * self._banks_per_rank + bank
        m = 1 << bank_ch
        e = self.table.get(row_id)
        if e is not None:
            if e[1] & m:
                old = e[0]
                e[0] = old + 1
                e[1] = m
                self._bucket_move(row_id, old, old + 1)
                if e[0] >= self.n_m:
                    return self._mitigate_entry(row_id, e)
            else:
                e[1] |= m
            return None
        # not tracked
        if len(self.table) < self.entries_cap:
            self.table[row_id] = [self.spillover + 1, m]
            self.buckets.setdefault(self.spillover + 1, {})[row_id] = None
            return None
        replaceable = self.buckets.get(self.spillover)
        if replaceable:
            victim = next(iter(replaceable))
            del replaceable[victim]
            if not replaceable:
                del self.buckets[self.spillover]
            del self.table[victim]
            self.table[row_id] = [self.spillover + 1, m]
            self.buckets.setdefault(self.spillover + 1, {})[row_id] = None
            return None
        self.spillover += 1
        if self.spillover >= self.n_m:
            self.table.clear()
            self.buckets.clear()
            self.spillover = 0
            self.channel_resets += 1
            if self.first_reset_ps < 0:
                self.first_reset_ps = now_ps
            return [channel_reset()]
        return None

    def _mitigate_entry(self, row_id: int, e: list):
        old = e[0]
        e[0] = self.spillover
        # every bank's copy was just refreshed; restart counting from all banks
        # so the deficit bound survives the reset
        e[1] = (1 << (self.geometry.banks_per_channel)) - 1
        self._bucket_move(row_id, old, self.spillover)
        self.mitigations += 1
        g = self.geometry
        acts = []
        for r in range(g.ranks_per_channel):
            for b in range(g.banks_per_rank):
                acts.append(MitigationAction(VRR, r, b, row_id))
        return acts

    def estimate(self, row_id: int) -> int:
        e = self.table.get(row_id)
        return e[0] if e is not None else self.spillover

    def window_reset(self, now_ps):
        self.table.clear()
        self.buckets.clear()
        self.spillover = 0

    def stats(self):
        return {
            "mitigations": self.mitigations,
            "channel_resets": self.channel_resets,
            "spillover": self.spillover,
            "first_reset_ns": self.first_reset_ps / 1000 if self.first_reset_ps >= 0 else -1.0,
        }
