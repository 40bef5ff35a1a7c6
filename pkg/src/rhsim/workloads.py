"""Activation-stream generators: benign synthetic traffic and the tailored
attacks. Every generator is deterministic per seed, never emits an
out-of-range address, and yields (rank, bank_in_rank, row) tuples on demand.
"""

from __future__ import annotations

import random

import numpy as np

from .geometry import ExperimentConfig, Geometry


class Workload:
    kind = "base"
    timed = False

    def __init__(self, geometry: Geometry, seed: int):
        self.geometry = geometry
        self.seed = seed

    def __iter__(self):
        raise NotImplementedError

    def dump_trace(self, path: str, count: int, t_rrd_s_ns: float = 2.5):
        """Write the first `count` activations in trace format, at ideal spacing."""
        g = self.geometry
        with open(path, "w") as fh:
            for i, (rank, bank, row) in zip(range(count), self):
                t_ns = i * t_rrd_s_ns
                fh.write(f"{t_ns:.3f} {rank} {bank // g.banks_per_bankgroup} "
                         f"{bank % g.banks_per_bankgroup} {row}\n")


class UniformRandom(Workload):
    kind = "uniform"

    def __iter__(self):
        g = self.geometry
        rng = random.Random(self.seed ^ 0x554E49)
        nb, rpb = g.banks_per_channel, g.rows_per_bank
        bpr = g.banks_per_rank
        randrange = rng.randrange
        while True:
            gid = randrange(nb)
            yield gid // bpr, gid % bpr, randrange(rpb)


class Zipfian(Workload):
    """Zipf(theta) popularity over the channel's rows, sampled in batches."""

    kind = "zipfian"

    def __init__(self, geometry: Geometry, seed: int, theta: float = 0.99):
        super().__init__(geometry, seed)
        self.theta = theta

    def __iter__(self):
        g = self.geometry
        n = g.rows_per_channel
        weights = np.arange(1, n + 1, dtype=np.float64) ** (-self.theta)
        cdf = np.cumsum(weights)
        cdf /= cdf[-1]
        rng = np.random.default_rng(self.seed ^ 0x5A4950)
        # popularity rank -> row id, shuffled so hot rows scatter over banks
        perm = rng.permutation(n)
        bpr, rpb = g.banks_per_rank, g.rows_per_bank
        while True:
            for ridx in np.searchsorted(cdf, rng.random(8192)):
                flat_ch = int(perm[int(ridx)])
                gid, row = divmod(flat_ch, rpb)
                yield gid // bpr, gid % bpr, row

class SequentialStream(Workload):
    """Benign sequential sweep over the whole channel, banks interleaved."""

    kind = "stream"

    def __iter__(self):
        g = self.geometry
        nb, rpb, bpr = g.banks_per_channel, g.rows_per_bank, g.banks_per_rank
        i = 0
        while True:
            gid = i % nb
            row = (i // nb) % rpb
            yield gid // bpr, gid % bpr, row
            i += 1


class StreamingAttack(Workload):
    """Activate every row of one rank, round-robining banks at tRRD_S rate."""

    kind = "streaming"

    def __init__(self, geometry: Geometry, seed: int, rank: int = 0):
        super().__init__(geometry, seed)
        self.rank = rank

    def __iter__(self):
        g = self.geometry
        bpr, rpb = g.banks_per_rank, g.rows_per_bank
        rank = self.rank
        i = 0
        while True:
            yield rank, i % bpr, (i // bpr) % rpb
            i += 1


class RefreshAttack(Workload):
    """Hammer a fixed small row set (default one row per bank) at maximum rate."""

    kind = "refresh-attack"

    def __init__(self, geometry: Geometry, seed: int, rows_per_bank: int = 1):
        super().__init__(geometry, seed)
        self.rows_per_bank = rows_per_bank
        rng = random.Random(seed ^ 0x524546)
        self.targets = [rng.sample(range(geometry.rows_per_bank), rows_per_bank)
                        for _ in range(geometry.banks_per_channel)] if rows_per_bank else []

    def __iter__(self):
        if not self.rows_per_bank:
            return
        g = self.geometry
        nb, bpr = g.banks_per_channel, g.banks_per_rank
        k = self.rows_per_bank
        targets = self.targets
        i = 0
        while True:
            gid = i % nb
            yield gid // bpr, gid % bpr, targets[gid][(i // nb) % k]
            i += 1


class HydraSetConflict(Workload):
    """Rows of one rank that collide in one row-counter-cache set."""

    kind = "hydra-conflict"

    def __init__(self, geometry: Geometry, seed: int, row_count: int = 64,
                 n_sets: int = 128, rank: int = 0):
        super().__init__(geometry, seed)
        self.row_count = row_count
        self.rank = rank
        rng = random.Random(seed ^ 0x485243)
        target_set = rng.randrange(n_sets)
        bpr = geometry.banks_per_rank
        per_bank = max(1, row_count // bpr)
        # bank bases are multiples of rows_per_bank (a multiple of n_sets), so
        # rows congruent to the set index collide regardless of bank
        self.rows = [target_set + m * n_sets for m in range(per_bank)]
        self.per_bank = per_bank

    def __iter__(self):
        bpr = self.geometry.banks_per_rank
        rank, rows, per_bank = self.rank, self.rows, self.per_bank
        i = 0
        while True:
            yield rank, i % bpr, rows[(i // bpr) % per_bank]
            i += 1


class CometRatThrash(Workload):
    """Rotate more distinct rows than the recent-aggressor table can hold."""

    kind = "comet-thrash"

    def __init__(self, geometry: Geometry, seed: int, row_count: int = 192, rank: int = 0):
        super().__init__(geometry, seed)
        self.rank = rank
        bpr = geometry.banks_per_rank
        per_bank = max(1, row_count // bpr)
        rng = random.Random(seed ^ 0x434D54)
        self.targets = [rng.sample(range(geometry.rows_per_bank), per_bank)
                        for _ in range(bpr)]
        self.per_bank = per_bank

    def __iter__(self):
        bpr = self.geometry.banks_per_rank
        rank, targets, per_bank = self.rank, self.targets, self.per_bank
        i = 0
        while True:
            bank = i % bpr
            yield rank, bank, targets[bank][(i // bpr) % per_bank]
            i += 1


class AbacusSpill(Workload):
    """Sequential distinct row addresses across banks to pump the spillover counter."""

    kind = "abacus-spill"

    def __iter__(self):
        g = self.geometry
        nb, bpr, rpb = g.banks_per_channel, g.banks_per_rank, g.rows_per_bank
        i = 0
        while True:
            gid = i % nb
            yield gid // bpr, gid % bpr, i % rpb
            i += 1


class TraceWorkload(Workload):
    """Replay of a plain-text trace: lines 't_ns rank bankgroup bank row'."""

    kind = "trace"
    timed = True

    def __init__(self, geometry: Geometry, path: str):
        super().__init__(geometry, 0)
        self.path = path

    def __iter__(self):
        g = self.geometry
        bpb = g.banks_per_bankgroup
        prev = -1.0
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                parts = body.split()
                if len(parts) != 5:
                    raise ValueError(f"{self.path}:{lineno}: expected 5 fields")
                t_ns = float(parts[0])
                if t_ns < prev:
                    raise ValueError(f"{self.path}:{lineno}: trace not sorted by time")
                prev = t_ns
                rank, bg, bank, row = (int(p) for p in parts[1:])
                if not (0 <= rank < g.ranks_per_channel and 0 <= bg < g.bankgroups_per_rank
                        and 0 <= bank < bpb and 0 <= row < g.rows_per_bank):
                    raise ValueError(f"{self.path}:{lineno}: address out of range")
                yield round(t_ns * 1000), rank, bg * bpb + bank, row


def build_workload(cfg: ExperimentConfig, kind: str | None = None) -> Workload:
    kind = kind or cfg.workload
    g, seed = cfg.geometry, cfg.seed
    if kind == "uniform":
        return UniformRandom(g, seed)
    if kind == "zipfian":
        return Zipfian(g, seed, cfg.zipf_theta)
    if kind == "stream":
        return SequentialStream(g, seed)
    if kind == "streaming":
        return StreamingAttack(g, seed)
    if kind == "refresh-attack":
        return RefreshAttack(g, seed, cfg.refresh_rows_per_bank)
    if kind == "hydra-conflict":
        n_sets = cfg.hydra_rcc_entries // cfg.hydra_rcc_ways
        return HydraSetConflict(g, seed, cfg.conflict_rows, n_sets)
    if kind == "comet-thrash":
        return CometRatThrash(g, seed, cfg.thrash_rows)
    if kind == "abacus-spill":
        return AbacusSpill(g, seed)
    raise ValueError(f"unknown workload kind {kind!r}")
