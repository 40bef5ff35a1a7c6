"""Row-group counter trackers with randomized group mappings.

Two variants behind the common tracker interface:

* GroupTracker ("dapper-s"): one counter table; on trigger every member row
  of the group is refreshed and the counter returns to zero. The table and
  its mapping reset every t_reset (default: one refresh window).
* DualGroupTracker ("dapper-h"): two independently hashed counter tables, a
  per-entry bank bit-vector on table 1, mitigation of the rows shared by the
  two triggering groups only, and counter resets propagated from the opposite
  table so untouched rows stay covered.

Both track per rank: the randomized space is the rank's flattened row index.
"""

from __future__ import annotations

from .actions import MitigationAction, VRR
from .geometry import Geometry
from .llbc import LlbcCipher


class GroupTracker:
    """Single-table row-group counter tracker ("dapper-s")."""

    name = "dapper-s"

    def __init__(self, geometry: Geometry, n_m: int, seed: int,
                 group_size: int = 256, t_reset_ps: int = 32_000_000_000):
        if n_m < 2:
            raise ValueError("n_m must be >= 2")
        if group_size < 1 or geometry.rows_per_rank % group_size:
            raise ValueError("group_size must divide rows_per_rank")
        self.geometry = geometry
        self.n_m = n_m
        self.seed = seed
        self.group_size = group_size
        self.t_reset_ps = t_reset_ps
        self._s_bits = (group_size - 1).bit_length()
        self.n_groups = geometry.rows_per_rank // group_size
        self._rows_per_bank = geometry.rows_per_bank
        self.epoch = -1
        self.ciphers: list[LlbcCipher] = [None] * geometry.ranks_per_channel
        self.counters: list[list[int]] = [None] * geometry.ranks_per_channel
        self.mitigations = 0
        self.rows_refreshed = 0
        self._reset(0)

    def _reset(self, epoch: int):
        self.epoch = epoch
        g = self.geometry
        for r in range(g.ranks_per_channel):
            self.ciphers[r] = LlbcCipher(g.row_bits, self.seed, epoch=epoch, table_id=r)
            self.counters[r] = [0] * self.n_groups

    def window_reset(self, now_ps: int):
        self._maybe_reset(now_ps)

    def _maybe_reset(self, now_ps: int):
        e = now_ps // self.t_reset_ps
        if e != self.epoch:
            self._reset(e)

    def activate(self, rank: int, bank: int, flat: int, now_ps: int):
        e = now_ps // self.t_reset_ps
        if e != self.epoch:
            self._reset(e)
        cipher = self.ciphers[rank]
        g = cipher._enc_table[flat] >> self._s_bits
        counters = self.counters[rank]
        c = counters[g] + 1
        if c >= self.n_m:
            counters[g] = 0
            self.mitigations += 1
            rpb = self._rows_per_bank
            members = cipher.group_members(g, self.group_size)
            self.rows_refreshed += len(members)
            return [MitigationAction(VRR, rank, m // rpb, m % rpb) for m in members]
        counters[g] = c
        return None

    def group_of(self, rank: int, flat: int) -> int:
        return self.ciphers[rank].encrypt(flat) >> self._s_bits

    def stats(self) -> dict:
        return {"mitigations": self.mitigations, "rows_refreshed": self.rows_refreshed}


class DualGroupTracker:
    """Double-hashed row-group tracker with bank bit-vector ("dapper-h")."""

    name = "dapper-h"

    def __init__(self, geometry: Geometry, n_m: int, seed: int,
                 group_size: int = 256, t_reset_ps: int = 32_000_000_000):
        if n_m < 2:
            raise ValueError("n_m must be >= 2")
        if group_size < 1 or geometry.rows_per_rank % group_size:
            raise ValueError("group_size must divide rows_per_rank")
        self.geometry = geometry
        self.n_m = n_m
        self.seed = seed
        self.group_size = group_size
        self.t_reset_ps = t_reset_ps
        self._s_bits = (group_size - 1).bit_length()
        self.n_groups = geometry.rows_per_rank // group_size
        self._rows_per_bank = geometry.rows_per_bank
        self.epoch = -1
        nr = geometry.ranks_per_channel
        self.ciphers1: list[LlbcCipher] = [None] * nr
        self.ciphers2: list[LlbcCipher] = [None] * nr
        self.counters1: list[list[int]] = [None] * nr
        self.counters2: list[list[int]] = [None] * nr
        self.bits1: list[list[int]] = [None] * nr
        self.mitigations = 0
        self.single_row_mitigations = 0
        self.rows_refreshed = 0
        self.max_c1 = 0
        self.max_c2 = 0
        self._reset(0)

    def _reset(self, epoch: int):
        self.epoch = epoch
        g = self.geometry
        for r in range(g.ranks_per_channel):
            self.ciphers1[r] = LlbcCipher(g.row_bits, self.seed, epoch=epoch, table_id=2 * r)
            self.ciphers2[r] = LlbcCipher(g.row_bits, self.seed, epoch=epoch, table_id=2 * r + 1)
            self.counters1[r] = [0] * self.n_groups
            self.counters2[r] = [0] * self.n_groups
            self.bits1[r] = [0] * self.n_groups

    def window_reset(self, now_ps: int):
        e = now_ps // self.t_reset_ps
        if e != self.epoch:
            self._reset(e)

    def activate(self, rank: int, bank: int, flat: int, now_ps: int):
        e = now_ps // self.t_reset_ps
        if e != self.epoch:
            self._reset(e)
        sb = self._s_bits
        n_m = self.n_m
        g1 = self.ciphers1[rank]._enc_table[flat] >> sb
        g2 = self.ciphers2[rank]._enc_table[flat] >> sb
        c1s = self.counters1[rank]
        c2s = self.counters2[rank]
        bits = self.bits1[rank]
        m = 1 << bank
        c2 = c2s[g2]
        if c2 < n_m:
            c2 += 1
            c2s[g2] = c2
            if c2 > self.max_c2:
                self.max_c2 = c2
        b = bits[g1]
        if b & m:
            # bank already seen since the last table-1 event: count it
            c1 = c1s[g1]
            if c1 < n_m:
                c1 += 1
                c1s[g1] = c1
                if c1 > self.max_c1:
                    self.max_c1 = c1
            bits[g1] = m
            if c1 >= n_m and c2 >= n_m:
                return self._mitigate(rank, g1, g2)
        else:
            bits[g1] = b | m
            if c1s[g1] >= n_m and c2 >= n_m:
                return self._mitigate(rank, g1, g2)
        return None

    def _mitigate(self, rank: int, g1: int, g2: int):
        cipher1 = self.ciphers1[rank]
        cipher2 = self.ciphers2[rank]
        s = self.group_size
        sb = self._s_bits
        if cipher1._dec_table is not None:
            m1_np = cipher1._dec_np[g1 * s:(g1 + 1) * s]
            m2_np = cipher2._dec_np[g2 * s:(g2 + 1) * s]
            members1 = m1_np.tolist()
            groups2_of_m1 = (cipher2._enc_np[m1_np] >> sb).tolist()
            groups1_of_m2 = (cipher1._enc_np[m2_np] >> sb).tolist()
            members2 = m2_np.tolist()
        else:
            members1 = cipher1.group_members(g1, s)
            members2 = cipher2.group_members(g2, s)
            groups2_of_m1 = [cipher2.encrypt(x) >> sb for x in members1]
            groups1_of_m2 = [cipher1.encrypt(y) >> sb for y in members2]
        # a member of g1 is shared iff its table-2 group is exactly g2
        shared = [x for x, gx in zip(members1, groups2_of_m1) if gx == g2]
        c1s = self.counters1[rank]
        c2s = self.counters2[rank]
        cap = self.n_m - 1
        reset1 = 0
        for gx in groups2_of_m1:
            if gx != g2:
                v = c2s[gx]
                if v > reset1:
                    if v >= cap:    # propagated value clamps here anyway
                        reset1 = cap
                        break
                    reset1 = v
        reset2 = 0
        for gy in groups1_of_m2:
            if gy != g1:
                v = c1s[gy]
                if v > reset2:
                    if v >= cap:
                        reset2 = cap
                        break
                    reset2 = v
        c1s[g1] = reset1
        c2s[g2] = reset2
        self.bits1[rank][g1] = 0
        self.mitigations += 1
        if len(shared) == 1:
            self.single_row_mitigations += 1
        self.rows_refreshed += len(shared)
        rpb = self._rows_per_bank
        return [MitigationAction(VRR, rank, r // rpb, r % rpb) for r in shared]

    def groups_of(self, rank: int, flat: int) -> tuple[int, int]:
        return (self.ciphers1[rank].encrypt(flat) >> self._s_bits,
                self.ciphers2[rank].encrypt(flat) >> self._s_bits)

    def stats(self) -> dict:
        return {
            "mitigations": self.mitigations,
            "single_row_mitigations": self.single_row_mitigations,
            "rows_refreshed": self.rows_refreshed,
            "max_table1_count": self.max_c1,
            "max_table2_count": self.max_c2,
        }
