"""Mitigation actions a tracker orders the memory controller to perform.

Each kind has a blocking scope the engine knows how to apply: one bank
(victim refresh, counter traffic), the same bank number across all bank
groups (DRFM_sb / RFM_sb), a whole rank, or the whole channel.
"""

from __future__ import annotations

from dataclasses import dataclass

VRR = "vrr"
DRFM_SB = "drfm_sb"
RFM_SB = "rfm_sb"
RANK_RESET = "rank_reset"
CHANNEL_RESET = "channel_reset"
COUNTER_READ = "counter_read"
COUNTER_WRITE = "counter_write"

KINDS = (VRR, DRFM_SB, RFM_SB, RANK_RESET, CHANNEL_RESET, COUNTER_READ, COUNTER_WRITE)
REFRESH_KINDS = frozenset((VRR, DRFM_SB, RFM_SB, RANK_RESET, CHANNEL_RESET))


@dataclass(slots=True)
class MitigationAction:
    kind: str
    rank: int = 0
    bank: int = -1      # bank index within the rank
    row: int = -1       # row index within the bank
    br: int = 0         # blast radius override; 0 -> timing default


def victim_refresh(rank: int, bank: int, row: int, br: int = 0) -> MitigationAction:
    return MitigationAction(VRR, rank, bank, row, br)


def counter_read(rank: int, bank: int) -> MitigationAction:
    return MitigationAction(COUNTER_READ, rank, bank)


def counter_write(rank: int, bank: int) -> MitigationAction:
    return MitigationAction(COUNTER_WRITE, rank, bank)


def rank_reset(rank: int) -> MitigationAction:
    return MitigationAction(RANK_RESET, rank)


def channel_reset() -> MitigationAction:
    return MitigationAction(CHANNEL_RESET)
