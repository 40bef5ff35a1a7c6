"""Closed-loop mapping-capture agents.

The agents interact with a live tracker through activations and a single
observable bit per activation: "a mitigation occurred now" (the abstracted
timing side channel). They never read tracker internals.

Timing is a virtual picosecond clock: same-bank activations advance by tRC,
cross-bank probes by tRRD_S, matching the attack arithmetic of the analytic
model in `analysis`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .actions import REFRESH_KINDS
from .dapper import DualGroupTracker, GroupTracker
from .geometry import Geometry


@dataclass
class CaptureObservation:
    trial: int
    acts_spent: int
    success: bool
    pair: tuple[int, int] | None     # (target flat, probe flat) when captured


class SideChannelProbe:
    """Wraps a tracker exposing only 'did this activation coincide with a mitigation'."""

    def __init__(self, tracker):
        self._tracker = tracker
        self.now_ps = 0

    def act(self, rank: int, bank: int, flat: int, dt_ps: int) -> bool:
        self.now_ps += dt_ps
        out = self._tracker.activate(rank, bank, flat, self.now_ps)
        if not out:
            return False
        return any(a.kind in REFRESH_KINDS for a in out)


def capture_group_tracker(geometry: Geometry, n_m: int, t_reset_ns: float,
                          trials: int, seed: int, group_size: int = 256,
                          t_rc_ns: float = 48.0, t_rrd_s_ns: float = 2.5):
    """Mapping-capture attack against the single-table tracker.

    Per trial (one reset period): hammer one target row to n_m - 1, then probe
    sequential rows of another bank until a mitigation is observed or the
    reset period expires.
    """
    t_reset_ps = round(t_reset_ns * 1000)
    t_rc_ps = round(t_rc_ns * 1000)
    t_rrd_ps = round(t_rrd_s_ns * 1000)
    tracker = GroupTracker(geometry, n_m, seed, group_size, t_reset_ps)
    probe_handle = SideChannelProbe(tracker)
    rng = random.Random(seed ^ 0x434150)
    rpb = geometry.rows_per_bank
    observations = []
    for trial in range(trials):
        start = trial * t_reset_ps
        probe_handle.now_ps = start          # trials align with reset periods
        end = start + t_reset_ps
        target_row = rng.randrange(rpb)      # bank 0 of rank 0
        acts = 0
        for _ in range(n_m - 1):
            probe_handle.act(0, 0, target_row, t_rc_ps)
            acts += 1
        success = False
        pair = None
        probe_bank = 1 % geometry.banks_per_rank
        probe_row = 0
        while probe_handle.now_ps + t_rrd_ps <= end and probe_row < rpb:
            flat = probe_bank * rpb + probe_row
            acts += 1
            if probe_handle.act(0, probe_bank, flat, t_rrd_ps):
                success = True
                pair = (target_row, flat)
                break
            probe_row += 1
        observations.append(CaptureObservation(trial, acts, success, pair))
    return observations


def capture_dual_tracker(geometry: Geometry, n_m: int, trials: int, seed: int,
                         group_size: int = 256, hammer_count: int | None = None,
                         t_rc_ns: float = 48.0, t_rrd_s_ns: float = 2.5):
    """Mapping-capture attack against the double-hashed tracker.

    Per trial: hammer the target (default n_m - 2 activations), issue two
    random-row probes in the target's randomized space (same bank, so the
    bank bit-vector does not swallow them), then one final check activation
    of the target. Success iff a mitigation lands on a probe or the check.
    """
    if hammer_count is None:
        hammer_count = n_m - 2
    t_refw_ps = 1 << 62                      # single epoch; trials reset explicitly
    t_rc_ps = round(t_rc_ns * 1000)
    t_rrd_ps = round(t_rrd_s_ns * 1000)
    tracker = DualGroupTracker(geometry, n_m, seed, group_size, t_refw_ps)
    probe_handle = SideChannelProbe(tracker)
    rng = random.Random(seed ^ 0x434148)
    rpb = geometry.rows_per_bank
    observations = []
    for trial in range(trials):
        tracker._reset(trial)                # fresh epoch and fresh mapping per trial
        target_row = rng.randrange(rpb)
        acts = 0
        for _ in range(hammer_count):
            probe_handle.act(0, 0, target_row, t_rc_ps)
            acts += 1
        success = False
        pair = None
        probes = (rng.randrange(rpb), rng.randrange(rpb))
        for p in probes:
            acts += 1
            if probe_handle.act(0, 0, p, t_rrd_ps):
                success = True
                pair = (target_row, p)
                break
        if not success:
            acts += 1
            # success on the check reveals that some probe hit, not which one
            if probe_handle.act(0, 0, target_row, t_rc_ps):
                success = True
        observations.append(CaptureObservation(trial, acts, success, pair))
    return observations


def success_rate(observations) -> float:
    if not observations:
        return 0.0
    return sum(o.success for o in observations) / len(observations)
