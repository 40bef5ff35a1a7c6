import math
import random

import pytest

from rhsim.actions import COUNTER_READ, COUNTER_WRITE, RANK_RESET, VRR
from rhsim.baselines import (ABACUS_ENTRIES, AbacusTracker, CometTracker,
                             HydraTracker, NullTracker, ParaTracker)
from rhsim.geometry import Geometry

GEO = Geometry(ranks_per_channel=1, bankgroups_per_rank=8,
               banks_per_bankgroup=4, rows_per_bank=2048)   # 32 banks, 64K rows


def test_null_tracker_never_acts():
    t = NullTracker()
    assert t.activate(0, 0, 5, 1) is None
    t.window_reset(0)


def test_para_p_one_mitigates_every_activation():
    t = ParaTracker(GEO, p=1.0, seed=1)
    for i in range(100):
        out = t.activate(0, 0, i, i)
        assert out and out[0].kind == VRR and out[0].row == i


def test_para_binomial_rate():
    t = ParaTracker(GEO, p=0.01, seed=2)
    n = 1_000_000
    hits = sum(1 for i in range(n) if t.activate(0, 0, i % 2048, i))
    sigma = math.sqrt(n * 0.01 * 0.99)
    assert abs(hits - n * 0.01) <= 3 * sigma


def test_para_rejects_bad_p():
    with pytest.raises(ValueError):
        ParaTracker(GEO, p=0.0, seed=0)


# -- Hydra --------------------------------------------------------------------

def test_hydra_group_phase_has_no_rcc_traffic():
    t = HydraTracker(GEO, n_m=250, seed=3)
    # below the group threshold nothing touches the cache
    for i in range(t.n_gc - 1):
        assert t.activate(0, 0, 7, i) is None
    s = t.stats()
    assert s["rcc_hits"] == s["rcc_misses"] == 0


def test_hydra_miss_emits_one_read_and_write_when_dirty():
    t = HydraTracker(GEO, n_m=250, seed=4, rcc_entries=8, rcc_ways=2)
    row = 5
    for i in range(t.n_gc):
        t.activate(0, 0, row, i)
    out = t.activate(0, 0, row, 1000)          # first per-row access: compulsory miss
    assert [a.kind for a in out] == [COUNTER_READ]
    # conflicting rows in the same set, each warmed into per-row phase
    conflicts = [row + (k + 1) * t.n_sets for k in range(3)]
    for c in conflicts:
        for i in range(t.n_gc + 1):
            t.activate(0, 0, c, i)
    # with 2 ways and random eviction some revisit of `row` soon misses; every
    # resident entry is dirty, so that miss carries exactly 1 read + 1 write
    for attempt in range(500):
        out = t.activate(0, 0, row, 3000 + attempt)
        if out:
            kinds = [a.kind for a in out]
            assert kinds.count(COUNTER_READ) == 1
            assert kinds.count(COUNTER_WRITE) == 1
            break
        t.activate(0, 0, conflicts[attempt % 3], 4000 + attempt)
    else:
        pytest.fail("row never evicted from a 2-way set under conflict traffic")


def test_hydra_row_counter_triggers_refresh_and_resets():
    t = HydraTracker(GEO, n_m=210, seed=5)
    row = 9
    fired = []
    for i in range(600):
        out = t.activate(0, 0, row, i)
        if out and any(a.kind == VRR for a in out):
            fired.append(i)
    # group phase ends once the group counter reaches n_gc; the per-row counter
    # starts at n_gc and fires when it reaches n_m, i.e. at activation n_m - 1
    assert fired
    assert fired[0] == t.n_m - 1
    # counter reset to zero: the next refresh takes n_m more activations
    assert fired[1] - fired[0] == t.n_m


def test_hydra_conflict_miss_rate_matches_fixed_point_model():
    """64 same-set rows, cyclic: steady state converges to the self-consistent
    evict-on-miss model m = 1 - (1 - m/32)^63 (~0.795)."""
    from rhsim.analysis import rcc_conflict_fixed_point
    t = HydraTracker(GEO, n_m=1 << 30, seed=6)   # no refresh interference
    rows = [(b % 32) * 2048 + 64 + 128 * (b // 32) for b in range(64)]
    assert len({r & (t.n_sets - 1) for r in rows}) == 1
    # warm every row through its group phase
    for r in rows:
        for i in range(t.n_gc):
            t.activate(0, r // 2048, r, i)
    h0, m0 = t.rcc_hits, t.rcc_misses
    for i in range(400_000):
        r = rows[i % 64]
        t.activate(0, r // 2048, r, i)
    hits = t.rcc_hits - h0
    misses = t.rcc_misses - m0
    measured = misses / (hits + misses)
    expected = rcc_conflict_fixed_point(64, 32)
    assert measured == pytest.approx(expected, abs=0.03)


def test_hydra_occupancy_never_exceeds_capacity():
    t = HydraTracker(GEO, n_m=100, seed=7, rcc_entries=64, rcc_ways=8)
    rng = random.Random(1)
    for i in range(30_000):
        t.activate(0, 0, rng.randrange(4096), i)
        if i % 1000 == 0:
            assert sum(len(s) for s in t.rcc[0]) <= 64
            assert all(len(s) <= 8 for s in t.rcc[0])


# -- CoMeT --------------------------------------------------------------------

def comet(geo=GEO, n_rh=500, **kw):
    return CometTracker(geo, n_rh, seed=8, t_refw_ps=32_000_000_000, **kw)


def test_comet_single_row_below_quarter_threshold_never_mitigates():
    t = comet()
    for i in range(500 // 4 - 1):
        assert t.activate(0, 0, 42, i) is None
    assert t.stats()["mitigations"] == 0


def test_comet_sketch_never_underestimates():
    t = comet(n_rh=1 << 20, counters=4, hashes=4)   # 16-counter scaled sketch
    rng = random.Random(2)
    true = {}
    for i in range(3000):
        row = rng.randrange(64)
        true[row] = true.get(row, 0) + 1
        t.activate(0, 0, row, i)
        if i % 100 == 0:
            assert all(t.estimate(0, r) >= c for r, c in true.items())
    assert all(t.estimate(0, r) >= c for r, c in true.items())


def test_comet_rotation_beyond_rat_capacity_forces_resets():
    t = comet(n_rh=500)
    rows = list(range(192))
    resets = 0
    for i in range(80_000):
        out = t.activate(0, rows[i % 192] % 32, rows[i % 192] * 7 + 1, i)
        if out and any(a.kind == RANK_RESET for a in out):
            resets += 1
    s = t.stats()
    assert s["rat_miss_rate"] > 0.25
    assert s["miss_rate_resets"] > 0
    assert resets == s["full_resets"]


def test_comet_periodic_reset_every_third_of_window():
    t = CometTracker(GEO, 500, seed=9, t_refw_ps=3_000_000)
    out = t.activate(0, 0, 1, now_ps=1_100_000)   # past t_refw/3 = 1ms
    assert out and out[0].kind == RANK_RESET


# -- ABACUS -------------------------------------------------------------------

def test_abacus_entry_table_is_pinned():
    assert ABACUS_ENTRIES[500] == 2466
    assert [ABACUS_ENTRIES[k] for k in (4000, 2000, 1000, 500, 250, 125)] == \
        [309, 617, 1233, 2466, 4931, 9783]


def test_abacus_fewer_rows_than_entries_never_spills():
    t = AbacusTracker(GEO, n_rh=500, seed=10, entries=64)
    for i in range(20_000):
        t.activate(0, i % 32, (i * 37) % 48, i)   # 48 distinct row ids
    assert t.spillover == 0


def test_abacus_distinct_stream_spill_period_matches_formula():
    """All-distinct row ids: table fill (N) then one spillover step per N+1
    activations; reset fires when the spillover counter reaches n_m."""
    entries, n_rh = 16, 12         # n_m = 6
    t = AbacusTracker(GEO, n_rh=n_rh, seed=11, entries=entries)
    first_reset = None
    for i in range(1, 500):
        out = t.activate(0, i % 32, i % 2048, i)
        if out and out[0].kind == "channel_reset":
            first_reset = i
            break
    expected = entries + (6 - 1) * (entries + 1) + 1
    assert first_reset == expected


def test_abacus_entry_trigger_refreshes_row_in_every_bank():
    t = AbacusTracker(GEO, n_rh=8, seed=12, entries=4)    # n_m = 4
    out = None
    for i in range(1, 50):
        out = t.activate(0, 3, 77, i)
        if out:
            break
    assert out is not None
    assert len(out) == GEO.banks_per_channel
    assert all(a.kind == VRR and a.row == 77 for a in out)


def test_abacus_estimate_tracks_spillover_floor():
    t = AbacusTracker(GEO, n_rh=500, seed=13, entries=4)
    for i in range(40):
        t.activate(0, 0, i, i)                 # distinct ids force spillover
    assert t.estimate(9999) == t.spillover
