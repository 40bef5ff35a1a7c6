import pytest

from rhsim.geometry import Geometry, TimingParams


@pytest.fixture
def tiny_geo():
    # 16 rows in 4 banks of 4 rows
    return Geometry(ranks_per_channel=1, bankgroups_per_rank=4,
                    banks_per_bankgroup=1, rows_per_bank=4)


@pytest.fixture
def small_geo():
    # 4096 rows in 4 banks
    return Geometry(ranks_per_channel=1, bankgroups_per_rank=4,
                    banks_per_bankgroup=1, rows_per_bank=1024)


@pytest.fixture
def quiet_timing():
    """Refresh-free horizon: first auto-refresh far beyond short runs."""
    return TimingParams(t_refw_ns=1_073_741_824.0, t_refi_ns=1_073_741_824.0 / 1024)
