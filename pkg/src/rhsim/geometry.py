"""DRAM geometry, address arithmetic, timing parameters, and experiment config.

All times are kept in nanoseconds at the API surface. The simulation engine
converts once to integer picoseconds so that fractional values such as
tRRD_S = 2.5 ns stay exact.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class Geometry:
    ranks_per_channel: int = 2
    bankgroups_per_rank: int = 8
    banks_per_bankgroup: int = 4
    rows_per_bank: int = 65536

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not _is_pow2(v):
                raise ConfigError(f"{f.name} must be a power of two >= 1, got {v}")

    @property
    def banks_per_rank(self) -> int:
        return self.bankgroups_per_rank * self.banks_per_bankgroup

    @property
    def banks_per_channel(self) -> int:
        return self.ranks_per_channel * self.banks_per_rank

    @property
    def rows_per_rank(self) -> int:
        return self.banks_per_rank * self.rows_per_bank

    @property
    def rows_per_channel(self) -> int:
        return self.ranks_per_channel * self.rows_per_rank

    @property
    def row_bits(self) -> int:
        """Width of the per-rank flattened row index."""
        return (self.rows_per_rank - 1).bit_length()


@dataclass(frozen=True)
class RowAddress:
    rank: int
    bankgroup: int
    bank: int
    row: int

    def flat(self, geo: Geometry) -> int:
        return flatten(self, geo)


def flatten(addr: RowAddress, geo: Geometry) -> int:
    """Per-rank flattened row index; bijective over the rank's row space."""
    if not (0 <= addr.rank < geo.ranks_per_channel):
        raise ValueError(f"rank {addr.rank} out of range")
    if not (0 <= addr.bankgroup < geo.bankgroups_per_rank):
        raise ValueError(f"bankgroup {addr.bankgroup} out of range")
    if not (0 <= addr.bank < geo.banks_per_bankgroup):
        raise ValueError(f"bank {addr.bank} out of range")
    if not (0 <= addr.row < geo.rows_per_bank):
        raise ValueError(f"row {addr.row} out of range")
    return ((addr.bankgroup * geo.banks_per_bankgroup + addr.bank)
            * geo.rows_per_bank) + addr.row


def unflatten(flat: int, rank: int, geo: Geometry) -> RowAddress:
    if not (0 <= flat < geo.rows_per_rank):
        raise ValueError(f"flat index {flat} out of range")
    row = flat % geo.rows_per_bank
    b = flat // geo.rows_per_bank
    return RowAddress(rank=rank,
                      bankgroup=b // geo.banks_per_bankgroup,
                      bank=b % geo.banks_per_bankgroup,
                      row=row)


@dataclass(frozen=True)
class TimingParams:
    """DDR5 activation/refresh constraints in nanoseconds.

    t_refi defaults to t_refw / 8192 so a refresh window holds exactly 8192
    auto-refresh commands and the per-bank sweep covers every row once.
    """
    t_rc_ns: float = 48.0
    t_rrd_s_ns: float = 2.5
    t_refw_ns: float = 32_000_000.0
    t_refi_ns: float = 3906.25
    t_rfc_ns: float = 295.0
    vrr_per_victim_ns: float = 48.0
    drfm_sb_ns: float = 240.0
    rfm_sb_ns: float = 190.0
    col_slot_ns: float = 16.0
    blast_radius: int = 1
    drfm_rate_limited: bool = False

    def __post_init__(self):
        for name in ("t_rc_ns", "t_rrd_s_ns", "t_refw_ns", "t_refi_ns", "t_rfc_ns"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.blast_radius not in (1, 2):
            raise ConfigError("blast_radius must be 1 or 2")

    @property
    def refs_per_window(self) -> int:
        n = round(self.t_refw_ns / self.t_refi_ns)
        if abs(n * self.t_refi_ns - self.t_refw_ns) > 1e-6:
            raise ConfigError("t_refw must be an integer multiple of t_refi")
        return n


def max_acts_per_bank(timing: TimingParams) -> int:
    """Raw single-bank activation budget per refresh window: floor(tREFW/tRC)."""
    return int(timing.t_refw_ns // timing.t_rc_ns)


def max_acts_per_bank_refresh_adjusted(timing: TimingParams) -> int:
    """Single-bank budget net of auto-refresh occupancy."""
    refs = timing.refs_per_window
    avail = timing.t_refw_ns - refs * timing.t_rfc_ns
    if avail <= 0:
        return 0
    return int(avail // timing.t_rc_ns)


def max_acts_per_channel(timing: TimingParams) -> int:
    """Per-rank activation budget at tRRD_S rate over one refresh window."""
    return int(timing.t_refw_ns // timing.t_rrd_s_ns)


TRACKER_KINDS = ("dapper-s", "dapper-h", "para", "hydra", "comet", "abacus", "null")
WORKLOAD_KINDS = ("uniform", "zipfian", "stream", "streaming", "refresh-attack",
                  "hydra-conflict", "comet-thrash", "abacus-spill")
MITIGATION_MODES = ("vrr", "drfm_sb", "rfm_sb")


@dataclass
class ExperimentConfig:
    geometry: Geometry = field(default_factory=Geometry)
    timing: TimingParams = field(default_factory=TimingParams)
    n_rh: int = 500
    tracker: str = "dapper-h"
    workload: str = "streaming"
    seed: int = 0
    duration_windows: int = 1
    out_dir: str = "out"
    mitigation_mode: str = "vrr"
    # tracker knobs
    group_size: int = 256
    dapper_s_t_reset_ns: float = 0.0      # 0 -> t_refw
    dapper_h_margin: int = 2              # trigger at n_rh//2 - margin
    para_k: float = 20.0                  # p = min(1, k / n_rh)
    hydra_group_size: int = 128
    hydra_rcc_entries: int = 4096
    hydra_rcc_ways: int = 32
    comet_counters: int = 512
    comet_hashes: int = 4
    comet_rat_entries: int = 128
    comet_history: int = 256
    abacus_entries: int = 0               # 0 -> derived from n_rh
    # workload knobs
    zipf_theta: float = 0.99
    refresh_rows_per_bank: int = 1
    conflict_rows: int = 64
    thrash_rows: int = 192
    # reporting
    log_commands: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_rh < 4:
            raise ConfigError(f"n_rh must be >= 4, got {self.n_rh}")
        if self.tracker not in TRACKER_KINDS:
            raise ConfigError(f"unknown tracker {self.tracker!r}")
        if self.workload not in WORKLOAD_KINDS:
            raise ConfigError(f"unknown workload {self.workload!r}")
        if self.mitigation_mode not in MITIGATION_MODES:
            raise ConfigError(f"unknown mitigation mode {self.mitigation_mode!r}")
        if self.duration_windows < 1:
            raise ConfigError("duration_windows must be >= 1")
        if self.group_size < 1 or not _is_pow2(self.group_size):
            raise ConfigError("group_size must be a power of two")
        if self.geometry.rows_per_rank % self.group_size:
            raise ConfigError("group_size must divide rows_per_rank")
        refs = self.timing.refs_per_window
        if self.geometry.rows_per_bank % refs and refs % self.geometry.rows_per_bank:
            raise ConfigError("rows_per_bank and refs-per-window must divide evenly")

    @property
    def n_m(self) -> int:
        """Mitigation threshold shared by the group trackers."""
        return self.n_rh // 2


_GEOMETRY_KEYS = {
    "ranks": "ranks_per_channel",
    "bankgroups": "bankgroups_per_rank",
    "banks_per_bankgroup": "banks_per_bankgroup",
    "rows_per_bank": "rows_per_bank",
}
_TIMING_KEYS = {
    "t_rc": "t_rc_ns",
    "t_rrd_s": "t_rrd_s_ns",
    "t_refw": "t_refw_ns",
    "t_refi": "t_refi_ns",
    "t_rfc": "t_rfc_ns",
    "vrr_per_victim": "vrr_per_victim_ns",
    "drfm_sb": "drfm_sb_ns",
    "rfm_sb": "rfm_sb_ns",
    "col_slot": "col_slot_ns",
    "blast_radius": "blast_radius",
    "drfm_rate_limited": "drfm_rate_limited",
}
_INT_KEYS = {"n_rh", "seed", "duration_windows", "group_size", "dapper_h_margin",
             "hydra_group_size", "hydra_rcc_entries", "hydra_rcc_ways",
             "comet_counters", "comet_hashes", "comet_rat_entries", "comet_history",
             "abacus_entries", "refresh_rows_per_bank", "conflict_rows", "thrash_rows"}
_FLOAT_KEYS = {"dapper_s_t_reset_ns", "para_k", "zipf_theta"}
_STR_KEYS = {"tracker", "workload", "out_dir", "mitigation_mode"}
_BOOL_KEYS = {"log_commands"}


def _parse_scalar(key: str, raw: str, lineno: int):
    try:
        if key in _BOOL_KEYS or key == "drfm_rate_limited":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected boolean")
        if key in _INT_KEYS or key in ("ranks", "bankgroups", "banks_per_bankgroup",
                                       "rows_per_bank", "blast_radius"):
            return int(raw, 0)
        if key in _FLOAT_KEYS or key in _TIMING_KEYS:
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r} ({e})") from None


def load_config(path_or_lines) -> ExperimentConfig:
    """Parse a plain-text ``key = value`` config file; '#' starts a comment.

    Omitted keys take their defaults. Unknown keys and violated invariants
    raise ConfigError naming the offending line.
    """
    if isinstance(path_or_lines, str):
        with open(path_or_lines) as fh:
            lines = fh.readlines()
    else:
        lines = list(path_or_lines)

    geo_kw, timing_kw, cfg_kw = {}, {}, {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        val = _parse_scalar(key, raw, lineno)
        if key in _GEOMETRY_KEYS:
            geo_kw[_GEOMETRY_KEYS[key]] = val
        elif key in _TIMING_KEYS:
            timing_kw[_TIMING_KEYS[key]] = val
        elif key in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS:
            cfg_kw[key] = val
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    try:
        geo = Geometry(**geo_kw)
        timing = TimingParams(**timing_kw)
        return ExperimentConfig(geometry=geo, timing=timing, **cfg_kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit a config file that load_config parses back to an equal config."""
    g, t = cfg.geometry, cfg.timing
    rev_geo = {v: k for k, v in _GEOMETRY_KEYS.items()}
    rev_tim = {v: k for k, v in _TIMING_KEYS.items()}
    lines = []
    for f in fields(g):
        lines.append(f"{rev_geo[f.name]} = {getattr(g, f.name)}")
    for f in fields(t):
        v = getattr(t, f.name)
        lines.append(f"{rev_tim[f.name]} = {v!r}" if isinstance(v, float)
                     else f"{rev_tim[f.name]} = {v}")
    for key in sorted(_INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS):
        v = getattr(cfg, key)
        lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha1(serialize_config(cfg).encode()).hexdigest()[:12]


def desk_preset(**overrides) -> ExperimentConfig:
    """Small fast configuration for property tests: 2 banks x 4K rows, N_RH 64."""
    base = dict(
        geometry=Geometry(ranks_per_channel=1, bankgroups_per_rank=2,
                          banks_per_bankgroup=1, rows_per_bank=4096),
        timing=TimingParams(t_refw_ns=1_000_000.0, t_refi_ns=1_000_000.0 / 512),
        n_rh=64,
        group_size=256,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def full_preset(**overrides) -> ExperimentConfig:
    return ExperimentConfig(**overrides)


def make_config(preset: str = "full", **overrides) -> ExperimentConfig:
    if preset == "desk":
        return desk_preset(**overrides)
    if preset == "full":
        return full_preset(**overrides)
    raise ConfigError(f"unknown preset {preset!r}")
