"""Keyed reversible randomizer for row indices.

Four-round unbalanced Feistel network over an n-bit index space, so the
mapping is a bijection on [0, 2^n) for any n, including odd widths. Round
keys are 16-bit values regenerated from the experiment seed at every epoch
(refresh window); a 64-bit extension word derived from the same stream widens
the effective key material inside the round function.

Widths up to MATERIALIZE_MAX bits are materialized into forward/inverse
lookup tables (built vectorized), which makes per-activation encryption a
single array index.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

import numpy as np

_M64 = (1 << 64) - 1
_C_SEED = 0x9E3779B97F4A7C15
_C_EPOCH = 0xBF58476D1CE4E5B9
_C_TABLE = 0x94D049BB133111EB

MATERIALIZE_MAX = 22


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _C_SEED) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def derive_key_material(seed: int, epoch: int, table_id: int) -> tuple[tuple[int, ...], int]:
    """Counter-mode derivation: (seed, epoch, table_id) -> 4x16-bit keys + 64-bit extension."""
    state = (seed ^ (epoch * _C_EPOCH) ^ (table_id * _C_TABLE)) & _M64
    words = []
    for _ in range(3):
        state, w = _splitmix64(state)
        words.append(w)
    round_keys = tuple((words[0] >> (16 * i)) & 0xFFFF for i in range(4))
    return round_keys, words[1] ^ (words[2] << 1) & _M64


@dataclass(frozen=True)
class LlbcKey:
    round_keys: tuple[int, ...]
    epoch: int
    extension: int

    def __post_init__(self):
        if len(self.round_keys) != 4 or any(not 0 <= k < 65536 for k in self.round_keys):
            raise ValueError("round_keys must be four 16-bit values")


class LlbcCipher:
    """Bijective keyed permutation on [0, 2^width_bits)."""

    def __init__(self, width_bits: int, seed: int, epoch: int = 0, table_id: int = 0):
        if width_bits < 2:
            raise ValueError("width_bits must be >= 2")
        self.width_bits = width_bits
        self.seed = seed
        self.table_id = table_id
        rk, ext = derive_key_material(seed, epoch, table_id)
        self.key = LlbcKey(round_keys=rk, epoch=epoch, extension=ext)
        self._size = 1 << width_bits
        # right half gets the smaller share on odd widths
        self._b = width_bits // 2
        self._a = width_bits - self._b
        self._enc_table = None
        self._dec_table = None
        if width_bits <= MATERIALIZE_MAX:
            self._materialize()

    # -- round function -----------------------------------------------------

    def _round_scalar(self, x: int, rk: int, out_bits: int) -> int:
        z = (x + self.key.extension + rk * _C_SEED) & _M64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        z ^= z >> 31
        return z & ((1 << out_bits) - 1)

    def _encrypt_raw(self, x: int) -> int:
        a, b = self._a, self._b
        left, right = x >> b, x & ((1 << b) - 1)
        for rk in self.key.round_keys:
            left, right = right, left ^ self._round_scalar(right, rk, a)
            a, b = b, a
        return (left << b) | right

    def _decrypt_raw(self, y: int) -> int:
        a, b = self._a, self._b
        widths = []
        for _ in range(4):
            widths.append((a, b))
            a, b = b, a
        left, right = y >> b, y & ((1 << b) - 1)
        for rk, (ra, rb) in zip(reversed(self.key.round_keys), reversed(widths)):
            left, right = right ^ self._round_scalar(left, rk, ra), left
            a, b = ra, rb
        return (left << b) | right

    def _materialize(self):
        n = self._size
        a, b = self._a, self._b
        x = np.arange(n, dtype=np.uint64)
        left = x >> np.uint64(b)
        right = x & np.uint64((1 << b) - 1)
        ext = np.uint64(self.key.extension)
        for rk in self.key.round_keys:
            z = right + ext + np.uint64((rk * _C_SEED) & _M64)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z ^= z >> np.uint64(31)
            f = z & np.uint64((1 << a) - 1)
            left, right = right, left ^ f
            a, b = b, a
        enc = (left << np.uint64(b)) | right
        dec = np.empty(n, dtype=np.uint64)
        dec[enc] = np.arange(n, dtype=np.uint64)
        self._enc_np = enc.astype(np.uint32)
        self._dec_np = dec.astype(np.uint32)
        self._enc_table = array("I", self._enc_np.tobytes())
        self._dec_table = array("I", self._dec_np.tobytes())

    # -- public API ----------------------------------------------------------

    def encrypt(self, flat: int) -> int:
        if not 0 <= flat < self._size:
            raise ValueError(f"input {flat} outside [0, 2^{self.width_bits})")
        if self._enc_table is not None:
            return self._enc_table[flat]
        return self._encrypt_raw(flat)

    def decrypt(self, randomized: int) -> int:
        if not 0 <= randomized < self._size:
            raise ValueError(f"input {randomized} outside [0, 2^{self.width_bits})")
        if self._dec_table is not None:
            return self._dec_table[randomized]
        return self._decrypt_raw(randomized)

    def encrypt_many(self, flats: np.ndarray) -> np.ndarray:
        if self._enc_table is not None:
            return self._enc_np[flats]
        return np.array([self._encrypt_raw(int(v)) for v in flats], dtype=np.uint32)

    def decrypt_many(self, randomized: np.ndarray) -> np.ndarray:
        if self._dec_table is not None:
            return self._dec_np[randomized]
        return np.array([self._decrypt_raw(int(v)) for v in randomized], dtype=np.uint32)

    def group_members(self, group: int, group_size: int) -> list[int]:
        """Decrypt one aligned block of randomized indices back to row indices."""
        base = group * group_size
        if base + group_size > self._size:
            raise ValueError("group outside randomized space")
        if self._dec_table is not None:
            t = self._dec_table
            return [t[i] for i in range(base, base + group_size)]
        return [self._decrypt_raw(i) for i in range(base, base + group_size)]

    def rekeyed(self, epoch: int) -> "LlbcCipher":
        """New cipher for the given epoch; deterministic per (seed, epoch, table_id)."""
        return LlbcCipher(self.width_bits, self.seed, epoch=epoch, table_id=self.table_id)


def rekey(cipher: LlbcCipher, epoch: int) -> LlbcCipher:
    return cipher.rekeyed(epoch)
