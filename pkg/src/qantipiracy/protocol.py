"""Storing, Reading and Checking protocols over banks of 4-state registers.

A bit ``c`` with secret angle ``theta`` is stored as::

    cos(theta)|alpha_c> + sin(theta)|beta_c>

Reading projects onto span{alpha_0, beta_0}. Checking projects onto the
prepared state itself. Both leave honest registers untouched because the
relevant outcome has probability exactly one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .qcore import (
    DIM,
    TWO_PI,
    RandomSource,
    StateVec,
    is_unit,
    measure_batch,
    stack,
    subspace_projector,
)


class PairingError(ValueError):
    """Bank, key or message lengths disagree."""


def _check_bit(bit) -> int:
    if bit not in (0, 1) or isinstance(bit, float):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return int(bit)


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(_check_bit(b) for b in self.bits))

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        bad = set(text) - {"0", "1"}
        if bad:
            raise ValueError(f"invalid bit characters: {''.join(sorted(bad))!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_array(cls, arr) -> "BitString":
        return cls(tuple(int(b) for b in np.asarray(arr).ravel()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.int8)

    def flipped(self, indices: Iterable[int]) -> "BitString":
        bits = list(self.bits)
        for i in indices:
            bits[i] ^= 1
        return BitString(tuple(bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


class KeyEntry(NamedTuple):
    theta: float
    bit: int


def reduce_angle(theta: float) -> float:
    """Map an angle into [0, 2pi)."""
    t = float(theta) % TWO_PI
    return 0.0 if t >= TWO_PI else t


@dataclass(frozen=True)
class SecretKey:
    """The provider's record of (theta_i, c_i) for every register."""

    entries: tuple[KeyEntry, ...] = ()

    def __post_init__(self):
        entries = []
        for theta, bit in self.entries:
            if not 0.0 <= theta < TWO_PI:
                raise ValueError(f"key angle {theta!r} outside [0, 2pi)")
            entries.append(KeyEntry(float(theta), _check_bit(bit)))
        object.__setattr__(self, "entries", tuple(entries))

    @property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.entries], dtype=float)

    @property
    def bits(self) -> np.ndarray:
        return np.array([e.bit for e in self.entries], dtype=np.int8)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class RegisterBank:
    """Ordered registers, held as an (n, 4) amplitude array."""

    amps: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex, copy=True).reshape(-1, DIM)
        if not np.all(is_unit(a)):
            raise ValueError("every register in a bank must be unit-norm")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_states(cls, states: Sequence[StateVec], label: str = "") -> "RegisterBank":
        return cls(stack(list(states)), label)

    @property
    def registers(self) -> tuple[StateVec, ...]:
        return tuple(StateVec(a) for a in self.amps)

    def __len__(self) -> int:
        return self.amps.shape[0]

    def __getitem__(self, i: int) -> StateVec:
        return StateVec(self.amps[i])

    def replace(self, indices, amps) -> "RegisterBank":
        new = np.array(self.amps)
        new[list(indices)] = amps
        return RegisterBank(new, self.label)


@dataclass(frozen=True)
class CheckReport:
    per_index: tuple[tuple[int, bool], ...] = ()
    all_pass: bool = field(init=False)

    def __post_init__(self):
        per = tuple((int(i), bool(ok)) for i, ok in self.per_index)
        object.__setattr__(self, "per_index", per)
        object.__setattr__(self, "all_pass", all(ok for _, ok in per))

    @property
    def failures(self) -> list[int]:
        return [i for i, ok in self.per_index if not ok]


def prepare_amps(bits, thetas) -> np.ndarray:
    """Vectorized register preparation; result shape is ``bits.shape + (4,)``."""
    one = np.asarray(bits) == 1
    thetas = np.asarray(thetas, dtype=float)
    c, s = np.cos(thetas), np.sin(thetas)
    c, s, one = np.broadcast_arrays(c, s, one)
    out = np.empty(one.shape + (DIM,), dtype=complex)
    out[..., 0] = np.where(one, 0.0, c)
    out[..., 1] = np.where(one, 0.0, s)
    out[..., 2] = np.where(one, c, 0.0)
    out[..., 3] = np.where(one, s, 0.0)
    return out


def prepare_register(bit: int, theta: float) -> StateVec:
    """cos(theta)|alpha_bit> + sin(theta)|beta_bit>, theta taken mod 2pi."""
    return StateVec(prepare_amps(_check_bit(bit), reduce_angle(theta)))


def store(c: BitString, rng: RandomSource, label: str = "") -> tuple[RegisterBank, SecretKey]:
    bits = c.as_array()
    thetas = rng.angles(len(bits))
    bank = RegisterBank(prepare_amps(bits, thetas).reshape(-1, DIM), label)
    key = SecretKey(tuple(zip(thetas.tolist(), bits.tolist())))
    return bank, key


def read_amps(amps: np.ndarray, rng: RandomSource):
    """Reading kernel: returns (bits, post) for amplitudes of shape (..., 4)."""
    success, post, _ = measure_batch(amps, subspace_projector(0).rows, rng)
    return np.where(success, 0, 1).astype(np.int8), post


def check_amps(amps: np.ndarray, bits, thetas, rng: RandomSource):
    """Checking kernel: project each register onto its prepared state."""
    target = prepare_amps(bits, thetas)[..., None, :]
    success, post, _ = measure_batch(amps, target, rng)
    return success, post


def read_bit(s: StateVec, rng: RandomSource) -> tuple[int, StateVec]:
    bits, post = read_amps(s.amp[None], rng)
    return int(bits[0]), StateVec(post[0])


def read_bank(bank: RegisterBank, rng: RandomSource) -> tuple[BitString, RegisterBank]:
    bits, post = read_amps(bank.amps, rng)
    return BitString.from_array(bits), RegisterBank(post, bank.label)


def check_register(s: StateVec, bit: int, theta: float, rng: RandomSource) -> tuple[bool, StateVec]:
    ok, post = check_amps(s.amp[None], [_check_bit(bit)], [reduce_angle(theta)], rng)
    return bool(ok[0]), StateVec(post[0])


def check_bank(bank: RegisterBank, key: SecretKey, rng: RandomSource) -> tuple[CheckReport, RegisterBank]:
    if len(bank) != len(key):
        raise PairingError(f"bank holds {len(bank)} registers but key has {len(key)} entries")
    return check_subset(bank, key, range(len(bank)), rng)


def check_subset(bank: RegisterBank, key: SecretKey, indices, rng: RandomSource) -> tuple[CheckReport, RegisterBank]:
    """Check only the registers at ``indices``; the rest are not touched.

    This is the registration flow where the user hands back part of the
    bank.
    """
    if len(bank) != len(key):
        raise PairingError(f"bank holds {len(bank)} registers but key has {len(key)} entries")
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate register index in subset")
    for i in idx:
        if not 0 <= i < len(bank):
            raise IndexError(f"register index {i} out of range for bank of {len(bank)}")
    if not idx:
        return CheckReport(()), bank
    sel = np.asarray(idx)
    ok, post = check_amps(bank.amps[sel], key.bits[sel], key.thetas[sel], rng)
    report = CheckReport(tuple(zip(idx, ok.tolist())))
    return report, bank.replace(sel, post)
