"""Message authentication with pre-shared angle pairs.

Sender and receiver share ``(theta0_i, theta1_i)`` for every position.
Bit ``c_i`` is sent as the register prepared with ``theta{c_i}_i``. The
messenger can read the message, and can swap a register into the other
bit's subspace, but without ``theta{not c_i}_i`` the swapped register
fails verification with probability ``sin^2(theta0_i - theta1_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .protocol import BitString, PairingError, RegisterBank, check_amps, prepare_amps, read_bank
from .qcore import DIM, TWO_PI, RandomSource

DELTA_MIN = np.pi / 8


class KeyReuseError(RuntimeError):
    """A one-message key was asked to sign a second, different message."""


class AuthEntry(NamedTuple):
    theta0: float
    theta1: float


def ray_separation(a, b):
    """Distance between the rays at angles a and b, in [0, pi/2].

    Angles a and a + pi prepare the same state up to sign, so the
    difference is folded modulo pi, not 2pi.
    """
    d = np.mod(np.asarray(a) - np.asarray(b), np.pi)
    return np.minimum(d, np.pi - d)


@dataclass(frozen=True)
class SharedAuthKey:
    entries: tuple[AuthEntry, ...]
    delta_min: float = DELTA_MIN

    def __post_init__(self):
        entries = tuple(AuthEntry(float(t0), float(t1)) for t0, t1 in self.entries)
        for i, (t0, t1) in enumerate(entries):
            if not (0.0 <= t0 < TWO_PI and 0.0 <= t1 < TWO_PI):
                raise ValueError(f"auth key entry {i} has an angle outside [0, 2pi)")
            if ray_separation(t0, t1) < self.delta_min:
                raise ValueError(f"auth key entry {i} angles closer than {self.delta_min:.6g}")
        object.__setattr__(self, "entries", entries)

    @property
    def angles(self) -> np.ndarray:
        """(n, 2) array; column b holds the angles used for bit b."""
        return np.array(self.entries, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.entries)


def keygen_angles(shape, rng: RandomSource, delta_min: float = DELTA_MIN) -> np.ndarray:
    """Angle pairs of shape ``shape + (2,)``, rejection-sampled to the separation floor."""
    shape = tuple(shape)
    out = rng.angles(shape + (2,))
    bad = ray_separation(out[..., 0], out[..., 1]) < delta_min
    while np.any(bad):
        out[bad] = rng.angles((int(bad.sum()), 2))
        bad = ray_separation(out[..., 0], out[..., 1]) < delta_min
    return out


def auth_keygen(n: int, rng: RandomSource, delta_min: float = DELTA_MIN) -> SharedAuthKey:
    if n < 1:
        raise ValueError("auth key length must be at least 1")
    pairs = keygen_angles((n,), rng, delta_min)
    return SharedAuthKey(tuple(map(tuple, pairs.tolist())), delta_min)


def _selected(angles: np.ndarray, bits) -> np.ndarray:
    """Pick column ``bits`` of the (..., 2) angle array, broadcasting."""
    return np.where(np.asarray(bits) == 1, angles[..., 1], angles[..., 0])


def auth_encode(c: BitString, key: SharedAuthKey, label: str = "auth") -> RegisterBank:
    if len(c) != len(key):
        raise PairingError(f"message has {len(c)} bits but key has {len(key)} entries")
    bits = c.as_array()
    thetas = _selected(key.angles, bits)
    return RegisterBank(prepare_amps(bits, thetas).reshape(-1, DIM), label)


class AuthResult(NamedTuple):
    message: BitString
    authentic: bool
    failures: tuple[int, ...]


def auth_verify(bank: RegisterBank, key: SharedAuthKey, rng: RandomSource) -> AuthResult:
    """Read the message, then check every register against the key angle for the bit read."""
    if len(bank) != len(key):
        raise PairingError(f"bank holds {len(bank)} registers but key has {len(key)} entries")
    c, after = read_bank(bank, rng)
    bits = c.as_array()
    ok, _ = check_amps(after.amps, bits, _selected(key.angles, bits), rng)
    failures = tuple(int(i) for i in np.flatnonzero(~ok))
    return AuthResult(c, not failures, failures)


@dataclass
class AuthSigner:
    """Sender-side wrapper that refuses to sign two different messages with one key."""

    key: SharedAuthKey
    signed: BitString | None = field(default=None)

    def sign(self, c: BitString) -> RegisterBank:
        if self.signed is not None and self.signed != c:
            raise KeyReuseError("this key already authenticated a different message")
        bank = auth_encode(c, self.key)
        self.signed = c
        return bank
