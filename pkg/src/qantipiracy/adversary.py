"""Forgery and tampering strategies with physically allowed access only.

An adversary never sees amplitudes or angles. Registers are handed over
as opaque handles that support reading, two-outcome projective
measurement and unitaries, and nothing else.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .protocol import BitString, RegisterBank, prepare_amps, read_amps
from .qcore import DIM, SUBSPACE_SWAP, RandomSource, StateVec, Unitary4, measure_batch


class OpaqueBatch:
    """Custody of registers, shape (..., 4), without access to their amplitudes."""

    __slots__ = ("__amps",)

    def __init__(self, amps):
        self.__amps = np.array(amps, dtype=complex)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.__amps.shape[:-1]

    def read(self, rng: RandomSource) -> np.ndarray:
        """Run the public Reading Protocol; returns the bits."""
        bits, self.__amps = read_amps(self.__amps, rng)
        return bits

    def measure(self, rows, rng: RandomSource) -> np.ndarray:
        """Project onto span(rows); returns the success outcomes."""
        success, self.__amps, _ = measure_batch(self.__amps, rows, rng)
        return success

    def apply(self, u: Unitary4, mask=None) -> None:
        out = np.einsum("ij,...j->...i", u.m, self.__amps)
        if mask is not None:
            out = np.where(np.asarray(mask)[..., None], out, self.__amps)
        self.__amps = out

    def surrender(self) -> np.ndarray:
        """Hand the registers back (to a checker); ends custody."""
        amps, self.__amps = self.__amps, np.zeros((0, DIM), dtype=complex)
        return amps


class OpaqueRegister:
    """A single register in adversary custody."""

    __slots__ = ("__batch",)

    def __init__(self, state: StateVec):
        self.__batch = OpaqueBatch(state.amp[None])

    def read(self, rng: RandomSource) -> int:
        return int(self.__batch.read(rng)[0])

    def measure(self, rows, rng: RandomSource) -> bool:
        return bool(self.__batch.measure(np.asarray(rows)[None], rng)[0])

    def apply(self, u: Unitary4) -> None:
        self.__batch.apply(u)

    def surrender(self) -> StateVec:
        return StateVec(self.__batch.surrender()[0])


def opaque(bank: RegisterBank) -> list[OpaqueRegister]:
    return [OpaqueRegister(s) for s in bank.registers]


@dataclass(frozen=True)
class GuessForge:
    name = "guess"


@dataclass(frozen=True)
class MeasureResend:
    basis_angle: float = 0.0
    name = "measure-resend"

    def __post_init__(self):
        if not 0.0 <= self.basis_angle < np.pi:
            raise ValueError("basis_angle must lie in [0, pi)")


@dataclass(frozen=True)
class UnitaryFlip:
    """Subspace swap at ``indices`` (``None`` means every register)."""

    indices: tuple[int, ...] | None = None
    name = "flip"


AttackStrategy = Union[GuessForge, MeasureResend, UnitaryFlip]

STRATEGY_NAMES = ("guess", "measure-resend", "flip")


def strategy_from_name(name: str, basis_angle: float = 0.0) -> AttackStrategy:
    if name == "guess":
        return GuessForge()
    if name == "measure-resend":
        return MeasureResend(basis_angle)
    if name == "flip":
        return UnitaryFlip()
    raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGY_NAMES)}")


def forge_guess(c: BitString, rng: RandomSource, label: str = "forged") -> RegisterBank:
    """Prepare ``c`` again with fresh angles that know nothing of the key."""
    amps = prepare_amps(c.as_array(), rng.angles(len(c)))
    return RegisterBank(amps.reshape(-1, DIM), label)


def guess_forge_batch(handle: OpaqueBatch, rng: RandomSource) -> np.ndarray:
    bits = handle.read(rng)
    return prepare_amps(bits, rng.angles(bits.shape))


def measure_resend_batch(handle: OpaqueBatch, basis_angle: float, rng: RandomSource) -> np.ndarray:
    """Read, measure at ``basis_angle`` inside the read subspace, re-prepare.

    Returns the amplitudes of the resent registers.
    """
    bits = handle.read(rng)
    hit = handle.measure(prepare_amps(bits, basis_angle)[..., None, :], rng)
    angle = np.where(hit, basis_angle, basis_angle + np.pi / 2)
    return prepare_amps(bits, angle)


def attack_measure_resend(
    bank: Union[RegisterBank, Sequence[OpaqueRegister]],
    basis_angle: float,
    rng: RandomSource,
) -> RegisterBank:
    regs = opaque(bank) if isinstance(bank, RegisterBank) else list(bank)
    MeasureResend(basis_angle)  # range check
    out = []
    for reg in regs:
        bit = reg.read(rng)
        hit = reg.measure(prepare_amps(bit, basis_angle)[None], rng)
        out.append(prepare_amps(bit, basis_angle if hit else basis_angle + np.pi / 2))
    return RegisterBank(np.reshape(out, (-1, DIM)), "measure-resend")


def attack_unitary_flip(bank: RegisterBank, indices: Sequence[int] | None = None) -> RegisterBank:
    n = len(bank)
    idx = range(n) if indices is None else [int(i) for i in indices]
    mask = np.zeros(n, dtype=bool)
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"flip index {i} out of range for bank of {n}")
        mask[i] = True
    handle = OpaqueBatch(bank.amps)
    handle.apply(SUBSPACE_SWAP, mask)
    return RegisterBank(handle.surrender(), bank.label)


def flip_average_pass(delta_min: float = 0.0) -> float:
    """E[cos^2(d)] with d uniform on [delta_min, pi/2].

    This is the mean flip pass rate over keys whose two angles are at
    least ``delta_min`` apart as rays; it is 1/2 without the floor.
    """
    span = np.pi / 2 - delta_min
    return 0.5 - np.sin(2.0 * delta_min) / (4.0 * span)


def expected_pass_prob(
    strategy: AttackStrategy,
    theta_pair: tuple[float, float] | None = None,
    delta_min: float = 0.0,
) -> float:
    """Closed-form per-register probability of passing the check."""
    if isinstance(strategy, GuessForge):
        return 0.5
    if isinstance(strategy, MeasureResend):
        return 0.75
    if isinstance(strategy, UnitaryFlip):
        if theta_pair is not None:
            return float(np.cos(theta_pair[0] - theta_pair[1]) ** 2)
        return float(flip_average_pass(delta_min))
    raise TypeError(f"not an attack strategy: {strategy!r}")
