"""Monte Carlo forgery estimates and their closed-form comparators.

Trials are processed in fixed-size chunks. Chunk ``j`` of the run for
bank length ``n`` draws from ``RandomSource(seed).spawn(n).spawn(j)``,
so the estimate depends only on ``(strategy, n, trials, seed)`` and not
on how many workers share the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adversary import (
    AttackStrategy,
    GuessForge,
    MeasureResend,
    OpaqueBatch,
    UnitaryFlip,
    expected_pass_prob,
    guess_forge_batch,
    measure_resend_batch,
)
from .authcode import DELTA_MIN, _selected, keygen_angles
from .protocol import BitString, RegisterBank, check_amps, check_bank, prepare_amps, read_amps, read_bank, store
from .qcore import SUBSPACE_SWAP, RandomSource

CHUNK = 1 << 14
# width of the agreement band for Bernoulli comparisons
SIGMAS = 4.0


@dataclass(frozen=True)
class McEstimate:
    successes: int
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("an estimate needs at least one trial")

    @property
    def mean(self) -> float:
        return self.successes / self.trials

    @property
    def std_error(self) -> float:
        m = self.mean
        return math.sqrt(m * (1.0 - m) / self.trials)

    def agrees_with(self, p: float, sigmas: float = SIGMAS) -> bool:
        """True if ``p`` lies within ``sigmas`` standard errors of the mean.

        The standard error is taken at ``p`` as well, so that a run with
        zero observed successes still has a nonzero band.
        """
        se = max(self.std_error, math.sqrt(p * (1.0 - p) / self.trials))
        return abs(self.mean - p) <= sigmas * se


@dataclass(frozen=True)
class SweepRow:
    n: int
    strategy: str
    empirical_pass: float
    analytic_pass: float
    std_error: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def log_slope(self) -> float:
        """Least-squares slope of ln(empirical_pass) against n."""
        ns = np.array([r.n for r in self.rows], dtype=float)
        ys = np.log([r.empirical_pass for r in self.rows])
        return float(np.polyfit(ns, ys, 1)[0])


def flipped_count(strategy: AttackStrategy, n: int) -> int:
    if isinstance(strategy, UnitaryFlip) and strategy.indices is not None:
        return len(set(strategy.indices))
    return n


def per_register_pass(strategy: AttackStrategy) -> float:
    """Per-register pass rate as realised by the Monte Carlo driver."""
    if isinstance(strategy, UnitaryFlip):
        # the driver draws fresh auth keys with the separation floor
        return expected_pass_prob(strategy, delta_min=DELTA_MIN)
    return expected_pass_prob(strategy)


def analytic_pass(strategy: AttackStrategy, n: int) -> float:
    return per_register_pass(strategy) ** flipped_count(strategy, n)


def _chunk_passes(strategy: AttackStrategy, n: int, size: int, rng: RandomSource) -> int:
    shape = (size, n)
    if isinstance(strategy, UnitaryFlip):
        angles = keygen_angles(shape, rng, DELTA_MIN)
        bits = rng.bits(shape)
        handle = OpaqueBatch(prepare_amps(bits, _selected(angles, bits)))
        mask = np.zeros(shape, dtype=bool)
        if strategy.indices is None:
            mask[:] = True
        else:
            mask[:, list(strategy.indices)] = True
        handle.apply(SUBSPACE_SWAP, mask)
        read, after = read_amps(handle.surrender(), rng)
        ok, _ = check_amps(after, read, _selected(angles, read), rng)
    else:
        bits = rng.bits(shape)
        thetas = rng.angles(shape)
        handle = OpaqueBatch(prepare_amps(bits, thetas))
        if isinstance(strategy, GuessForge):
            forged = guess_forge_batch(handle, rng)
        elif isinstance(strategy, MeasureResend):
            forged = measure_resend_batch(handle, strategy.basis_angle, rng)
        else:
            raise TypeError(f"not an attack strategy: {strategy!r}")
        ok, _ = check_amps(forged, bits, thetas, rng)
    return int(np.count_nonzero(ok.all(axis=-1)))


def mc_forgery_pass_rate(
    strategy: AttackStrategy,
    n: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    """Fraction of trials in which a forged bank of length ``n`` passes the check.

    Each trial stores a fresh random string under a fresh key (a fresh
    auth key for :class:`UnitaryFlip`), hands the registers to the
    adversary through an opaque handle, and runs the check
    on what comes back.
    """
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    if isinstance(strategy, UnitaryFlip) and strategy.indices is not None:
        if any(not 0 <= i < n for i in strategy.indices):
            raise IndexError("flip index out of range for bank length")
    base = RandomSource(seed).spawn(n)
    sizes = [min(CHUNK, trials - j) for j in range(0, trials, CHUNK)]

    def run(j: int) -> int:
        return _chunk_passes(strategy, n, sizes[j], base.spawn(j))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            passes = sum(pool.map(run, range(len(sizes))))
    else:
        passes = sum(map(run, range(len(sizes))))
    return McEstimate(passes, trials, seed)


def pass_curve(per_register_pass: float, n_values: Sequence[int]) -> list[tuple[int, float]]:
    if not 0.0 <= per_register_pass <= 1.0:
        raise ValueError("per-register pass probability must lie in [0, 1]")
    return [(int(n), per_register_pass ** int(n)) for n in n_values]


def sweep(
    strategy: AttackStrategy,
    n_values: Sequence[int],
    trials: int,
    seed: int,
    workers: int = 1,
) -> SweepResult:
    if not n_values:
        raise ValueError("n_values must be nonempty")
    rows = []
    for n in n_values:
        est = mc_forgery_pass_rate(strategy, n, trials, seed, workers)
        rows.append(SweepRow(n, strategy.name, est.mean, analytic_pass(strategy, n),
                             est.std_error, trials, seed))
    return SweepResult(tuple(rows))


def estimation_fidelity_profile(angle_grid_size: int, theta_samples: int, seed: int):
    """Mean check-pass fidelity of measure-resend for each basis angle on a grid over [0, pi).

    For a register at angle theta and a measurement basis at phi, outcome
    k occurs with probability p_k = |<e_k|psi>|^2 and the resent state
    e_k then passes with the same p_k, giving p_0^2 + p_1^2.
    """
    if angle_grid_size < 2:
        raise ValueError("angle grid needs at least two points")
    if theta_samples < 1:
        raise ValueError("need at least one theta sample")
    thetas = RandomSource(seed).angles(theta_samples)
    psi = prepare_amps(0, thetas)
    phis = np.arange(angle_grid_size) * (np.pi / angle_grid_size)
    e0 = prepare_amps(0, phis)
    e1 = prepare_amps(0, phis + np.pi / 2)
    p0 = np.abs(e0.conj() @ psi.T) ** 2
    p1 = np.abs(e1.conj() @ psi.T) ** 2
    return phis, (p0 ** 2 + p1 ** 2).mean(axis=1)


def estimation_fidelity_scan(angle_grid_size: int, theta_samples: int, seed: int) -> tuple[float, float]:
    phis, fids = estimation_fidelity_profile(angle_grid_size, theta_samples, seed)
    k = int(np.argmax(fids))
    return float(phis[k]), float(fids[k])


def fidelity_deviation(bank: RegisterBank, reference: RegisterBank) -> np.ndarray:
    """Per-register 1 - |<ref|actual>|^2."""
    if len(bank) != len(reference):
        raise ValueError("banks differ in length")
    overlap = np.einsum("ij,ij->i", reference.amps.conj(), bank.amps)
    return 1.0 - np.abs(overlap) ** 2


def nondisturbance_audit(bank_len: int, rounds: int, seed: int) -> float:
    """Alternate honest reads and checks; return the worst fidelity loss seen."""
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    rng = RandomSource(seed)
    c = BitString.from_array(rng.bits(bank_len))
    original, key = store(c, rng)
    bank = original
    worst = 0.0
    for _ in range(rounds):
        recovered, bank = read_bank(bank, rng)
        if recovered != c:
            raise AssertionError("honest bank read back a different string")
        worst = max(worst, float(fidelity_deviation(bank, original).max(initial=0.0)))
        report, bank = check_bank(bank, key, rng)
        if not report.all_pass:
            raise AssertionError(f"honest bank failed checking at {report.failures}")
        worst = max(worst, float(fidelity_deviation(bank, original).max(initial=0.0)))
    return worst


def flip_detection_rate(key, index: int, trials: int, seed: int) -> McEstimate:
    """How often a subspace swap at ``index`` is caught under a fixed auth key.

    Each trial authenticates a fresh random message with ``key``, swaps
    register ``index`` and runs verification. Successes count detections.
    """
    n = len(key)
    if not 0 <= index < n:
        raise IndexError(f"flip index {index} out of range for key of {n}")
    if trials < 1:
        raise ValueError("need trials >= 1")
    angles = key.angles
    base = RandomSource(seed).spawn(index)
    caught = 0
    for j, start in enumerate(range(0, trials, CHUNK)):
        rng = base.spawn(j)
        size = min(CHUNK, trials - start)
        bits = rng.bits((size, n))
        handle = OpaqueBatch(prepare_amps(bits, _selected(angles, bits)))
        mask = np.zeros((size, n), dtype=bool)
        mask[:, index] = True
        handle.apply(SUBSPACE_SWAP, mask)
        read, after = read_amps(handle.surrender(), rng)
        ok, _ = check_amps(after, read, _selected(angles, read), rng)
        caught += int(np.count_nonzero(~ok.all(axis=-1)))
    return McEstimate(caught, trials, seed)
