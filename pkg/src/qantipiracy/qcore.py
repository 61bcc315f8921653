"""Four-dimensional state-vector algebra with projective measurement.

Basis convention (fixed throughout the package)::

    index 0 -> |alpha_0>    index 1 -> |beta_0>
    index 2 -> |alpha_1>    index 3 -> |beta_1>

Values are immutable. Randomness only enters through an explicit
:class:`RandomSource`.

The measurement kernel :func:`measure_batch` works on arrays of any
leading shape so that whole banks (and whole Monte Carlo chunks) go
through exactly the same code as a single register.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DIM = 4
NORM_TOL = 1e-9
FORCE_TOL = 1e-12
# squared norm below which a collapsed residual counts as the zero vector
ZERO_RESIDUAL = 1e-24
TWO_PI = 2.0 * np.pi


class ImpossibleBranchError(RuntimeError):
    """A measurement selected a branch whose residual vector is zero."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVec:
    """One 4-state register as a unit-norm amplitude vector."""

    amp: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amp, dtype=complex)
        if a.shape != (DIM,):
            raise ValueError(f"StateVec needs {DIM} amplitudes, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("StateVec amplitudes must be finite")
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"StateVec must be unit-norm (|amp| = {norm!r})")
        object.__setattr__(self, "amp", _frozen(a))

    @classmethod
    def normalized(cls, amp) -> "StateVec":
        a = np.asarray(amp, dtype=complex)
        return cls(a / np.linalg.norm(a))

    def allclose(self, other: "StateVec", atol: float = NORM_TOL) -> bool:
        return bool(np.allclose(self.amp, other.amp, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        body = ", ".join(f"{z.real:+.6g}{z.imag:+.6g}j" for z in self.amp)
        return f"StateVec({body})"


def basis_state(index: int) -> StateVec:
    amp = np.zeros(DIM, dtype=complex)
    amp[index] = 1.0
    return StateVec(amp)


ALPHA0 = basis_state(0)
BETA0 = basis_state(1)
ALPHA1 = basis_state(2)
BETA1 = basis_state(3)


@dataclass(frozen=True, eq=False)
class Unitary4:
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"Unitary4 needs a {DIM}x{DIM} matrix, got {m.shape}")
        if not np.allclose(m @ m.conj().T, np.eye(DIM), rtol=0.0, atol=NORM_TOL):
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "m", _frozen(m))


IDENTITY = Unitary4(np.eye(DIM))
# alpha_c <-> alpha_cbar, beta_c <-> beta_cbar
SUBSPACE_SWAP = Unitary4(np.eye(DIM)[[2, 3, 0, 1]])


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector given by an orthonormal basis of its range."""

    basis: tuple[StateVec, ...]
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = tuple(self.basis)
        if not 1 <= len(basis) <= DIM - 1:
            raise ValueError("Projector basis must hold 1 to 3 vectors")
        rows = np.stack([b.amp for b in basis])
        gram = rows.conj() @ rows.T
        if not np.allclose(gram, np.eye(len(basis)), rtol=0.0, atol=NORM_TOL):
            raise ValueError("Projector basis is not orthonormal")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_rows", _frozen(rows))

    @property
    def rows(self) -> np.ndarray:
        """Basis vectors stacked as a (rank, 4) array."""
        return self._rows

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def matrix(self) -> np.ndarray:
        return self._rows.T @ self._rows.conj()


class RandomSource:
    """Seeded random stream; the only source of randomness in the package.

    Child streams from :meth:`spawn` depend only on ``(seed, key)``, which
    is what makes chunked Monte Carlo independent of scheduling.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.spawn_key = tuple(_spawn_key)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, key: int) -> "RandomSource":
        return RandomSource(self.seed, self.spawn_key + (int(key),))

    @property
    def position(self) -> dict:
        """Opaque snapshot of the stream state."""
        return self._gen.bit_generator.state

    def uniform(self, size=None):
        return self._gen.random(size)

    def angles(self, size=None):
        """Uniform angles on [0, 2pi)."""
        a = self._gen.random(size) * TWO_PI
        return np.where(a >= TWO_PI, 0.0, a) if size is not None else (0.0 if a >= TWO_PI else float(a))

    def bits(self, size) -> np.ndarray:
        return self._gen.integers(0, 2, size=size, dtype=np.int8)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"


def inner(a: StateVec, b: StateVec) -> complex:
    """<a|b>, antilinear in the first argument."""
    return complex(np.vdot(a.amp, b.amp))


def fidelity(a: StateVec, b: StateVec) -> float:
    return float(abs(inner(a, b)) ** 2)


def apply_unitary(u: Unitary4, s: StateVec) -> StateVec:
    return StateVec(u.m @ s.amp)


def rank1_projector(psi: StateVec) -> Projector:
    return Projector((psi,))


def subspace_projector(bit: int) -> Projector:
    """Projector onto span{alpha_bit, beta_bit}."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return _SUBSPACE[bit]


_SUBSPACE = (Projector((ALPHA0, BETA0)), Projector((ALPHA1, BETA1)))


def measure_batch(states: np.ndarray, rows: np.ndarray, rng: RandomSource):
    """Projective two-outcome measurement over a batch of registers.

    Parameters
    ----------
    states : ndarray, shape (..., 4)
        Unit-norm amplitude vectors.
    rows : ndarray, shape (..., k, 4)
        Orthonormal basis of the projector range, broadcastable against
        ``states``.
    rng : RandomSource
        Consumed once per non-forced entry, in C order.

    Returns
    -------
    success : bool ndarray, shape (...)
    post : complex ndarray, shape (..., 4)
        Normalized ``P|s>`` where successful, normalized ``(I-P)|s>``
        otherwise.
    prob : float ndarray, shape (...)
        ``<s|P|s>``.

    Outcomes whose probability lies within ``FORCE_TOL`` of 0 or 1 are
    forced: they draw no randomness and return the input state unchanged,
    so honest registers survive any number of reads and checks bit for bit.
    """
    states = np.asarray(states, dtype=complex)
    rows = np.asarray(rows, dtype=complex)
    coeff = np.einsum("...kj,...j->...k", rows.conj(), states)
    proj = np.einsum("...k,...kj->...j", coeff, rows)
    p_norm2 = _norm2(coeff)
    prob = np.clip(p_norm2 / _norm2(states), 0.0, 1.0)

    success = prob >= 1.0 - FORCE_TOL
    free = (prob > FORCE_TOL) & ~success
    n_free = int(np.count_nonzero(free))
    if n_free:
        success[free] = rng.uniform(n_free) < prob[free]

    post = np.where(success[..., None], proj, states - proj)
    chosen = _norm2(post)
    if np.any(chosen[free] < ZERO_RESIDUAL):
        raise ImpossibleBranchError("measurement collapsed onto a zero residual")
    # a forced outcome leaves the register exactly as it was
    post = np.where(free[..., None], post / np.sqrt(np.where(free, chosen, 1.0))[..., None],
                    np.broadcast_to(states, post.shape))
    return success, post, prob


def _norm2(z: np.ndarray) -> np.ndarray:
    return np.sum(z.real ** 2 + z.imag ** 2, axis=-1)


def project_measure(s: StateVec, p: Projector, rng: RandomSource) -> tuple[bool, StateVec, float]:
    success, post, prob = measure_batch(s.amp[None, :], p.rows[None], rng)
    return bool(success[0]), StateVec(post[0]), float(prob[0])


def is_unit(states: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    return np.abs(np.linalg.norm(states, axis=-1) - 1.0) <= tol


def stack(states: Sequence[StateVec]) -> np.ndarray:
    if not states:
        return np.zeros((0, DIM), dtype=complex)
    return np.stack([s.amp for s in states])
