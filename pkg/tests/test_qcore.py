import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qantipiracy.protocol import prepare_register
from qantipiracy.qcore import (
    ALPHA0,
    ALPHA1,
    BETA0,
    BETA1,
    IDENTITY,
    SUBSPACE_SWAP,
    ImpossibleBranchError,
    Projector,
    RandomSource,
    StateVec,
    Unitary4,
    apply_unitary,
    fidelity,
    inner,
    measure_batch,
    project_measure,
    rank1_projector,
    subspace_projector,
)

finite = st.floats(-1.0, 1.0, allow_nan=False)
amps = st.lists(st.tuples(finite, finite), min_size=4, max_size=4).filter(
    lambda zs: sum(a * a + b * b for a, b in zs) > 1e-3)
angles = st.floats(0.0, 2 * np.pi, exclude_max=True)


def state_from(zs) -> StateVec:
    return StateVec.normalized([complex(a, b) for a, b in zs])


def random_unitary(seed):
    g = np.random.default_rng(seed)
    z = g.normal(size=(4, 4)) + 1j * g.normal(size=(4, 4))
    q, _ = np.linalg.qr(z)
    return Unitary4(q)


# --- construction ---------------------------------------------------------

def test_statevec_rejects_non_unit():
    with pytest.raises(ValueError):
        StateVec(np.array([1, 1, 0, 0]))


def test_statevec_rejects_wrong_shape():
    with pytest.raises(ValueError):
        StateVec(np.array([1, 0, 0]))


def test_statevec_is_immutable():
    with pytest.raises(ValueError):
        ALPHA0.amp[0] = 0.0


def test_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        Unitary4(np.ones((4, 4)))


def test_projector_rejects_non_orthonormal_basis():
    with pytest.raises(ValueError):
        Projector((ALPHA0, StateVec.normalized([1, 1, 0, 0])))


# --- inner / fidelity -------------------------------------------------------

def test_inner_examples():
    assert inner(ALPHA0, ALPHA0) == 1
    assert inner(ALPHA0, BETA1) == 0
    s = StateVec([np.cos(np.pi / 3), np.sin(np.pi / 3), 0, 0])
    assert inner(s, ALPHA0) == pytest.approx(0.5, abs=1e-12)


@given(amps, amps)
def test_inner_conjugate_symmetric(x, y):
    a, b = state_from(x), state_from(y)
    assert inner(a, b) == pytest.approx(np.conj(inner(b, a)), abs=1e-12)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-12)
    assert -1e-12 <= fidelity(a, b) <= 1 + 1e-12


def test_fidelity_examples():
    s = prepare_register(1, 0.3)
    assert fidelity(s, s) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(ALPHA0, BETA0) == 0
    t = 1.1
    assert fidelity(prepare_register(0, t), prepare_register(0, t - np.pi / 4)) == pytest.approx(0.5, abs=1e-12)


# --- unitaries --------------------------------------------------------------

def test_apply_identity():
    s = prepare_register(0, 2.0)
    assert apply_unitary(IDENTITY, s).allclose(s)


def test_subspace_swap_examples():
    assert apply_unitary(SUBSPACE_SWAP, ALPHA0).allclose(ALPHA1)
    t = 0.9
    swapped = apply_unitary(SUBSPACE_SWAP, prepare_register(0, t))
    assert swapped.allclose(prepare_register(1, t))


@given(amps, st.integers(0, 2**32 - 1))
def test_unitary_preserves_norm(x, seed):
    out = apply_unitary(random_unitary(seed), state_from(x))
    assert np.linalg.norm(out.amp) == pytest.approx(1.0, abs=1e-9)


# --- projectors and measurement ----------------------------------------------

def test_subspace_projectors_complete():
    total = subspace_projector(0).matrix + subspace_projector(1).matrix
    np.testing.assert_allclose(total, np.eye(4), atol=1e-12)


def test_subspace_projector_rejects_bad_bit():
    with pytest.raises(ValueError):
        subspace_projector(2)


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.7, np.pi, 5.9])
def test_subspace_projector_on_honest_states(theta, rng):
    ok, post, prob = project_measure(prepare_register(0, theta), subspace_projector(0), rng)
    assert ok and prob == pytest.approx(1.0) and post.allclose(prepare_register(0, theta))
    ok, post, prob = project_measure(prepare_register(0, theta), subspace_projector(1), rng)
    assert not ok and prob == pytest.approx(0.0)


def test_project_measure_forced_branches(rng):
    before = rng.position
    ok, post, prob = project_measure(ALPHA0, subspace_projector(0), rng)
    assert ok and prob == 1.0 and post.allclose(ALPHA0)
    ok, post, prob = project_measure(ALPHA1, subspace_projector(0), rng)
    assert not ok and prob == 0.0 and post.allclose(ALPHA1)
    # forced outcomes draw nothing
    assert rng.position == before


def test_project_measure_superposition(rng):
    s = StateVec.normalized([1, 0, 1, 0])
    outcomes = []
    for _ in range(200):
        ok, post, prob = project_measure(s, subspace_projector(0), rng)
        assert prob == pytest.approx(0.5, abs=1e-12)
        assert post.allclose(ALPHA0 if ok else ALPHA1)
        outcomes.append(ok)
    assert 0 < sum(outcomes) < 200


def test_rank1_projector_examples(rng):
    assert project_measure(ALPHA0, rank1_projector(ALPHA0), rng)[2] == 1.0
    t = 0.77
    _, _, prob = project_measure(prepare_register(0, t + np.pi / 2), rank1_projector(prepare_register(0, t)), rng)
    assert prob == pytest.approx(0.0, abs=1e-12)
    t2 = 2.1
    _, _, prob = project_measure(prepare_register(1, t2), rank1_projector(prepare_register(1, t)), rng)
    assert prob == pytest.approx(np.cos(t - t2) ** 2, abs=1e-12)


def test_rank1_frequency_matches_fidelity():
    t, t2 = 0.3, 1.2
    p = np.cos(t - t2) ** 2
    trials = 100_000
    states = np.repeat(prepare_register(1, t2).amp[None], trials, axis=0)
    ok, _, _ = measure_batch(states, rank1_projector(prepare_register(1, t)).rows, RandomSource(5))
    se = np.sqrt(p * (1 - p) / trials)
    assert abs(ok.mean() - p) <= 4 * se


@given(amps, amps)
def test_fidelity_equals_measure_prob(x, y):
    a, b = state_from(x), state_from(y)
    _, _, prob = project_measure(b, rank1_projector(a), RandomSource(0))
    assert prob == pytest.approx(fidelity(a, b), abs=1e-12)


@settings(max_examples=50)
@given(amps, st.integers(0, 2**63))
def test_measurement_norm_and_idempotence(x, seed):
    s = state_from(x)
    rng = RandomSource(seed)
    for p in (subspace_projector(0), subspace_projector(1), rank1_projector(s), rank1_projector(BETA1)):
        try:
            ok, post, _ = project_measure(s, p, rng)
        except ImpossibleBranchError:
            continue
        assert np.linalg.norm(post.amp) == pytest.approx(1.0, abs=1e-9)
        again, post2, prob2 = project_measure(post, p, rng)
        assert again == ok
        assert prob2 == pytest.approx(1.0 if ok else 0.0, abs=1e-9)


def test_measurement_statistics():
    s = StateVec.normalized([0.6, 0.2j, 0.5, -0.3])
    p = subspace_projector(0)
    prob = float(np.sum(np.abs(s.amp[:2]) ** 2))
    trials = 100_000
    ok, _, probs = measure_batch(np.repeat(s.amp[None], trials, axis=0), p.rows, RandomSource(11))
    assert probs[0] == pytest.approx(prob)
    assert abs(ok.mean() - prob) <= 4 * np.sqrt(prob * (1 - prob) / trials)


# --- randomness -------------------------------------------------------------

def test_random_source_reproducible():
    a, b = RandomSource(7), RandomSource(7)
    np.testing.assert_array_equal(a.angles(10), b.angles(10))
    np.testing.assert_array_equal(a.spawn(3).uniform(5), b.spawn(3).uniform(5))


def test_random_source_spawn_independent_of_parent_position():
    a, b = RandomSource(7), RandomSource(7)
    a.uniform(100)
    np.testing.assert_array_equal(a.spawn(1).uniform(4), b.spawn(1).uniform(4))


def test_angles_in_range():
    x = RandomSource(1).angles(100_000)
    assert x.min() >= 0.0 and x.max() < 2 * np.pi


def test_seed_range():
    with pytest.raises(ValueError):
        RandomSource(-1)
    RandomSource(2**64 - 1)
