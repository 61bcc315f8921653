import math

import numpy as np
import pytest

import oracles
from qantipiracy import analysis
from qantipiracy.adversary import GuessForge, MeasureResend, UnitaryFlip, attack_unitary_flip
from qantipiracy.analysis import (
    McEstimate,
    estimation_fidelity_profile,
    estimation_fidelity_scan,
    fidelity_deviation,
    mc_forgery_pass_rate,
    nondisturbance_audit,
    pass_curve,
    sweep,
)
from qantipiracy.protocol import BitString, store
from qantipiracy.qcore import RandomSource


def test_mc_estimate_fields():
    est = McEstimate(25, 100, seed=3)
    assert est.mean == 0.25
    assert est.std_error == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    with pytest.raises(ValueError):
        McEstimate(0, 0, seed=0)


def test_pass_curve_examples():
    assert pass_curve(1.0, [1, 5, 100]) == [(1, 1.0), (5, 1.0), (100, 1.0)]
    (_, v), = pass_curve(0.75, [32])
    assert v == 0.75 ** 32
    assert v == pytest.approx(1.0045e-4, rel=1e-3)
    (_, v), = pass_curve(0.5, [64])
    assert v == pytest.approx(5.421e-20, rel=1e-3)
    vals = [p for _, p in pass_curve(0.9, range(20))]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        pass_curve(1.5, [1])


@pytest.mark.parametrize("strategy, p", [(GuessForge(), 0.5), (MeasureResend(), 0.75)])
def test_single_register_rates(strategy, p):
    est = mc_forgery_pass_rate(strategy, 1, 200_000, seed=1)
    assert oracles.within(est.mean, p, est.trials)


def test_flip_rate_uses_key_floor():
    est = mc_forgery_pass_rate(UnitaryFlip(), 1, 200_000, seed=2)
    assert oracles.within(est.mean, oracles.flip_pass_with_floor(np.pi / 8), est.trials)
    est = mc_forgery_pass_rate(UnitaryFlip(indices=(0,)), 3, 100_000, seed=2)
    assert oracles.within(est.mean, analysis.analytic_pass(UnitaryFlip(indices=(0,)), 3), est.trials)


def test_mc_reproducible_and_worker_independent():
    a = mc_forgery_pass_rate(MeasureResend(), 2, 50_000, seed=9, workers=1)
    b = mc_forgery_pass_rate(MeasureResend(), 2, 50_000, seed=9, workers=3)
    c = mc_forgery_pass_rate(MeasureResend(), 2, 50_000, seed=10)
    assert a == b
    assert a != c


def test_mc_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mc_forgery_pass_rate(GuessForge(), 0, 10, seed=0)
    with pytest.raises(ValueError):
        mc_forgery_pass_rate(GuessForge(), 1, 0, seed=0)
    with pytest.raises(IndexError):
        mc_forgery_pass_rate(UnitaryFlip(indices=(5,)), 2, 10, seed=0)


def test_sweep_rows_within_band():
    res = sweep(MeasureResend(), [1, 2, 4, 8], 100_000, seed=4)
    for row in res.rows:
        assert row.analytic_pass == 0.75 ** row.n
        assert abs(row.empirical_pass - row.analytic_pass) <= 4 * max(
            row.std_error, math.sqrt(row.analytic_pass * (1 - row.analytic_pass) / row.trials))
    assert res.log_slope() == pytest.approx(math.log(0.75), rel=0.05)


def test_sweep_single_n_matches_direct_estimate():
    row, = sweep(GuessForge(), [3], 20_000, seed=5).rows
    est = mc_forgery_pass_rate(GuessForge(), 3, 20_000, seed=5)
    assert row.empirical_pass == est.mean and row.std_error == est.std_error
    with pytest.raises(ValueError):
        sweep(GuessForge(), [], 10, seed=0)


def test_estimation_scan_flat_at_three_quarters():
    angle, best = estimation_fidelity_scan(32, 100_000, seed=1)
    assert 0 <= angle < np.pi
    assert best == pytest.approx(0.75, abs=0.005)
    _, fids = estimation_fidelity_profile(32, 100_000, seed=1)
    assert fids.max() - fids.min() < 0.01


def test_estimation_scan_two_point_grid():
    phis, fids = estimation_fidelity_profile(2, 100_000, seed=2)
    np.testing.assert_allclose(phis, [0, np.pi / 2])
    assert fids[0] == pytest.approx(fids[1], abs=1e-12)


def test_estimation_scan_single_sample():
    theta = RandomSource(3).angles(1)[0]
    phis, fids = estimation_fidelity_profile(8, 1, seed=3)
    expect = np.cos(theta - phis) ** 4 + np.sin(theta - phis) ** 4
    np.testing.assert_allclose(fids, expect, atol=1e-12)
    assert np.all((0.5 - 1e-12 <= fids) & (fids <= 1 + 1e-12))
    with pytest.raises(ValueError):
        estimation_fidelity_profile(1, 10, seed=0)


def test_nondisturbance_audit():
    assert nondisturbance_audit(64, 100, seed=1) < 1e-9
    assert nondisturbance_audit(64, 0, seed=1) == 0.0


def test_deviation_after_flip_is_one():
    bank, _ = store(BitString.from_str("0110"), RandomSource(4))
    dev = fidelity_deviation(attack_unitary_flip(bank, [2]), bank)
    assert dev[2] == pytest.approx(1.0)
    np.testing.assert_allclose(np.delete(dev, 2), 0.0, atol=1e-12)
