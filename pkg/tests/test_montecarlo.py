import math

import numpy as np
import pytest
from scipy import stats

from scfox.channel import BranchParams, ScChannel, branch_cdf, sc_cdf
from scfox.metrics import EdParams, abep_foxh, lambda_for_pf
from scfox.montecarlo import (SimConfig, default_threads, estimate_metric, functional,
                              sample_branch, sample_sc)

SHADOWING_SETS = [(m, ms) for m in (0.5, 1.0, 3.5) for ms in (0.5, 5.0, 50.0)]


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(samples=10)
    with pytest.raises(ValueError):
        SimConfig(seed=-1)
    with pytest.raises(ValueError):
        SimConfig(streams=0)


def test_sample_branch_scalar_and_array():
    rng = np.random.default_rng(1)
    p = BranchParams(2.0, 5.0, 1.0)
    assert isinstance(sample_branch(p, rng), float)
    assert sample_branch(p, rng, 10).shape == (10,)


@pytest.mark.parametrize("m,ms", SHADOWING_SETS)
def test_branch_samples_ks(m, ms):
    p = BranchParams(m, ms, 3.0)
    x = sample_branch(p, np.random.default_rng(12345), 100_000)
    res = stats.kstest(x, lambda g: branch_cdf(p, g, check=False))
    # 1% critical value of the KS statistic for n = 1e5
    assert res.statistic < 1.628 / math.sqrt(x.size)


def test_unit_case_median():
    p = BranchParams(1.0, 1.0, 1.0)
    x = sample_branch(p, np.random.default_rng(3), 200_000)
    frac = np.mean(x <= 1.0)
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / x.size)


def test_branch_mean_moment():
    p = BranchParams(3.5, 50.0, 10.0)
    est = estimate_metric("cdf", ScChannel((p,)), 1e300, SimConfig(1000))
    assert est.mean == 1.0
    x = sample_branch(p, np.random.default_rng(9), 400_000)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - p.mean_snr()) <= 4 * se


def test_sc_samples_follow_product_cdf():
    ch = ScChannel.from_lists([3.5, 4.5, 5.5], [50.0] * 3, [10.0] * 3)
    x = sample_sc(ch, np.random.default_rng(5), 100_000)
    # Dvoretzky-Kiefer-Wolfowitz band at 99.9%
    eps = math.sqrt(math.log(2 / 1e-3) / (2 * x.size))
    xs = np.sort(x)
    ecdf = np.arange(1, xs.size + 1) / xs.size
    assert np.max(np.abs(ecdf - sc_cdf(ch, xs))) < eps


def test_reproducible_and_thread_invariant():
    ch = ScChannel.from_lists([1.0, 2.0], [0.5, 5.0], [1.0, 3.0])
    cfg = SimConfig(200_000, seed=77, streams=4)
    a = estimate_metric("abep", ch, 1.0, cfg, threads=1)
    b = estimate_metric("abep", ch, 1.0, cfg, threads=4)
    c = estimate_metric("abep", ch, 1.0, cfg, threads=4)
    assert a == b == c


def test_stream_count_changes_little():
    ch = ScChannel.from_lists([2.0], [5.0], [1.0])
    a = estimate_metric("acc", ch, 1.0, SimConfig(200_000, 1, 1))
    b = estimate_metric("acc", ch, 1.0, SimConfig(200_000, 1, 8))
    assert a.mean != b.mean
    assert abs(a.mean - b.mean) <= 6 * math.hypot(a.stderr, b.stderr)


def test_abep_at_vanishing_snr():
    ch = ScChannel.from_lists([2.0], [5.0], [1e-9])
    est = estimate_metric("abep", ch, 1.0, SimConfig(10_000))
    assert abs(est.mean - 0.5) <= max(3 * est.stderr, 1e-4)


def test_adp_constant_at_zero_threshold():
    ch = ScChannel.from_lists([2.0], [5.0], [1.0])
    est = estimate_metric("adp", ch, EdParams(3, 0.0), SimConfig(5000))
    assert est.mean == 1.0 and est.stderr == 0.0


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_abep_matches_analytic(seed):
    ch = ScChannel.from_lists([1.0, 1.5], [5.0, 5.0], [3.0, 3.0])
    est = estimate_metric("abep", ch, 1.0, SimConfig(400_000, seed, 4))
    assert abs(est.mean - abep_foxh(ch).value) <= 4 * est.stderr


def test_functional_values():
    g = np.array([0.0, 1.0, 10.0])
    assert np.allclose(functional("mgf", 0.5)(g), np.exp(-0.5 * g))
    assert np.allclose(functional("acc", 2.0)(g), 2.0 * np.log2(1 + g))
    lam = lambda_for_pf(2, 0.1)
    pd = functional("adp", EdParams(2, lam))(g)
    miss = functional("adp-complement", EdParams(2, lam))(g)
    assert np.allclose(pd + miss, 1.0)
    assert pd[0] == pytest.approx(0.1, rel=1e-10)
    with pytest.raises(ValueError):
        functional("ber", 1.0)


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv("SCFOX_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("SCFOX_THREADS")
    assert default_threads() >= 1
