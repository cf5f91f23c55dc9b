import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scfox.channel import (BranchParams, ConsistencyError, ScChannel, branch_cdf,
                           branch_cdf_hyp, branch_pdf, sc_cdf, sc_cdf_foxh, sc_mgf,
                           sc_pdf_foxh, sc_pdf_product_rule)
from scfox.metrics import mgf_quadrature

mp.mp.dps = 30


def _mp_cdf(m, ms, gbar, g):
    xi = mp.mpf(m) / (ms * gbar)
    return mp.betainc(m, ms, 0, xi * g / (1 + xi * g), regularized=True)


def test_branch_params_validation():
    with pytest.raises(ValueError):
        BranchParams(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        BranchParams(1.0, math.inf, 1.0)
    p = BranchParams(2.0, 5.0, 4.0)
    assert p.xi == pytest.approx(0.1)
    assert p.mean_snr() == pytest.approx(5.0)
    assert BranchParams(2.0, 0.5, 1.0).mean_snr() == math.inf


def test_channel_construction():
    ch = ScChannel.from_lists([1, 2], [5, 50], [1, 10])
    assert ch.L == 2 and ch.omega == pytest.approx(3.0)
    with pytest.raises(ValueError):
        ScChannel(())
    with pytest.raises(ValueError):
        ScChannel.from_lists([1, 2], [5, 6, 7], [1, 10])


@pytest.mark.parametrize("m,ms,gbar,g", [(3.5, 50, 10, 4.0), (0.5, 0.5, 1.0, 0.3),
                                         (2.7, 5, 100, 1e3), (1.0, 0.5, 3.0, 1e-4),
                                         (0.5, 50, 2.0, 20.0)])
def test_branch_cdf_against_mpmath(m, ms, gbar, g):
    p = BranchParams(m, ms, gbar)
    ref = float(_mp_cdf(m, ms, gbar, g))
    assert branch_cdf(p, g) == pytest.approx(ref, rel=1e-12)
    assert branch_cdf_hyp(p, g) == pytest.approx(ref, rel=1e-10)


def test_branch_cdf_closed_form_m1_ms1():
    p = BranchParams(1.0, 1.0, 1.0)
    g = np.array([0.0, 0.5, 1.0, 7.0])
    assert np.allclose(branch_cdf(p, g), g / (1 + g), rtol=1e-14)


def test_branch_cdf_cross_check_raises_on_mismatch():
    p = BranchParams(2.0, 3.0, 1.0)
    with pytest.raises(ConsistencyError):
        branch_cdf(p, 0.7, check_tol=-1.0)


def test_branch_pdf_is_cdf_derivative():
    p = BranchParams(2.7, 5.0, 3.0)
    for g in (0.1, 1.0, 10.0):
        d = float(mp.diff(lambda t: _mp_cdf(2.7, 5.0, 3.0, t), g))
        assert branch_pdf(p, g) == pytest.approx(d, rel=1e-12)


def test_branch_pdf_at_zero():
    with pytest.raises(ZeroDivisionError):
        branch_pdf(BranchParams(0.5, 1.0, 1.0), 0.0)
    assert branch_pdf(BranchParams(2.0, 1.0, 1.0), 0.0) == 0.0
    p = BranchParams(1.0, 3.0, 2.0)
    assert branch_pdf(p, 0.0) == pytest.approx(p.xi * 3.0)


def test_negative_snr_rejected():
    with pytest.raises(ValueError):
        branch_cdf(BranchParams(1, 1, 1), -1.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0.3, 8), st.floats(0.3, 60), st.floats(0.05, 100)),
                min_size=1, max_size=4),
       st.floats(1e-3, 1e3))
def test_sc_cdf_is_product_and_monotone(branches, g):
    ch = ScChannel(tuple(BranchParams(*b) for b in branches))
    prod = math.prod(branch_cdf(b, g, check=False) for b in ch.branches)
    assert sc_cdf(ch, g) == pytest.approx(prod, rel=1e-14, abs=1e-300)
    assert 0.0 <= sc_cdf(ch, g) <= sc_cdf(ch, 2 * g) <= 1.0


@pytest.mark.parametrize("m,ms,gbar", [((3.5, 4.5, 5.5), (50,) * 3, (10,) * 3),
                                       ((0.5, 1.0, 1.5), (0.5,) * 3, (1, 0.5, 2)),
                                       ((2.7, 3.2), (5, 5), (100, 50))])
@pytest.mark.parametrize("g", [1e-3, 0.3, 5.0, 300.0, 1e4])
def test_foxh_density_and_cdf(m, ms, gbar, g):
    ch = ScChannel.from_lists(m, ms, gbar)
    pdf = sc_pdf_foxh(ch, g)
    assert pdf.value == pytest.approx(sc_pdf_product_rule(ch, g), rel=1e-9)
    cdf = sc_cdf_foxh(ch, g)
    assert cdf.value == pytest.approx(sc_cdf(ch, g), rel=1e-9)


def test_pdf_product_rule_integrates_to_one():
    ch = ScChannel.from_lists([0.5, 2.0], [0.5, 50.0], [1.0, 5.0])
    total = mp.quad(lambda x: mp.e ** x * sc_pdf_product_rule(ch, float(mp.e ** x)),
                    [-200, -10, 0, 10, 100, 700])
    assert float(total) == pytest.approx(1.0, abs=1e-10)


def test_foxh_dimension_limit():
    ch = ScChannel.from_lists([1] * 4, [5] * 4, [1] * 4)
    with pytest.raises(ValueError):
        sc_pdf_foxh(ch, 1.0)


@pytest.mark.parametrize("s", [1e-2, 0.5, 3.0])
def test_mgf_against_quadrature(s):
    ch = ScChannel.from_lists([1.0, 2.0], [5.0, 0.5], [2.0, 1.0])
    assert sc_mgf(ch, s).value == pytest.approx(mgf_quadrature(ch, s).value, rel=1e-9)


def test_mgf_single_branch_against_mpmath():
    m, ms, gbar, s = 2.0, 5.0, 3.0, 0.4
    xi = mp.mpf(m) / (ms * gbar)
    f = lambda g: xi ** m * g ** (m - 1) * (1 + xi * g) ** (-m - ms) / mp.beta(m, ms)
    ref = mp.quad(lambda g: mp.e ** (-s * g) * f(g), [0, 1, 10, mp.inf])
    ch = ScChannel.from_lists([m], [ms], [gbar])
    assert sc_mgf(ch, s).value == pytest.approx(float(ref), rel=1e-10)


def test_mgf_limits():
    ch = ScChannel.from_lists([1.0, 1.5], [5.0, 5.0], [1.0, 1.0])
    assert sc_mgf(ch, 1e-3).value == pytest.approx(1.0, abs=0.02)
    assert sc_mgf(ch, 5.0).value < sc_mgf(ch, 0.5).value
