import math

import numpy as np
import pytest
from scipy.special import gamma, gammainc

from scfox.mellin import (ContourSpec, DimensionError, GammaFactor, InfeasibleContourError,
                          LinearFactor, MellinIntegrand, PowerTerm, contour_at, decay_rate,
                          evaluate, feasible_contour, log_integrand)


def _run(integrand, strategy="center", rule="trapezoid", tol=1e-12):
    contour = feasible_contour(integrand, strategy=strategy, tol=tol, rule=rule)
    return evaluate(integrand, contour, tol=tol, rtol=tol)


def exp_integrand(x):
    return MellinIntegrand(1, [GammaFactor(0.0, (1,))], power_terms=[PowerTerm(x, (1,))])


@pytest.mark.parametrize("x", [0.01, 0.5, 2.0, 10.0])
def test_gamma_kernel_is_exponential(x):
    res = _run(exp_integrand(x))
    assert res.converged
    assert res.value == pytest.approx(math.exp(-x), rel=1e-10)
    assert abs(res.value - math.exp(-x)) <= max(res.abs_error_estimate, 1e-14)


def test_beta_prime_kernel():
    a, x = 2.5, 3.0
    f = MellinIntegrand(1, [GammaFactor(0.0, (1,)), GammaFactor(a, (-1,))],
                        power_terms=[PowerTerm(x, (1,))])
    assert _run(f).value == pytest.approx(gamma(a) * (1 + x) ** -a, rel=1e-11)


def test_coupled_two_dimensional_kernel():
    c, x, y = 3.2, 0.7, 2.5
    f = MellinIntegrand(2, [GammaFactor(0.0, (1, 0)), GammaFactor(0.0, (0, 1)),
                            GammaFactor(c, (-1, -1))],
                        power_terms=[PowerTerm(x, (1, 0)), PowerTerm(y, (0, 1))])
    ref = gamma(c) * (1 + x + y) ** -c
    for rule in ("trapezoid", "gauss-legendre-panels"):
        assert _run(f, rule=rule, tol=1e-10).value == pytest.approx(ref, rel=1e-9)


def test_linear_factor_gives_lower_incomplete_gamma():
    # residues at u = -k give sum (-x)^k / (k! (a + k)) = x^-a gamma(a, x)
    a, x = 1.7, 2.3
    f = MellinIntegrand(1, [GammaFactor(0.0, (1,))], power_terms=[PowerTerm(x, (1,))],
                        linear_factors=[LinearFactor(a, (-1,), -1)])
    ref = x ** -a * gammainc(a, x) * gamma(a)
    assert _run(f).value == pytest.approx(ref, rel=1e-11)


def test_prefactors():
    base = exp_integrand(1.0)
    scaled = MellinIntegrand(1, base.numerator_factors, power_terms=base.power_terms,
                             prefactor=-2.0, log_prefactor=math.log(3.0))
    assert _run(scaled).value == pytest.approx(-6.0 * math.exp(-1.0), rel=1e-11)


def test_contour_independence():
    f = exp_integrand(1.5)
    values = [evaluate(f, contour_at(f, [s], 1e-12), tol=1e-12, rtol=1e-12).value
              for s in (0.2, 1.0, 3.0, 6.0)]
    assert np.ptp(values) < 1e-12


def test_infeasible_contour():
    # Gamma(u) Gamma(-1 - u) has no separating line
    f = MellinIntegrand(1, [GammaFactor(0.0, (1,)), GammaFactor(-1.0, (-1,))])
    with pytest.raises(InfeasibleContourError):
        feasible_contour(f)
    g = exp_integrand(1.0)
    with pytest.raises(InfeasibleContourError):
        contour_at(g, [-0.5])
    with pytest.raises(InfeasibleContourError):
        evaluate(g, ContourSpec((-0.5,)))


def test_dimension_limit():
    d = 6
    f = MellinIntegrand(d, [GammaFactor(0.0, tuple(1 if i == k else 0 for i in range(d)))
                            for k in range(d)])
    with pytest.raises(DimensionError):
        feasible_contour(f)


def test_decay_rate_counts_gamma_factors():
    f = MellinIntegrand(2, [GammaFactor(0.0, (1, 0)), GammaFactor(1.0, (1, 1))],
                        denominator_factors=[GammaFactor(2.0, (0, 1), "denominator")])
    assert decay_rate(f) == pytest.approx([math.pi, 0.0])


def test_log_integrand_matches_direct_product():
    f = MellinIntegrand(1, [GammaFactor(0.5, (1,))],
                        denominator_factors=[GammaFactor(1.0, (1,), "denominator")],
                        power_terms=[PowerTerm(2.0, (1,))])
    u = np.array([[0.3 + 1.2j]])
    direct = gamma(0.5 + u[0, 0]) / gamma(1.0 + u[0, 0]) * 2.0 ** (-u[0, 0])
    assert np.exp(log_integrand(f, u))[0] == pytest.approx(direct, rel=1e-12)


def test_validation_of_types():
    with pytest.raises(ValueError):
        GammaFactor(0.0, (1,), "middle")
    with pytest.raises(ValueError):
        PowerTerm(-1.0, (1,))
    with pytest.raises(ValueError):
        MellinIntegrand(2, [GammaFactor(0.0, (1, 0))])  # u_2 never appears
    with pytest.raises(ValueError):
        ContourSpec((0.5,), nodes_per_dim=2)
