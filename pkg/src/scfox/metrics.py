"""Average performance metrics of selection combining.

Every metric is an average of a conditional functional over the maximum
SNR.  Two independent paths are provided: direct quadrature against the
product-rule density (the reference) and the multiple Mellin-Barnes
representation.  For the detection metrics the complements ``1 - P_d`` and
``1 - A`` are computed directly, since they are what becomes small.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from . import kernels
from .channel import sc_pdf_product_rule
from .mellin import InfeasibleContourError, evaluate, feasible_contour
from .special import gaussian_q, marcum_p, upper_inc_gamma_reg

log = logging.getLogger(__name__)

METHODS = ("fox-h", "quadrature", "monte-carlo")


@dataclass(frozen=True)
class MetricEstimate:
    value: float
    abs_error: float
    method: str
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EdParams:
    """Energy detector: time-bandwidth product ``u`` and threshold ``lam``."""
    u: int
    lam: float

    def __post_init__(self):
        if int(self.u) != self.u or self.u < 1:
            raise ValueError("u must be an integer >= 1")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lam must be finite and >= 0")
        object.__setattr__(self, "u", int(self.u))
        object.__setattr__(self, "lam", float(self.lam))


# ---------------------------------------------------------------------------
# quadrature against the product-rule density
# ---------------------------------------------------------------------------

_GL_X, _GL_W = roots_legendre(16)


def _log_space_integrand(ch, func):
    def h(x):
        g = np.exp(x)
        return func(g) * sc_pdf_product_rule(ch, g) * g
    return h


def expect(ch, func, rtol=1e-12, rel_floor=1e-20, max_panels=1 << 14):
    """E[func(gamma)] for the maximum SNR, by composite Gauss-Legendre in ln(gamma).

    The integration range is found by scanning the integrand on a coarse
    grid and keeping the region above ``rel_floor`` times its peak; the
    panel count doubles until two levels agree to ``rtol``.  Returns
    (value, error estimate, number of nodes).  ``func`` must be vectorised.
    """
    h = _log_space_integrand(ch, func)
    grid = np.arange(-160.0, 300.0, 0.5)
    with np.errstate(over="ignore", under="ignore"):
        vals = np.abs(h(grid))
    peak = vals.max()
    if not np.isfinite(peak):
        raise ArithmeticError("integrand is not finite on the scan grid")
    if peak == 0:
        return 0.0, 0.0, grid.size
    above = np.nonzero(vals > rel_floor * peak)[0]
    lo = grid[max(above[0] - 1, 0)]
    hi = grid[min(above[-1] + 1, grid.size - 1)]
    # tails outside [lo, hi]: bounded by the boundary values over a unit decay length
    tail = 20.0 * (vals[max(above[0] - 1, 0)] + vals[min(above[-1] + 1, grid.size - 1)])

    panels = max(8, int(math.ceil(hi - lo)))
    prev = None
    while True:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        w = (half[:, None] * _GL_W[None, :]).ravel()
        with np.errstate(over="ignore", under="ignore"):
            value = float(np.dot(w, h(x)))
        if prev is not None:
            err = abs(value - prev)
            if err <= rtol * abs(value) or panels >= max_panels:
                if err > rtol * abs(value):
                    log.warning("quadrature stopped at %d panels with relative change %.2e",
                                panels, err / abs(value) if value else err)
                return value, err + tail + 4 * np.finfo(float).eps * abs(value), x.size
        prev = value
        panels *= 2


def _quad_estimate(ch, func, rtol=1e-12):
    value, err, nodes = expect(ch, func, rtol=rtol)
    return MetricEstimate(value, err, "quadrature", {"nodes": nodes})


# ---------------------------------------------------------------------------
# Mellin-Barnes evaluation
# ---------------------------------------------------------------------------

def _check_dimension(ch, limit=3):
    if ch.L > limit:
        raise ValueError(f"Mellin-Barnes path supports at most {limit} branches, got {ch.L}")


def _mb(integrand, tol):
    contour = feasible_contour(integrand, strategy="saddle", tol=tol)
    res = evaluate(integrand, contour, tol=0.0, rtol=tol)
    if not res.converged:
        log.warning("Mellin-Barnes evaluation not converged (estimate %.2e, value %.3e)",
                    res.abs_error_estimate, res.value)
    return res


def _mb_estimate(results, weights):
    value = sum(w * r.value for w, r in zip(weights, results))
    err = sum(abs(w) * r.abs_error_estimate for w, r in zip(weights, results))
    detail = {"nodes": sum(r.nodes_used for r in results),
              "converged": all(r.converged for r in results),
              "dimension": None}
    return value, err, detail


# ---------------------------------------------------------------------------
# ABEP
# ---------------------------------------------------------------------------

def _check_rho(rho):
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError("rho must be positive and finite")


def abep_quadrature(ch, rho=1.0, rtol=1e-12):
    """Average of Q(sqrt(2 rho gamma)); rho = 1 for BPSK, 0.5 for BFSK."""
    _check_rho(rho)
    return _quad_estimate(ch, lambda g: gaussian_q(np.sqrt(2.0 * rho * g)), rtol=rtol)


def abep_foxh(ch, rho=1.0, tol=1e-10):
    _check_rho(rho)
    _check_dimension(ch)
    res = _mb(kernels.abep_integrand(ch, rho), tol)
    value, err, detail = _mb_estimate([res], [1.0])
    detail["dimension"] = ch.L
    return MetricEstimate(value, err, "fox-h", detail)


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------

def acc_quadrature(ch, bandwidth=1.0, rtol=1e-12):
    """Average capacity (B / ln 2) E[ln(1 + gamma)]; bits/s/Hz when bandwidth = 1.

    The tail of the integrand decays like ln(gamma) gamma^-m_s,min, so the
    scan range in ln(gamma) extends far enough for m_s down to about 0.1.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    ms_min = min(b.m_s for b in ch.branches)
    if ms_min < 0.1:
        raise ArithmeticError(f"capacity tail too heavy for quadrature (m_s = {ms_min})")
    scale = bandwidth / math.log(2.0)
    return _quad_estimate(ch, lambda g: scale * np.log1p(g), rtol=rtol)


def acc_foxh(ch, bandwidth=1.0, tol=1e-10):
    """Average capacity from the Mellin-Barnes kernel Gamma(s) Gamma(1 - s).

    Summed over the 2^L - 1 branch subsets of :func:`kernels.subset_terms`.
    Should a contour with m_i < sigma_i < m_i + m_si and
    Omega < sum sigma < Omega + 1 not exist, the quadrature path is used
    instead and a warning is logged.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    _check_dimension(ch)
    try:
        results = [_mb(kernels.acc_integrand(sub, bandwidth), tol)
                   for sub in kernels.subset_terms(ch)]
    except InfeasibleContourError as exc:
        log.warning("capacity contour infeasible (%s); falling back to quadrature", exc)
        est = acc_quadrature(ch, bandwidth)
        return MetricEstimate(est.value, est.abs_error, "quadrature",
                              dict(est.detail, fallback=True))
    value, err, detail = _mb_estimate(results, [1.0] * len(results))
    detail["dimension"] = ch.L
    return MetricEstimate(value, err, "fox-h", detail)


# ---------------------------------------------------------------------------
# energy detection
# ---------------------------------------------------------------------------

def pf(ed):
    """False-alarm probability Gamma(u, lam/2) / Gamma(u)."""
    if ed.lam == 0:
        return 1.0
    return float(upper_inc_gamma_reg(ed.u, 0.5 * ed.lam))


def lambda_for_pf(u, target_pf):
    """Threshold giving false-alarm probability ``target_pf``."""
    if not 0 < target_pf < 1:
        raise ValueError("target_pf must lie in (0, 1)")

    def f(lam):
        return pf(EdParams(u, lam)) - target_pf

    hi = 2.0 * u + 2.0
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def adp_complement_semianalytic(ch, ed, rtol=1e-12):
    """1 - average detection probability by quadrature of 1 - Q_u(sqrt(2 gamma), sqrt(lam))."""
    if ed.lam == 0:
        return MetricEstimate(0.0, 0.0, "quadrature", {"nodes": 0})
    b = math.sqrt(ed.lam)
    return _quad_estimate(ch, lambda g: marcum_p(ed.u, np.sqrt(2.0 * g), b), rtol=rtol)


def adp_semianalytic(ch, ed, rtol=1e-12):
    """Average detection probability, E[Q_u(sqrt(2 gamma), sqrt(lam))]."""
    est = adp_complement_semianalytic(ch, ed, rtol)
    return MetricEstimate(1.0 - est.value, est.abs_error, est.method, est.detail)


def adp_complement_foxh(ch, ed, tol=1e-10):
    """1 - average detection probability from the (L+1)-fold Mellin-Barnes form."""
    _check_dimension(ch)
    if ed.lam == 0:
        return MetricEstimate(0.0, 0.0, "fox-h", {"nodes": 0, "dimension": 0})
    res = _mb(kernels.adp_complement_integrand(ch, ed.u, ed.lam), tol)
    value, err, detail = _mb_estimate([res], [1.0])
    detail["dimension"] = ch.L + 1
    return MetricEstimate(value, err, "fox-h", detail)


def adp_foxh(ch, ed, tol=1e-10):
    """Average detection probability; exactly 1 at lam = 0."""
    est = adp_complement_foxh(ch, ed, tol)
    return MetricEstimate(1.0 - est.value, est.abs_error, est.method, est.detail)


def auc_conditional_complement(snr, u):
    """1 - A(gamma) = sum_l w_l gamma^l exp(-gamma/2), see :func:`kernels.auc_weights`."""
    if int(u) != u or u < 1:
        raise ValueError("u must be an integer >= 1")
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be >= 0")
    weights = kernels.auc_weights(int(u))
    # term by term in log space: the polynomial alone overflows for huge gamma
    out = np.zeros_like(snr)
    with np.errstate(divide="ignore"):
        log_snr = np.log(snr)
    for l, w in enumerate(weights):
        expo = -0.5 * snr if l == 0 else l * log_snr - 0.5 * snr
        out = out + w * np.exp(expo)
    return float(out) if out.ndim == 0 else out


def auc_conditional(snr, u):
    """Area under the ROC curve of the energy detector at SNR gamma."""
    c = auc_conditional_complement(snr, u)
    return 1.0 - c


def auc_complement_quadrature(ch, u, rtol=1e-12):
    return _quad_estimate(ch, lambda g: auc_conditional_complement(g, u), rtol=rtol)


def auc_avg_quadrature(ch, u, rtol=1e-12):
    est = auc_complement_quadrature(ch, u, rtol)
    return MetricEstimate(1.0 - est.value, est.abs_error, est.method, est.detail)


def auc_complement_foxh(ch, u, tol=1e-10):
    """1 - average AUC as a weighted sum of u L-fold Mellin-Barnes integrals."""
    if int(u) != u or u < 1:
        raise ValueError("u must be an integer >= 1")
    _check_dimension(ch)
    weights = kernels.auc_weights(int(u))
    results = [_mb(kernels.auc_complement_integrand(ch, l), tol) for l in range(int(u))]
    value, err, detail = _mb_estimate(results, weights)
    detail["dimension"] = ch.L
    return MetricEstimate(value, err, "fox-h", detail)


def auc_avg_foxh(ch, u, tol=1e-10):
    est = auc_complement_foxh(ch, u, tol)
    return MetricEstimate(1.0 - est.value, est.abs_error, est.method, est.detail)


# ---------------------------------------------------------------------------
# MGF by quadrature
# ---------------------------------------------------------------------------

def mgf_quadrature(ch, s, rtol=1e-12):
    """E[exp(-s gamma)] by direct quadrature."""
    if not s > 0:
        raise ValueError("s must be > 0")
    return _quad_estimate(ch, lambda g: np.exp(-s * g), rtol=rtol)
