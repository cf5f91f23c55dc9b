"""Fisher-Snedecor F branch statistics and the selection-combining maximum.

The SNR of one branch is ``gamma = (G1 / G2) / Xi`` with ``G1 ~ Gamma(m)``,
``G2 ~ Gamma(m_s)`` and ``Xi = m / (m_s * gamma_bar)``, so ``Xi * gamma`` is
beta-prime(m, m_s).  ``gamma_bar`` is therefore a scale parameter; the mean
is ``gamma_bar * m_s / (m_s - 1)`` and is infinite for ``m_s <= 1``.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from . import kernels
from .mellin import EvalResult, evaluate, feasible_contour
from .special import AccuracyError, gauss_2f1_neg, ibeta_pair

log = logging.getLogger(__name__)


class ConsistencyError(ArithmeticError):
    """The two closed forms of the branch CDF disagree."""


@dataclass(frozen=True)
class BranchParams:
    m: float
    m_s: float
    gamma_bar: float

    def __post_init__(self):
        for name in ("m", "m_s", "gamma_bar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def xi(self):
        return self.m / (self.m_s * self.gamma_bar)

    def mean_snr(self):
        """E[gamma], or inf when m_s <= 1."""
        return self.gamma_bar * self.m_s / (self.m_s - 1.0) if self.m_s > 1 else math.inf


@dataclass(frozen=True)
class ScChannel:
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ValueError("a channel needs at least one branch")
        for b in self.branches:
            if not isinstance(b, BranchParams):
                raise TypeError("branches must be BranchParams")

    @classmethod
    def from_lists(cls, m, m_s, gamma_bar):
        """Build from per-branch sequences; scalars are broadcast."""
        m, m_s, gamma_bar = np.broadcast_arrays(np.atleast_1d(m), np.atleast_1d(m_s),
                                                np.atleast_1d(gamma_bar))
        return cls(tuple(BranchParams(float(a), float(b), float(c))
                         for a, b, c in zip(m, m_s, gamma_bar)))

    @property
    def L(self):
        return len(self.branches)

    @property
    def omega(self):
        return sum(b.m for b in self.branches)

    def scaled(self, factor):
        """Same channel with every gamma_bar multiplied by ``factor``."""
        return ScChannel(tuple(BranchParams(b.m, b.m_s, b.gamma_bar * factor)
                               for b in self.branches))


def _check_snr(snr):
    snr = np.asarray(snr, dtype=float)
    if np.any(np.isnan(snr)) or np.any(snr < 0):
        raise ValueError("snr must be >= 0")
    return snr


def _branch_cdf_beta(p, snr):
    t = p.xi * snr
    return ibeta_pair(t / (1.0 + t), 1.0 / (1.0 + t), p.m, p.m_s)


def branch_cdf_hyp(p, snr):
    """CDF in hypergeometric form, (Xi g)^m 2F1(m + m_s, m; 1 + m; -Xi g) / (m B(m, m_s))."""
    if snr == 0:
        return 0.0
    t = p.xi * snr
    lead = p.m * math.log(t) - math.log(p.m) - betaln(p.m, p.m_s)
    return math.exp(lead) * gauss_2f1_neg(p.m + p.m_s, p.m, 1.0 + p.m, -t)


def branch_cdf(p, snr, check=True, check_tol=1e-10):
    """F(gamma) = I_x(m, m_s) with x = Xi g / (1 + Xi g).

    With ``check`` (scalar input only) the hypergeometric form is also
    evaluated; a disagreement beyond ``check_tol`` raises ConsistencyError.
    The check is skipped when the series exceeds its term budget, which
    happens only for Xi*gamma so large that the CDF is within rounding of 1.
    """
    snr = _check_snr(snr)
    out = _branch_cdf_beta(p, snr)
    if check and snr.ndim == 0:
        try:
            alt = branch_cdf_hyp(p, float(snr))
        except AccuracyError:
            log.debug("hypergeometric cross-check skipped at snr=%g", float(snr))
        else:
            if abs(alt - float(out)) > check_tol:
                raise ConsistencyError(f"CDF forms disagree: beta {float(out)!r} vs 2F1 {alt!r}")
    return float(out) if snr.ndim == 0 else out


def branch_pdf(p, snr):
    """f(gamma) = Xi^m g^(m-1) (1 + Xi g)^-(m+m_s) / B(m, m_s)."""
    snr = _check_snr(snr)
    if np.any(snr == 0):
        if p.m < 1:
            raise ZeroDivisionError("density is singular at gamma = 0 when m < 1")
    t = p.xi * snr
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = (p.m * math.log(p.xi) + (p.m - 1.0) * np.log(snr)
                - (p.m + p.m_s) * np.log1p(t) - betaln(p.m, p.m_s))
    out = np.exp(logf)
    if p.m == 1:
        out = np.where(snr == 0, p.xi / math.exp(betaln(1.0, p.m_s)), out)
    return float(out) if out.ndim == 0 else out


def sc_cdf(ch, snr):
    """CDF of the maximum: product of branch CDFs."""
    snr = _check_snr(snr)
    out = np.ones_like(snr)
    for b in ch.branches:
        out = out * _branch_cdf_beta(b, snr)
    return float(out) if out.ndim == 0 else out


def sc_pdf_product_rule(ch, snr):
    """sum_i f_i prod_{j != i} F_j."""
    snr = _check_snr(snr)
    cdfs = [_branch_cdf_beta(b, snr) for b in ch.branches]
    total = np.zeros_like(snr)
    for i, b in enumerate(ch.branches):
        term = branch_pdf(b, snr)
        for j, c in enumerate(cdfs):
            if j != i:
                term = term * c
        total = total + term
    return float(total) if np.ndim(total) == 0 else total


def _check_dimension(ch, limit=3):
    if ch.L > limit:
        raise ValueError(f"Mellin-Barnes path supports at most {limit} branches, got {ch.L}")


def _run(integrand, tol):
    contour = feasible_contour(integrand, strategy="saddle", tol=tol)
    return evaluate(integrand, contour, tol=tol, rtol=tol)


# Branches whose CDF at gamma exceeds this use the right-shifted contour.
TAIL_SWITCH = 0.5


def _with_tail_split(builder, ch, snr, tol, empty_value):
    """Evaluate a CDF-type kernel, moving contours right for branches in their tail.

    With every contour left of the pole at u_i = m_i the integral equals the
    product of CDFs; once Xi_i * gamma is large that product is close to its
    limit and the contour sum cancels to rounding level.  Moving the contour
    of branch i past the pole subtracts its residue, which is the same
    kernel for the channel without branch i.  Repeating this for the set T
    of tail branches gives

        K(ch) = sum over A subset of T of K(ch without A; T minus A shifted),

    in which every term has the size of the survival probabilities it
    represents.  An empty channel contributes ``empty_value``.
    """
    tail = [i for i, b in enumerate(ch.branches) if _branch_cdf_beta(b, snr) > TAIL_SWITCH]
    value = 0.0
    err = 0.0
    nodes = 0
    converged = True
    imag = 0.0
    for r in range(len(tail) + 1):
        for removed in itertools.combinations(tail, r):
            keep = [i for i in range(ch.L) if i not in removed]
            if not keep:
                value += empty_value
                continue
            sub = ScChannel(tuple(ch.branches[i] for i in keep))
            shifted = tuple(k for k, i in enumerate(keep) if i in tail)
            res = _run(builder(sub, snr, shifted), tol)
            value += res.value
            err += res.abs_error_estimate
            nodes += res.nodes_used
            converged = converged and res.converged
            imag += res.imag
    return EvalResult(value, err, nodes, converged, imag)


def sc_pdf_foxh(ch, snr, tol=1e-10):
    """PDF of the maximum from its L-fold Mellin-Barnes representation.

    ``tol`` is used as both an absolute and a relative target.
    """
    if not snr > 0:
        raise ValueError("snr must be > 0")
    _check_dimension(ch)
    return _with_tail_split(kernels.pdf_integrand, ch, float(snr), tol, 0.0)


def sc_cdf_foxh(ch, snr, tol=1e-10):
    """CDF of the maximum from its L-fold Mellin-Barnes representation."""
    if not snr > 0:
        raise ValueError("snr must be > 0")
    _check_dimension(ch)
    return _with_tail_split(kernels.cdf_integrand, ch, float(snr), tol, 1.0)


def sc_mgf(ch, s, tol=1e-10):
    """E[exp(-s gamma)] of the maximum via its Mellin-Barnes representation.

    For small ``s`` the power terms (Xi_i / s)^-u_i oscillate quickly and
    many nodes are needed; a warning is logged below s = 1e-2.
    """
    if not s > 0:
        raise ValueError("s must be > 0")
    _check_dimension(ch)
    if s < 1e-2:
        log.warning("MGF at s=%g: slowly decaying integrand, expect a large node count", s)
    return _run(kernels.mgf_integrand(ch, float(s)), tol)
