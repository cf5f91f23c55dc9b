"""Mellin-Barnes integrands for selection combining over F fading.

Every statistic of the maximum SNR shares the same per-branch factor

    Gamma(u_i) Gamma(m_i + m_si - u_i) Gamma(m_i - u_i) / Gamma(1 + m_i - u_i)

times ``Xi_i^{-u_i}`` and the constant ``prod Xi_i^m_i / (Gamma(m_i) Gamma(m_si))``.
What changes between statistics is a factor in ``s = Omega - sum u_i``
coming from the Mellin transform of the conditional metric.

In each builder below the ratio Gamma(1 + s) / Gamma(s) produced by
differentiating the CDF is kept as the linear factor ``s`` or folded into
the neighbouring gamma, so that it adds no pole constraint.
"""

import itertools
import math

from scipy.special import gammaln

from .mellin import GammaFactor, LinearFactor, MellinIntegrand, PowerTerm


def _unit(k, d):
    return tuple(1.0 if j == k else 0.0 for j in range(d))


def _neg_unit(k, d):
    return tuple(-1.0 if j == k else 0.0 for j in range(d))


def log_branch_constant(ch):
    """log of prod_i Xi_i^m_i / (Gamma(m_i) Gamma(m_si))."""
    return sum(b.m * math.log(b.xi) - gammaln(b.m) - gammaln(b.m_s) for b in ch.branches)


def _branch_parts(ch, d, arg_scale=1.0, shifted=()):
    """Per-branch factors and Xi_i * arg_scale power terms on variables 0..L-1.

    Gamma(m - u) / Gamma(1 + m - u) is the simple pole 1 / (m - u).  For
    branches in ``shifted`` it is written as -(u - m)^-1, which lets the
    contour pass to the right of u = m (m < sigma < m + m_s).  The integrand
    is the same function; the caller accounts for the crossed residue.
    Returns the factor lists and the sign collected from the rewriting.
    """
    num, den, lin, powers = [], [], [], []
    sign = 1.0
    for i, b in enumerate(ch.branches):
        e, ne = _unit(i, d), _neg_unit(i, d)
        num += [GammaFactor(0.0, e), GammaFactor(b.m + b.m_s, ne)]
        if i in shifted:
            lin.append(LinearFactor(-b.m, e, -1))
            sign = -sign
        else:
            num.append(GammaFactor(b.m, ne))
            den.append(GammaFactor(1.0 + b.m, ne, "denominator"))
        powers.append(PowerTerm(b.xi * arg_scale, e))
    return num, den, lin, powers, sign


def _s_weights(ch, d, sign=-1.0):
    # weights of s = Omega - sum u_i over the branch variables
    return tuple(sign if j < ch.L else 0.0 for j in range(d))


def cdf_integrand(ch, snr, shifted=()):
    """CDF of the maximum; branches in ``shifted`` use a contour right of u_i = m_i."""
    d = ch.L
    num, den, lin, powers, sign = _branch_parts(ch, d, snr, shifted)
    return MellinIntegrand(d, num, den, powers, lin, prefactor=sign,
                           log_prefactor=log_branch_constant(ch) + ch.omega * math.log(snr))


def pdf_integrand(ch, snr, shifted=()):
    """PDF of the maximum; see :func:`cdf_integrand` for ``shifted``."""
    d = ch.L
    num, den, lin, powers, sign = _branch_parts(ch, d, snr, shifted)
    lin.append(LinearFactor(ch.omega, _s_weights(ch, d), 1))
    return MellinIntegrand(d, num, den, powers, lin, prefactor=sign,
                           log_prefactor=log_branch_constant(ch) + (ch.omega - 1.0) * math.log(snr))


def mgf_integrand(ch, s):
    """E[exp(-s gamma)] as s times the Laplace transform of the CDF."""
    d = ch.L
    num, den, _, powers, _ = _branch_parts(ch, d, 1.0 / s)
    num.append(GammaFactor(1.0 + ch.omega, _s_weights(ch, d)))
    return MellinIntegrand(d, num, den, powers,
                           log_prefactor=log_branch_constant(ch) - ch.omega * math.log(s))


def abep_integrand(ch, rho):
    """Average of Q(sqrt(2 rho gamma)).

    The Mellin transform of the conditional error probability is
    Gamma(s) Gamma(s + 1/2) / (2 sqrt(pi) Gamma(1 + s)) rho^-s; with the
    density's factor s this leaves Gamma(1/2 + s).
    """
    d = ch.L
    num, den, _, powers, _ = _branch_parts(ch, d, 1.0 / rho)
    num.append(GammaFactor(0.5 + ch.omega, _s_weights(ch, d)))
    log_pre = (log_branch_constant(ch) - math.log(2.0 * math.sqrt(math.pi))
               - ch.omega * math.log(rho))
    return MellinIntegrand(d, num, den, powers, log_prefactor=log_pre)


def acc_integrand(ch, bandwidth=1.0):
    """Average of (B / ln 2) ln(1 + gamma), one subset term.

    The Mellin transform of ln(1 + g) is pi / (s sin(pi s)) = Gamma(s) Gamma(1 - s) / s,
    but only on the strip -1 < Re s < 0.  Reaching that strip needs
    sum sigma_i > Omega, so every branch contour must pass to the right of
    its pole at u_i = m_i.  The density then splits into a sum over
    nonempty branch subsets (see :func:`subset_terms`), and this builder
    returns the term for the channel ``ch`` with every branch shifted.  The
    kernel is written as Gamma(1 + s) Gamma(1 - s) / s with the linear factor
    rewritten as -(-s)^-1 so that its pole constraint reads Re s < 0.
    """
    d = ch.L
    num, den, lin, powers, sign = _branch_parts(ch, d, shifted=tuple(range(d)))
    num.append(GammaFactor(1.0 + ch.omega, _s_weights(ch, d)))
    num.append(GammaFactor(1.0 - ch.omega, _s_weights(ch, d, +1.0)))
    lin.append(LinearFactor(-ch.omega, _s_weights(ch, d, +1.0), -1))
    return MellinIntegrand(d, num, den, powers, lin,
                           prefactor=-sign * bandwidth / math.log(2.0),
                           log_prefactor=log_branch_constant(ch))


def subset_terms(ch):
    """Nonempty sub-channels whose fully shifted kernels sum to the density.

    Shifting the contour of branch i past u_i = m_i removes the residue,
    which is the kernel of the channel without branch i; applied to every
    branch this writes the density as the sum over nonempty subsets S of
    the kernel of S with all contours shifted.
    """
    out = []
    for r in range(1, ch.L + 1):
        for keep in itertools.combinations(range(ch.L), r):
            out.append(type(ch)(tuple(ch.branches[i] for i in keep)))
    return out


def auc_complement_integrand(ch, l):
    """Average of gamma^l exp(-gamma/2), using int g^(a-1) e^(-g/2) dg = Gamma(a) 2^a.

    The full complement 1 - A is a finite combination of these over l; see
    :func:`auc_weights`.
    """
    d = ch.L
    num, den, _, powers, _ = _branch_parts(ch, d, 2.0)
    num.append(GammaFactor(l + ch.omega, _s_weights(ch, d)))
    lin = [LinearFactor(ch.omega, _s_weights(ch, d), 1)]
    return MellinIntegrand(d, num, den, powers, lin,
                           log_prefactor=log_branch_constant(ch) + (l + ch.omega) * math.log(2.0))


def auc_weights(u):
    """Coefficient of E[gamma^l exp(-gamma/2)] in 1 - A(gamma), per l."""
    weights = [0.0] * u
    for k in range(u):
        for l in range(k + 1):
            weights[l] += math.comb(k + u - 1, k - l) / (2.0 ** (k + l + u) * math.factorial(l))
    return weights


def adp_complement_integrand(ch, u, lam):
    """Average of 1 - Q_u(sqrt(2 gamma), sqrt(lam)); variables u_1..u_L, r.

    Uses the Mellin transform in gamma of the noncentral chi-square CDF,

        z^u Gamma(s) / Gamma(u - s) * 1/(2 pi j) int Gamma(r) Gamma(u - s - r)
                                      / Gamma(1 + u - r) z^-r dr,   z = lam / 2,

    obtained from the Poisson-mixture form and Kummer's transformation of
    1F1.  Unlike a Bessel-function Mellin-Barnes form, this decays along
    every vertical line, so the (L+1)-fold integral converges.
    """
    if lam <= 0:
        raise ValueError("threshold must be positive; lam = 0 is handled by the caller")
    L = ch.L
    d = L + 1
    z = 0.5 * lam
    num, den, _, powers, _ = _branch_parts(ch, d)
    s_w = _s_weights(ch, d)
    plus_s = _s_weights(ch, d, +1.0)
    r = _unit(L, d)
    # Gamma(1 + s) from s * Gamma(s)
    num.append(GammaFactor(1.0 + ch.omega, s_w))
    den.append(GammaFactor(u - ch.omega, plus_s, "denominator"))
    num.append(GammaFactor(u - ch.omega, tuple(w - rr for w, rr in zip(plus_s, r))))
    num.append(GammaFactor(0.0, r))
    den.append(GammaFactor(1.0 + u, _neg_unit(L, d), "denominator"))
    powers.append(PowerTerm(z, r))
    return MellinIntegrand(d, num, den, powers,
                           log_prefactor=log_branch_constant(ch) + u * math.log(z))
