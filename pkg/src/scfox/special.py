"""Scalar special functions used throughout the package.

Every function accepts scalars or numpy arrays (broadcasting where it makes
sense) and returns the same kind of object.  Series and continued fractions
stop on a computed remainder bound rather than a fixed term count.
"""

import math

import numpy as np
from scipy.special import betaln, erfc, gammainc, gammaln, logsumexp

__all__ = [
    "PoleError",
    "AccuracyError",
    "ln_gamma_complex",
    "reg_incomplete_beta",
    "gauss_2f1_neg",
    "gaussian_q",
    "upper_inc_gamma_reg",
    "lower_inc_gamma_reg",
    "marcum_q",
]

_EPS = np.finfo(float).eps


class PoleError(ValueError):
    """Argument sits on (or within 1e-12 of) a pole of the gamma function."""


class AccuracyError(ArithmeticError):
    """A series did not reach its tolerance within the allowed number of terms.

    The best available value is kept in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def _as_output(values, scalar):
    return values.reshape(-1)[0] if scalar else values


# ---------------------------------------------------------------------------
# complex log-gamma
# ---------------------------------------------------------------------------

# B_{2k} / (2k (2k-1)), k = 1..10
_STIRLING_COEFFS = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
])
_STIRLING_MIN = 15.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _stirling(w):
    # valid for Re w >= 0 and |w| >= _STIRLING_MIN; error below 1e-22
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    for coeff in _STIRLING_COEFFS[::-1]:
        series = series * inv2 + coeff
    return (w - 0.5) * np.log(w) - w + _HALF_LOG_2PI + series * inv


def _lngamma_right(z):
    """log-gamma for Re z >= 0.5, by upward shift and Stirling."""
    shift = np.where(np.abs(z) >= _STIRLING_MIN, 0,
                     np.ceil(np.maximum(_STIRLING_MIN - z.real, 0.0)))
    shift = shift.astype(int)
    acc = np.zeros_like(z)
    for k in range(int(shift.max(initial=0))):
        active = shift > k
        acc[active] += np.log(z[active] + k)
    return _stirling(z + shift) - acc


def _log_sinpi(z):
    """Principal log of sin(pi z)."""
    x = z.real
    y = z.imag
    # reduce x into [-1, 1) so sin/cos keep full precision
    xr = x - 2.0 * np.floor(0.5 * (x + 1.0))
    out = np.empty_like(z)
    small = np.abs(y) <= 20.0
    zs = xr[small] + 1j * y[small]
    out[small] = np.log(np.sin(np.pi * zs))
    big = ~small
    if np.any(big):
        ay = np.abs(y[big])
        zb = xr[big] + 1j * ay
        # sin(pi z) = (i/2) e^{pi y - i pi x} (1 - e^{2 i pi z}) for y > 0
        val = (np.pi * ay - math.log(2.0)) + 1j * (0.5 * np.pi - np.pi * xr[big])
        val = val + np.log1p(-np.exp(2j * np.pi * zb))
        im = np.angle(np.exp(1j * val.imag))
        val = val.real + 1j * im
        out[big] = np.where(y[big] < 0, np.conj(val), val)
    return out


def ln_gamma_complex(z):
    """Logarithm of the gamma function for complex arguments.

    Returns the branch that is analytic off the negative real axis (the one
    produced by ``scipy.special.loggamma`` and ``mpmath.loggamma``).  Uses the
    reflection formula for ``Re z < 0.5`` and a shifted Stirling series
    otherwise.

    Raises
    ------
    PoleError
        If any argument lies within 1e-12 of a non-positive integer.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if not np.all(np.isfinite(z)):
        raise ValueError("ln_gamma_complex: non-finite argument")
    nearest = np.round(z.real)
    pole = (nearest <= 0) & (np.abs(z - nearest) < 1e-12)
    if np.any(pole):
        raise PoleError(f"gamma pole at z={z[pole][0]}")

    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lngamma_right(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        branch = np.copysign(2.0 * np.pi, zl.imag) * np.floor(0.5 * zl.real + 0.25)
        out[left] = (_LOG_PI + 1j * branch) - _log_sinpi(zl) - _lngamma_right(1.0 - zl)
    return _as_output(out, scalar)


# ---------------------------------------------------------------------------
# incomplete beta
# ---------------------------------------------------------------------------

_TINY = 1e-300


def _betacf(x, a, b, maxiter=20000):
    """Modified Lentz evaluation of the incomplete-beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, maxiter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < 4 * _EPS
        if done.all():
            return h
    raise AccuracyError("incomplete beta continued fraction did not converge", h)


def reg_incomplete_beta(x, a, b):
    """Regularized incomplete beta function I_x(a, b).

    Continued fraction in whichever tail converges fastest; the other tail is
    obtained by the symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
    """
    scalar = all(np.ndim(v) == 0 for v in (x, a, b))
    x, a, b = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, a, b))
    x, a, b = np.broadcast_arrays(x, a, b)
    if np.any(~np.isfinite(x)) or np.any((x < 0) | (x > 1)):
        raise ValueError("reg_incomplete_beta: x must lie in [0, 1]")
    if np.any(~(a > 0)) or np.any(~(b > 0)) or np.any(~np.isfinite(a + b)):
        raise ValueError("reg_incomplete_beta: a and b must be positive and finite")

    return _as_output(ibeta_pair(x, 1.0 - x, a, b), scalar)


def ibeta_pair(x, y, a, b):
    """I_x(a, b) given both x and y = 1 - x, so callers can pass an exact 1 - x."""
    x, y, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, a, b)))
    out = np.empty(x.shape)
    out[x <= 0] = 0.0
    out[y <= 0] = 1.0
    inner = (x > 0) & (y > 0)
    if np.any(inner):
        xi, yi, ai, bi = x[inner], y[inner], a[inner], b[inner]
        swap = xi > (ai + 1.0) / (ai + bi + 2.0)
        xs = np.where(swap, yi, xi)
        ys = np.where(swap, xi, yi)
        as_ = np.where(swap, bi, ai)
        bs = np.where(swap, ai, bi)
        log_front = as_ * np.log(xs) + bs * np.log(ys) - betaln(as_, bs) - np.log(as_)
        val = np.exp(log_front) * _betacf(xs, as_, bs)
        out[inner] = np.where(swap, 1.0 - val, val)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1 for non-positive argument
# ---------------------------------------------------------------------------

def _hyp_series(p, q, c, w, max_terms, chunk=4096):
    """Sum of (p)_k (q)_k / ((c)_k k!) w^k for 0 <= w < 1, with tail bound."""
    if w == 0.0:
        return 1.0
    total = 0.0
    term = 1.0
    k0 = 0
    big_a = max(0.0, p + q - c - 1.0)
    big_b = max(0.0, p * q - c)
    k_mono = math.sqrt(abs(c)) + 1.0
    while k0 < max_terms:
        k = np.arange(k0, k0 + chunk, dtype=float)
        ratios = (p + k) * (q + k) / ((c + k) * (k + 1.0)) * w
        terms = term * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        total += math.fsum(terms)
        term = terms[-1] * ratios[-1]
        k0 += chunk
        if k0 >= k_mono and k0 + c > 0:
            rho = w * (1.0 + (big_a * k0 + big_b) / ((c + k0) * (k0 + 1.0)))
            if rho < 1.0:
                tail = abs(term) / (1.0 - rho)
                if tail <= 1e-16 * abs(total) or term == 0.0:
                    return total + term
        if not math.isfinite(total):
            raise AccuracyError("2F1 series overflowed", total)
    raise AccuracyError(f"2F1 series not converged after {max_terms} terms", total)


def gauss_2f1_neg(a, b, c, z, max_terms=2_000_000):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    A Pfaff transformation maps z onto w = z / (z - 1) in [0, 1), where the
    power series converges.  Of the two Pfaff forms the one with
    non-negative series terms is preferred, which avoids cancellation.
    """
    if c <= 0 and float(c).is_integer():
        raise ValueError("gauss_2f1_neg: c must not be a non-positive integer")
    if z > 0:
        raise ValueError("gauss_2f1_neg: requires z <= 0")
    if z == 0:
        return 1.0
    w = z / (z - 1.0)
    log_1mz = math.log1p(-z)
    forms = [
        (a, c - b, -a * log_1mz),
        (c - a, b, -b * log_1mz),
    ]
    positive = [f for f in forms if f[0] >= 0 and f[1] >= 0 and c > 0]
    p, q, log_scale = (positive or forms)[0]
    return math.exp(log_scale) * _hyp_series(p, q, c, w, max_terms)


# ---------------------------------------------------------------------------
# Gaussian Q, incomplete gamma, Marcum Q
# ---------------------------------------------------------------------------

def gaussian_q(x):
    """Gaussian tail probability Q(x) = 0.5 erfc(x / sqrt 2)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / math.sqrt(2.0))
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def _inc_gamma_pair(u, x, maxiter=100000):
    """Return (P, Q) regularized incomplete gammas, elementwise."""
    p_out = np.empty(x.shape)
    q_out = np.empty(x.shape)
    zero = x == 0
    p_out[zero] = 0.0
    q_out[zero] = 1.0

    use_series = (~zero) & (x < u + 1.0)
    if np.any(use_series):
        xs, us = x[use_series], u[use_series]
        ap = us.copy()
        term = 1.0 / us
        total = term.copy()
        done = np.zeros(xs.shape, dtype=bool)
        for _ in range(maxiter):
            ap = ap + 1.0
            term = np.where(done, 0.0, term * xs / ap)
            total = total + term
            # remaining terms shrink at least geometrically with ratio xs/ap < 1
            ratio = xs / (ap + 1.0)
            done |= np.abs(term) * ratio / (1.0 - ratio) < _EPS * np.abs(total) * 0.5
            if done.all():
                break
        else:
            raise AccuracyError("incomplete gamma series did not converge")
        p = total * np.exp(-xs + us * np.log(xs) - gammaln(us))
        p_out[use_series] = p
        q_out[use_series] = 1.0 - p

    use_cf = (~zero) & ~use_series
    if np.any(use_cf):
        xc, uc = x[use_cf], u[use_cf]
        bb = xc + 1.0 - uc
        c = np.full(xc.shape, 1.0 / _TINY)
        d = 1.0 / bb
        h = d.copy()
        done = np.zeros(xc.shape, dtype=bool)
        for i in range(1, maxiter + 1):
            an = -i * (i - uc)
            bb = bb + 2.0
            d = an * d + bb
            d = np.where(np.abs(d) < _TINY, _TINY, d)
            c = bb + an / c
            c = np.where(np.abs(c) < _TINY, _TINY, c)
            d = 1.0 / d
            delta = d * c
            h = np.where(done, h, h * delta)
            done |= np.abs(delta - 1.0) < 4 * _EPS
            if done.all():
                break
        else:
            raise AccuracyError("incomplete gamma continued fraction did not converge")
        q = np.exp(-xc + uc * np.log(xc) - gammaln(uc)) * h
        q_out[use_cf] = q
        p_out[use_cf] = 1.0 - q
    return np.clip(p_out, 0.0, 1.0), np.clip(q_out, 0.0, 1.0)


def _prep_gamma_args(u, x, name):
    scalar = np.ndim(u) == 0 and np.ndim(x) == 0
    u, x = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (u, x))
    u, x = np.broadcast_arrays(u, x)
    if np.any(~(u > 0)) or np.any(~(x >= 0)) or not np.all(np.isfinite(u)):
        raise ValueError(f"{name}: requires u > 0 and x >= 0")
    return scalar, u, x


def upper_inc_gamma_reg(u, x):
    """Regularized upper incomplete gamma Gamma(u, x) / Gamma(u)."""
    scalar, u, x = _prep_gamma_args(u, x, "upper_inc_gamma_reg")
    out = np.zeros(x.shape)
    fin = np.isfinite(x)
    out[fin] = _inc_gamma_pair(u[fin], x[fin])[1]
    return _as_output(out, scalar)


def lower_inc_gamma_reg(u, x):
    """Regularized lower incomplete gamma gamma(u, x) / Gamma(u)."""
    scalar, u, x = _prep_gamma_args(u, x, "lower_inc_gamma_reg")
    out = np.ones(x.shape)
    fin = np.isfinite(x)
    out[fin] = _inc_gamma_pair(u[fin], x[fin])[0]
    return _as_output(out, scalar)


_MARCUM_TAIL = 1e-14
# 1 - Q_1(a, b) <= exp(-(a - b)^2 / 2) / 2 for a > b; Q_u grows with u
_MARCUM_FAR = 9.5


def marcum_q(u, a, b, max_terms=1_000_000):
    """Generalized Marcum Q-function Q_u(a, b) for integer order u >= 1.

    Poisson mixture of regularized upper incomplete gammas,

        Q_u(a, b) = sum_n e^{-a^2/2} (a^2/2)^n / n! * Q(u + n, b^2/2),

    truncated once the Poisson tail beyond the last term (an upper bound on
    the neglected sum) falls below 1e-14.
    """
    if int(u) != u or u < 1:
        raise ValueError("marcum_q: order u must be an integer >= 1")
    u = int(u)
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    a, b = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, b))
    a, b = np.broadcast_arrays(a, b)
    if np.any(~(a >= 0)) or np.any(~(b >= 0)):
        raise ValueError("marcum_q: requires a >= 0 and b >= 0")

    out = np.empty(a.shape)
    trivial = (b == 0) | (a - b > _MARCUM_FAR) | ~np.isfinite(a)
    out[trivial] = 1.0
    central = (~trivial) & (a == 0)
    if np.any(central):
        out[central] = _poisson_cdf(u - 1, 0.5 * b[central] ** 2)

    rest = ~(trivial | central)
    if np.any(rest):
        mu = 0.5 * a[rest] ** 2
        x = 0.5 * b[rest] ** 2
        log_mu = np.log(mu)
        log_x = np.log(x)
        q_n = _poisson_cdf(u - 1, x)
        total = np.zeros(mu.shape)
        idx = np.arange(mu.size)
        n = 0
        while idx.size:
            if n > max_terms:
                partial = out.copy()
                partial[rest] = total
                raise AccuracyError("marcum_q: term budget exceeded", partial)
            w_n = np.exp(-mu + n * log_mu - math.lgamma(n + 1))
            total[idx] += w_n * q_n
            q_n = q_n + np.exp(-x + (u + n) * log_x - math.lgamma(u + n + 1))
            n += 1
            if n + 1 > mu.max():
                w_next = np.exp(-mu + n * log_mu - math.lgamma(n + 1))
                ratio = mu / (n + 1.0)
                tail = np.where(ratio < 1.0, w_next / (1.0 - np.minimum(ratio, 0.999999)), np.inf)
                keep = tail > _MARCUM_TAIL
                if not keep.all():
                    idx, mu, x = idx[keep], mu[keep], x[keep]
                    log_mu, log_x, q_n = log_mu[keep], log_x[keep], q_n[keep]
        out[rest] = total
    return _as_output(np.clip(out, 0.0, 1.0), scalar)


def marcum_p(u, a, b, rel_tail=1e-16, max_terms=200_000, chunk=4096):
    """Complement 1 - Q_u(a, b), accurate in a relative sense when it is tiny.

    Uses the Poisson mixture of regularized lower incomplete gammas

        1 - Q_u(a, b) = sum_n e^{-mu} mu^n / n! * P(u + n, b^2/2),  mu = a^2/2,

    summed in log space.  Since P(u + n, x) decreases in n, the neglected
    tail after N terms is at most P(u + N + 1, x) times the Poisson mass
    beyond N; that mass is bounded by 1, or geometrically once N > mu.
    Terms are added in doubling blocks until the bound falls below
    ``rel_tail`` times the running sum.
    """
    if int(u) != u or u < 1:
        raise ValueError("marcum_p: order u must be an integer >= 1")
    u = int(u)
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    a, b = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, b))
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    if np.any(~(a >= 0)) or np.any(~(b >= 0)):
        raise ValueError("marcum_p: requires a >= 0 and b >= 0")
    a, b = a.ravel(), b.ravel()
    out = np.zeros(a.shape)
    # 1 - Q_1(a, b) <= exp(-(a - b)^2 / 2) / 2 for a > b, and Q_u >= Q_1:
    # beyond this gap the complement is below the smallest double
    live = np.nonzero((b > 0) & np.isfinite(a) & ~(a - b > 38.7))[0]
    for start in range(0, live.size, chunk):
        idx = live[start:start + chunk]
        out[idx] = _marcum_p_block(u, 0.5 * a[idx] ** 2, 0.5 * b[idx] ** 2,
                                   rel_tail, max_terms)
    return _as_output(np.clip(out, 0.0, 1.0).reshape(shape), scalar)


def _marcum_p_block(u, mu, x, rel_tail, max_terms):
    shared_x = bool(np.all(x == x[0]))
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
    n_max = 64
    while True:
        if n_max > max_terms:
            raise AccuracyError("marcum_p: term budget exceeded")
        n = np.arange(n_max + 2, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_w = -mu[:, None] + n[None, :] * log_mu[:, None] - gammaln(n + 1.0)[None, :]
            log_w = np.where(mu[:, None] == 0, np.where(n[None, :] == 0, 0.0, -np.inf), log_w)
            if shared_x:
                log_p = np.log(gammainc(u + n, x[0]))[None, :]
            else:
                log_p = np.log(gammainc(u + n[None, :], x[:, None]))
        log_total = logsumexp(log_w[:, :-1] + log_p[:, :-1], axis=1)
        nn = n_max + 1.0
        ratio = mu / (nn + 1.0)
        with np.errstate(divide="ignore"):
            log_mass = np.where(ratio < 1.0,
                                np.minimum(0.0, log_w[:, -1] - np.log1p(-np.minimum(ratio, 0.999))),
                                0.0)
        log_tail = log_mass + (log_p[:, -1] if log_p.shape[0] > 1 else log_p[0, -1])
        if np.all(log_tail <= log_total + math.log(rel_tail)):
            return np.exp(log_total)
        n_max *= 2


def _poisson_cdf(k, x):
    """e^{-x} sum_{j<=k} x^j / j!, i.e. Q(k + 1, x) for integer k >= 0."""
    x = np.asarray(x, dtype=float)
    term = np.exp(-x)
    total = term.copy()
    for j in range(1, k + 1):
        term = term * x / j
        total = total + term
    return total
