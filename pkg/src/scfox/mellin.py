"""Numerical evaluation of multiple Mellin-Barnes integrals.

An integrand is a product of gamma factors ``Gamma(c + w.u)`` (numerator or
denominator), linear factors ``(c + w.u) ** p``, power terms
``base ** -(w.u)`` and a constant.  The integral

    1/(2 pi j)^d  int_{sigma_1 - j inf}^{sigma_1 + j inf} ... du_1 ... du_d

is taken along straight vertical lines ``u_k = sigma_k + j t_k``, truncated to
``|t_k| <= T_k``.

Two tensor-product rules are available.  ``trapezoid`` (the default) uses a
common step in every dimension; because all factor weights are integers in
the kernels used here, each factor only takes values on a one-dimensional
integer lattice, and variables that enter the coupled factors identically
are merged by discrete convolution.  The result equals the full
tensor-product trapezoid sum, at a fraction of the cost.
``gauss-legendre-panels`` evaluates every tensor node directly and is meant
for low dimensions and cross-checks.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import roots_legendre

from .special import ln_gamma_complex

log = logging.getLogger(__name__)

MAX_DIMENSION = 5
RULES = ("trapezoid", "gauss-legendre-panels")
# nodes below exp(-36) of the largest are ignored when bounding the phase
_SIGNIFICANT = -36.0


class InfeasibleContourError(ValueError):
    """No contour separates the left and right pole families."""

    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = list(violated)


class NonFiniteIntegrandError(ArithmeticError):
    """The integrand produced inf or nan on the contour (pole grazing)."""


class DimensionError(ValueError):
    """Integrand dimension above MAX_DIMENSION."""


@dataclass(frozen=True)
class GammaFactor:
    """Gamma(constant + sum_k weights[k] * u_k), in numerator or denominator."""

    constant: float
    weights: tuple
    location: str = "numerator"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.location not in ("numerator", "denominator"):
            raise ValueError(f"bad gamma factor location {self.location!r}")


@dataclass(frozen=True)
class LinearFactor:
    """(constant + sum_k weights[k] * u_k) ** power."""

    constant: float
    weights: tuple
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class PowerTerm:
    """base ** -(sum_k exponent_weights[k] * u_k)."""

    base: float
    exponent_weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "exponent_weights",
                           tuple(float(w) for w in self.exponent_weights))
        if not (self.base > 0 and math.isfinite(self.base)):
            raise ValueError(f"power-term base must be finite and positive, got {self.base}")


@dataclass(frozen=True)
class MellinIntegrand:
    dimension: int
    numerator_factors: tuple
    denominator_factors: tuple = ()
    power_terms: tuple = ()
    linear_factors: tuple = ()
    prefactor: float = 1.0
    log_prefactor: float = 0.0

    def __post_init__(self):
        for name in ("numerator_factors", "denominator_factors",
                     "power_terms", "linear_factors"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        for f in self.numerator_factors:
            if f.location != "numerator":
                raise ValueError("denominator factor in numerator list")
        for f in self.denominator_factors:
            if f.location != "denominator":
                raise ValueError("numerator factor in denominator list")
        for f in self.numerator_factors + self.denominator_factors + self.linear_factors:
            if len(f.weights) != d:
                raise ValueError(f"factor weights {f.weights} do not match dimension {d}")
        for p in self.power_terms:
            if len(p.exponent_weights) != d:
                raise ValueError("power-term weights do not match dimension")
        for k in range(d):
            if not any(f.weights[k] != 0 for f in self.numerator_factors):
                raise ValueError(f"no numerator gamma factor depends on variable {k}")

    def pole_constraints(self):
        """(constant, weights) pairs that must stay strictly positive on the contour."""
        out = [(f.constant, f.weights) for f in self.numerator_factors]
        out += [(f.constant, f.weights) for f in self.linear_factors if f.power < 0]
        return out


@dataclass(frozen=True)
class ContourSpec:
    sigma: tuple
    half_width: object = 40.0
    nodes_per_dim: int = 128
    rule: str = "trapezoid"

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        if self.rule not in RULES:
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.nodes_per_dim < 3:
            raise ValueError("nodes_per_dim must be >= 3")
        widths = self.half_widths()
        if any(not (w > 0) for w in widths):
            raise ValueError("half_width must be positive")

    def half_widths(self):
        if np.ndim(self.half_width) == 0:
            return (float(self.half_width),) * len(self.sigma)
        return tuple(float(w) for w in self.half_width)


@dataclass
class EvalResult:
    value: float
    abs_error_estimate: float
    nodes_used: int
    converged: bool
    imag: float = 0.0
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def log_integrand(integrand, points):
    """Complex log of the integrand (without prefactor) at points of shape (..., d)."""
    u = np.asarray(points, dtype=complex)
    shape = u.shape[:-1]
    u = u.reshape(-1, integrand.dimension)
    out = np.zeros(u.shape[0], dtype=complex)
    for f in integrand.numerator_factors:
        out += ln_gamma_complex(f.constant + u @ np.array(f.weights))
    for f in integrand.denominator_factors:
        out -= ln_gamma_complex(f.constant + u @ np.array(f.weights))
    for f in integrand.linear_factors:
        out += f.power * np.log(f.constant + u @ np.array(f.weights))
    for p in integrand.power_terms:
        out -= math.log(p.base) * (u @ np.array(p.exponent_weights))
    return out.reshape(shape)


def _slacks(integrand, sigma):
    sigma = np.asarray(sigma, dtype=float)
    return np.array([c + np.dot(w, sigma) for c, w in integrand.pole_constraints()])


def contour_is_feasible(integrand, sigma):
    return bool(np.all(_slacks(integrand, sigma) > 0))


# ---------------------------------------------------------------------------
# contour selection
# ---------------------------------------------------------------------------

def decay_rate(integrand):
    """Per-variable exponential decay coefficient of |integrand| along t_k.

    Stirling's formula gives |Gamma(x + j y)| ~ exp(-pi |y| / 2), so each
    gamma factor contributes pi/2 times |weight| (with sign by location).
    A non-positive entry flags an integrand that does not decay along that
    axis; it is reported as 0.
    """
    rates = []
    for k in range(integrand.dimension):
        net = sum(abs(f.weights[k]) for f in integrand.numerator_factors)
        net -= sum(abs(f.weights[k]) for f in integrand.denominator_factors)
        rates.append(max(0.0, 0.5 * math.pi * net))
    return rates


def _center(integrand):
    cons = integrand.pole_constraints()
    d = integrand.dimension
    a_ub = []
    b_ub = []
    for c, w in cons:
        norm = max(abs(x) for x in w) or 1.0
        # c + w.sigma >= s * norm
        a_ub.append([-x for x in w] + [norm])
        b_ub.append(c)
    cost = [0.0] * d + [-1.0]
    bounds = [(None, None)] * d + [(None, 1e6)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise InfeasibleContourError(f"contour LP failed: {res.message}")
    if res.x[-1] > 1e5:
        # open polytope: keep unit slack and stay as far left as allowed
        bounds = [(None, None)] * d + [(1.0, 1.0)]
        res = linprog([1.0] * d + [0.0], A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0:
            raise InfeasibleContourError(f"contour LP failed: {res.message}")
    sigma = np.array(res.x[:d])
    best = res.x[-1]
    if best <= 1e-12:
        violated = []
        for c, w in cons:
            if c + np.dot(w, sigma) <= 1e-12:
                terms = " + ".join(f"{x:g}*s{k + 1}" for k, x in enumerate(w) if x)
                violated.append(f"{c:g} + {terms} > 0")
        raise InfeasibleContourError(
            "no contour separates the pole families; violated: " + "; ".join(violated),
            violated)
    return sigma, best


def _saddle(integrand, sigma0, max_slack):
    """Move sigma to minimise |integrand| on the real axis, keeping a pole margin."""
    cons = integrand.pole_constraints()
    margin = min(0.15, 0.4 * max_slack)

    def objective(s):
        return float(log_integrand(integrand, s.astype(complex)).real)

    constraints = [{"type": "ineq",
                    "fun": (lambda s, c=c, w=np.array(w): c + w @ s - margin * max(1.0, np.abs(w).max())),
                    "jac": (lambda s, w=np.array(w): w)}
                   for c, w in cons]
    try:
        res = minimize(objective, sigma0, method="SLSQP", constraints=constraints,
                       options={"maxiter": 200, "ftol": 1e-10})
    except Exception as exc:  # optimiser failures fall back to the centre
        log.debug("saddle search failed: %s", exc)
        return sigma0
    if not res.success or not contour_is_feasible(integrand, res.x):
        return sigma0
    if objective(res.x) > objective(sigma0):
        return sigma0
    return np.asarray(res.x)


def _scan_half_width(integrand, sigma, k, rel=1e-18, t_max=600.0, step=0.5):
    """Distance along t_k beyond which |integrand| stays below rel * peak."""
    t = np.arange(0.0, t_max + step, step)
    pts = np.tile(np.asarray(sigma, dtype=complex), (t.size, 1))
    pts[:, k] = pts[:, k] + 1j * t
    vals = log_integrand(integrand, pts).real
    pts[:, k] = sigma[k] - 1j * t
    vals = np.maximum(vals, log_integrand(integrand, pts).real)
    peak = vals.max()
    below = vals < peak + math.log(rel)
    # last index that is still above threshold
    above = np.nonzero(~below)[0]
    t_cut = t[above[-1]] + step if above.size else step
    if t_cut >= t_max:
        raise NonFiniteIntegrandError(
            f"integrand does not decay along variable {k} within |t| <= {t_max}")
    return max(t_cut, 4.0)


def _step_for(integrand, sigma, tol_rel):
    """Initial trapezoid step from pole distances and oscillation rates."""
    d = integrand.dimension
    cons = [(c, np.array(w)) for c, w in integrand.pole_constraints()]
    # gamma factors in the denominator have no poles but keep phase growth
    target = math.log(1.0 / max(tol_rel, 1e-15)) + 5.0
    steps = []
    for k in range(d):
        dist = [(c + w @ sigma) / abs(w[k]) for c, w in cons if w[k] != 0]
        dist_k = min(dist)
        omega = sum(abs(p.exponent_weights[k] * math.log(p.base)) for p in integrand.power_terms)
        steps.append(2.0 * math.pi / (target / dist_k + omega))
    return min(steps)


def feasible_contour(integrand, strategy="center", tol=1e-10, rule="trapezoid"):
    """Choose contour anchors, truncation and node counts for an integrand.

    ``strategy="center"`` maximises the smallest distance to any pole (the
    analytic centre of the feasibility polytope).  ``strategy="saddle"``
    starts there and then lowers the integrand's magnitude on the real
    axis, which limits cancellation when the power-term arguments are far
    from 1.
    """
    if integrand.dimension > MAX_DIMENSION:
        raise DimensionError(f"dimension {integrand.dimension} exceeds {MAX_DIMENSION}")
    sigma, best = _center(integrand)
    if strategy == "saddle":
        sigma = _saddle(integrand, sigma, best)
    elif strategy != "center":
        raise ValueError(f"unknown contour strategy {strategy!r}")
    return contour_at(integrand, sigma, tol, rule)


def contour_at(integrand, sigma, tol=1e-10, rule="trapezoid"):
    """Contour through given anchors, with truncation and step chosen as usual."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (integrand.dimension,):
        raise ValueError("sigma does not match the integrand dimension")
    if not contour_is_feasible(integrand, sigma):
        raise InfeasibleContourError("anchors do not separate the pole families")
    widths = tuple(_scan_half_width(integrand, sigma, k) for k in range(integrand.dimension))
    if rule == "trapezoid":
        h = _step_for(integrand, sigma, tol)
        nodes = 2 * int(math.ceil(max(widths) / h)) + 1
    else:
        nodes = 128
    return ContourSpec(tuple(sigma), widths, max(nodes, 3), rule)


# ---------------------------------------------------------------------------
# trapezoid engine
# ---------------------------------------------------------------------------

def _is_integer_vector(w):
    return all(float(x).is_integer() for x in w)


def _factor_log(kind, factor, z):
    if kind == "num":
        return ln_gamma_complex(z)
    if kind == "den":
        return -ln_gamma_complex(z)
    return factor.power * np.log(z)


class _Scaled:
    """Running complex sum kept as total * exp(scale)."""

    def __init__(self):
        self.total = 0j
        self.abs_total = 0.0
        self.scale = -np.inf

    def add(self, values_log):
        if values_log.size == 0:
            return
        m = float(np.max(values_log.real))
        if not np.isfinite(m):
            return
        if m > self.scale:
            factor = math.exp(self.scale - m) if np.isfinite(self.scale) else 0.0
            self.total *= factor
            self.abs_total *= factor
            self.scale = m
        v = np.exp(values_log - self.scale)
        self.total += v.sum()
        self.abs_total += np.abs(v).sum()


def _trapezoid_sum(integrand, sigma, widths, h, max_nodes):
    d = integrand.dimension
    sigma = np.asarray(sigma, dtype=float)
    n_half = [int(math.ceil(w / h)) for w in widths]

    factors = ([("num", f) for f in integrand.numerator_factors]
               + [("den", f) for f in integrand.denominator_factors]
               + [("lin", f) for f in integrand.linear_factors])
    separable = [[] for _ in range(d)]
    coupled = []
    for kind, f in factors:
        nz = [k for k, w in enumerate(f.weights) if w != 0]
        if len(nz) == 1:
            separable[nz[0]].append((kind, f))
        else:
            coupled.append((kind, f))

    # one-dimensional log tables per variable; ``phase`` bounds the unwrapped
    # phase of the significant nodes, whose rounding dominates the roundoff
    tables = []
    offsets = []
    phase = 0.0
    for k in range(d):
        t = h * np.arange(-n_half[k], n_half[k] + 1)
        z = sigma[k] + 1j * t
        lg = np.zeros(t.size, dtype=complex)
        for kind, f in separable[k]:
            lg += _factor_log(kind, f, f.constant + f.weights[k] * z)
        for p in integrand.power_terms:
            lg -= math.log(p.base) * p.exponent_weights[k] * z
        if not np.all(np.isfinite(lg)):
            raise NonFiniteIntegrandError(f"non-finite integrand along variable {k}")
        off = float(lg.real.max())
        tables.append(np.exp(lg - off))
        offsets.append(off)
        significant = lg.real - off > _SIGNIFICANT
        phase += float(np.abs(lg.imag[significant]).max())

    # merge variables whose columns in the coupled weight matrix coincide
    if coupled:
        wmat = np.array([f.weights for _, f in coupled])
    else:
        wmat = np.zeros((0, d))
    groups = {}
    for k in range(d):
        groups.setdefault(tuple(wmat[:, k]), []).append(k)

    scalar_part = 1.0 + 0j
    aggregates = []  # (column, values, index_min, sigma_sum)
    for col, members in groups.items():
        vals = tables[members[0]]
        for k in members[1:]:
            vals = np.convolve(vals, tables[k])
        if not any(col):
            scalar_part *= vals.sum()
            continue
        aggregates.append((np.array(col), vals, -sum(n_half[k] for k in members),
                           float(sum(sigma[k] for k in members))))

    log_scale = integrand.log_prefactor + sum(offsets)
    weight = (h / (2.0 * math.pi)) ** d
    n_equiv = 1
    for n in n_half:
        n_equiv *= 2 * n + 1

    if not aggregates:
        value = scalar_part
        abs_value = abs(scalar_part)
        return _finish(integrand, value, abs_value, log_scale, weight), phase, n_equiv

    grid_size = 1
    for _, vals, _, _ in aggregates:
        grid_size *= vals.size
    if grid_size > max_nodes:
        raise MemoryError(f"reduced grid of {grid_size} nodes exceeds budget {max_nodes}")

    # coupled factors as tables over integer lattices
    g_count = len(aggregates)
    idx_axes = []
    for g, (_, vals, i0, _) in enumerate(aggregates):
        shape = [1] * g_count
        shape[g] = vals.size
        idx_axes.append((np.arange(vals.size) + i0).reshape(shape))

    coupled_tables = []
    for c_idx, (kind, f) in enumerate(coupled):
        gw = np.array([col[c_idx] for col, _, _, _ in aggregates])
        if not _is_integer_vector(gw):
            coupled_tables.append((kind, f, gw, None, None))
            continue
        gw = gw.astype(int)
        lo = sum(min(w * (i0), w * (i0 + vals.size - 1)) for w, (_, vals, i0, _) in zip(gw, aggregates))
        hi = sum(max(w * (i0), w * (i0 + vals.size - 1)) for w, (_, vals, i0, _) in zip(gw, aggregates))
        m = np.arange(lo, hi + 1)
        re = f.constant + sum(w * s for w, (_, _, _, s) in zip(gw, aggregates))
        tab = _factor_log(kind, f, re + 1j * h * m)
        if not np.all(np.isfinite(tab)):
            raise NonFiniteIntegrandError("non-finite coupled factor on contour")
        phase += float(np.abs(tab.imag).max())
        coupled_tables.append((kind, f, gw, tab, lo))

    acc = _Scaled()
    first = aggregates[0][1]
    rest = grid_size // first.size
    chunk = max(1, int(2_000_000 // max(rest, 1)))
    with np.errstate(divide="ignore"):
        log_aggs = [np.log(vals.astype(complex)) for _, vals, _, _ in aggregates]
    for start in range(0, first.size, chunk):
        sl = slice(start, min(start + chunk, first.size))
        total = log_aggs[0][sl].reshape([-1] + [1] * (g_count - 1))
        for g in range(1, g_count):
            total = total + log_aggs[g].reshape([1] * g + [-1] + [1] * (g_count - g - 1))
        idx0 = idx_axes[0][sl]
        for kind, f, gw, tab, lo in coupled_tables:
            lin = gw[0] * idx0
            for g in range(1, g_count):
                lin = lin + gw[g] * idx_axes[g]
            if tab is not None:
                total = total + tab[lin - lo]
            else:
                re = f.constant + sum(w * s for w, (_, _, _, s) in zip(gw, aggregates))
                total = total + _factor_log(kind, f, re + 1j * h * lin)
        acc.add(np.asarray(total).ravel())
    value = scalar_part * acc.total
    abs_value = abs(scalar_part) * acc.abs_total
    return _finish(integrand, value, abs_value, log_scale + acc.scale, weight), phase, n_equiv


def _finish(integrand, value, abs_value, log_scale, weight):
    if not np.isfinite(log_scale):
        return 0j, 0.0
    scale = integrand.prefactor * weight * math.exp(log_scale) if log_scale < 700 else None
    if scale is None:
        raise OverflowError("Mellin-Barnes sum overflows double precision")
    return value * scale, abs_value * abs(scale)


# ---------------------------------------------------------------------------
# Gauss-Legendre panel engine
# ---------------------------------------------------------------------------

def _gl_nodes(width, panels, per_panel=16):
    x, w = roots_legendre(per_panel)
    edges = np.linspace(-width, width, panels + 1)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _gl_sum(integrand, sigma, widths, panels, max_nodes):
    d = integrand.dimension
    rules = [_gl_nodes(w, panels) for w in widths]
    n_total = 1
    for t, _ in rules:
        n_total *= t.size
    if n_total > max_nodes:
        raise MemoryError(f"{n_total} tensor nodes exceed budget {max_nodes}")
    mesh_t = np.meshgrid(*[t for t, _ in rules], indexing="ij")
    mesh_w = np.meshgrid(*[w for _, w in rules], indexing="ij")
    pts = np.stack([sigma[k] + 1j * mesh_t[k] for k in range(d)], axis=-1).reshape(-1, d)
    wts = np.prod(np.stack([m.ravel() for m in mesh_w]), axis=0)
    acc = _Scaled()
    logs = []
    for start in range(0, pts.shape[0], 500_000):
        lg = log_integrand(integrand, pts[start:start + 500_000])
        if not np.all(np.isfinite(lg)):
            raise NonFiniteIntegrandError("non-finite integrand at a quadrature node")
        acc.add(lg + np.log(wts[start:start + 500_000]))
        logs.append(lg)
    lg = np.concatenate(logs)
    phase = float(np.abs(lg.imag[lg.real - lg.real.max() > _SIGNIFICANT]).max())
    value, abs_value = _finish(integrand, acc.total, acc.abs_total,
                               integrand.log_prefactor + acc.scale, (0.5 / math.pi) ** d)
    return (value, abs_value), phase, n_total


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def evaluate(integrand, contour, tol=1e-10, rtol=0.0, max_nodes=40_000_000, max_levels=5):
    """Evaluate the Mellin-Barnes integral along the given contour.

    Successive levels halve the step (or double the panels) and stretch the
    truncation by 25%.  The error estimate is the change between the last two
    levels plus the imaginary residue plus a roundoff floor.  The floor is
    eps * sum |f| times (64 + 2 * phase), where phase bounds the unwrapped
    phase of the significant nodes: every log-gamma and power term is
    rounded relative to its own size, so large phases dominate.  The result
    is ``converged`` once that estimate is within ``max(tol, rtol * |value|)``.
    """
    if integrand.dimension > MAX_DIMENSION:
        raise DimensionError(f"dimension {integrand.dimension} exceeds {MAX_DIMENSION}")
    if len(contour.sigma) != integrand.dimension:
        raise ValueError("contour dimension does not match integrand")
    if not contour_is_feasible(integrand, contour.sigma):
        raise InfeasibleContourError("contour anchors do not separate the pole families")
    if min(decay_rate(integrand)) <= 0:
        log.warning("integrand has non-positive decay rate along some variable")

    sigma = np.asarray(contour.sigma)
    widths = np.asarray(contour.half_widths())
    if contour.rule == "trapezoid":
        h = 2.0 * widths.max() / (contour.nodes_per_dim - 1)
    else:
        panels = max(1, contour.nodes_per_dim // 16)

    history = []
    prev = None
    result = None
    for level in range(max_levels):
        try:
            if contour.rule == "trapezoid":
                (value, abs_sum), phase, nodes = _trapezoid_sum(integrand, sigma, widths, h,
                                                                max_nodes)
            else:
                (value, abs_sum), phase, nodes = _gl_sum(integrand, sigma, widths, panels,
                                                         max_nodes)
        except MemoryError as exc:
            log.debug("node budget reached: %s", exc)
            break
        history.append(complex(value))
        floor = np.finfo(float).eps * abs_sum * (64.0 + 2.0 * phase)
        if prev is not None:
            err = abs(value.real - prev.real) + abs(value.imag) + floor
            im_ok = abs(value.imag) <= max(tol, 1e-9 * abs(value.real))
            converged = err <= max(tol, rtol * abs(value.real)) and im_ok
            result = EvalResult(float(value.real), float(err), int(nodes), bool(converged),
                                float(value.imag), history)
            if converged:
                return result
        prev = value
        widths = widths * 1.25
        if contour.rule == "trapezoid":
            h = h / 2.0
        else:
            panels *= 2
    if result is None:
        if prev is None:
            raise MemoryError("node budget too small for a single evaluation")
        result = EvalResult(float(prev.real), float("inf"), 0, False, float(prev.imag), history)
    log.debug("Mellin-Barnes evaluation not converged: %s", result)
    return result
