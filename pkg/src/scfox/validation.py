"""Acceptance checks: analytic paths against their oracles.

Every check returns :class:`CheckResult` records carrying the tolerance,
the achieved error and the runtime.  ``tol_scale`` multiplies every
numerical tolerance (runtime budgets are left alone), so ``tol_scale=0.01``
tightens the suite a hundredfold.
"""

import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import channel, metrics, special
from .channel import ScChannel
from .kernels import pdf_integrand
from .mellin import contour_at, evaluate
from .montecarlo import SimConfig
from . import figures
from .scenario import read_csv, run_scenario, write_csv

REPORT_COLUMNS = ("criterion", "check", "tolerance", "achieved", "margin", "passed",
                  "runtime_s", "detail")


@dataclass
class CheckResult:
    criterion: int
    name: str
    tolerance: float
    achieved: float
    passed: bool
    runtime_s: float = 0.0
    detail: str = ""

    @property
    def margin(self):
        """Tolerance over achieved error; above 1 means headroom."""
        if self.achieved == 0:
            return math.inf
        return self.tolerance / self.achieved


def _rel(a, b):
    scale = abs(b)
    return abs(a - b) / scale if scale > 0 else abs(a - b)


# ---------------------------------------------------------------------------
# 1: Fox-H against quadrature
# ---------------------------------------------------------------------------

GRID_M = (0.5, 1.0, 2.7, 3.5)
GRID_MS = (0.5, 5.0, 50.0)
GRID_DB = (0.0, 10.0, 20.0)
SNR_RATIOS = (1.0, 0.5, 2.0)
METRIC_TOL = {1: 1e-6, 2: 1e-5, 3: 1e-3}
ADP_TOL = 1e-3
ADP_U = 3
ADP_PF = 0.1


def grid_channel(m, m_s, gamma_bar_db, L):
    """Branch i uses multipath m + 0.5 i and average SNR scaled by 1, 0.5, 2."""
    g = 10.0 ** (gamma_bar_db / 10.0)
    return ScChannel.from_lists([m + 0.5 * i for i in range(L)], [m_s] * L,
                                [g * SNR_RATIOS[i] for i in range(L)])


def check_dual_path(tol_scale=1.0, budget_s=600.0):
    t_start = time.perf_counter()
    worst = {}
    lam = metrics.lambda_for_pf(ADP_U, ADP_PF)
    ed = metrics.EdParams(ADP_U, lam)
    pairs = {
        "abep": (lambda ch: metrics.abep_foxh(ch, 1.0), lambda ch: metrics.abep_quadrature(ch, 1.0)),
        "acc": (lambda ch: metrics.acc_foxh(ch, 1.0), lambda ch: metrics.acc_quadrature(ch, 1.0)),
        "auc": (lambda ch: metrics.auc_avg_foxh(ch, ADP_U),
                lambda ch: metrics.auc_avg_quadrature(ch, ADP_U)),
        "adp": (lambda ch: metrics.adp_foxh(ch, ed), lambda ch: metrics.adp_semianalytic(ch, ed)),
    }
    timing = {}
    for L in (1, 2, 3):
        for m in GRID_M:
            for ms in GRID_MS:
                for db in GRID_DB:
                    ch = grid_channel(m, ms, db, L)
                    for name, (fox, ref) in pairs.items():
                        if name == "adp" and L > 2:
                            continue
                        t0 = time.perf_counter()
                        err = _rel(fox(ch).value, ref(ch).value)
                        timing[(name, L)] = timing.get((name, L), 0.0) + time.perf_counter() - t0
                        key = (name, L)
                        if err > worst.get(key, (-1.0,))[0]:
                            worst[key] = (err, f"m={m:g} m_s={ms:g} gamma_bar={db:g} dB")
    out = []
    for (name, L), (err, where) in sorted(worst.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        tol = (ADP_TOL if name == "adp" else METRIC_TOL[L]) * tol_scale
        oracle = "semianalytic" if name == "adp" else "quadrature"
        out.append(CheckResult(1, f"{name} fox-h vs {oracle}, L={L}", tol, err, err <= tol,
                               timing[(name, L)], f"worst at {where}"))
    total = time.perf_counter() - t_start
    out.append(CheckResult(1, "dual-path runtime (s)", budget_s, total, total <= budget_s, total))
    return out


# ---------------------------------------------------------------------------
# 2: density identity
# ---------------------------------------------------------------------------

FIG1_SET = ((3.5, 4.5, 5.5), 50.0, 10.0)


def check_pdf_identity(tol_scale=1.0):
    ms_list, ms, g = FIG1_SET
    grid = np.logspace(-3, 4, 30)
    out = []
    for L in (1, 2, 3):
        t0 = time.perf_counter()
        ch = ScChannel.from_lists(ms_list[:L], [ms] * L, [g] * L)
        errs = [_rel(channel.sc_pdf_foxh(ch, x).value, channel.sc_pdf_product_rule(ch, x))
                for x in grid]
        k = int(np.argmax(errs))
        tol = 1e-6 * tol_scale
        out.append(CheckResult(2, f"pdf Mellin-Barnes vs product rule, L={L}", tol, errs[k],
                               errs[k] <= tol, time.perf_counter() - t0,
                               f"worst at gamma={grid[k]:.4g}"))
    return out


# ---------------------------------------------------------------------------
# 3: normalisation and limits
# ---------------------------------------------------------------------------

NORMALISATION_CHANNELS = (
    ("m=[3.5 4.5 5.5] m_s=50", (3.5, 4.5, 5.5), 50.0, 10.0),
    ("m=[0.5 1 1.5] m_s=0.5", (0.5, 1.0, 1.5), 0.5, 1.0),
    ("m=[1 1.5 2] m_s=5", (1.0, 1.5, 2.0), 5.0, 31.6),
)


def _pdf_mass(ch):
    def h(x):
        g = math.exp(x)
        return g * float(channel.sc_pdf_product_rule(ch, g))
    total = 0.0
    edges = (-300.0, -20.0, -5.0, 0.0, 5.0, 20.0, 60.0, 700.0)
    for a, b in zip(edges[:-1], edges[1:]):
        total += quad(h, a, b, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    return total


def check_limits(tol_scale=1.0, fig3_rows=None):
    out = []
    for label, ms_list, ms, g in NORMALISATION_CHANNELS:
        t0 = time.perf_counter()
        ch = ScChannel.from_lists(ms_list, [ms] * 3, [g] * 3)
        err = abs(_pdf_mass(ch) - 1.0)
        tol = 1e-8 * tol_scale
        out.append(CheckResult(3, f"integral of pdf = 1 ({label})", tol, err, err <= tol,
                               time.perf_counter() - t0))
    t0 = time.perf_counter()
    ch = ScChannel.from_lists([1.0, 1.5, 2.0], [5.0] * 3, [1.0] * 3)
    err = abs(channel.sc_mgf(ch, 1e-3).value - 1.0)
    tol = 0.02 * tol_scale
    out.append(CheckResult(3, "mgf at s=1e-3 close to 1", tol, err, err <= tol,
                           time.perf_counter() - t0, "m=[1 1.5 2] m_s=5 gamma_bar=0 dB"))
    t0 = time.perf_counter()
    ed0 = metrics.EdParams(3, 0.0)
    worst = 0.0
    for L in (1, 2, 3):
        ch = ScChannel.from_lists([1.0, 1.5, 2.0][:L], [0.5] * L, [31.6] * L)
        for v in (metrics.adp_foxh(ch, ed0).value, metrics.adp_semianalytic(ch, ed0).value):
            worst = max(worst, abs(v - 1.0))
    out.append(CheckResult(3, "adp at lambda=0 equals 1", 0.0, worst, worst == 0.0,
                           time.perf_counter() - t0, "exact equality required"))
    if fig3_rows is not None:
        t0 = time.perf_counter()
        # rows report 1 - Pd; Pd >= Pf means value <= 1 - Pf
        excess = max(r.metric_value - (1.0 - r.sweep_value) for r in fig3_rows
                     if r.method == "fox-h" and not r.error)
        bad = [r for r in fig3_rows if r.error]
        ok = excess <= 1e-12 and not bad
        out.append(CheckResult(3, "Pd >= Pf on the ROC sweeps", 1e-12, max(excess, 0.0), ok,
                               time.perf_counter() - t0,
                               f"{len(bad)} rows with errors" if bad else ""))
    return out


# ---------------------------------------------------------------------------
# 4 and 5: figure data
# ---------------------------------------------------------------------------

MC_SAMPLES = 1_000_000
MC_SEED = 2024
MC_STREAMS = 8


def figure_rows(method="fox-h", sim=None, threads=1):
    """{figure: [(scenario, rows), ...]} for all four figures."""
    sim = sim or SimConfig(MC_SAMPLES, MC_SEED, MC_STREAMS)
    return {f: [(sc, run_scenario(sc, threads)) for sc in figures.figure_scenarios(f, method, sim)]
            for f in (1, 2, 3, 4)}


def check_mc_concordance(data, mc_data, runtime_s, tol_scale=1.0, budget_s=300.0,
                         sigma=3.0, required=0.95):
    """``data`` holds Fox-H rows and ``mc_data`` Monte Carlo rows of the same scenarios."""
    total = passed = 0
    failures = []
    for f in (1, 2, 3, 4):
        for (sc, rows), (_, mc_rows) in zip(data[f], mc_data[f]):
            for r, q in zip(rows, mc_rows):
                total += 1
                ok = (not r.error and not q.error
                      and abs(r.metric_value - q.metric_value) <= sigma * q.error_estimate)
                passed += ok
                if not ok:
                    failures.append(f"{sc.name}@{r.sweep_value:g}")
    fail_frac = 1.0 - passed / total
    allowed = (1.0 - required) * tol_scale
    detail = f"{passed}/{total} within {sigma:g} sigma"
    if failures:
        detail += "; outside: " + " ".join(failures)
    return [CheckResult(4, f"Monte Carlo concordance (fraction outside {sigma:g} sigma)", allowed,
                        fail_frac, fail_frac <= allowed, runtime_s, detail),
            CheckResult(4, "Monte Carlo runtime (s)", budget_s, runtime_s, runtime_s <= budget_s,
                        runtime_s)]


def _curves(rows):
    """{(set, L): (sweep values, metric values)} from CSV dict rows."""
    out = {}
    for r in rows:
        name = r["scenario"]
        cset, L = name.rsplit("-L", 1)
        xs, ys = out.setdefault((cset.split("-", 1)[1], int(L)), ([], []))
        xs.append(r["sweep_value"])
        ys.append(r["metric_value"])
    return out


def _monotone_violation(ys, decreasing, strict):
    """Largest relative step in the wrong direction (0 when monotone)."""
    worst = 0.0
    for a, b in zip(ys[:-1], ys[1:]):
        step = (a - b) if decreasing else (b - a)
        scale = max(abs(a), abs(b), 1e-300)
        if step < 0 or (strict and step == 0):
            worst = max(worst, -step / scale if step < 0 else 1e-16)
    return worst


def check_figure_shapes(csv_paths):
    """Monotonicity of the emitted curves, in the sweep and in L."""
    out = []
    # (metric decreasing in sweep?, decreasing in L?, strict in sweep, strict in L)
    # the ROC curves all end at 1 - Pd = 0 for Pf = 1, hence non-strict
    rules = {1: ("ABEP", True, True, True, True),
             2: ("ACC", False, False, True, True),
             3: ("1 - Pd", True, True, False, False),
             4: ("1 - A", True, True, True, True)}
    for f, path in csv_paths.items():
        t0 = time.perf_counter()
        rows = read_csv(path)
        label, dec_x, dec_l, strict_x, strict_l = rules[f]
        curves = _curves(rows)
        worst = 0.0
        where = ""
        errors = sum(1 for r in rows if r["error"])
        for (cset, L), (xs, ys) in curves.items():
            v = _monotone_violation(ys, dec_x, strict_x)
            if v > worst:
                worst, where = v, f"{cset} L={L} along sweep"
            nxt = curves.get((cset, L + 1))
            if nxt is not None:
                for a, b, x in zip(ys, nxt[1], xs):
                    v = _monotone_violation([a, b], dec_l, strict_l)
                    if v > worst:
                        worst, where = v, f"{cset} L={L} to {L + 1} at {x:g}"
        ok = worst == 0.0 and errors == 0
        out.append(CheckResult(5, f"figure {f}: {label} monotone in sweep and in L", 0.0, worst,
                               ok, time.perf_counter() - t0,
                               where or (f"{errors} rows with errors" if errors else "")))
    return out


# ---------------------------------------------------------------------------
# 6: special functions
# ---------------------------------------------------------------------------

# reference values computed with mpmath at 40 digits
SPECIAL_ORACLES = (
    ("ln_gamma_complex", (2.5 + 3j,), -1.4709546103488418 + 2.8226156382607996j),
    ("ln_gamma_complex", (0.3 + 0.1j,), 1.0374564384116427 - 0.33847047433082916j),
    ("ln_gamma_complex", (-2.7 + 0.5j,), -1.1364744819372148 - 9.427010917385818j),
    ("ln_gamma_complex", (15 - 40j,), -8.118722086274625 - 127.7592508390088j),
    ("ln_gamma_complex", (0.5,), 0.5723649429247001 + 0j),
    ("reg_incomplete_beta", (0.3, 3.5, 50), 0.9999942336195452),
    ("reg_incomplete_beta", (0.7, 0.5, 0.5), 0.6309898804344546),
    ("reg_incomplete_beta", (0.01, 0.5, 5), 0.2428418908984375),
    ("reg_incomplete_beta", (0.999, 2.7, 0.5), 0.944037745179452),
    ("reg_incomplete_beta", (0.5, 1, 1), 0.5),
    ("reg_incomplete_beta", (0.2, 50, 3.5), 3.781495827426202e-32),
    ("gauss_2f1_neg", (5.5, 3.5, 4.5, -2.0), 0.010295683812709375),
    ("gauss_2f1_neg", (1.5, 0.5, 1.5, -0.3), 0.8770580193070292),
    ("gauss_2f1_neg", (50.5, 0.5, 1.5, -10.0), 0.03973247846043313),
    ("gauss_2f1_neg", (3.0, 1.0, 4.0, -100.0), 0.014713845361550524),
    ("gaussian_q", (0.0,), 0.5),
    ("gaussian_q", (1.0,), 0.15865525393145705),
    ("gaussian_q", (3.0,), 0.0013498980316300946),
    ("gaussian_q", (8.0,), 6.220960574271784e-16),
    ("gaussian_q", (-1.5,), 0.9331927987311419),
    ("upper_inc_gamma_reg", (0.5, 0.2), 0.5270892568655381),
    ("lower_inc_gamma_reg", (0.5, 0.2), 0.4729107431344619),
    ("upper_inc_gamma_reg", (3, 2.5), 0.5438131158833295),
    ("lower_inc_gamma_reg", (3, 2.5), 0.45618688411667047),
    ("upper_inc_gamma_reg", (3.5, 40.0), 1.377501829742615e-14),
    ("lower_inc_gamma_reg", (3.5, 40.0), 0.9999999999999862),
    ("upper_inc_gamma_reg", (0.5, 30.0), 9.485737571073848e-15),
    ("lower_inc_gamma_reg", (0.5, 30.0), 0.9999999999999906),
    ("upper_inc_gamma_reg", (10, 3), 0.9988975118698845),
    ("lower_inc_gamma_reg", (10, 3), 0.0011024881301154798),
    ("marcum_q", (3, 5.477225575051661, 2), 0.9999876854029728),
    ("marcum_p", (3, 5.477225575051661, 2), 1.2314597027235662e-05),
    ("marcum_q", (1, 1.0, 1), 0.7328798037968203),
    ("marcum_p", (1, 1.0, 1), 0.2671201962031798),
    ("marcum_q", (2, 3.0, 5), 0.05331788109965336),
    ("marcum_p", (2, 3.0, 5), 0.9466821189003466),
    ("marcum_q", (3, 0.5, 4), 0.017557644235013697),
    ("marcum_p", (3, 0.5, 4), 0.9824423557649863),
)


def check_special_functions(tol_scale=1.0):
    worst = {}
    t0 = time.perf_counter()
    for name, args, ref in SPECIAL_ORACLES:
        got = complex(getattr(special, name)(*args))
        err = abs(got - ref) / abs(ref) if ref != 0 else abs(got)
        if err >= worst.get(name, (-1.0,))[0]:
            worst[name] = (err, args)
    tol = 1e-12 * tol_scale
    runtime = time.perf_counter() - t0
    return [CheckResult(6, f"{name} vs frozen mpmath values", tol, err, err <= tol,
                        runtime / len(worst), f"worst at {args}")
            for name, (err, args) in worst.items()]


# ---------------------------------------------------------------------------
# 7: contour-shift invariance
# ---------------------------------------------------------------------------

SHIFT_CHANNEL = ((2.0, 3.0), (5.0, 50.0), (4.0, 8.0))
SHIFT_SNR = 3.0


def check_contour_shift(seed=7, count=5, tol=1e-10, tol_scale=1.0):
    t0 = time.perf_counter()
    m, ms, g = SHIFT_CHANNEL
    ch = ScChannel.from_lists(m, ms, g)
    integrand = pdf_integrand(ch, SHIFT_SNR)
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(count):
        # left contours sit in 0 < sigma_i < m_i
        sigma = [rng.uniform(0.1, 0.9) * mi for mi in m]
        res = evaluate(integrand, contour_at(integrand, sigma, tol), tol=tol, rtol=tol)
        results.append((sigma, res))
    worst_ratio = 0.0
    worst_diff = 0.0
    for i in range(count):
        for j in range(i + 1, count):
            a, b = results[i][1], results[j][1]
            diff = abs(a.value - b.value)
            bound = (a.abs_error_estimate + b.abs_error_estimate) * tol_scale
            worst_diff = max(worst_diff, diff)
            worst_ratio = max(worst_ratio, diff / bound if bound > 0 else math.inf * (diff > 0))
    sig = "; ".join("(" + ", ".join(f"{s:.3f}" for s in sg) + ")" for sg, _ in results)
    return [CheckResult(7, "L=2 pdf kernel: spread over 5 random contours / summed error "
                        "estimates", 1.0, worst_ratio, worst_ratio <= 1.0,
                        time.perf_counter() - t0,
                        f"max difference {worst_diff:.3g}; sigma = {sig}")]


# ---------------------------------------------------------------------------
# whole suite
# ---------------------------------------------------------------------------

def run_all(tol_scale=1.0, out_dir=None, threads=1, sim=None, progress=None):
    """All criteria in order; figure CSVs go to ``out_dir`` (a temporary
    directory when None)."""
    say = progress or (lambda msg: None)
    results = []
    say("special functions")
    results += check_special_functions(tol_scale)
    say("contour-shift invariance")
    results += check_contour_shift(tol_scale=tol_scale)
    say("pdf identity")
    results += check_pdf_identity(tol_scale)
    say("figure data (Mellin-Barnes)")
    data = figure_rows("fox-h", sim, threads)
    say("normalisation and limits")
    results += check_limits(tol_scale, [r for _, rows in data[3] for r in rows])
    say("figure data (Monte Carlo)")
    t0 = time.perf_counter()
    mc_data = figure_rows("mc", sim, threads)
    results += check_mc_concordance(data, mc_data, time.perf_counter() - t0, tol_scale)
    say("figure shapes")
    with tempfile.TemporaryDirectory() as tmp:
        target = out_dir or tmp
        paths = {}
        for f, pairs in data.items():
            paths[f] = os.path.join(target, f"fig{f}.csv")
            write_csv(paths[f], pairs, preamble=(figures.TITLES[f],), timing=False)
        results += check_figure_shapes(paths)
    say("dual-path agreement")
    results += check_dual_path(tol_scale)
    return sorted(results, key=lambda r: r.criterion)


def write_report(path, results):
    def fmt(v):
        return f"{v:.6g}" if isinstance(v, float) else str(v)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in results:
            vals = (r.criterion, r.name, fmt(r.tolerance), fmt(r.achieved), fmt(r.margin),
                    "pass" if r.passed else "FAIL", fmt(r.runtime_s), r.detail)
            fh.write(",".join(str(v).replace(",", ";") for v in vals) + "\n")
