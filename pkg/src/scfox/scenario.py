"""Scenario configuration, sweep evaluation and CSV output.

A scenario is a JSON object::

    {
      "name": "light-L2",
      "branches": [{"m": 1.0, "m_s": 50, "gamma_bar_db": 0.0}, ...],
      "metric": "abep",                # abep acc adp auc pdf cdf mgf
      "complement": false,             # report 1 - value (adp, auc)
      "sweep": {"variable": "gamma_bar_db", "start": 0, "stop": 30, "step": 5},
      "method": "fox-h",               # fox-h quadrature mc all
      "params": {"rho": 1.0},
      "sim": {"samples": 1000000, "seed": 1, "streams": 8},
      "tol": 1e-10
    }

Branches may also be given as ``[m, m_s, gamma_bar_db]`` triples.  The
sweep is either ``start/stop/step``, ``log_start/log_stop/num`` (base-10
exponents) or an explicit ``values`` list.  Sweeping ``gamma_bar_db`` adds
a common offset in dB to every branch, so the ratios between branches are
kept.  Sweeping ``pf`` sets the detector threshold from the false-alarm
probability.  Sweeping ``gamma`` sets the SNR argument of pdf/cdf.

A file holds one scenario or ``{"scenarios": [...]}``.  This is the only
place where dB values are converted to linear units.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel, metrics, montecarlo
from .channel import BranchParams, ScChannel

METRICS = ("abep", "acc", "adp", "auc", "pdf", "cdf", "mgf")
SWEEPS = ("gamma_bar_db", "pf", "gamma")
METHOD_CHOICES = ("fox-h", "quadrature", "mc", "all")
METHOD_TAGS = {"fox-h": "fox-h", "quadrature": "quadrature", "mc": "monte-carlo"}
CSV_COLUMNS = ("scenario", "L", "method", "sweep_value", "metric_value",
               "error_estimate", "elapsed_ms", "error")

# cross-method agreement used for the exit status when method = all
AGREEMENT_RTOL = {"abep": 1e-4, "acc": 1e-4, "auc": 1e-4, "adp": 1e-3,
                  "pdf": 1e-6, "cdf": 1e-6, "mgf": 1e-6}
MC_SIGMA = 5.0


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending key."""


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    branches: tuple          # (m, m_s, gamma_bar_db) triples
    metric: str
    sweep_variable: str
    sweep_values: tuple
    method: str = "fox-h"
    params: dict = field(default_factory=dict)
    sim: montecarlo.SimConfig = montecarlo.SimConfig()
    complement: bool = False
    tol: float = 1e-10
    comments: tuple = ()

    @property
    def L(self):
        return len(self.branches)

    def channel_at(self, offset_db=0.0):
        return ScChannel(tuple(BranchParams(m, ms, db_to_linear(g + offset_db))
                               for m, ms, g in self.branches))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _require(obj, key, where):
    if key not in obj:
        raise ConfigError(f"{where}: missing key '{key}'")
    return obj[key]


def _number(value, key, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}': expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"key '{key}': must be finite")
    if positive and value <= 0:
        raise ConfigError(f"key '{key}': must be positive")
    if integer and int(value) != value:
        raise ConfigError(f"key '{key}': must be an integer")
    return int(value) if integer else float(value)


def _parse_branches(raw):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("key 'branches': expected a nonempty list")
    out = []
    for i, b in enumerate(raw):
        key = f"branches[{i}]"
        if isinstance(b, dict):
            unknown = set(b) - {"m", "m_s", "gamma_bar_db"}
            if unknown:
                raise ConfigError(f"key '{key}.{sorted(unknown)[0]}': unknown key")
            trip = (_require(b, "m", key), _require(b, "m_s", key), b.get("gamma_bar_db", 0.0))
        elif isinstance(b, list) and len(b) == 3:
            trip = tuple(b)
        else:
            raise ConfigError(f"key '{key}': expected an object or [m, m_s, gamma_bar_db]")
        m = _number(trip[0], f"{key}.m", positive=True)
        ms = _number(trip[1], f"{key}.m_s", positive=True)
        g = _number(trip[2], f"{key}.gamma_bar_db")
        out.append((m, ms, g))
    return tuple(out)


def _parse_sweep(raw):
    if not isinstance(raw, dict):
        raise ConfigError("key 'sweep': expected an object")
    var = _require(raw, "variable", "sweep")
    if var not in SWEEPS:
        raise ConfigError(f"key 'sweep.variable': expected one of {SWEEPS}, got {var!r}")
    if "values" in raw:
        vals = raw["values"]
        if not isinstance(vals, list):
            raise ConfigError("key 'sweep.values': expected a list")
        values = [_number(v, "sweep.values") for v in vals]
    elif "num" in raw:
        a = _number(_require(raw, "log_start", "sweep"), "sweep.log_start")
        b = _number(_require(raw, "log_stop", "sweep"), "sweep.log_stop")
        n = _number(raw["num"], "sweep.num", integer=True)
        if n < 1:
            raise ConfigError("key 'sweep.num': empty sweep")
        values = list(np.logspace(a, b, n))
    else:
        a = _number(_require(raw, "start", "sweep"), "sweep.start")
        b = _number(_require(raw, "stop", "sweep"), "sweep.stop")
        step = _number(raw.get("step", 1.0), "sweep.step", positive=True)
        if b < a:
            raise ConfigError("key 'sweep.stop': empty sweep (stop < start)")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        values = [a + k * step for k in range(n)]
    if not values:
        raise ConfigError("key 'sweep': empty sweep")
    if var == "pf" and any(not 0 < v <= 1 for v in values):
        raise ConfigError("key 'sweep.values': false-alarm probabilities must lie in (0, 1]")
    if var == "gamma" and any(v <= 0 for v in values):
        raise ConfigError("key 'sweep.values': SNR values must be positive")
    return var, tuple(float(v) for v in values)


_PARAM_KEYS = {"rho", "bandwidth", "u", "lambda", "target_pf", "s", "snr"}


def _parse_params(raw, metric, sweep_var):
    if not isinstance(raw, dict):
        raise ConfigError("key 'params': expected an object")
    unknown = set(raw) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"key 'params.{sorted(unknown)[0]}': unknown parameter")
    p = {}
    if metric == "abep":
        p["rho"] = _number(raw.get("rho", 1.0), "params.rho", positive=True)
    elif metric == "acc":
        p["bandwidth"] = _number(raw.get("bandwidth", 1.0), "params.bandwidth", positive=True)
    elif metric in ("adp", "auc"):
        u = _number(raw.get("u", 3), "params.u", integer=True)
        if u < 1:
            raise ConfigError("key 'params.u': must be >= 1")
        p["u"] = u
        if metric == "adp" and sweep_var != "pf":
            if "lambda" in raw:
                lam = _number(raw["lambda"], "params.lambda")
                if lam < 0:
                    raise ConfigError("key 'params.lambda': must be >= 0")
                p["lambda"] = lam
            elif "target_pf" in raw:
                t = _number(raw["target_pf"], "params.target_pf")
                if not 0 < t <= 1:
                    raise ConfigError("key 'params.target_pf': must lie in (0, 1]")
                p["target_pf"] = t
            else:
                raise ConfigError("key 'params.lambda': adp needs 'lambda' or 'target_pf'")
    elif metric == "mgf":
        p["s"] = _number(_require(raw, "s", "params"), "params.s", positive=True)
    elif metric in ("pdf", "cdf") and sweep_var != "gamma":
        p["snr"] = _number(_require(raw, "snr", "params"), "params.snr", positive=True)
    return p


def parse_scenario(raw, defaults=None):
    """Validate one scenario object; ``defaults`` supplies method/sim values.

    Keys present in the config win over ``defaults`` (which carry the
    command-line flags).
    """
    defaults = defaults or {}
    if not isinstance(raw, dict):
        raise ConfigError("scenario: expected a JSON object")
    known = {"name", "branches", "metric", "complement", "sweep", "method", "params",
             "sim", "tol", "threads", "comments"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"key '{sorted(unknown)[0]}': unknown key")
    name = _require(raw, "name", "scenario")
    if not isinstance(name, str) or not name or "," in name:
        raise ConfigError("key 'name': expected a nonempty string without commas")
    branches = _parse_branches(_require(raw, "branches", name))
    metric = _require(raw, "metric", name)
    if metric not in METRICS:
        raise ConfigError(f"key 'metric': expected one of {METRICS}, got {metric!r}")
    var, values = _parse_sweep(_require(raw, "sweep", name))
    if var == "pf" and metric != "adp":
        raise ConfigError("key 'sweep.variable': 'pf' sweeps need metric 'adp'")
    if var == "gamma" and metric not in ("pdf", "cdf"):
        raise ConfigError("key 'sweep.variable': 'gamma' sweeps need metric 'pdf' or 'cdf'")
    method = raw.get("method", defaults.get("method", "fox-h"))
    if method not in METHOD_CHOICES:
        raise ConfigError(f"key 'method': expected one of {METHOD_CHOICES}, got {method!r}")
    params = _parse_params(raw.get("params", {}), metric, var)
    sim_raw = raw.get("sim", {})
    if not isinstance(sim_raw, dict):
        raise ConfigError("key 'sim': expected an object")
    unknown = set(sim_raw) - {"samples", "seed", "streams"}
    if unknown:
        raise ConfigError(f"key 'sim.{sorted(unknown)[0]}': unknown key")
    sim_vals = {k: defaults[k] for k in ("samples", "seed", "streams") if k in defaults}
    for k in ("samples", "seed", "streams"):
        if k in sim_raw:
            sim_vals[k] = _number(sim_raw[k], f"sim.{k}", integer=True)
    try:
        sim = montecarlo.SimConfig(**sim_vals)
    except ValueError as exc:
        raise ConfigError(f"key 'sim': {exc}") from None
    complement = raw.get("complement", False)
    if not isinstance(complement, bool):
        raise ConfigError("key 'complement': expected true or false")
    if complement and metric not in ("adp", "auc"):
        raise ConfigError("key 'complement': only defined for adp and auc")
    tol = _number(raw.get("tol", 1e-10), "tol", positive=True)
    comments = raw.get("comments", [])
    if isinstance(comments, str):
        comments = [comments]
    return Scenario(name, branches, metric, var, values, method, params, sim,
                    complement, tol, tuple(comments))


def load_config(path, defaults=None):
    """Read a JSON config file; returns (scenarios, threads or None)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    threads = None
    if isinstance(raw, dict) and "scenarios" in raw:
        extra = set(raw) - {"scenarios", "threads"}
        if extra:
            raise ConfigError(f"key '{sorted(extra)[0]}': unknown key")
        items = raw["scenarios"]
        if not isinstance(items, list) or not items:
            raise ConfigError("key 'scenarios': expected a nonempty list")
        if "threads" in raw:
            threads = _number(raw["threads"], "threads", positive=True, integer=True)
    else:
        items = [raw]
        if isinstance(raw, dict) and "threads" in raw:
            threads = _number(raw["threads"], "threads", positive=True, integer=True)
    return [parse_scenario(s, defaults) for s in items], threads


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class Row:
    scenario: str
    L: int
    method: str
    sweep_value: float
    metric_value: float = math.nan
    error_estimate: float = math.nan
    elapsed_ms: float = math.nan
    error: str = ""


def _point_setup(sc, x):
    """Channel and metric arguments at one sweep value."""
    offset = x if sc.sweep_variable == "gamma_bar_db" else 0.0
    ch = sc.channel_at(offset)
    p = dict(sc.params)
    if sc.metric == "adp":
        if sc.sweep_variable == "pf":
            lam = 0.0 if x >= 1.0 else metrics.lambda_for_pf(p["u"], x)
        elif "lambda" in p:
            lam = p["lambda"]
        else:
            lam = 0.0 if p["target_pf"] >= 1.0 else metrics.lambda_for_pf(p["u"], p["target_pf"])
        p["ed"] = metrics.EdParams(p["u"], lam)
    if sc.metric in ("pdf", "cdf"):
        p["snr"] = x if sc.sweep_variable == "gamma" else p["snr"]
    return ch, p


def _analytic(sc, ch, p, method):
    """(value, error) of the metric, or its complement when requested."""
    m = sc.metric
    fox = method == "fox-h"
    if m == "abep":
        est = (metrics.abep_foxh(ch, p["rho"], sc.tol) if fox
               else metrics.abep_quadrature(ch, p["rho"]))
    elif m == "acc":
        est = (metrics.acc_foxh(ch, p["bandwidth"], sc.tol) if fox
               else metrics.acc_quadrature(ch, p["bandwidth"]))
    elif m == "adp":
        est = (metrics.adp_complement_foxh(ch, p["ed"], sc.tol) if fox
               else metrics.adp_complement_semianalytic(ch, p["ed"]))
        return (est.value, est.abs_error) if sc.complement else (1.0 - est.value, est.abs_error)
    elif m == "auc":
        est = (metrics.auc_complement_foxh(ch, p["u"], sc.tol) if fox
               else metrics.auc_complement_quadrature(ch, p["u"]))
        return (est.value, est.abs_error) if sc.complement else (1.0 - est.value, est.abs_error)
    elif m == "mgf":
        est = channel.sc_mgf(ch, p["s"], sc.tol) if fox else metrics.mgf_quadrature(ch, p["s"])
        if fox:
            return est.value, est.abs_error_estimate
    elif m == "pdf":
        if fox:
            r = channel.sc_pdf_foxh(ch, p["snr"], sc.tol)
            return r.value, r.abs_error_estimate
        return channel.sc_pdf_product_rule(ch, p["snr"]), 0.0
    elif m == "cdf":
        if fox:
            r = channel.sc_cdf_foxh(ch, p["snr"], sc.tol)
            return r.value, r.abs_error_estimate
        return channel.sc_cdf(ch, p["snr"]), 0.0
    return est.value, est.abs_error


def _monte_carlo(sc, ch, p):
    m = sc.metric
    if m == "pdf":
        raise ValueError("Monte Carlo density estimates are not provided")
    kind = {"abep": "abep", "acc": "acc", "mgf": "mgf", "cdf": "cdf",
            "adp": "adp-complement" if sc.complement else "adp",
            "auc": "auc-complement" if sc.complement else "auc"}[m]
    arg = {"abep": p.get("rho"), "acc": p.get("bandwidth"), "mgf": p.get("s"),
           "cdf": p.get("snr"), "adp": p.get("ed"), "auc": p.get("u")}[m]
    est = montecarlo.estimate_metric(kind, ch, arg, sc.sim, threads=1)
    return est.mean, est.stderr


def methods_for(method):
    return ("fox-h", "quadrature", "mc") if method == "all" else (method,)


def evaluate_point(sc, x, method):
    row = Row(sc.name, sc.L, METHOD_TAGS[method], x)
    t0 = time.perf_counter()
    try:
        ch, p = _point_setup(sc, x)
        if method == "mc":
            value, err = _monte_carlo(sc, ch, p)
        else:
            value, err = _analytic(sc, ch, p, method)
        row.metric_value = float(value)
        row.error_estimate = float(err)
    except Exception as exc:  # reported per row, the sweep continues
        row.error = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    row.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return row


def run_scenario(sc, threads=1):
    """All rows of a scenario, in sweep order then method order."""
    tasks = [(x, meth) for x in sc.sweep_values for meth in methods_for(sc.method)]
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: evaluate_point(sc, *t), tasks))
    return [evaluate_point(sc, *t) for t in tasks]


def disagreements(sc, rows):
    """Messages for sweep points where the methods of one scenario disagree."""
    out = []
    by_x = {}
    for r in rows:
        by_x.setdefault(r.sweep_value, {})[r.method] = r
    for r in rows:
        if r.error:
            out.append(f"{sc.name} at {r.sweep_value:g} ({r.method}): {r.error}")
    for x, group in by_x.items():
        fox, quad, mc = (group.get(k) for k in ("fox-h", "quadrature", "monte-carlo"))
        ref = quad if quad is not None and not quad.error else None
        if fox is not None and ref is not None and not fox.error:
            tol = max(AGREEMENT_RTOL[sc.metric] * abs(ref.metric_value),
                      fox.error_estimate + ref.error_estimate)
            if abs(fox.metric_value - ref.metric_value) > tol:
                out.append(f"{sc.name} at {x:g}: fox-h {fox.metric_value:.17g} vs "
                           f"quadrature {ref.metric_value:.17g}")
        ana = ref if ref is not None else fox
        if mc is not None and not mc.error and ana is not None and not ana.error:
            # Monte Carlo cannot resolve differences below one sample's weight
            diff = abs(mc.metric_value - ana.metric_value)
            if diff > MC_SIGMA * mc.error_estimate and diff > 1.0 / sc.sim.samples:
                out.append(f"{sc.name} at {x:g}: monte-carlo {mc.metric_value:.17g} "
                           f"+- {mc.error_estimate:.3g} vs {ana.metric_value:.17g}")
    return out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def header_lines(sc):
    lines = [f"scenario {sc.name}: metric={sc.metric}"
             + (" (complement 1 - value)" if sc.complement else "")
             + f"; L={sc.L}; sweep={sc.sweep_variable}; method={sc.method}",
             "  branches (m, m_s, gamma_bar_db): "
             + "; ".join(f"({m:g}, {ms:g}, {g:g})" for m, ms, g in sc.branches),
             "  params: " + (", ".join(f"{k}={v}" for k, v in sorted(sc.params.items()))
                             or "none")
             + f"; tol={sc.tol:g}; sim samples={sc.sim.samples} seed={sc.sim.seed}"
             f" streams={sc.sim.streams}"]
    lines += [f"  {c}" for c in sc.comments]
    return lines


def write_csv(path, scenarios_rows, preamble=(), timing=True):
    """Write rows of several scenarios with '#' comment headers."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        for sc, _ in scenarios_rows:
            for line in header_lines(sc):
                fh.write(f"# {line}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for _, rows in scenarios_rows:
            for r in rows:
                vals = [r.scenario, r.L, r.method, r.sweep_value, r.metric_value,
                        r.error_estimate, r.elapsed_ms if timing else math.nan, r.error]
                fh.write(",".join(_fmt(v) for v in vals) + "\n")


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv`, as dicts with floats parsed."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    cols = lines[0].split(",")
    for ln in lines[1:]:
        d = dict(zip(cols, ln.split(",", len(cols) - 1)))
        for k in ("sweep_value", "metric_value", "error_estimate", "elapsed_ms"):
            d[k] = float(d[k]) if d[k] else math.nan
        d["L"] = int(d["L"])
        rows.append(d)
    return rows
