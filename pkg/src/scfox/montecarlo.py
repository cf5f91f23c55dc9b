"""Monte Carlo estimates of the selection-combining metrics.

Branch SNRs are drawn as ``(G1 / G2) / Xi`` with independent unit-scale
gamma variates of shapes m and m_s.  For shapes below 1 the variate is
boosted, ``G(a) = G(a + 1) * U^(1/a)``, and everything is carried in log
space so that small shapes do not underflow.

Samples are split over independent streams spawned from one SeedSequence.
Each stream reduces its own chunks and the stream summaries are merged in
stream order, so the result depends on (samples, seed, streams) only and
not on how many threads run the streams.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import chndtr

from .metrics import EdParams, auc_conditional_complement
from .special import gaussian_q

KINDS = ("abep", "acc", "adp", "adp-complement", "auc", "auc-complement", "mgf", "cdf")
_CHUNK = 1 << 18


@dataclass(frozen=True)
class SimConfig:
    samples: int = 1_000_000
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1000:
            raise ValueError("samples must be an integer >= 1000")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.streams) != self.streams or self.streams < 1:
            raise ValueError("streams must be an integer >= 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int


def _log_gamma_variates(rng, shape, size):
    if shape >= 1.0:
        return np.log(rng.standard_gamma(shape, size))
    boosted = np.log(rng.standard_gamma(shape + 1.0, size))
    return boosted + np.log(rng.random(size)) / shape


def _log_branch(p, rng, size):
    return (_log_gamma_variates(rng, p.m, size) - _log_gamma_variates(rng, p.m_s, size)
            - math.log(p.xi))


def sample_branch(p, rng, size=None):
    """Draw branch SNRs; a scalar when ``size`` is None."""
    n = 1 if size is None else size
    out = np.exp(_log_branch(p, rng, n))
    return float(out[0]) if size is None else out


def sample_sc(ch, rng, size=None):
    """Draw the maximum SNR over independently sampled branches."""
    n = 1 if size is None else size
    log_max = _log_branch(ch.branches[0], rng, n)
    for b in ch.branches[1:]:
        log_max = np.maximum(log_max, _log_branch(b, rng, n))
    out = np.exp(log_max)
    return float(out[0]) if size is None else out


def functional(kind, params):
    """Conditional metric as a vectorised function of the SNR."""
    if kind == "abep":
        rho = float(params)
        return lambda g: gaussian_q(np.sqrt(2.0 * rho * g))
    if kind == "acc":
        bw = float(params)
        return lambda g: bw * np.log1p(g) / math.log(2.0)
    if kind in ("adp", "adp-complement"):
        ed = params if isinstance(params, EdParams) else EdParams(*params)
        if ed.lam == 0:
            const = 1.0 if kind == "adp" else 0.0
            return lambda g: np.full(np.shape(g), const)
        # 1 - Q_u(sqrt(2 g), sqrt(lam)) is the noncentral chi-square CDF at lam
        if kind == "adp":
            return lambda g: 1.0 - chndtr(ed.lam, 2 * ed.u, 2.0 * g)
        return lambda g: chndtr(ed.lam, 2 * ed.u, 2.0 * g)
    if kind in ("auc", "auc-complement"):
        u = int(params)
        if kind == "auc":
            return lambda g: 1.0 - auc_conditional_complement(g, u)
        return lambda g: auc_conditional_complement(g, u)
    if kind == "mgf":
        s = float(params)
        return lambda g: np.exp(-s * g)
    if kind == "cdf":
        t = float(params)
        return lambda g: (g <= t).astype(float)
    raise ValueError(f"unknown metric kind {kind!r}; expected one of {KINDS}")


def _merge(a, b):
    """Chan et al. pairwise update of (count, mean, M2)."""
    na, ma, sa = a
    nb, mb, sb = b
    if na == 0:
        return b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def _run_stream(ch, func, n, seed_seq):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    state = (0, 0.0, 0.0)
    done = 0
    while done < n:
        k = min(_CHUNK, n - done)
        v = func(sample_sc(ch, rng, k))
        mean = float(np.mean(v))
        state = _merge(state, (k, mean, float(np.sum((v - mean) ** 2))))
        done += k
    return state


def default_threads():
    env = os.environ.get("SCFOX_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def estimate_metric(kind, ch, params, cfg, threads=None):
    """Monte Carlo mean and standard error of a conditional metric.

    ``params`` is rho (abep), bandwidth (acc), EdParams (adp), u (auc),
    s (mgf) or the SNR threshold (cdf).
    """
    func = functional(kind, params)
    streams = int(cfg.streams)
    counts = [cfg.samples // streams + (1 if k < cfg.samples % streams else 0)
              for k in range(streams)]
    seqs = np.random.SeedSequence(int(cfg.seed)).spawn(streams)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or streams == 1:
        states = [_run_stream(ch, func, n, s) for n, s in zip(counts, seqs)]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, streams)) as pool:
            states = list(pool.map(lambda a: _run_stream(ch, func, *a), zip(counts, seqs)))
    total = (0, 0.0, 0.0)
    for st in states:
        total = _merge(total, st)
    n, mean, m2 = total
    std = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return McEstimate(mean, std / math.sqrt(n), n)
