"""Relative-error estimation of total variation distance between Bayes nets.

``estimate_tv`` estimates d_TV(P, Q) for two nets over one DAG by importance
sampling from the residual distribution pi(w) = g(w) / Z, where

    h(w, i) = min(P(w_i | w_pa(i)), Q(w_i | w_pa(i)))
    g(w)    = P(w) - prod_i h(w, i)
    f(w)    = max(0, P(w) - Q(w)) / g(w)        (always in [0, 1])
    Z       = sum_w g(w) = Pr_L[X != Y]

with L the local partial coupling. Every sample from pi is drawn symbol by
symbol with inference queries on L, and E_pi[f] * Z = d_TV(P, Q).

``estimate_tv_uniform`` estimates d_TV(P, uniform) from direct mass
evaluations, no inference needed.
"""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .coupling import CouplingNet, build_coupling, diagonal_symbols
from .errors import BNInputError, ContractViolation
from .inference import Factor, InferenceOracle, QuerySets, multiply, sum_out, unit_factor
from .model import BayesNet, check_assignment, log_mass_batch, mass, moralize, same_shape
from .treedecomp import TreeDecomposition, decompose

Z_ZERO_TOL = 1e-12
CHUNK = 4096
WIDE_WIDTH_WARNING = 12
ENGINES = ("direct", "cache", "incremental")


# ---------------------------------------------------------------------------
# pointwise estimator pieces
# ---------------------------------------------------------------------------

def h_term(p: BayesNet, q: BayesNet, w: Sequence[int], i: int):
    check_assignment(p, w)
    pa = [w[j] for j in p.parents[i]]
    r = p.row_index(i, pa)
    return min(p.cpts[i].table[r, w[i]], q.cpts[i].table[r, w[i]])


def g_value(p: BayesNet, q: BayesNet, w: Sequence[int]):
    prod = Fraction(1) if p.exact else 1.0
    for i in range(p.n):
        prod = prod * h_term(p, q, w, i)
    return mass(p, w) - prod


def f_value(p: BayesNet, q: BayesNet, w: Sequence[int]):
    g = g_value(p, q, w)
    if g <= 0:
        raise ContractViolation(f"f is undefined at {list(w)}: g(w) = {g}")
    diff = mass(p, w) - mass(q, w)
    return (diff if diff > 0 else 0 * diff) / g


def f_batch(p: BayesNet, q: BayesNet, ws: np.ndarray) -> np.ndarray:
    """Float f on many assignments, in ratio form so long nets do not underflow.

    f = max(0, 1 - Q/P) / (1 - prod_i min(1, Q_i / P_i)) with every ratio taken per node.
    """
    ws = np.asarray(ws)
    ell = p.alphabet
    log_ratio = np.zeros(ws.shape[0])
    log_hratio = np.zeros(ws.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, ps in enumerate(p.parents):
            r = np.zeros(ws.shape[0], dtype=np.int64)
            for j in ps:
                r = r * ell + ws[:, j]
            pv = np.asarray(p.cpts[i].table, dtype=np.float64)[r, ws[:, i]]
            qv = np.asarray(q.cpts[i].table, dtype=np.float64)[r, ws[:, i]]
            lr = np.log(qv) - np.log(pv)
            log_ratio += lr
            log_hratio += np.minimum(lr, 0.0)
        num = np.maximum(0.0, -np.expm1(log_ratio))
        den = -np.expm1(log_hratio)
        out = num / den
    if np.any(~(den > 0)):
        raise ContractViolation("f evaluated where g(w) = 0")
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# parameters and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateParams:
    eps: float
    delta: float
    seed: int = 0
    m_override: int | None = None

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise BNInputError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.delta < 1:
            raise BNInputError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 <= self.seed < 2 ** 63:
            raise BNInputError("seed must be a non-negative 63-bit integer")
        if self.m_override is not None and self.m_override < 1:
            raise BNInputError("sample count override must be positive")


@dataclass
class EstimateReport:
    estimate: float
    m: int
    z: float
    alpha_hat: float
    queries: int
    seed: int
    elapsed: float
    width: int | None = None
    phase: str | None = None
    evaluations: int = 0
    max_sample: float | None = None
    exact_estimate: Fraction | None = field(default=None, repr=False)
    exact_z: Fraction | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "estimate": self.estimate,
            "m": self.m,
            "z": self.z,
            "alpha_hat": self.alpha_hat,
            "queries": self.queries,
            "seed": self.seed,
            "elapsed_ms": round(self.elapsed * 1000.0, 3),
            "width": self.width,
        }
        if self.phase is not None:
            out["phase"] = self.phase
        return out


def sample_count(n: int, eps: float, delta: float, m_override: int | None = None) -> int:
    """Smallest m with 2 exp(-m eps^2 / (2 n^2)) <= delta."""
    if m_override is not None:
        return int(m_override)
    return math.ceil(2 * n * n * math.log(2 / delta) / (eps * eps))


# ---------------------------------------------------------------------------
# normaliser and prefix normalisers via inference on the coupling
# ---------------------------------------------------------------------------

def _as_coupling(L) -> CouplingNet:
    return L if isinstance(L, CouplingNet) else CouplingNet.from_net(L)


def _oracle(L: CouplingNet, td, oracle):
    if oracle is not None:
        return oracle
    return InferenceOracle(L.net, td)


def _prefix_queries(L: CouplingNet, prefix: Sequence[int]) -> tuple[QuerySets, QuerySets]:
    """The two query set families whose difference is Pr[X != Y, prefix of X]."""
    ell = L.base_alphabet
    order = L.dag.topo_order
    if len(prefix) > L.n:
        raise BNInputError("prefix longer than the net")
    diag = diagonal_symbols(ell)
    x_sets: list = [None] * L.n
    d_sets: list = [diag] * L.n
    for pos, b in enumerate(prefix):
        if not 0 <= b < ell:
            raise BNInputError(f"symbol {b} outside alphabet of size {ell}")
        t = order[pos]
        x_sets[t] = frozenset(b * ell + z for z in range(ell))
        d_sets[t] = frozenset({b * ell + b})
    return QuerySets(tuple(x_sets)), QuerySets(tuple(d_sets))


def compute_Z(L, td: TreeDecomposition | None = None, oracle: InferenceOracle | None = None):
    """Pr_L[X != Y] = 1 - Pr[every pair on the diagonal]: one query."""
    L = _as_coupling(L)
    oracle = _oracle(L, td, oracle)
    diag = diagonal_symbols(L.base_alphabet)
    return 1 - oracle.query(QuerySets((diag,) * L.n))


def compute_Z_prefix(L, td: TreeDecomposition | None, prefix: Sequence[int],
                     oracle: InferenceOracle | None = None, count: int = 1):
    """Sum of g over assignments whose first len(prefix) nodes, in topological order, equal ``prefix``."""
    L = _as_coupling(L)
    oracle = _oracle(L, td, oracle)
    qx, qd = _prefix_queries(L, prefix)
    return oracle.query(qx, count=count) - oracle.query(qd, count=count)


def _is_zero(z) -> bool:
    return z == 0 if isinstance(z, Fraction) else abs(z) <= Z_ZERO_TOL


def _choose(vals: np.ndarray, zp: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF pick per row. ``vals`` holds the first ell-1 masses; the last is zp minus their sum."""
    b_count = vals.shape[1] + 1
    acc = np.zeros(vals.shape[0])
    cum = np.empty((vals.shape[0], b_count))
    for b in range(b_count - 1):
        acc = acc + np.maximum(vals[:, b], 0.0)
        cum[:, b] = acc
    cum[:, -1] = np.maximum(acc, zp)
    target = u * cum[:, -1]
    return np.argmax(cum > target[:, None], axis=1), cum


def _choose_exact(vals: list, zp, u: float) -> tuple[int, Fraction]:
    masses = [max(v, Fraction(0)) for v in vals]
    masses.append(max(zp - sum(masses, Fraction(0)), Fraction(0)))
    total = sum(masses, Fraction(0))
    target = Fraction(u) * total
    acc = Fraction(0)
    for b, m in enumerate(masses):
        acc += m
        if acc > target:
            return b, m
    raise ContractViolation("no symbol carries positive residual mass")


def _sample_one(L: CouplingNet, oracle: InferenceOracle, z, u_row) -> list[int]:
    ell = L.base_alphabet
    order = L.dag.topo_order
    prefix: list[int] = []
    zp = z
    exact = isinstance(z, Fraction)
    for k in range(L.n):
        vals = [compute_Z_prefix(L, None, prefix + [b], oracle) for b in range(ell - 1)]
        if exact:
            b, zp = _choose_exact(vals, zp, float(u_row[k]))
        else:
            picked, cum = _choose(np.array([vals], dtype=np.float64).reshape(1, ell - 1),
                                  np.array([zp], dtype=np.float64), np.array([u_row[k]]))
            b = int(picked[0])
            zp = cum[0, b] - (cum[0, b - 1] if b else 0.0)
        prefix.append(b)
    w = [0] * L.n
    for pos, t in enumerate(order):
        w[t] = prefix[pos]
    return w


def sample_pi(L, td: TreeDecomposition | None, z, rng, oracle: InferenceOracle | None = None) -> list[int]:
    """One draw from pi = g / Z, symbol by symbol along the topological order.

    ``rng`` is a numpy Generator or a sequence of n uniforms in [0, 1). Each node
    asks for the prefix normalisers of all but the last symbol (two queries
    each); the last symbol's mass is the previous normaliser minus the rest.
    """
    L = _as_coupling(L)
    if _is_zero(z) or z < 0:
        raise ContractViolation("pi is undefined when Z = 0")
    oracle = _oracle(L, td, oracle)
    u = rng.random(L.n) if isinstance(rng, np.random.Generator) else np.asarray(rng, dtype=np.float64)
    return _sample_one(L, oracle, z, u)


def _sample_cached(L: CouplingNet, oracle: InferenceOracle, z: float, U: np.ndarray) -> np.ndarray:
    """Batch version of ``sample_pi`` on a memoising oracle; same picks for the same uniforms."""
    ell = L.base_alphabet
    order = L.dag.topo_order
    B = U.shape[0]
    pref = np.zeros((B, L.n), dtype=np.int64)
    zp = np.full(B, float(z))
    for k in range(L.n):
        if k == 0:
            uniq = np.zeros((1, 0), dtype=np.int64)
            inv = np.zeros(B, dtype=np.int64)
        else:
            uniq, inv = np.unique(pref[:, :k], axis=0, return_inverse=True)
            inv = inv.reshape(-1)
        mult = np.bincount(inv, minlength=len(uniq))
        table = np.empty((len(uniq), ell - 1))
        for j, row in enumerate(uniq):
            base = [int(s) for s in row]
            for b in range(ell - 1):
                table[j, b] = compute_Z_prefix(L, None, base + [b], oracle, count=int(mult[j]))
        picked, cum = _choose(table[inv], zp, U[:, k])
        prev = np.where(picked > 0, cum[np.arange(B), np.maximum(picked - 1, 0)], 0.0)
        zp = cum[np.arange(B), picked] - prev
        pref[:, k] = picked
    w = np.empty_like(pref)
    w[:, list(order)] = pref
    return w


class IncrementalSampler:
    """pi-sampler answering prefix queries from memoised restricted factors.

    For a prefix fixed on the first k nodes in topological order, the query
    with every later pair on the diagonal factorises as
    (product of the prefix's diagonal CPT entries) * beta_k(frontier), where
    beta_k sums the diagonal-restricted CPT factors of the suffix and depends
    only on prefix nodes with children in the suffix. beta_k is precomputed
    once by eliminating the suffix backwards. The X-prefix query is the
    product of the coupling's X-marginal CPT entries. Both are exactly the
    values the direct queries return, so the sampled law is the same; the
    logical query count is booked identically.
    """

    MAX_TABLE = 1 << 24

    def __init__(self, L: CouplingNet):
        self.L = L
        ell = self.ell = L.base_alphabet
        net = L.net
        self.order = L.dag.topo_order
        diag_idx = np.array([b * ell + b for b in range(ell)])
        self.px: list[np.ndarray] = []
        self.h: list[np.ndarray] = []
        for i, ps in enumerate(net.parents):
            k = len(ps)
            t = np.asarray(net.cpts[i].table, dtype=np.float64).reshape((ell * ell,) * k + (ell, ell))
            sub = t[np.ix_(*([diag_idx] * k + [np.arange(ell), np.arange(ell)]))] if k else t
            self.h.append(np.ascontiguousarray(np.diagonal(sub, axis1=-2, axis2=-1)).reshape(-1, ell))
            self.px.append(sub.sum(axis=-1).reshape(-1, ell))
        # beta[k]: factor over prefix nodes, for prefix length k
        n = L.n
        self.beta: list[Factor] = [None] * (n + 1)
        self.beta_log: list[float] = [0.0] * (n + 1)
        cur = unit_factor()
        lg = 0.0
        self.beta[n] = cur
        for pos in range(n - 1, -1, -1):
            t = self.order[pos]
            hf = Factor(net.parents[t] + (t,), self.h[t].reshape((ell,) * (len(net.parents[t]) + 1)))
            prod = multiply(hf, cur)
            if prod.size > self.MAX_TABLE:
                raise BNInputError("incremental engine: suffix frontier too wide; use the cache or direct engine")
            cur = sum_out(prod, t)
            top = float(np.max(cur.table)) if cur.size else 0.0
            if top > 0:
                cur = Factor(cur.scope, cur.table / top)
                lg += math.log(top)
            self.beta[pos] = cur
            self.beta_log[pos] = lg

    def diagonal_mass(self) -> float:
        """Pr_L[X = Y] recovered from the memoised tables."""
        return float(self.beta[0].table[()]) * math.exp(self.beta_log[0])

    def sample(self, z: float, U: np.ndarray) -> np.ndarray:
        ell = self.ell
        net = self.L.net
        B = U.shape[0]
        w = np.zeros((B, self.L.n), dtype=np.int64)
        la = np.full(B, -math.log(z))
        lbh = la.copy()
        ones = np.ones(B)
        rows = np.arange(B)
        with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
            for pos, t in enumerate(self.order):
                r = np.zeros(B, dtype=np.int64)
                for j in net.parents[t]:
                    r = r * ell + w[:, j]
                px = self.px[t][r]
                hh = self.h[t][r]
                beta = self.beta[pos + 1]
                base = np.zeros(B, dtype=np.int64)
                stride_t = 0
                stride = 1
                for v in reversed(beta.scope):
                    if v == t:
                        stride_t = stride
                    else:
                        base += w[:, v] * stride
                    stride *= ell
                flat = beta.table.reshape(-1)
                sc = self.beta_log[pos + 1]
                vals = np.empty((B, ell - 1))
                for b in range(ell - 1):
                    bv = flat[base + b * stride_t]
                    vals[:, b] = np.exp(la) * px[:, b] - np.exp(lbh + sc) * hh[:, b] * bv
                picked, cum = _choose(vals, ones, U[:, pos])
                prev = np.where(picked > 0, cum[rows, np.maximum(picked - 1, 0)], 0.0)
                mu = cum[rows, picked] - prev
                w[:, t] = picked
                la = la + np.log(px[rows, picked]) - np.log(mu)
                lbh = lbh + np.log(hh[rows, picked]) - np.log(mu)
        return w


# ---------------------------------------------------------------------------
# the estimators
# ---------------------------------------------------------------------------

def _uniforms(seed: int, stream: int, chunk: int, rows: int, cols: int) -> np.ndarray:
    """Counter-based uniforms: block ``chunk`` of stream ``stream`` under ``seed``."""
    key = np.array([seed, (stream << 40) | chunk], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random((rows, cols))


def _chunks(m: int):
    return [(c, c * CHUNK, min(m, (c + 1) * CHUNK)) for c in range((m + CHUNK - 1) // CHUNK)]


def _run_chunks(fn, m: int, threads: int):
    jobs = _chunks(m)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def estimate_tv(p: BayesNet, q: BayesNet, params: EstimateParams, engine: str = "direct",
                threads: int = 1, exact: bool = False) -> EstimateReport:
    """Estimate d_TV(P, Q) to relative error eps with probability 1 - delta.

    ``engine`` picks how prefix queries are answered: ``direct`` runs variable
    elimination for every query, ``cache`` memoises identical queries (per
    chunk of samples), ``incremental`` precomputes suffix messages once. All
    three consume the same uniforms and return the same estimator; the
    reported ``queries`` is the logical count in every case.
    """
    if engine not in ENGINES:
        raise BNInputError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if threads < 1:
        raise BNInputError("threads must be >= 1")
    start = time.perf_counter()
    same_shape(p, q)
    if exact:
        p, q = p.to_exact(), q.to_exact()
        if engine == "incremental":
            raise BNInputError("the incremental engine is float-only")
    elif p.exact or q.exact:
        p, q = p.to_float(), q.to_float()
    L = build_coupling(p, q)
    td = decompose(moralize(L.net))
    if td.width > WIDE_WIDTH_WARNING:
        warnings.warn(f"coupling decomposition has width {td.width}; each query costs about "
                      f"{L.net.alphabet}^{td.width + 1} operations", RuntimeWarning, stacklevel=2)
    z = compute_Z(L, td, InferenceOracle(L.net, td))
    queries = 1
    if _is_zero(z):
        return EstimateReport(estimate=0.0, m=0, z=float(z), alpha_hat=0.0, queries=queries,
                              seed=params.seed, elapsed=time.perf_counter() - start, width=td.width,
                              evaluations=1, exact_estimate=Fraction(0) if exact else None,
                              exact_z=z if exact else None)
    m = sample_count(p.n, params.eps, params.delta, params.m_override)
    ell = p.alphabet
    per_sample = 2 * (ell - 1) * p.n
    incremental = IncrementalSampler(L) if engine == "incremental" else None

    def run(job):
        c, lo, hi = job
        U = _uniforms(params.seed, 0, c, hi - lo, p.n)
        if incremental is not None:
            W = incremental.sample(float(z), U)
            return f_batch(p, q, W), hi - lo, per_sample * (hi - lo), 0
        oracle = InferenceOracle(L.net, td, memo=(engine == "cache"))
        if engine == "cache" and not exact:
            W = _sample_cached(L, oracle, float(z), U)
            fv = f_batch(p, q, W)
        else:
            ws = [_sample_one(L, oracle, z, U[k]) for k in range(hi - lo)]
            fv = [f_value(p, q, w) for w in ws] if exact else f_batch(p, q, np.array(ws))
        return fv, hi - lo, oracle.queries, oracle.evaluations

    results = _run_chunks(run, m, threads)
    queries += sum(r[2] for r in results)
    evaluations = 1 + sum(r[3] for r in results)
    if exact:
        total = sum((v for r in results for v in r[0]), Fraction(0))
        alpha = total / m
        est = z * alpha
        alpha_f, est_f, ex_est = float(alpha), float(est), est
    else:
        fv = np.concatenate([np.asarray(r[0], dtype=np.float64) for r in results])
        alpha_f = float(np.sum(fv)) / m
        est_f = float(z) * alpha_f
        ex_est = None
    return EstimateReport(estimate=est_f, m=m, z=float(z), alpha_hat=alpha_f, queries=queries,
                          seed=params.seed, elapsed=time.perf_counter() - start, width=td.width,
                          evaluations=evaluations, exact_estimate=ex_est,
                          exact_z=z if exact else None)


def uniform_sample_counts(n: int, alphabet: int, max_indegree: int, eps: float, delta: float):
    """(m_A, m_B, threshold, additive tolerance) of the two-phase uniform estimator."""
    big = alphabet ** (max_indegree + 1)
    eps_a = min(eps, 0.5)
    m_a = math.ceil(512 * big * big * math.log(4 / delta) / (eps_a * eps_a))
    m_b = math.ceil(512 * n * n * big * big * math.log(4 / delta) / (eps * eps))
    threshold = 3.0 / (64.0 * big)
    return m_a, m_b, threshold, eps_a / (32.0 * big)


def _ancestral(p: BayesNet, U: np.ndarray, tables=None) -> tuple[np.ndarray, np.ndarray]:
    """Forward-sample one assignment per row of ``U``; returns (xs, log P(xs))."""
    ell = p.alphabet
    if tables is None:
        tables = _float_tables(p)
    xs = np.zeros(U.shape, dtype=np.int64)
    logp = np.zeros(U.shape[0])
    for t in p.dag.topo_order:
        r = np.zeros(U.shape[0], dtype=np.int64)
        for j in p.parents[t]:
            r = r * ell + xs[:, j]
        table, cdf = tables[t]
        u = U[:, t]
        sym = np.zeros(U.shape[0], dtype=np.int64)
        for b in range(ell - 1):
            sym += u >= cdf[r, b]
        xs[:, t] = sym
        with np.errstate(divide="ignore"):
            logp += np.log(table[r, sym])
    return xs, logp


def _float_tables(p: BayesNet):
    """Per node: (row-normalised float table, cumulative sums) for inverse-CDF draws."""
    out = []
    for cpt in p.cpts:
        table = np.asarray(cpt.table, dtype=np.float64)
        table = table / table.sum(axis=1, keepdims=True)
        out.append((table, np.cumsum(table, axis=1)))
    return out


def estimate_tv_uniform(p: BayesNet, params: EstimateParams, threads: int = 1) -> EstimateReport:
    """Estimate d_TV(P, U) for the uniform distribution U on [alphabet]^n.

    Phase A draws x ~ P and averages max(0, 1 - 1 / (P(x) alphabet^n)), an
    unbiased estimate with values in [0, 1], to additive error
    eps / (32 alphabet^(d+1)). Above the threshold that additive error is
    already eps-relative. Otherwise d_TV is small enough for every ratio
    P(x) alphabet^n to stay close to 1, and phase B averages
    max(0, P(x) alphabet^n - 1) over fresh uniform x.
    """
    start = time.perf_counter()
    if p.exact:
        p = p.to_float()
    n, ell, d = p.n, p.alphabet, p.dag.max_indegree
    m_a, m_b, threshold, _ = uniform_sample_counts(n, ell, d, params.eps, params.delta)
    if params.m_override is not None:
        m_a = m_b = params.m_override
    log_scale = n * math.log(ell)
    tables = _float_tables(p)

    def phase_a(job):
        c, lo, hi = job
        _, logp = _ancestral(p, _uniforms(params.seed, 1, c, hi - lo, n), tables)
        v = np.maximum(0.0, -np.expm1(-(logp + log_scale)))
        return float(np.sum(v)), float(np.max(v))

    def phase_b(job):
        c, lo, hi = job
        xs = np.minimum((_uniforms(params.seed, 2, c, hi - lo, n) * ell).astype(np.int64), ell - 1)
        with np.errstate(over="ignore"):
            v = np.maximum(0.0, np.expm1(log_mass_batch(p, xs) + log_scale))
        return float(np.sum(v)), float(np.max(v))

    res_a = _run_chunks(phase_a, m_a, threads)
    est_a = math.fsum(r[0] for r in res_a) / m_a
    if est_a > threshold:
        return EstimateReport(estimate=est_a, m=m_a, z=threshold, alpha_hat=est_a, queries=0,
                              seed=params.seed, elapsed=time.perf_counter() - start, phase="A",
                              max_sample=max(r[1] for r in res_a))
    res_b = _run_chunks(phase_b, m_b, threads)
    est_b = math.fsum(r[0] for r in res_b) / m_b
    return EstimateReport(estimate=est_b, m=m_a + m_b, z=threshold, alpha_hat=est_a, queries=0,
                          seed=params.seed, elapsed=time.perf_counter() - start, phase="B",
                          max_sample=max(r[1] for r in res_b))
