"""Discrete Bayesian networks: representation, validation, evaluation, moralization.

Symbols and node indices are 0-based throughout the code base. A CPT for node
``i`` is a 2-D array of shape ``(alphabet ** len(parents[i]), alphabet)``;
row ``r`` is the parent assignment whose digits (base ``alphabet``, first
parent most significant) spell ``r``.

Two numeric backends share these types: float64 arrays, or object arrays of
:class:`fractions.Fraction` ("exact" nets).
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BNInputError

ROW_SUM_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dag:
    n: int
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(tuple(int(p) for p in ps) for ps in self.parents))
        if len(self.parents) != self.n:
            raise BNInputError(f"expected {self.n} parent lists, got {len(self.parents)}")

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.n)]
        for i, ps in enumerate(self.parents):
            for p in ps:
                if 0 <= p < self.n:
                    kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @property
    def max_indegree(self) -> int:
        return max((len(ps) for ps in self.parents), default=0)

    def find_cycle_free_order(self) -> list[int] | None:
        """Kahn's algorithm, smallest ready index first. None when cyclic."""
        indeg = [len(set(ps)) for ps in self.parents]
        ready = [i for i in range(self.n) if indeg[i] == 0]
        heapq.heapify(ready)
        order = []
        kids = [sorted(set(k)) for k in self.children]
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in kids[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        return order if len(order) == self.n else None

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        order = self.find_cycle_free_order()
        if order is None:
            raise BNInputError("graph has a directed cycle")
        return tuple(order)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, i) for i, ps in enumerate(self.parents) for p in ps]


@dataclass(frozen=True)
class Cpt:
    node: int
    table: np.ndarray

    @property
    def exact(self) -> bool:
        return self.table.dtype == object


@dataclass(frozen=True)
class BayesNet:
    dag: Dag
    alphabet: int
    cpts: tuple[Cpt, ...]
    # Set on coupling nets: the base alphabet whose pairs the symbols encode.
    pair_base: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cpts", tuple(self.cpts))
        for c in self.cpts:
            _freeze(c.table)

    @property
    def n(self) -> int:
        return self.dag.n

    @property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        return self.dag.parents

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.cpts)

    def table(self, i: int) -> np.ndarray:
        return self.cpts[i].table

    def row_index(self, i: int, pa: Sequence[int]) -> int:
        r = 0
        for c in pa:
            r = r * self.alphabet + int(c)
        return r

    def to_exact(self) -> "BayesNet":
        """Convert float entries to the exact binary value they hold."""
        if self.exact:
            return self
        cpts = [Cpt(c.node, _to_fraction_array(c.table)) for c in self.cpts]
        return BayesNet(self.dag, self.alphabet, cpts, pair_base=self.pair_base)

    def to_float(self) -> "BayesNet":
        cpts = [Cpt(c.node, np.array(c.table, dtype=np.float64)) for c in self.cpts]
        return BayesNet(self.dag, self.alphabet, cpts, pair_base=self.pair_base)


def _to_fraction_array(table) -> np.ndarray:
    arr = np.asarray(table, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def make_net(parents: Sequence[Sequence[int]], alphabet: int, tables, pair_base=None) -> BayesNet:
    """Build a net from parent lists and per-node row lists.

    Entries that are all Fractions/ints give an exact net; anything else is
    stored as float64.
    """
    parents = [tuple(ps) for ps in parents]
    exact = all(isinstance(v, (Fraction, int)) for t in tables for v in np.ravel(np.asarray(t, dtype=object)))
    cpts = []
    for i, t in enumerate(tables):
        arr = _to_fraction_array(t) if exact else np.array(t, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        cpts.append(Cpt(i, arr))
    return BayesNet(Dag(len(parents), tuple(parents)), int(alphabet), tuple(cpts), pair_base=pair_base)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations)}


def validate(net: BayesNet) -> ValidationReport:
    """Check every structural and numeric invariant; defects come back as data."""
    report = ValidationReport()
    v = report.violations
    n, ell = net.n, net.alphabet
    if ell < 2:
        v.append(f"alphabet {ell} < 2")
    for i, ps in enumerate(net.parents):
        if i in ps:
            v.append(f"self-loop at node {i}")
        if len(set(ps)) != len(ps):
            v.append(f"duplicate parent in parent list of node {i}")
        for p in ps:
            if not 0 <= p < n:
                v.append(f"parent {p} of node {i} out of range")
    bad_edges = any(i in ps or any(not 0 <= p < n for p in ps) for i, ps in enumerate(net.parents))
    if not bad_edges and net.dag.find_cycle_free_order() is None:
        v.append("directed cycle")
    if len(net.cpts) != n:
        v.append(f"expected {n} CPTs, got {len(net.cpts)}")
        return report
    for i, cpt in enumerate(net.cpts):
        if cpt.node != i:
            v.append(f"CPT at position {i} labelled node {cpt.node}")
        t = cpt.table
        rows = ell ** len(net.parents[i])
        if t.ndim != 2 or t.shape != (rows, ell):
            v.append(f"node {i}: table shape {t.shape} != ({rows}, {ell})")
            continue
        for r in range(rows):
            row = t[r]
            for s, p in enumerate(row):
                if p < 0:
                    v.append(f"negative entry {p} at node {i}, row {r}, symbol {s}")
            total = sum(row) if cpt.exact else float(np.sum(row))
            off = total != 1 if cpt.exact else abs(total - 1.0) > ROW_SUM_TOL
            if off:
                v.append(f"row sum {total} != 1 at node {i}, row {r}")
    return report


def check_valid(net: BayesNet) -> None:
    report = validate(net)
    if not report.ok:
        raise BNInputError("invalid net: " + "; ".join(report.violations[:5]))


def check_assignment(net: BayesNet, x: Sequence[int]) -> None:
    if len(x) != net.n:
        raise BNInputError(f"assignment has length {len(x)}, expected {net.n}")
    for i, s in enumerate(x):
        if not 0 <= int(s) < net.alphabet:
            raise BNInputError(f"symbol {s} at node {i} outside alphabet of size {net.alphabet}")


def conditional(net: BayesNet, i: int, b: int, pa: Sequence[int]):
    """The stored entry Pr[X_i = b | X_parents = pa]."""
    if not 0 <= i < net.n:
        raise BNInputError(f"node {i} out of range")
    if len(pa) != len(net.parents[i]):
        raise BNInputError(f"node {i} has {len(net.parents[i])} parents, got assignment of length {len(pa)}")
    if not 0 <= b < net.alphabet or any(not 0 <= c < net.alphabet for c in pa):
        raise BNInputError(f"symbol outside alphabet of size {net.alphabet}")
    return net.cpts[i].table[net.row_index(i, pa), b]


def mass(net: BayesNet, x: Sequence[int]):
    """Joint probability of a full assignment: one CPT lookup per node."""
    check_assignment(net, x)
    prob = Fraction(1) if net.exact else 1.0
    for i, ps in enumerate(net.parents):
        prob = prob * net.cpts[i].table[net.row_index(i, [x[p] for p in ps]), x[i]]
    return prob


def log_mass_batch(net: BayesNet, xs: np.ndarray) -> np.ndarray:
    """Vectorised natural-log mass of each row of ``xs`` (float nets)."""
    xs = np.asarray(xs)
    out = np.zeros(xs.shape[0])
    ell = net.alphabet
    with np.errstate(divide="ignore"):
        for i, ps in enumerate(net.parents):
            r = np.zeros(xs.shape[0], dtype=np.int64)
            for p in ps:
                r = r * ell + xs[:, p]
            out += np.log(np.asarray(net.cpts[i].table, dtype=np.float64)[r, xs[:, i]])
    return out


@dataclass(frozen=True)
class UndirectedGraph:
    n: int
    adjacency: tuple[frozenset[int], ...]

    @classmethod
    def from_edges(cls, n: int, edges) -> "UndirectedGraph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise BNInputError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise BNInputError(f"edge ({u}, {v}) out of range")
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, tuple(frozenset(a) for a in adj))

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]


def moralize(net: BayesNet | Dag) -> UndirectedGraph:
    """Drop edge directions and marry every pair of co-parents."""
    dag = net.dag if isinstance(net, BayesNet) else net
    edges = set()
    for i, ps in enumerate(dag.parents):
        for p in ps:
            edges.add((min(p, i), max(p, i)))
        for a, b in itertools.combinations(ps, 2):
            edges.add((min(a, b), max(a, b)))
    return UndirectedGraph.from_edges(dag.n, edges)


STRUCTURES = ("path", "tree", "random-dag")


def parse_structure(spec: str) -> tuple[str, int]:
    """'path' | 'tree' | 'random-dag:K' (also 'random-dag(K)') -> (kind, max in-degree)."""
    s = spec.strip()
    if s == "path" or s == "tree":
        return s, 1
    for sep in (":", "("):
        if s.startswith("random-dag" + sep):
            try:
                return "random-dag", int(s[len("random-dag") + 1:].rstrip(")"))
            except ValueError:
                break
    raise BNInputError(f"unknown structure {spec!r}; expected path, tree or random-dag:K")


def gen_random_net(n: int, alphabet: int, structure: str = "path", seed: int = 0,
                   max_indegree: int | None = None, exact: bool = False) -> BayesNet:
    """Deterministic random net.

    ``path`` is 0 -> 1 -> ... -> n-1. ``tree`` and ``random-dag`` are built over a
    seeded random labelling, so node labels are generally not topologically
    sorted. CPT rows are positive random vectors normalised to sum to 1; with
    ``exact=True`` they are small-integer weights normalised as Fractions.
    """
    if n < 1 or alphabet < 2:
        raise BNInputError("need n >= 1 and alphabet >= 2")
    kind, d = parse_structure(structure)
    if max_indegree is not None:
        d = max_indegree
    rng = np.random.default_rng(seed)
    parents: list[tuple[int, ...]] = [() for _ in range(n)]
    if kind == "path":
        for i in range(1, n):
            parents[i] = (i - 1,)
    else:
        label = rng.permutation(n)
        for k in range(1, n):
            if kind == "tree":
                chosen = [int(rng.integers(k))]
            else:
                cnt = int(rng.integers(min(d, k) + 1))
                chosen = sorted(int(c) for c in rng.choice(k, size=cnt, replace=False))
            parents[int(label[k])] = tuple(int(label[c]) for c in chosen)
    return _random_cpts(Dag(n, tuple(parents)), alphabet, rng, exact)


def _random_cpts(dag: Dag, ell: int, rng: np.random.Generator, exact: bool) -> BayesNet:
    cpts = []
    for i, ps in enumerate(dag.parents):
        rows = ell ** len(ps)
        if exact:
            w = rng.integers(1, 11, size=(rows, ell))
            t = np.empty((rows, ell), dtype=object)
            for r in range(rows):
                tot = int(w[r].sum())
                for s in range(ell):
                    t[r, s] = Fraction(int(w[r, s]), tot)
        else:
            w = rng.uniform(0.05, 1.0, size=(rows, ell))
            t = w / w.sum(axis=1, keepdims=True)
        cpts.append(Cpt(i, t))
    return BayesNet(dag, ell, tuple(cpts))


def product_net(rows: Sequence[Sequence], alphabet: int | None = None) -> BayesNet:
    """Edgeless net whose node i has marginal ``rows[i]``."""
    ell = alphabet or len(rows[0])
    return make_net([() for _ in rows], ell, [[list(r)] for r in rows])


def uniform_net(dag: Dag, alphabet: int, exact: bool = True) -> BayesNet:
    """Every CPT row uniform: the joint is uniform on [alphabet]^n whatever the DAG."""
    tables = []
    for i, ps in enumerate(dag.parents):
        rows = alphabet ** len(ps)
        val = Fraction(1, alphabet) if exact else 1.0 / alphabet
        tables.append([[val] * alphabet for _ in range(rows)])
    return make_net(dag.parents, alphabet, tables)


def same_shape(p: BayesNet, q: BayesNet) -> None:
    """Reject pairs that do not share DAG and alphabet."""
    if p.n != q.n or p.parents != q.parents:
        raise BNInputError("nets are over different DAGs")
    if p.alphabet != q.alphabet:
        raise BNInputError(f"alphabet mismatch: {p.alphabet} vs {q.alphabet}")


def with_random_cpts(net: BayesNet, seed: int, exact: bool = False) -> BayesNet:
    """Same DAG and alphabet, fresh seeded CPT rows."""
    return _random_cpts(net.dag, net.alphabet, np.random.default_rng(seed), exact)


def gen_random_pair(n: int, alphabet: int, structure: str = "path", seed: int = 0,
                    exact: bool = False) -> tuple[BayesNet, BayesNet]:
    """Two independently parameterised nets over one seeded random DAG."""
    p = gen_random_net(n, alphabet, structure, seed=seed, exact=exact)
    return p, with_random_cpts(p, seed + 0x9E3779B9, exact=exact)
