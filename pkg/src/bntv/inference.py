"""Exact inference queries Pr[X_1 in S_1, ..., X_n in S_n] by variable elimination.

Factor tables are numpy arrays with one axis per scope variable (so the
row-major flattening is the table order). Exact nets use object arrays of
Fractions; all operations here work on both dtypes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import BNInputError, ContractViolation
from .model import BayesNet, moralize
from .treedecomp import TreeDecomposition, decompose, elimination_order


@dataclass(frozen=True)
class Factor:
    scope: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if self.table.ndim != len(self.scope):
            raise BNInputError(f"table rank {self.table.ndim} != scope size {len(self.scope)}")

    @property
    def size(self) -> int:
        return int(self.table.size)

    def scalar(self):
        if self.scope:
            raise BNInputError("factor still has variables in scope")
        return self.table[()]


def unit_factor(exact: bool = False) -> Factor:
    return Factor((), np.array(Fraction(1) if exact else 1.0, dtype=object if exact else np.float64))


def cpt_factor(net: BayesNet, i: int) -> Factor:
    ps = net.parents[i]
    shape = (net.alphabet,) * (len(ps) + 1)
    return Factor(ps + (i,), net.cpts[i].table.reshape(shape))


def _axis(f: Factor, var: int) -> int:
    try:
        return f.scope.index(var)
    except ValueError:
        raise BNInputError(f"variable {var} not in factor scope {f.scope}") from None


def restrict(f: Factor, var: int, symbols: Iterable[int]) -> Factor:
    """Zero the entries whose ``var`` coordinate is outside ``symbols``."""
    ax = _axis(f, var)
    k = f.table.shape[ax]
    keep = np.zeros(k, dtype=bool)
    for s in symbols:
        if not 0 <= s < k:
            raise BNInputError(f"symbol {s} outside alphabet of size {k}")
        keep[s] = True
    if keep.all():
        return f
    table = f.table.copy()
    idx = [slice(None)] * table.ndim
    idx[ax] = ~keep
    table[tuple(idx)] = Fraction(0) if table.dtype == object else 0.0
    return Factor(f.scope, table)


def _expand(f: Factor, scope: tuple[int, ...]) -> np.ndarray:
    # permute f's axes into scope order and insert singleton axes for missing vars
    present = [v for v in scope if v in f.scope]
    t = np.transpose(f.table, [f.scope.index(v) for v in present]) if f.scope else f.table
    shape = [f.table.shape[f.scope.index(v)] if v in f.scope else 1 for v in scope]
    return t.reshape(shape)


def multiply(f1: Factor, f2: Factor) -> Factor:
    scope = f1.scope + tuple(v for v in f2.scope if v not in f1.scope)
    return Factor(scope, _expand(f1, scope) * _expand(f2, scope))


def sum_out(f: Factor, var: int) -> Factor:
    ax = _axis(f, var)
    table = f.table.sum(axis=ax)
    if not isinstance(table, np.ndarray):
        table = np.array(table, dtype=f.table.dtype)
    return Factor(f.scope[:ax] + f.scope[ax + 1:], table)


@dataclass(frozen=True)
class QuerySets:
    """Per-variable allowed symbol sets; ``None`` means the whole alphabet."""
    sets: tuple[frozenset[int] | None, ...]

    @classmethod
    def full(cls, n: int) -> "QuerySets":
        return cls((None,) * n)

    @classmethod
    def of(cls, n: int, constraints: dict[int, Iterable[int]]) -> "QuerySets":
        sets: list[frozenset[int] | None] = [None] * n
        for v, syms in constraints.items():
            if not 0 <= v < n:
                raise BNInputError(f"variable {v} out of range")
            sets[v] = frozenset(syms)
        return cls(tuple(sets))

    def key(self) -> tuple:
        return tuple(None if s is None else tuple(sorted(s)) for s in self.sets)


def parse_sets(spec: str, n: int) -> QuerySets:
    """Parse '0:{0};3:{1,2}'. Unlisted variables range over the whole alphabet."""
    constraints: dict[int, list[int]] = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        try:
            var, rhs = part.split(":", 1)
            rhs = rhs.strip()
            if not (rhs.startswith("{") and rhs.endswith("}")):
                raise ValueError
            body = rhs[1:-1].strip()
            syms = [int(s) for s in body.split(",")] if body else []
            constraints[int(var)] = syms
        except ValueError:
            raise BNInputError(f"bad set specification {part!r}; expected VAR:{{s,...}}") from None
    return QuerySets.of(n, constraints)


def check_decomposition(net: BayesNet, td: TreeDecomposition) -> None:
    """Cheap compatibility check: vertex set matches and every family fits in a bag."""
    if frozenset().union(*td.bags) != frozenset(range(net.n)):
        raise BNInputError("tree decomposition does not cover exactly the net's nodes")
    for i, ps in enumerate(net.parents):
        fam = frozenset(ps) | {i}
        if not any(fam <= b for b in td.bags):
            raise BNInputError(f"family of node {i} is not contained in any bag")


def eliminate(factors: list[Factor], order: Sequence[int], max_entries: int | None = None):
    """Sum out ``order`` one variable at a time; return the product of what remains."""
    factors = list(factors)
    for var in order:
        touching = [f for f in factors if var in f.scope]
        if not touching:
            continue
        factors = [f for f in factors if var not in f.scope]
        prod = touching[0]
        for f in touching[1:]:
            prod = multiply(prod, f)
        if max_entries is not None and prod.size > max_entries:
            raise ContractViolation(f"intermediate factor of {prod.size} entries exceeds bound {max_entries}")
        factors.append(sum_out(prod, var))
    result = None
    for f in factors:
        if f.scope:
            raise ContractViolation(f"variables {f.scope} were never eliminated")
        result = f.scalar() if result is None else result * f.scalar()
    return result


def _query_factors(net: BayesNet, q: QuerySets) -> list[Factor]:
    if len(q.sets) != net.n:
        raise BNInputError(f"query has {len(q.sets)} sets, net has {net.n} nodes")
    out = []
    for i in range(net.n):
        f = cpt_factor(net, i)
        if q.sets[i] is not None:
            f = restrict(f, i, q.sets[i])
        out.append(f)
    return out


def infer(net: BayesNet, q: QuerySets, td: TreeDecomposition | None = None,
          order: Sequence[int] | None = None):
    """Pr[every X_i in S_i] under ``net``.

    The elimination order defaults to the leaf-peeling order of ``td`` (which
    itself defaults to a min-fill decomposition of the moral graph). An
    explicit ``order`` must be a permutation of the nodes; intermediate
    factors are always checked against the ``alphabet ** (width + 1)`` bound.
    """
    if td is None:
        td = decompose(moralize(net))
    check_decomposition(net, td)
    if order is None:
        order = elimination_order(td)
    elif sorted(order) != list(range(net.n)):
        raise BNInputError("elimination order must be a permutation of the nodes")
    bound = net.alphabet ** (td.width + 1)
    return eliminate(_query_factors(net, q), order, max_entries=bound)


@dataclass
class InferenceOracle:
    """Counted inference entry point bound to one net.

    ``queries`` counts logical oracle calls. With ``memo=True`` repeated queries
    are answered from a cache; ``evaluations`` counts actual eliminations.
    """
    net: BayesNet
    td: TreeDecomposition | None = None
    memo: bool = False
    queries: int = 0
    evaluations: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.td is None:
            self.td = decompose(moralize(self.net))
        check_decomposition(self.net, self.td)
        self._order = elimination_order(self.td)
        self._bound = self.net.alphabet ** (self.td.width + 1)
        self._base = [cpt_factor(self.net, i) for i in range(self.net.n)]

    def query(self, q: QuerySets, count: int = 1):
        """Answer ``q``; ``count`` > 1 books identical logical queries served by this call (memo only)."""
        if count != 1 and not self.memo:
            raise ContractViolation("batched query booking requires memo=True")
        self.queries += count
        if self.memo:
            key = q.key()
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        self.evaluations += 1
        factors = [f if s is None else restrict(f, i, s) for i, (f, s) in enumerate(zip(self._base, q.sets))]
        value = eliminate(factors, self._order, max_entries=self._bound)
        if self.memo:
            self._cache[q.key()] = value
        return value
