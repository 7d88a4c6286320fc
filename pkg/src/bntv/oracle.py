"""Brute-force exact reference values by enumeration, in rational arithmetic.

Nothing here calls the inference engine or the estimator's mass/g/f code;
CPT entries are read straight from the tables and every product and sum is
over :class:`fractions.Fraction`. All functions refuse (rather than
truncate) when the outcome space exceeds the budget.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetExceededError
from .inference import QuerySets
from .model import BayesNet, same_shape

DEFAULT_BUDGET = 300_000


def _rows(net: BayesNet) -> list[dict[tuple[int, ...], list[Fraction]]]:
    """Per node: parent-assignment tuple -> exact conditional row."""
    out = []
    for i, ps in enumerate(net.parents):
        table = net.cpts[i].table
        rows = {}
        for r, pa in enumerate(itertools.product(range(net.alphabet), repeat=len(ps))):
            rows[pa] = [v if isinstance(v, Fraction) else Fraction(v) for v in table[r]]
        out.append(rows)
    return out


def _check_budget(outcomes: int, budget: int) -> None:
    if outcomes > budget:
        raise BudgetExceededError(f"{outcomes} outcomes exceed the enumeration budget of {budget}")


def _outcomes(net: BayesNet, budget: int) -> Iterator[tuple[int, ...]]:
    _check_budget(net.alphabet ** net.n, budget)
    return itertools.product(range(net.alphabet), repeat=net.n)


def _joint(rows, parents, w) -> Fraction:
    prob = Fraction(1)
    for i, ps in enumerate(parents):
        prob *= rows[i][tuple(w[j] for j in ps)][w[i]]
        if not prob:
            break
    return prob


def _min_product(rp, rq, parents, w) -> Fraction:
    prod = Fraction(1)
    for i, ps in enumerate(parents):
        pa = tuple(w[j] for j in ps)
        prod *= min(rp[i][pa][w[i]], rq[i][pa][w[i]])
    return prod


def joint_table(net: BayesNet, budget: int = DEFAULT_BUDGET) -> dict[tuple[int, ...], Fraction]:
    rows = _rows(net)
    return {w: _joint(rows, net.parents, w) for w in _outcomes(net, budget)}


def exact_tv(p: BayesNet, q: BayesNet, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Half the L1 distance between the two joint mass functions."""
    same_shape(p, q)
    rp, rq = _rows(p), _rows(q)
    total = Fraction(0)
    for w in _outcomes(p, budget):
        total += abs(_joint(rp, p.parents, w) - _joint(rq, q.parents, w))
    return total / 2


def exact_tv_uniform(p: BayesNet, budget: int = DEFAULT_BUDGET) -> Fraction:
    rows = _rows(p)
    u = Fraction(1, p.alphabet ** p.n)
    total = Fraction(0)
    for w in _outcomes(p, budget):
        total += abs(_joint(rows, p.parents, w) - u)
    return total / 2


def exact_infer(net: BayesNet, q: QuerySets, budget: int = DEFAULT_BUDGET) -> Fraction:
    rows = _rows(net)
    allowed = [range(net.alphabet) if s is None else sorted(s) for s in q.sets]
    _check_budget(net.alphabet ** net.n, budget)
    return sum((_joint(rows, net.parents, w) for w in itertools.product(*allowed)), Fraction(0))


def exact_g_table(p: BayesNet, q: BayesNet, budget: int = DEFAULT_BUDGET) -> dict[tuple[int, ...], Fraction]:
    same_shape(p, q)
    rp, rq = _rows(p), _rows(q)
    return {w: _joint(rp, p.parents, w) - _min_product(rp, rq, p.parents, w) for w in _outcomes(p, budget)}


def exact_Z(p: BayesNet, q: BayesNet, budget: int = DEFAULT_BUDGET) -> Fraction:
    return sum(exact_g_table(p, q, budget).values(), Fraction(0))


def exact_prefix_Z(p: BayesNet, q: BayesNet, prefix: Sequence[int], budget: int = DEFAULT_BUDGET) -> Fraction:
    """Sum of g over w agreeing with ``prefix`` on the first nodes of the topological order."""
    order = p.dag.topo_order
    return sum((g for w, g in exact_g_table(p, q, budget).items()
                if all(w[order[k]] == b for k, b in enumerate(prefix))), Fraction(0))


def exact_pi(p: BayesNet, q: BayesNet, budget: int = DEFAULT_BUDGET) -> dict[tuple[int, ...], Fraction]:
    g = exact_g_table(p, q, budget)
    z = sum(g.values(), Fraction(0))
    return {w: v / z for w, v in g.items()}


def coupling_x_marginal(coupling: BayesNet, budget: int = DEFAULT_BUDGET):
    """Enumerate the coupling's paired outcomes: (X-marginal, Pr[X != Y])."""
    base = coupling.pair_base
    rows = _rows(coupling)
    _check_budget(coupling.alphabet ** coupling.n, budget)
    marg: dict[tuple[int, ...], Fraction] = {}
    neq = Fraction(0)
    for s in itertools.product(range(coupling.alphabet), repeat=coupling.n):
        pr = _joint(rows, coupling.parents, s)
        x = tuple(v // base for v in s)
        marg[x] = marg.get(x, Fraction(0)) + pr
        if any(v // base != v % base for v in s):
            neq += pr
    return marg, neq


@dataclass
class IdentityReport:
    results: dict[str, bool] = field(default_factory=dict)
    tv: Fraction | None = None
    z: Fraction | None = None

    @property
    def ok(self) -> bool:
        return all(self.results.values())

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {name}" for name, ok in self.results.items()]


def exact_identity_check(p: BayesNet, q: BayesNet, coupling: BayesNet | None = None,
                         budget: int = DEFAULT_BUDGET) -> IdentityReport:
    """Check in exact arithmetic the identities the estimator relies on.

    ``coupling`` defaults to the package's construction of the local partial
    coupling; its X-marginal is enumerated over all paired outcomes.
    """
    same_shape(p, q)
    rp, rq = _rows(p), _rows(q)
    n = p.n
    tv = Fraction(0)
    z = Fraction(0)
    gf = Fraction(0)
    g_nonneg = g_dominates = f_unit = True
    for w in _outcomes(p, budget):
        pw = _joint(rp, p.parents, w)
        qw = _joint(rq, q.parents, w)
        g = pw - _min_product(rp, rq, p.parents, w)
        pos = max(pw - qw, Fraction(0))
        tv += pos
        z += g
        g_nonneg &= g >= 0
        g_dominates &= g >= pw - qw
        if g > 0:
            f = pos / g
            f_unit &= 0 <= f <= 1
            gf += g * f
        else:
            # f is undefined off pi's support; the numerator must vanish there
            f_unit &= pos == 0
    rep = IdentityReport(tv=tv, z=z)
    rep.results["g >= 0"] = g_nonneg
    rep.results["g >= P - Q"] = g_dominates
    rep.results["0 <= f <= 1"] = f_unit
    rep.results["sum g*f = d_TV"] = gf == tv
    rep.results["d_TV <= Z"] = tv <= z
    rep.results["Z <= 2n d_TV"] = z <= 2 * n * tv
    if coupling is None:
        from .coupling import build_coupling
        coupling = build_coupling(p.to_exact(), q.to_exact()).net
    marg, neq = coupling_x_marginal(coupling, budget)
    rep.results["X-marginal of coupling = P"] = all(
        marg.get(w, Fraction(0)) == _joint(rp, p.parents, w) for w in itertools.product(range(p.alphabet), repeat=n))
    rep.results["Z = Pr[X != Y] under coupling"] = neq == z
    return rep
