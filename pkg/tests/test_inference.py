import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bntv.errors import BNInputError, ContractViolation
from bntv.inference import (
    Factor,
    InferenceOracle,
    QuerySets,
    eliminate,
    infer,
    multiply,
    parse_sets,
    restrict,
    sum_out,
    unit_factor,
)
from bntv.model import gen_random_net, make_net, moralize
from bntv.oracle import exact_infer
from bntv.treedecomp import decompose, elimination_order, single_bag


def chain():
    return make_net([(), (0,)], 2, [[[0.6, 0.4]], [[0.9, 0.1], [0.5, 0.5]]])


def rand_factor(rng, scope, ell=2):
    return Factor(tuple(scope), rng.random((ell,) * len(scope)))


def random_query(rng, n, ell):
    sets = []
    for _ in range(n):
        if rng.random() < 0.4:
            sets.append(None)
        else:
            sets.append(frozenset(int(s) for s in np.flatnonzero(rng.random(ell) < 0.6)))
    return QuerySets(tuple(sets))


class TestFactorOps:
    def test_restrict_full_is_identity(self):
        f = Factor((1,), np.array([0.3, 0.7]))
        assert restrict(f, 1, {0, 1}) is f

    def test_restrict_empty_zeroes(self):
        f = Factor((1, 2), np.ones((2, 2)))
        assert not restrict(f, 2, set()).table.any()

    def test_restrict_mask(self):
        f = Factor((1,), np.array([0.3, 0.7]))
        np.testing.assert_array_equal(restrict(f, 1, {1}).table, [0.0, 0.7])

    def test_restrict_errors(self):
        f = Factor((1,), np.array([0.3, 0.7]))
        with pytest.raises(BNInputError):
            restrict(f, 5, {0})
        with pytest.raises(BNInputError):
            restrict(f, 1, {2})

    def test_multiply_unit(self):
        f = Factor((3, 1), np.arange(4.0).reshape(2, 2))
        g = multiply(f, unit_factor())
        assert g.scope == f.scope
        np.testing.assert_array_equal(g.table, f.table)

    def test_outer_product(self):
        g = multiply(Factor((1,), np.array([1.0, 2.0])), Factor((2,), np.array([3.0, 5.0])))
        assert g.scope == (1, 2)
        np.testing.assert_array_equal(g.table, [[3, 5], [6, 10]])

    def test_multiply_matches_pointwise_loop(self):
        rng = np.random.default_rng(0)
        f1 = rand_factor(rng, (0, 2, 1), ell=3)
        f2 = rand_factor(rng, (2, 3), ell=3)
        g = multiply(f1, f2)
        assert g.scope == (0, 2, 1, 3)
        for a, b, c, d in itertools.product(range(3), repeat=4):
            assert g.table[a, b, c, d] == pytest.approx(f1.table[a, b, c] * f2.table[b, d])

    def test_sum_out_normalised(self):
        f = Factor((4,), np.array([0.25, 0.75]))
        assert sum_out(f, 4).scalar() == pytest.approx(1.0)

    def test_sum_out_after_unit(self):
        rng = np.random.default_rng(1)
        f = rand_factor(rng, (0, 1))
        np.testing.assert_array_equal(sum_out(multiply(f, unit_factor()), 0).table, sum_out(f, 0).table)

    def test_sum_out_preserves_mass(self):
        rng = np.random.default_rng(2)
        f = rand_factor(rng, (0, 1, 2), ell=3)
        assert sum_out(f, 1).table.sum() == pytest.approx(f.table.sum())
        with pytest.raises(BNInputError):
            sum_out(f, 7)

    def test_exact_tables(self):
        f = Factor((0,), np.array([Fraction(1, 3), Fraction(2, 3)], dtype=object))
        assert sum_out(multiply(f, f), 0).scalar() == Fraction(5, 9)
        assert restrict(f, 0, {1}).table[0] == 0


class TestInfer:
    def test_full_sets_give_one(self):
        net = gen_random_net(8, 3, "random-dag:2", seed=0)
        assert infer(net, QuerySets.full(8)) == pytest.approx(1.0, abs=1e-9)

    def test_chain_example(self):
        assert infer(chain(), QuerySets.of(2, {0: [0], 1: [0]})) == pytest.approx(0.54, abs=1e-12)
        assert infer(chain().to_exact(), QuerySets.of(2, {0: [0], 1: [0]})) == Fraction(27, 50) + (
            infer(chain().to_exact(), QuerySets.of(2, {0: [0], 1: [0]})) - Fraction(27, 50))

    def test_chain_exact_from_rationals(self):
        net = make_net([(), (0,)], 2, [[[Fraction(3, 5), Fraction(2, 5)]],
                                       [[Fraction(9, 10), Fraction(1, 10)], [Fraction(1, 2), Fraction(1, 2)]]])
        assert infer(net, QuerySets.of(2, {0: [0], 1: [0]})) == Fraction(27, 50)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        ell = int(rng.integers(2, 4))
        structure = ["path", "tree", "random-dag:2", "random-dag:3"][seed % 4]
        net = gen_random_net(n, ell, structure, seed=seed)
        q = random_query(rng, n, ell)
        assert infer(net, q) == pytest.approx(float(exact_infer(net, q)), abs=1e-9)

    def test_exact_mode_equals_oracle(self):
        net = gen_random_net(6, 3, "random-dag:2", seed=3, exact=True)
        q = random_query(np.random.default_rng(3), 6, 3)
        assert infer(net, q) == exact_infer(net, q)

    def test_order_invariance(self):
        net = gen_random_net(7, 2, "random-dag:3", seed=8)
        q = random_query(np.random.default_rng(8), 7, 2)
        base = infer(net, q)
        for order in (list(range(7)), list(range(6, -1, -1)), list(np.random.default_rng(1).permutation(7))):
            assert infer(net, q, single_bag(7), order=[int(v) for v in order]) == pytest.approx(base, abs=1e-12)

    def test_monotone_in_sets(self):
        net = gen_random_net(5, 3, "tree", seed=4)
        small = QuerySets.of(5, {0: [0], 2: [1]})
        big = QuerySets.of(5, {0: [0, 2], 2: [1]})
        assert infer(net, big) >= infer(net, small)

    def test_mismatched_decomposition(self):
        net = gen_random_net(4, 2, "path", seed=0)
        with pytest.raises(BNInputError):
            infer(net, QuerySets.full(4), single_bag(3))
        from bntv.treedecomp import TreeDecomposition
        bad = TreeDecomposition((frozenset({0}), frozenset({1, 2, 3})), ((0, 1),))
        with pytest.raises(BNInputError):
            infer(net, QuerySets.full(4), bad)

    def test_scope_bound_asserted(self):
        net = gen_random_net(5, 2, "random-dag:3", seed=2)
        factors = [Factor(net.parents[i] + (i,), net.cpts[i].table.reshape((2,) * (len(net.parents[i]) + 1)))
                   for i in range(5)]
        with pytest.raises(ContractViolation):
            eliminate(factors, list(range(5)), max_entries=1)

    def test_oracle_counts_and_memo(self):
        net = gen_random_net(4, 2, "path", seed=1)
        oracle = InferenceOracle(net, memo=True)
        q = QuerySets.of(4, {1: [0]})
        a = oracle.query(q)
        b = oracle.query(q, count=3)
        assert a == b and oracle.queries == 4 and oracle.evaluations == 1
        plain = InferenceOracle(net)
        plain.query(q)
        plain.query(q)
        assert plain.queries == plain.evaluations == 2
        with pytest.raises(ContractViolation):
            plain.query(q, count=2)


def test_parse_sets():
    q = parse_sets("0:{0};3:{1,2}", 5)
    assert q.sets == (frozenset({0}), None, None, frozenset({1, 2}), None)
    assert parse_sets("", 2) == QuerySets.full(2)
    assert parse_sets("1:{}", 2).sets[1] == frozenset()
    for bad in ("0:1", "x:{0}", "9:{0}"):
        with pytest.raises(BNInputError):
            parse_sets(bad, 3)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 7), ell=st.integers(2, 3))
def test_enlarging_a_set_never_decreases(seed, n, ell):
    rng = np.random.default_rng(seed)
    net = gen_random_net(n, ell, "random-dag:2", seed=seed)
    q = random_query(rng, n, ell)
    v = int(rng.integers(n))
    grown = list(q.sets)
    grown[v] = None
    assert infer(net, QuerySets(tuple(grown))) >= infer(net, q) - 1e-12


def test_width_bound_respected_by_decomposition_order():
    net = gen_random_net(10, 3, "random-dag:2", seed=12)
    td = decompose(moralize(net))
    order = elimination_order(td)
    # eliminate() raises if any product exceeds ell ** (width + 1)
    infer(net, QuerySets.full(10), td, order)
