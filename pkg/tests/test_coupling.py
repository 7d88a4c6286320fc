import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bntv.coupling import (
    CouplingNet,
    build_coupling,
    coupling_row,
    diagonal_symbols,
    pair_decode,
    pair_encode,
)
from bntv.errors import BNInputError
from bntv.model import check_valid, gen_random_net, gen_random_pair, make_net
from bntv.oracle import coupling_x_marginal, exact_tv, joint_table

F = Fraction


def dist(draw_list):
    a = np.asarray(draw_list, dtype=np.float64)
    return a / a.sum()


probs = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5)


class TestPairCodes:
    @pytest.mark.parametrize("ell", [2, 3, 5])
    def test_roundtrip(self, ell):
        for b, z in itertools.product(range(ell), repeat=2):
            assert pair_decode(pair_encode(b, z, ell), ell) == (b, z)

    def test_examples(self):
        assert pair_encode(1, 0, 2) == 2
        assert pair_decode(3, 2) == (1, 1)
        assert diagonal_symbols(3) == frozenset({0, 4, 8})

    def test_range_errors(self):
        with pytest.raises(BNInputError):
            pair_encode(2, 0, 2)
        with pytest.raises(BNInputError):
            pair_decode(4, 2)


class TestCouplingRow:
    def test_footnote_rows(self):
        r = coupling_row([F(2, 3), F(1, 3)], [F(1, 3), F(2, 3)])
        assert r.tolist() == [[F(1, 3), F(1, 3)], [F(0), F(1, 3)]]

    def test_equal_rows_are_diagonal(self):
        r = coupling_row([0.2, 0.8], [0.2, 0.8])
        np.testing.assert_allclose(r, np.diag([0.2, 0.8]))

    def test_disjoint_rows(self):
        r = coupling_row([F(1), F(0)], [F(0), F(1)])
        assert r[0, 1] == 1 and sum(r.reshape(-1)) == 1

    def test_rejects_bad_rows(self):
        with pytest.raises(BNInputError):
            coupling_row([0.5, 0.6], [0.5, 0.5])
        with pytest.raises(BNInputError):
            coupling_row([0.5, 0.5], [1.0])

    @settings(max_examples=100, deadline=None)
    @given(a=probs, b=probs)
    def test_marginals_and_diagonal(self, a, b):
        k = min(len(a), len(b))
        p, q = dist(a[:k]), dist(b[:k])
        r = coupling_row(p, q)
        assert (r >= -1e-15).all()
        np.testing.assert_allclose(r.sum(axis=1), p, atol=1e-12)
        np.testing.assert_allclose(r.sum(axis=0), q, atol=1e-12)
        np.testing.assert_allclose(np.diag(r), np.minimum(p, q), atol=1e-15)
        assert 1 - np.trace(r) == pytest.approx(0.5 * np.abs(p - q).sum(), abs=1e-12)


class TestBuildCoupling:
    def test_shape_and_validity(self):
        p, q = gen_random_pair(5, 3, "random-dag:2", seed=4)
        L = build_coupling(p, q)
        assert isinstance(L, CouplingNet)
        assert L.net.alphabet == 9 and L.base_alphabet == 3 and L.net.pair_base == 3
        assert L.dag == p.dag
        check_valid(L.net)
        assert CouplingNet.from_net(L.net) == L

    def test_from_plain_net_rejected(self):
        with pytest.raises(BNInputError):
            CouplingNet.from_net(gen_random_net(2, 2, "path", seed=0))

    def test_footnote_coupling(self, footnote):
        p, q = footnote
        L = build_coupling(p, q)
        marg, neq = coupling_x_marginal(L.net)
        assert neq == F(5, 9)
        assert marg == joint_table(p)

    def test_paired_parent_rows(self):
        # X row conditions on the X parent, Y row on the Y parent
        p = make_net([(), (0,)], 2, [[[F(1, 2), F(1, 2)]], [[F(1), F(0)], [F(0), F(1)]]])
        q = make_net([(), (0,)], 2, [[[F(1, 2), F(1, 2)]], [[F(0), F(1)], [F(1), F(0)]]])
        L = build_coupling(p, q)
        # parent pair (b=0, z=1): P(.|0) = (1,0), Q(.|1) = (1,0) -> all mass on (0,0)
        row = L.net.cpts[1].table[pair_encode(0, 1, 2)]
        assert list(row) == [1, 0, 0, 0]

    @pytest.mark.parametrize("seed", range(8))
    def test_marginals_by_enumeration(self, seed):
        p, q = gen_random_pair(3, 2, ["path", "tree", "random-dag:2"][seed % 3], seed=seed, exact=True)
        L = build_coupling(p, q)
        joint = joint_table(L.net)
        py, px = joint_table(q), joint_table(p)
        mx = {w: F(0) for w in px}
        my = {w: F(0) for w in py}
        for s, pr in joint.items():
            mx[tuple(v // 2 for v in s)] += pr
            my[tuple(v % 2 for v in s)] += pr
        assert mx == px and my == py

    def test_equal_nets_never_disagree(self):
        p = gen_random_net(4, 3, "tree", seed=2, exact=True)
        assert coupling_x_marginal(build_coupling(p, p).net)[1] == 0

    def test_disagreement_dominates_tv(self):
        p, q = gen_random_pair(4, 2, "random-dag:2", seed=11, exact=True)
        assert coupling_x_marginal(build_coupling(p, q).net)[1] >= exact_tv(p, q)
