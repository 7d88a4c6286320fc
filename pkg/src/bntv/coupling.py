"""Local partial coupling of two nets over a shared DAG.

The coupling is itself a net over the same DAG whose symbols are pairs
(b, z) of base symbols, encoded as ``b * alphabet + z``. Given the paired
parent assignment (c1, c2), the diagonal entry (b, b) is
``min(P(b | c1), Q(b | c2))`` and each X-row (b, .) sums to ``P(b | c1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BNInputError
from .model import ROW_SUM_TOL, BayesNet, Cpt, same_shape


def pair_encode(b: int, z: int, alphabet: int) -> int:
    if not (0 <= b < alphabet and 0 <= z < alphabet):
        raise BNInputError(f"pair ({b}, {z}) outside alphabet of size {alphabet}")
    return b * alphabet + z


def pair_decode(symbol: int, alphabet: int) -> tuple[int, int]:
    if not 0 <= symbol < alphabet * alphabet:
        raise BNInputError(f"pair symbol {symbol} outside [0, {alphabet * alphabet})")
    return divmod(symbol, alphabet)


def diagonal_symbols(alphabet: int) -> frozenset[int]:
    return frozenset(b * alphabet + b for b in range(alphabet))


def _check_dist(p, name):
    exact = all(isinstance(v, (Fraction, int)) for v in p)
    if any(v < 0 for v in p):
        raise BNInputError(f"{name} has a negative entry")
    total = sum(p)
    if (total != 1) if exact else abs(float(total) - 1.0) > ROW_SUM_TOL:
        raise BNInputError(f"{name} sums to {total}, not 1")
    return exact


def coupling_row(p, q) -> np.ndarray:
    """Coupled distribution over pairs, as an (alphabet, alphabet) matrix r[b, z].

    Diagonal r[b, b] = min(p[b], q[b]). The leftover masses
    rp = p - min(p, q) and rq = q - min(p, q) both total D; off-diagonal mass is
    rp[b] * rq[z] / D, so rows sum to p and columns to q.
    """
    if len(p) != len(q):
        raise BNInputError("rows have different lengths")
    exact = _check_dist(p, "p") and _check_dist(q, "q")
    ell = len(p)
    if exact:
        p = [Fraction(v) for v in p]
        q = [Fraction(v) for v in q]
        lo = [min(a, b) for a, b in zip(p, q)]
        rp = [a - m for a, m in zip(p, lo)]
        rq = [b - m for b, m in zip(q, lo)]
        d = sum(rp)
        r = np.empty((ell, ell), dtype=object)
        for b in range(ell):
            for z in range(ell):
                if b == z:
                    r[b, z] = lo[b]
                else:
                    r[b, z] = rp[b] * rq[z] / d if d else Fraction(0)
        return r
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    lo = np.minimum(p, q)
    rp = p - lo
    rq = q - lo
    d = rp.sum()
    r = np.outer(rp, rq) / d if d > 0 else np.zeros((ell, ell))
    np.fill_diagonal(r, lo)
    return r


@dataclass(frozen=True)
class CouplingNet:
    net: BayesNet
    base_alphabet: int

    def encode(self, b: int, z: int) -> int:
        return pair_encode(b, z, self.base_alphabet)

    def decode(self, symbol: int) -> tuple[int, int]:
        return pair_decode(symbol, self.base_alphabet)

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def dag(self):
        return self.net.dag

    @classmethod
    def from_net(cls, net: BayesNet) -> "CouplingNet":
        if net.pair_base is None:
            raise BNInputError("net carries no pair_base field; not a coupling net")
        return cls(net, net.pair_base)


def build_coupling(p: BayesNet, q: BayesNet) -> CouplingNet:
    """Coupling CPT row for paired parents (c1, c2) is coupling_row(P(.|c1), Q(.|c2))."""
    same_shape(p, q)
    if p.exact != q.exact:
        p, q = p.to_exact(), q.to_exact()
    ell = p.alphabet
    cpts = []
    for i, ps in enumerate(p.parents):
        k = len(ps)
        rows = ell ** (2 * k)
        table = np.empty((rows, ell * ell), dtype=object if p.exact else np.float64)
        ptab, qtab = p.cpts[i].table, q.cpts[i].table
        for r in range(rows):
            # digits of r in base ell*ell are paired parent symbols, first parent most significant
            r1 = r2 = 0
            rem = r
            digits = []
            for _ in range(k):
                rem, s = divmod(rem, ell * ell)
                digits.append(s)
            for s in reversed(digits):
                c1, c2 = divmod(s, ell)
                r1 = r1 * ell + c1
                r2 = r2 * ell + c2
            table[r] = coupling_row(list(ptab[r1]), list(qtab[r2])).reshape(-1)
        cpts.append(Cpt(i, table))
    net = BayesNet(p.dag, ell * ell, tuple(cpts), pair_base=ell)
    return CouplingNet(net, ell)
