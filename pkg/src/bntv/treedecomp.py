"""Tree decompositions of undirected graphs via the min-fill elimination heuristic."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from .model import UndirectedGraph


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    tree_edges: tuple[tuple[int, int], ...]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def neighbours(self) -> list[list[int]]:
        nb: list[list[int]] = [[] for _ in self.bags]
        for a, b in self.tree_edges:
            nb[a].append(b)
            nb[b].append(a)
        return nb

    def to_text(self) -> str:
        lines = [f"width {self.width}", f"bags {len(self.bags)}"]
        for k, bag in enumerate(self.bags):
            lines.append(f"bag {k}: {' '.join(map(str, sorted(bag)))}")
        for a, b in self.tree_edges:
            lines.append(f"edge {a} {b}")
        return "\n".join(lines)


def single_bag(n: int) -> TreeDecomposition:
    return TreeDecomposition((frozenset(range(n)),), ())


def min_fill_order(g: UndirectedGraph) -> list[int]:
    """Greedy min-fill order; ties go to min degree, then lowest index."""
    adj = [set(a) for a in g.adjacency]
    alive = set(range(g.n))
    fill = {v: _fill(adj, v) for v in alive}
    order = []
    while alive:
        v = min(alive, key=lambda u: (fill[u], len(adj[u]), u))
        nbrs = adj[v]
        touched = set(nbrs)
        for a, b in itertools.combinations(nbrs, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                touched |= adj[a] | adj[b]
        for u in nbrs:
            adj[u].discard(v)
        alive.discard(v)
        adj[v] = set()
        del fill[v]
        for u in touched:
            if u in alive:
                fill[u] = _fill(adj, u)
        order.append(v)
    return order


def _fill(adj, v) -> int:
    return sum(1 for a, b in itertools.combinations(adj[v], 2) if b not in adj[a])


def decomposition_from_order(g: UndirectedGraph, order: list[int]) -> TreeDecomposition:
    """Bag of v = v plus its neighbours when eliminated; attach to the earliest-eliminated of those."""
    adj = [set(a) for a in g.adjacency]
    pos = {v: k for k, v in enumerate(order)}
    bags = []
    for v in order:
        nbrs = adj[v]
        bags.append(frozenset(nbrs | {v}))
        for a, b in itertools.combinations(nbrs, 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nbrs:
            adj[u].discard(v)
        adj[v] = set()
    edges = []
    roots = []
    for k, v in enumerate(order):
        rest = bags[k] - {v}
        if rest:
            edges.append((k, min(pos[u] for u in rest)))
        else:
            roots.append(k)
    # each root closes one component; chain them into a single tree
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return TreeDecomposition(tuple(bags), tuple(sorted(edges)))


def decompose(g: UndirectedGraph) -> TreeDecomposition:
    if g.n == 0:
        return TreeDecomposition((frozenset(),), ())
    return decomposition_from_order(g, min_fill_order(g))


def _is_tree(k: int, edges) -> bool:
    if len(edges) != k - 1:
        return False
    nb: list[list[int]] = [[] for _ in range(k)]
    for a, b in edges:
        if not (0 <= a < k and 0 <= b < k):
            return False
        nb[a].append(b)
        nb[b].append(a)
    seen = {0}
    queue = deque([0])
    while queue:
        for w in nb[queue.popleft()]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == k


def verify_decomposition(g: UndirectedGraph, td: TreeDecomposition) -> bool:
    """Tree shape, vertex coverage, edge coverage, running intersection."""
    k = len(td.bags)
    if k == 0 or not _is_tree(k, td.tree_edges):
        return False
    union = frozenset().union(*td.bags)
    if union != frozenset(range(g.n)):
        return False
    for u, v in g.edges():
        if not any(u in b and v in b for b in td.bags):
            return False
    nb = td.neighbours()
    for v in range(g.n):
        holding = [i for i, b in enumerate(td.bags) if v in b]
        seen = {holding[0]}
        queue = deque([holding[0]])
        while queue:
            for w in nb[queue.popleft()]:
                if w not in seen and v in td.bags[w]:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != len(holding):
            return False
    return True


def elimination_order(td: TreeDecomposition) -> list[int]:
    """Peel leaf bags, eliminating vertices no other remaining bag contains.

    Every variable is eliminated while all its live neighbours sit in the
    leaf bag being peeled, so no intermediate scope exceeds the largest bag.
    """
    k = len(td.bags)
    nb = [set(x) for x in td.neighbours()]
    alive = set(range(k))
    done: set[int] = set()
    order: list[int] = []
    while alive:
        if len(alive) == 1:
            (leaf,) = alive
            order.extend(sorted(td.bags[leaf] - done))
            break
        leaf = min(b for b in alive if len(nb[b]) <= 1)
        (parent,) = nb[leaf]
        out = sorted(td.bags[leaf] - td.bags[parent] - done)
        order.extend(out)
        done.update(out)
        nb[parent].discard(leaf)
        alive.discard(leaf)
    return order


def treewidth_exact(g: UndirectedGraph) -> int:
    """Exact treewidth by dynamic programming over vertex subsets; for small graphs only."""
    n = g.n
    if n == 0:
        return -1
    adj = [0] * n
    for u in range(n):
        for v in g.adjacency[u]:
            adj[u] |= 1 << v

    def q_cost(s: int, v: int) -> int:
        # vertices outside s|{v} reachable from v through s
        seen = 1 << v
        frontier = [v]
        out = 0
        while frontier:
            u = frontier.pop()
            nbrs = adj[u] & ~seen
            seen |= nbrs
            while nbrs:
                w = (nbrs & -nbrs).bit_length() - 1
                nbrs &= nbrs - 1
                if s >> w & 1:
                    frontier.append(w)
                else:
                    out += 1
        return out

    best = {0: -1}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            s = sum(1 << v for v in combo)
            best[s] = min(max(best[s & ~(1 << v)], q_cost(s & ~(1 << v), v)) for v in combo)
    return best[(1 << n) - 1]
