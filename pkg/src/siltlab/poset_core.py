"""Finite posets standing in for windows of prime spectra.

A poset is stored by its cover relation (Hasse diagram).  Everything else,
the order, heights, components, catenarity and codimension functions, is
derived from the covers.
"""
from collections import deque
from itertools import combinations


class PosetError(Exception):
    pass


class CycleDetected(PosetError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cover relation has a cycle: %s" % " < ".join(map(str, self.cycle)))


class RedundantCover(PosetError):
    def __init__(self, pair):
        self.pair = tuple(pair)
        super().__init__("cover %s < %s is implied by transitivity" % self.pair)


class UnknownNode(PosetError):
    def __init__(self, node):
        self.node = node
        super().__init__("unknown node %r" % (node,))


class NoCodimensionFunction(PosetError):
    def __init__(self, cycle):
        # cycle: list of covers (p, q) whose unit steps do not add up
        self.cycle = [tuple(c) for c in cycle]
        super().__init__("no codimension function; inconsistent covers %s" % self.cycle)


class FinitePoset:
    """Nodes plus irredundant, acyclic covers p < q (p strictly below q)."""

    def __init__(self, nodes, covers=(), labels=None):
        nodes = list(nodes)
        if len(set(nodes)) != len(nodes):
            dup = next(n for n in nodes if nodes.count(n) > 1)
            raise PosetError("duplicate node %r" % (dup,))
        self.nodes = tuple(nodes)
        self._index = {n: i for i, n in enumerate(nodes)}
        covers = [tuple(c) for c in covers]
        for p, q in covers:
            for n in (p, q):
                if n not in self._index:
                    raise UnknownNode(n)
        self.covers = frozenset(covers)
        self.labels = dict(labels or {})
        self._up = {n: [] for n in nodes}
        self._down = {n: [] for n in nodes}
        for p, q in sorted(self.covers, key=self._pair_key):
            self._up[p].append(q)
            self._down[q].append(p)
        self._topo = self._toposort()
        self._above = self._strict_above()
        for p, q in self.covers:
            # redundant iff q is reachable from p through another cover
            for r in self._up[p]:
                if r != q and q in self._above[r]:
                    raise RedundantCover((p, q))
        self._heights = None

    # -- construction helpers

    def _pair_key(self, pq):
        return (self._index[pq[0]], self._index[pq[1]])

    def _toposort(self):
        indeg = {n: len(self._down[n]) for n in self.nodes}
        queue = deque(n for n in self.nodes if indeg[n] == 0)
        order = []
        while queue:
            n = queue.popleft()
            order.append(n)
            for m in self._up[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    queue.append(m)
        if len(order) != len(self.nodes):
            raise CycleDetected(self._find_cycle(set(self.nodes) - set(order)))
        return order

    def _find_cycle(self, rest):
        # every remaining node has a predecessor inside rest; walk backwards
        start = next(n for n in self.nodes if n in rest)
        seen = {}
        path = []
        n = start
        while n not in seen:
            seen[n] = len(path)
            path.append(n)
            n = next(m for m in self._down[n] if m in rest)
        cyc = path[seen[n]:]
        cyc.reverse()
        return cyc + [cyc[0]]

    def _strict_above(self):
        above = {}
        for n in reversed(self._topo):
            s = set()
            for m in self._up[n]:
                s.add(m)
                s |= above[m]
            above[n] = frozenset(s)
        return above

    # -- basic order queries

    def __contains__(self, node):
        return node in self._index

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return (isinstance(other, FinitePoset) and set(self.nodes) == set(other.nodes)
                and self.covers == other.covers)

    def __hash__(self):
        return hash((frozenset(self.nodes), self.covers))

    def __repr__(self):
        return "FinitePoset(%d nodes, %d covers)" % (len(self.nodes), len(self.covers))

    def check(self, node):
        if node not in self._index:
            raise UnknownNode(node)
        return node

    def index(self, node):
        return self._index[self.check(node)]

    def upper_covers(self, node):
        return list(self._up[self.check(node)])

    def lower_covers(self, node):
        return list(self._down[self.check(node)])

    def sorted_covers(self):
        return sorted(self.covers, key=self._pair_key)

    def topological_order(self):
        return list(self._topo)

    def lt(self, p, q) -> bool:
        return q in self._above[self.check(p)]

    def le(self, p, q) -> bool:
        return p == q or self.lt(p, q)

    def comparable(self, p, q) -> bool:
        return self.le(p, q) or self.le(q, p)

    def up_closure(self, node):
        return frozenset(self._above[self.check(node)]) | {node}

    def down_closure(self, node):
        self.check(node)
        return frozenset(m for m in self.nodes if self.le(m, node))

    def minimal(self):
        return [n for n in self.nodes if not self._down[n]]

    def maximal(self):
        return [n for n in self.nodes if not self._up[n]]

    def is_upset(self, subset) -> bool:
        s = set(subset)
        for n in s:
            self.check(n)
        return all(q in s for p in s for q in self._up[p])

    def is_antichain(self, subset) -> bool:
        s = list(subset)
        return not any(self.comparable(a, b) for a, b in combinations(s, 2))

    def dimension(self):
        """Length of the longest chain (-1 for the empty poset)."""
        if not self.nodes:
            return -1
        return max(self.heights().values())

    def heights(self):
        if self._heights is None:
            h = {}
            for n in self._topo:
                h[n] = max((h[m] + 1 for m in self._down[n]), default=0)
            self._heights = h
        return dict(self._heights)

    def coheights(self):
        c = {}
        for n in reversed(self._topo):
            c[n] = max((c[m] + 1 for m in self._up[n]), default=0)
        return c

    def sub_poset(self, subset):
        """Induced sub-poset on a subset, with covers recomputed."""
        keep = [n for n in self.nodes if n in set(subset)]
        pairs = [(p, q) for p in keep for q in keep if self.lt(p, q)]
        return from_order_pairs(keep, pairs, {n: self.labels[n] for n in keep if n in self.labels})


def build_poset(nodes, covers=(), labels=None) -> FinitePoset:
    return FinitePoset(nodes, covers, labels)


def from_order_pairs(nodes, pairs, labels=None) -> FinitePoset:
    """Poset from any generating set of strict relations (transitive reduction)."""
    nodes = list(nodes)
    succ = {n: set() for n in nodes}
    for p, q in pairs:
        if p not in succ:
            raise UnknownNode(p)
        if q not in succ:
            raise UnknownNode(q)
        succ[p].add(q)
    # transitive closure by DFS
    reach = {}

    def closure(n, stack):
        if n in reach:
            return reach[n]
        if n in stack:
            raise CycleDetected(list(stack[stack.index(n):]) + [n])
        stack.append(n)
        r = set()
        for m in succ[n]:
            r.add(m)
            r |= closure(m, stack)
        stack.pop()
        reach[n] = r
        return r

    for n in nodes:
        closure(n, [])
    covers = []
    for p in nodes:
        for q in reach[p]:
            if not any(q in reach[r] for r in reach[p] if r != q):
                covers.append((p, q))
    return FinitePoset(nodes, covers, labels)


def height(poset: FinitePoset, node) -> int:
    poset.check(node)
    return poset.heights()[node]


def connected_components(poset: FinitePoset):
    """Components of the comparability graph, in node order."""
    seen = set()
    comps = []
    for n in poset.nodes:
        if n in seen:
            continue
        comp = []
        queue = deque([n])
        seen.add(n)
        while queue:
            m = queue.popleft()
            comp.append(m)
            for k in poset.upper_covers(m) + poset.lower_covers(m):
                if k not in seen:
                    seen.add(k)
                    queue.append(k)
        comps.append(sorted(comp, key=poset.index))
    return comps


def _chain_extremes(poset, p):
    """Shortest and longest saturated chains from p to every q >= p."""
    short = {p: [p]}
    long = {p: [p]}
    for n in poset.topological_order():
        if n not in short:
            continue
        for m in poset.upper_covers(n):
            cand = short[n] + [m]
            if m not in short or len(cand) < len(short[m]):
                short[m] = cand
            cand = long[n] + [m]
            if m not in long or len(cand) > len(long[m]):
                long[m] = cand
    return short, long


def is_catenary(poset: FinitePoset):
    """Return (True, None) or (False, (p, q, chain_a, chain_b)) with chains of distinct length."""
    for p in poset.nodes:
        short, long = _chain_extremes(poset, p)
        for q in poset.nodes:
            if q in short and len(short[q]) != len(long[q]):
                return False, (p, q, short[q], long[q])
    return True, None


class CodimFunction:
    """Integer values rising by one along every cover, minimum 0 on each component."""

    def __init__(self, poset, values, components):
        self.poset = poset
        self.values = dict(values)
        self.components = [list(c) for c in components]

    def __getitem__(self, node):
        return self.values[node]

    def __eq__(self, other):
        return isinstance(other, CodimFunction) and self.values == other.values

    def __repr__(self):
        return "CodimFunction(%r)" % (self.values,)

    def per_component(self):
        return [{n: self.values[n] for n in c} for c in self.components]


def _tree_path(parent, n):
    path = [n]
    while parent[n] is not None:
        n = parent[n][0]
        path.append(n)
    return path


def codimension_functions(poset: FinitePoset) -> CodimFunction:
    """Solve d(q) = d(p) + 1 on covers by propagation along each component."""
    comps = connected_components(poset)
    values = {}
    for comp in comps:
        root = comp[0]
        val = {root: 0}
        parent = {root: None}     # node -> (parent node, cover used)
        queue = deque([root])
        while queue:
            n = queue.popleft()
            nbrs = [(m, (n, m), 1) for m in poset.upper_covers(n)]
            nbrs += [(m, (m, n), -1) for m in poset.lower_covers(n)]
            for m, cov, step in nbrs:
                want = val[n] + step
                if m not in val:
                    val[m] = want
                    parent[m] = (n, cov)
                    queue.append(m)
                elif val[m] != want:
                    raise NoCodimensionFunction(_conflict_cycle(parent, n, m, cov))
        low = min(val.values())
        for n in comp:
            values[n] = val[n] - low
    return CodimFunction(poset, values, comps)


def _conflict_cycle(parent, n, m, closing):
    """Covers along tree paths root->n, root->m plus the closing cover."""
    pn = _tree_path(parent, n)
    pm = _tree_path(parent, m)
    common = set(pn) & set(pm)
    covers = []
    for path in (pn, pm):
        for node in path:
            if node in common:
                break
            covers.append(parent[node][1])
    covers.append(closing)
    return covers


def is_codimension_function(poset: FinitePoset, values) -> bool:
    return all(values[q] == values[p] + 1 for p, q in poset.covers)


def spec_window_of_monomial_ring(ring) -> FinitePoset:
    """Monomial primes (x_i : i in S) of a monomial quotient, ordered by inclusion.

    ``ring`` needs ``vars``, ``relations`` (exponent tuples) and ``inverted``
    (a set of variable indices).  Primes of the localization are the subsets
    disjoint from the inverted variables.  Node names are ``(x,y)`` style
    strings, ``(0)`` for the zero ideal; labels hold the variable sets.
    """
    n = len(ring.vars)
    free = [i for i in range(n) if i not in ring.inverted]
    subsets = []
    for r in range(len(free) + 1):
        for S in combinations(free, r):
            Sset = set(S)
            ok = all(any(rel[i] > 0 and i in Sset for i in range(n) if i not in ring.inverted)
                     for rel in ring.relations)
            if ok:
                subsets.append(frozenset(S))
    names = {S: prime_name(ring.vars, S) for S in subsets}
    covers = [(names[A], names[B]) for A in subsets for B in subsets
              if A < B and len(B) == len(A) + 1]
    labels = {names[S]: frozenset(ring.vars[i] for i in S) for S in subsets}
    return FinitePoset([names[S] for S in subsets], covers, labels)


def prime_name(var_names, S) -> str:
    if not S:
        return "(0)"
    return "(" + ",".join(var_names[i] for i in sorted(S)) + ")"


def integer_window(primes) -> FinitePoset:
    """Window of Spec Z on finitely many primes: (0) below each (p)."""
    ps = sorted({int(p) for p in primes})
    for p in ps:
        if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
            raise PosetError("%d is not prime" % p)
    nodes = ["(0)"] + ["(%d)" % p for p in ps]
    labels = {"(0)": frozenset()}
    labels.update({"(%d)" % p: frozenset([p]) for p in ps})
    return FinitePoset(nodes, [("(0)", "(%d)" % p) for p in ps], labels)
