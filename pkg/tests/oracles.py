"""Brute-force oracles, written independently of the package code they check."""
from fractions import Fraction
from itertools import combinations, product

INF = float("inf")


# -- posets ----------------------------------------------------------------------

def less_than(nodes, covers):
    """Strict order as a set of pairs, by repeated composition of the covers."""
    rel = set(covers)
    while True:
        new = {(a, d) for a, b in rel for c, d in rel if b == c} - rel
        if not new:
            return rel
        rel |= new


def saturated_chains(nodes, covers, p, q):
    """All cover paths from p to q, as node lists."""
    up = {n: [b for a, b in covers if a == n] for n in nodes}
    out = []

    def walk(path):
        if path[-1] == q:
            out.append(list(path))
            return
        for nxt in up[path[-1]]:
            walk(path + [nxt])

    walk([p])
    return out


def height_oracle(nodes, covers, node):
    """Longest chain ending at node, by exhaustive path enumeration."""
    return max((len(c) - 1 for m in nodes for c in saturated_chains(nodes, covers, m, node)),
               default=0)


def catenary_oracle(nodes, covers):
    lt = less_than(nodes, covers)
    for p, q in lt:
        lengths = {len(c) for c in saturated_chains(nodes, covers, p, q)}
        if len(lengths) > 1:
            return False
    return True


def codim_exists_oracle(nodes, covers):
    """Backtracking search for integer d with d(q) = d(p) + 1 on every cover.

    Values can be taken in [0, n-1]: normalize each component to minimum 0, and
    values inside a component then differ by at most the number of nodes.
    """
    nodes = list(nodes)
    n = len(nodes)
    cons = {m: [] for m in nodes}
    for a, b in covers:
        cons[a].append((b, 1))
        cons[b].append((a, -1))
    val = {}

    def go(i):
        if i == n:
            return True
        p = nodes[i]
        for v in range(n):
            if all(val.get(o) is None or val[o] == v + delta for o, delta in cons[p]):
                val[p] = v
                if go(i + 1):
                    return True
                del val[p]
        return False

    return go(0)


def is_codim_function(covers, d):
    return all(d[b] == d[a] + 1 for a, b in covers)


# -- filtrations -----------------------------------------------------------------

def levels_from_f(nodes, f, n):
    return frozenset(p for p in nodes if f[p] > n)


def f_from_levels(nodes, level, lo=-20, hi=20):
    """f(p) = sup{n : p in level(n)} + 1 over a window wide enough for the values used."""
    out = {}
    for p in nodes:
        ns = [n for n in range(lo, hi + 1) if p in level(n)]
        if not ns:
            out[p] = -INF
        elif hi in ns:
            out[p] = INF
        else:
            out[p] = max(ns) + 1
    return out


def is_upset(nodes, covers, S):
    return all(b in S for a, b in covers if a in S)


# -- rank and Koszul homology over Q ---------------------------------------------

def rank_q(rows):
    M = [[Fraction(x) for x in r] for r in rows]
    if not M or not M[0]:
        return 0
    r = 0
    for c in range(len(M[0])):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                fac = M[i][c] / M[r][c]
                M[i] = [a - fac * b for a, b in zip(M[i], M[r])]
        r += 1
    return r


def in_ideal(m, rels):
    return any(all(m[i] >= g[i] for i in range(len(m))) for g in rels)


def koszul_homology_dim(nvars, rels, gens, j, d):
    """dim H_j(K(x_g : g in gens); k[x]/(rels)) in multidegree d (homological indexing)."""
    def basis(jj):
        out = []
        for J in combinations(gens, jj):
            m = list(d)
            for g in J:
                m[g] -= 1
            if min(m) >= 0 and not in_ideal(m, rels):
                out.append((J, tuple(m)))
        return out

    def boundary(src, tgt):
        index = {b: i for i, b in enumerate(tgt)}
        mat = [[0] * len(src) for _ in range(len(tgt))]
        for c, (J, m) in enumerate(src):
            for pos, g in enumerate(J):
                m2 = list(m)
                m2[g] += 1
                key = (J[:pos] + J[pos + 1:], tuple(m2))
                if key in index:
                    mat[index[key]][c] += (-1) ** pos
        return mat

    Bj, Bjm, Bjp = basis(j), basis(j - 1) if j >= 1 else [], basis(j + 1)
    rank_out = rank_q(boundary(Bj, Bjm)) if Bj and Bjm else 0
    rank_in = rank_q(boundary(Bjp, Bj)) if Bjp and Bj else 0
    return len(Bj) - rank_out - rank_in


def grade_oracle(nvars, rels, gens, box=3):
    """depth(I, R) = t - max{j : H_j(K) != 0}, scanning multidegrees in [0, box]^n."""
    t = len(gens)
    top = None
    for j in range(t, -1, -1):
        for d in product(range(box + 1), repeat=nvars):
            if koszul_homology_dim(nvars, rels, gens, j, d):
                top = j
                break
        if top is not None:
            break
    return INF if top is None else t - top


# -- finite abelian group homs ----------------------------------------------------

def all_homs_cyclic(m, n):
    """Count additive maps Z/m -> Z/n by enumerating every function."""
    count = 0
    for images in product(range(n), repeat=m):
        if all(images[(a + b) % m] == (images[a] + images[b]) % n
               for a in range(m) for b in range(m)):
            count += 1
    return count


def codim_functions_of_component(comp, covers, span):
    """Every d on a connected component with d(q) = d(p) + 1 on covers and values in [0, span).

    Nodes are visited along a spanning walk, so each node after the first has
    an assigned neighbour and the search stays small.
    """
    comp = set(comp)
    adj = {n: [] for n in comp}
    for a, b in covers:
        if a in comp:
            adj[a].append((b, 1))
            adj[b].append((a, -1))
    start = min(comp)
    order, seen = [start], {start}
    for n in order:
        for m, _ in adj[n]:
            if m not in seen:
                seen.add(m)
                order.append(m)
    out = []

    def go(i, val):
        if i == len(order):
            out.append(dict(val))
            return
        n = order[i]
        for v in range(span):
            if all(val.get(m) is None or val[m] == v + delta for m, delta in adj[n]):
                val[n] = v
                go(i + 1, val)
                del val[n]

    go(0, {})
    return out
