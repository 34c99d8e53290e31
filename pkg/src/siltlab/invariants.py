"""Depth, width, support, grade, aisle tests and Cohen-Macaulay concentration.

All invariants are read off certified homology: a complex built by the
monomial constructors has a finite degree box outside of which nothing new
happens, so inf and sup over the box are the global inf and sup.
"""
from dataclasses import dataclass, field

from .extint import INF, NEG_INF, ExtendedInt
from .grcomplex import (cech_complex, hom_from_finite_free, homology_support_box,
                        koszul_complex, localize_at_prime, nonzero_degrees, ring_complex, tensor)
from .poset_core import FinitePoset, spec_window_of_monomial_ring
from .spfilt import SpFiltration


class InvariantError(Exception):
    pass


class NotUpSet(InvariantError):
    pass


class WindowMismatch(InvariantError):
    pass


def inf_complex(X) -> ExtendedInt:
    degs = nonzero_degrees(X)
    return min(degs) if degs else INF


def sup_complex(X) -> ExtendedInt:
    degs = nonzero_degrees(X)
    return max(degs) if degs else NEG_INF


def _gens(ring, ideal):
    """Normalize an ideal given as node name '(x,y)', var names or monomial strings."""
    if isinstance(ideal, str):
        t = ideal.strip()
        if t.startswith("(") and t.endswith(")"):
            t = t[1:-1]
        if t in ("", "0"):
            return []
        return [g.strip() for g in t.split(",") if g.strip()]
    return list(ideal)


def depth(X, ideal) -> ExtendedInt:
    """inf Hom(K(gens), X); +inf when that complex is acyclic."""
    gens = _gens(X.ring, ideal)
    return inf_complex(hom_from_finite_free(koszul_complex(X.ring, gens), X))


def depth_cech(X, ideal) -> ExtendedInt:
    """inf of C(gens) tensor X; generators must be variables."""
    gens = _gens(X.ring, ideal)
    return inf_complex(tensor(cech_complex(X.ring, gens), X))


def width(X, ideal) -> ExtendedInt:
    """-sup of K(gens) tensor X; +inf when that complex is acyclic."""
    gens = _gens(X.ring, ideal)
    s = sup_complex(tensor(koszul_complex(X.ring, gens), X))
    return -s


def window(ring) -> FinitePoset:
    return spec_window_of_monomial_ring(ring)


def prime_vars(poset: FinitePoset, node):
    poset.check(node)
    return sorted(poset.labels[node])


def depth_over_set(X, W, poset=None) -> ExtendedInt:
    """min over p in W of depth(p, X_p), with X_p the monomial localization proxy."""
    P = poset if poset is not None else window(X.ring)
    W = list(W)
    for p in W:
        if p not in P:
            raise NotUpSet("node %r is not in the window" % (p,))
    if not P.is_upset(W):
        raise NotUpSet("W is not specialization closed")
    best = INF
    for p in sorted(W, key=P.index):
        vs = prime_vars(P, p)
        d = depth(localize_at_prime(X, vs), vs)
        best = min(best, d)
    return best


def monomial_ideals_in(poset: FinitePoset, nvars_names):
    """Squarefree monomial ideals (as generator lists) with their window zero sets."""
    from itertools import combinations
    names = list(nvars_names)
    subsets = [frozenset(s) for r in range(1, len(names) + 1) for s in combinations(names, r)]
    out = []
    # antichains of subsets = minimal generating sets of squarefree monomial ideals
    for r in range(0, len(subsets) + 1):
        for gens in combinations(subsets, r):
            if any(a < b for a in gens for b in gens):
                continue
            V = frozenset(p for p in poset.nodes
                          if all(poset.labels[p] & g for g in gens))
            out.append((["*".join(sorted(g)) for g in gens], V))
    return out


def depth_over_set_oracle(X, W, poset=None) -> ExtendedInt:
    """min depth(I, X) over squarefree monomial I whose window zero set lies in W."""
    P = poset if poset is not None else window(X.ring)
    Wset = frozenset(W)
    best = INF
    for gens, V in monomial_ideals_in(P, X.ring.vars):
        if V <= Wset:
            best = min(best, depth(X, gens))
    return best


def grade_filtration(ring) -> SpFiltration:
    P = window(ring)
    R = ring_complex(ring)
    f = {p: depth(R, prime_vars(P, p)) for p in P.nodes}
    return SpFiltration(P, f)


def supp_cohomology(X, poset=None):
    """n -> frozenset of window primes p with (H^n X)_p != 0; only nonempty entries."""
    P = poset if poset is not None else window(X.ring)
    homology_support_box(X)
    out = {}
    for p in P.nodes:
        for n in nonzero_degrees(localize_at_prime(X, prime_vars(P, p))):
            out.setdefault(n, set()).add(p)
    return {n: frozenset(s) for n, s in sorted(out.items())}


def _check_window(X, phi):
    W = window(X.ring)
    if W != phi.poset:
        raise WindowMismatch("filtration poset does not match the window of %r" % (X.ring,))
    return W


def in_aisle_U(X, phi: SpFiltration) -> bool:
    """Supp H^n(X) inside Phi(n) for every n."""
    P = _check_window(X, phi)
    for n, s in supp_cohomology(X, P).items():
        if not s <= phi.level(n):
            return False
    return True


def _critical_levels(phi: SpFiltration):
    """Largest n of each interval on which Phi(n) is constant, plus a flag for the top one."""
    vals = phi.finite_values()
    if not vals:
        return [], True
    return [v - 1 for v in vals], True


def in_coaisle_V(X, phi: SpFiltration) -> bool:
    """depth(Phi(n), X) > n for every n."""
    P = _check_window(X, phi)
    levels, _ = _critical_levels(phi)
    for n in levels:
        if not depth_over_set(X, phi.level(n), P) > n:
            return False
    # above the largest finite value Phi(n) is the set of +inf nodes, for all n
    top = frozenset(p for p in P.nodes if phi.f[p] == INF)
    if top and depth_over_set(X, top, P) != INF:
        return False
    return True


def in_Y(X, phi: SpFiltration) -> bool:
    """width(p, X) >= f(p) for every window prime p."""
    P = _check_window(X, phi)
    for p in P.nodes:
        if not width(X, prime_vars(P, p)) >= phi.f[p]:
            return False
    return True


@dataclass
class CMReport:
    prime: str
    height: int
    degrees: list
    concentrated: bool
    box: list = field(default_factory=list)

    def as_dict(self):
        return {"prime": self.prime, "height": self.height, "degrees": list(self.degrees),
                "concentrated": self.concentrated, "box": [list(r) for r in self.box]}


def cm_concentration(ring, prime) -> CMReport:
    """Local cohomology of the R_p proxy at p vanishes outside the window height of p."""
    P = window(ring)
    if isinstance(prime, str) and prime in P:
        node = prime
    else:
        vs = frozenset(_gens(ring, prime))
        node = next((n for n in P.nodes if P.labels[n] == vs), None)
        if node is None:
            raise InvariantError("%r is not a window prime" % (prime,))
    vs = prime_vars(P, node)
    Rp = ring.localize_at_prime(vs)
    X = tensor(cech_complex(Rp, vs), ring_complex(Rp))
    box = homology_support_box(X)
    degs = sorted(nonzero_degrees(X, box))
    h = P.heights()[node]
    return CMReport(node, h, degs, degs == [h], box.ranges)
