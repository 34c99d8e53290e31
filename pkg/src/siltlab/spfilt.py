"""sp-filtrations on finite posets, stored as order-preserving functions.

A filtration is a decreasing family of up-sets Phi(n).  It is kept in its
function form f, with Phi(n) = {p : f(p) > n} and f(p) = sup{n : p in Phi(n)} + 1.
"""
from dataclasses import dataclass, field

from . import extint
from .extint import INF, NEG_INF, is_finite
from .poset_core import FinitePoset, NoCodimensionFunction, codimension_functions


class FiltrationError(Exception):
    pass


class NotSpecializationClosed(FiltrationError):
    def __init__(self, level, node):
        self.level, self.node = level, node
        super().__init__("level %s is not an up-set: %r lies below a node outside it" % (level, node))


class NotNested(FiltrationError):
    def __init__(self, level):
        self.level = level
        super().__init__("Phi(%s) does not contain Phi(%s)" % (level, level + 1))


class NotOrderPreserving(FiltrationError):
    def __init__(self, pair):
        self.pair = tuple(pair)
        super().__init__("f decreases along cover %s < %s" % self.pair)


class FiberNotZeroDimensional(FiltrationError):
    def __init__(self, q, pair=None):
        self.q, self.pair = q, pair
        super().__init__("fiber over %r contains comparable nodes %s" % (q, pair))


class SpFiltration:
    def __init__(self, poset: FinitePoset, f):
        self.poset = poset
        vals = {}
        for n in poset.nodes:
            if n not in f:
                raise FiltrationError("no value for node %r" % (n,))
            vals[n] = extint.normalize(f[n])
        for n in f:
            poset.check(n)
        for p, q in poset.sorted_covers():
            if vals[p] > vals[q]:
                raise NotOrderPreserving((p, q))
        self.f = vals

    def __call__(self, node):
        return self.f[self.poset.check(node)]

    def __eq__(self, other):
        return isinstance(other, SpFiltration) and self.poset == other.poset and self.f == other.f

    def __hash__(self):
        return hash(tuple(sorted((str(k), v) for k, v in self.f.items())))

    def __repr__(self):
        body = ", ".join("%s:%s" % (n, extint.fmt(self.f[n])) for n in self.poset.nodes)
        return "SpFiltration({%s})" % body

    def level(self, n):
        """Phi(n) as a frozenset of nodes."""
        return frozenset(p for p in self.poset.nodes if self.f[p] > n)

    def finite_values(self):
        return sorted({v for v in self.f.values() if is_finite(v)})

    def level_range(self):
        """Levels lo..hi outside of which Phi(n) is constant."""
        vals = self.finite_values()
        if not vals:
            return 0, 0
        return vals[0] - 1, vals[-1]

    def levels(self):
        lo, hi = self.level_range()
        return {n: self.level(n) for n in range(lo, hi + 1)}


def filtration_from_function(poset: FinitePoset, f) -> SpFiltration:
    return SpFiltration(poset, f)


def function_from_filtration(phi: SpFiltration):
    return dict(phi.f)


def filtration_from_levels(poset: FinitePoset, levels, outside="clamp") -> SpFiltration:
    """Build a filtration from a finite table n -> node set.

    ``outside`` says what Phi(n) is for n beyond the table: ``all`` (every
    node below the range, nothing above it), ``empty`` (nothing on either
    side) or ``clamp`` (repeat the boundary levels).
    """
    if outside not in ("all", "empty", "clamp"):
        raise FiltrationError("outside policy must be all, empty or clamp")
    table = {int(n): frozenset(s) for n, s in levels.items()}
    if not table:
        if outside == "all":
            raise FiltrationError("policy 'all' needs at least one level")
        return SpFiltration(poset, {p: NEG_INF for p in poset.nodes})
    for n in sorted(table):
        for p in table[n]:
            poset.check(p)
        if not poset.is_upset(table[n]):
            bad = next(p for p in sorted(table[n], key=poset.index)
                       if any(q not in table[n] for q in poset.upper_covers(p)))
            raise NotSpecializationClosed(n, bad)
    lo, hi = min(table), max(table)
    full = frozenset(poset.nodes)
    for n in range(lo, hi + 1):
        if n not in table:
            raise FiltrationError("level table has a gap at %d" % n)
    for n in range(lo, hi):
        if not table[n] >= table[n + 1]:
            raise NotNested(n)
    if outside == "all":
        below, above = full, frozenset()
    elif outside == "empty":
        below, above = frozenset(), frozenset()
    else:
        below, above = table[lo], table[hi]
    if not below >= table[lo]:
        raise NotNested(lo - 1)
    if not table[hi] >= above:
        raise NotNested(hi)
    f = {}
    for p in poset.nodes:
        if p in above:
            f[p] = INF
            continue
        inside = [n for n in range(lo, hi + 1) if p in table[n]]
        if inside:
            f[p] = max(inside) + 1
        elif p in below:
            f[p] = lo
        else:
            f[p] = NEG_INF
    return SpFiltration(poset, f)


@dataclass
class FiltrationFlags:
    valid_sp: bool = True
    non_degenerate: bool = True
    bounded: bool = True
    slice: bool = True
    weak_cousin: bool = True
    strong_cousin: bool = True
    codimension: bool = True
    witnesses: dict = field(default_factory=dict)

    NAMES = ("valid_sp", "non_degenerate", "bounded", "slice",
             "weak_cousin", "strong_cousin", "codimension")

    def as_dict(self):
        return {k: getattr(self, k) for k in self.NAMES}


def _plus1(v):
    return v + 1 if is_finite(v) else v


def classify(phi: SpFiltration) -> FiltrationFlags:
    P = phi.poset
    f = phi.f
    fl = FiltrationFlags()
    w = fl.witnesses
    covers = P.sorted_covers()

    bad = next((n for n in P.nodes if not is_finite(f[n])), None)
    if bad is not None:
        fl.non_degenerate = False
        w["non_degenerate"] = {"node": bad, "value": extint.fmt(f[bad])}
        fl.bounded = False
        w["bounded"] = {"node": bad, "value": extint.fmt(f[bad])}
    # a finite poset with finite values is automatically bounded:
    # Phi(min f - 1) is everything and Phi(max f) is empty

    for p, q in covers:
        if not (f[p] < f[q]) or not is_finite(f[p]):
            fl.slice = False
            w["slice"] = {"cover": [p, q], "values": [extint.fmt(f[p]), extint.fmt(f[q])]}
            break
    if fl.slice and not fl.non_degenerate:
        fl.slice = False
        w["slice"] = w["non_degenerate"]

    for p, q in covers:
        # q in Phi(n) => p in Phi(n-1)   iff  f(q) <= f(p) + 1
        if not f[q] <= _plus1(f[p]):
            fl.weak_cousin = False
            n = f[p] if is_finite(f[p]) else "any"
            w["weak_cousin"] = {"cover": [p, q], "level": n,
                                "values": [extint.fmt(f[p]), extint.fmt(f[q])]}
            break
    fl.strong_cousin = fl.weak_cousin
    if "weak_cousin" in w:
        w["strong_cousin"] = w["weak_cousin"]
    else:
        for p, q in covers:
            # converse: p in Phi(n-1) => q in Phi(n)   iff  f(q) >= f(p) + 1
            if not f[q] >= _plus1(f[p]):
                fl.strong_cousin = False
                n = f[p] if is_finite(f[p]) else "any"
                w["strong_cousin"] = {"cover": [p, q], "level": n,
                                      "values": [extint.fmt(f[p]), extint.fmt(f[q])]}
                break

    if not fl.non_degenerate:
        fl.codimension = False
        w["codimension"] = w["non_degenerate"]
    else:
        for p, q in covers:
            if f[q] != f[p] + 1:
                fl.codimension = False
                w["codimension"] = {"cover": [p, q], "values": [f[p], f[q]]}
                break
    return fl


def is_strictly_increasing(phi: SpFiltration) -> bool:
    return all(phi.f[p] < phi.f[q] for p, q in phi.poset.covers)


def layers_are_antichains(phi: SpFiltration) -> bool:
    """Phi(n) minus Phi(n+1) is an antichain for every n (finite values only)."""
    P = phi.poset
    for v in phi.finite_values():
        layer = [p for p in P.nodes if phi.f[p] == v]
        if not P.is_antichain(layer):
            return False
    return True


def pullback(phi: SpFiltration, source: FinitePoset, g) -> SpFiltration:
    """Pull a filtration on Q back along a monotone map g: P -> Q with antichain fibers."""
    Q = phi.poset
    for p in source.nodes:
        if p not in g:
            raise FiltrationError("map undefined on %r" % (p,))
        Q.check(g[p])
    for p, q in source.sorted_covers():
        if not Q.le(g[p], g[q]):
            raise FiltrationError("map is not monotone on cover %s < %s" % (p, q))
    fibers = {}
    for p in source.nodes:
        fibers.setdefault(g[p], []).append(p)
    for q in Q.nodes:
        fib = fibers.get(q, [])
        for i, a in enumerate(fib):
            for b in fib[i + 1:]:
                if source.comparable(a, b):
                    raise FiberNotZeroDimensional(q, (a, b))
    return SpFiltration(source, {p: phi.f[g[p]] for p in source.nodes})


def height_filtration(poset: FinitePoset) -> SpFiltration:
    return SpFiltration(poset, poset.heights())


def canonical_filtrations(poset: FinitePoset):
    """Height filtration, plus the codimension filtration when one exists."""
    out = {"height": height_filtration(poset)}
    try:
        d = codimension_functions(poset)
    except NoCodimensionFunction:
        return out
    out["codimension"] = SpFiltration(poset, d.values)
    return out
