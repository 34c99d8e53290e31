"""Rewrite engine for the localization / completion calculus.

Terms describe derived functors applied to R over a finite poset of primes.
``normalize`` rewrites innermost-leftmost with a rule priority list and
records every step.  Each rule strictly decreases a polynomial
interpretation of terms into the positive integers (see ``measure``), which
is asserted step by step, so normalization terminates.

The closed forms are those for Hom between summands of
T_Phi = sum_p Sigma^{f(p)} RGamma_p R_p:
  Hom(RGamma_p R_p, RGamma_p R_p^(k))           = A^{p}(R^(k))
  Hom(RGamma_p R_p, Sigma RGamma_q R_q^(k))     = Lambda^p((A^{q} R^(k))_p)   for p < q a cover
  Hom(RGamma_p R_p, Sigma^b RGamma_q R_q)       = 0                          unless p <= q
with A^W = prod_{p in W} Lambda^p(- tensor R_p).
"""
import random
from dataclasses import dataclass, field

from .poset_core import FinitePoset
from .spfilt import SpFiltration, classify


class LocCalcError(Exception):
    pass


class IllFormedTerm(LocCalcError):
    pass


class NotCodimension(LocCalcError):
    pass


# -- terms ------------------------------------------------------------------

def _fs(nodes):
    return frozenset(nodes)


def _set_str(s):
    return "{" + ",".join(sorted(map(str, s))) + "}"


class Term:
    __slots__ = ()

    def children(self):
        return ()

    def with_children(self, kids):
        return self

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class RingUnit(Term):
    pass


@dataclass(frozen=True)
class FreeCopies(Term):
    kappa: str


@dataclass(frozen=True)
class Opaque(Term):
    symbol: str
    note: str = ""


@dataclass(frozen=True)
class Gamma(Term):
    V: frozenset
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return Gamma(self.V, kids[0])


@dataclass(frozen=True)
class LambdaSet(Term):
    """lambda^V, the right adjoint colocalization attached to an up-set V."""
    V: frozenset
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return LambdaSet(self.V, kids[0])


@dataclass(frozen=True)
class Lambda(Term):
    """Derived completion at the prime I."""
    I: str
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return Lambda(self.I, kids[0])


@dataclass(frozen=True)
class LocalizeAt(Term):
    p: str
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return LocalizeAt(self.p, kids[0])


@dataclass(frozen=True)
class Shift(Term):
    n: int
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return Shift(self.n, kids[0])


@dataclass(frozen=True)
class Hom(Term):
    s: Term
    t: Term

    def children(self):
        return (self.s, self.t)

    def with_children(self, kids):
        return Hom(kids[0], kids[1])


@dataclass(frozen=True)
class Tensor(Term):
    s: Term
    t: Term

    def children(self):
        return (self.s, self.t)

    def with_children(self, kids):
        return Tensor(kids[0], kids[1])


@dataclass(frozen=True)
class SumOver(Term):
    """Finite direct sum; ``stratum`` only documents the index set."""
    items: tuple
    stratum: frozenset = frozenset()

    def children(self):
        return self.items

    def with_children(self, kids):
        return SumOver(tuple(kids), self.stratum)


@dataclass(frozen=True)
class ProdOver(Term):
    items: tuple
    stratum: frozenset = frozenset()

    def children(self):
        return self.items

    def with_children(self, kids):
        return ProdOver(tuple(kids), self.stratum)


@dataclass(frozen=True)
class Adelic(Term):
    """A^W(t) = prod_{p in W} Lambda^p(t tensor R_p), W an antichain."""
    W: frozenset
    t: Term

    def children(self):
        return (self.t,)

    def with_children(self, kids):
        return Adelic(self.W, kids[0])


@dataclass(frozen=True)
class TStratum(Term):
    """T(n) = sum_{p in W} Sigma^n RGamma_p R_p^(k), kept folded until needed."""
    n: int
    W: frozenset
    kappa: str = "1"


NORMAL_CONSTRUCTORS = (Zero, RingUnit, FreeCopies, Opaque, Shift, SumOver, ProdOver, Adelic)


def free(kappa="1") -> Term:
    return RingUnit() if str(kappa) == "1" else FreeCopies(str(kappa))


def rgamma_local(poset: FinitePoset, p, kappa="1") -> Term:
    """RGamma_p R_p^(kappa) as Gamma(V(p), LocalizeAt(p, R^(kappa)))."""
    return Gamma(_fs(poset.up_closure(p)), LocalizeAt(p, free(kappa)))


def t_stratum(phi: SpFiltration, n, kappa="1") -> TStratum:
    return TStratum(n, _fs(p for p in phi.poset.nodes if phi.f[p] == n), str(kappa))


def strata(phi: SpFiltration):
    return [(n, _fs(p for p in phi.poset.nodes if phi.f[p] == n)) for n in phi.finite_values()]


def t_phi(phi: SpFiltration, kappa="1") -> Term:
    return SumOver(tuple(TStratum(n, W, str(kappa)) for n, W in strata(phi)))


def t_phi_expanded(phi: SpFiltration, kappa="1") -> Term:
    P = phi.poset
    return SumOver(tuple(Shift(phi.f[p], rgamma_local(P, p, kappa)) for p in P.nodes),
                   _fs(P.nodes))


def expand_stratum(poset, T: TStratum) -> Term:
    items = tuple(Shift(T.n, rgamma_local(poset, p, T.kappa)) for p in sorted(T.W, key=poset.index))
    return SumOver(items, T.W)


# -- rendering ----------------------------------------------------------------

def render(t: Term) -> str:
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, RingUnit):
        return "R"
    if isinstance(t, FreeCopies):
        return "R^(%s)" % t.kappa
    if isinstance(t, Opaque):
        return t.symbol
    if isinstance(t, Gamma):
        return "Gamma_%s(%s)" % (_set_str(t.V), render(t.t))
    if isinstance(t, LambdaSet):
        return "lambda^%s(%s)" % (_set_str(t.V), render(t.t))
    if isinstance(t, Lambda):
        return "LLambda^%s(%s)" % (t.I, render(t.t))
    if isinstance(t, LocalizeAt):
        return "(%s)_%s" % (render(t.t), t.p)
    if isinstance(t, Shift):
        return "S^%d %s" % (t.n, render(t.t))
    if isinstance(t, Hom):
        return "Hom(%s, %s)" % (render(t.s), render(t.t))
    if isinstance(t, Tensor):
        return "(%s (x) %s)" % (render(t.s), render(t.t))
    if isinstance(t, SumOver):
        return "(" + " + ".join(render(x) for x in t.items) + ")" if t.items else "0"
    if isinstance(t, ProdOver):
        return "Prod(" + ", ".join(render(x) for x in t.items) + ")" if t.items else "0"
    if isinstance(t, Adelic):
        return "A^%s(%s)" % (_set_str(t.W), render(t.t))
    if isinstance(t, TStratum):
        k = "" if t.kappa == "1" else "^(%s)" % t.kappa
        return "T(%d)%s" % (t.n, k)
    raise IllFormedTerm("unknown term %r" % (t,))


# -- well-formedness and measure ---------------------------------------------

def check_term(t: Term, poset: FinitePoset):
    if not isinstance(t, Term):
        raise IllFormedTerm("not a term: %r" % (t,))
    if isinstance(t, (Gamma, LambdaSet)):
        for p in t.V:
            if p not in poset:
                raise IllFormedTerm("unknown node %r" % (p,))
        if not poset.is_upset(t.V):
            raise IllFormedTerm("%s is not specialization closed" % _set_str(t.V))
    if isinstance(t, (Adelic, TStratum)):
        for p in t.W:
            if p not in poset:
                raise IllFormedTerm("unknown node %r" % (p,))
        if not poset.is_antichain(t.W):
            raise IllFormedTerm("%s is not an antichain" % _set_str(t.W))
    if isinstance(t, Lambda) and t.I not in poset:
        raise IllFormedTerm("unknown node %r" % (t.I,))
    if isinstance(t, LocalizeAt) and t.p not in poset:
        raise IllFormedTerm("unknown node %r" % (t.p,))
    if isinstance(t, Shift) and not isinstance(t.n, int):
        raise IllFormedTerm("shift amount must be an integer")
    for k in t.children():
        check_term(k, poset)


def measure(t: Term, poset=None) -> int:
    """Polynomial interpretation; every rule strictly decreases it.

    Hom and Tensor (s, t) -> [s]^2 * [t], Shift -> 2x, Sum -> 2 + sum,
    Prod -> 3 + sum, Gamma, Lambda, LocalizeAt -> x + 2, LambdaSet -> x + 3,
    A^W -> x + |W| + 1, every leaf 2, and a folded T(n) counts one more than
    its expansion.  All values are >= 2, so the interpretation is strictly
    monotone in every argument.
    """
    if isinstance(t, (Zero, Opaque, RingUnit, FreeCopies)):
        return 2
    if isinstance(t, (Hom, Tensor)):
        return measure(t.s, poset) ** 2 * measure(t.t, poset)
    if isinstance(t, Shift):
        return 2 * measure(t.t, poset)
    if isinstance(t, SumOver):
        return 2 + sum(measure(x, poset) for x in t.items)
    if isinstance(t, ProdOver):
        return 3 + sum(measure(x, poset) for x in t.items)
    if isinstance(t, LambdaSet):
        return measure(t.t, poset) + 3
    if isinstance(t, (Gamma, Lambda, LocalizeAt)):
        return measure(t.t, poset) + 2
    if isinstance(t, Adelic):
        return measure(t.t, poset) + len(t.W) + 1
    if isinstance(t, TStratum):
        # a Shift(Gamma(LocalizeAt(leaf))) summand weighs 2 * 6 = 12
        return 2 + 12 * len(t.W) + 1
    raise IllFormedTerm("unknown term %r" % (t,))


# -- pattern helpers ------------------------------------------------------------

def local_cohomology_parts(t: Term, poset: FinitePoset):
    """(p, kappa) when t is RGamma_p R_p^(kappa), else None."""
    if (isinstance(t, Gamma) and isinstance(t.t, LocalizeAt)
            and isinstance(t.t.t, (RingUnit, FreeCopies))):
        p = t.t.p
        if p in poset and t.V == _fs(poset.up_closure(p)):
            k = "1" if isinstance(t.t.t, RingUnit) else t.t.t.kappa
            return p, k
    return None


def _shifted(t: Term):
    if isinstance(t, Shift):
        return t.n, t.t
    return 0, t


def _is_upclosure(poset, V):
    """Return I when V = V(I) for a single node I."""
    mins = [p for p in V if not any(q in V and poset.lt(q, p) for q in poset.lower_covers(p))]
    if len(mins) == 1 and _fs(poset.up_closure(mins[0])) == V:
        return mins[0]
    return None


@dataclass
class Ctx:
    poset: FinitePoset
    dim2_flat: bool = True
    filtration: SpFiltration = None

    def level(self, p):
        """Stratum index of a node: the filtration value, or the height without one."""
        if self.filtration is not None:
            return self.filtration.f[p]
        return self.poset.heights()[p]


# -- rules ------------------------------------------------------------------------
# Each rule: (id, description, fn(term, ctx) -> new term or None)

def _zero(t, c):
    if isinstance(t, Hom) and (isinstance(t.s, Zero) or isinstance(t.t, Zero)):
        return Zero()
    if isinstance(t, Tensor) and (isinstance(t.s, Zero) or isinstance(t.t, Zero)):
        return Zero()
    if isinstance(t, (Gamma, LambdaSet, Lambda, LocalizeAt, Shift, Adelic)) and isinstance(t.t, Zero):
        return Zero()
    if isinstance(t, Adelic) and not t.W:
        return Zero()
    if isinstance(t, Gamma) and not t.V:
        return Zero()
    if isinstance(t, TStratum) and not t.W:
        return Zero()
    return None


def _sum_clean(t, c):
    if isinstance(t, (SumOver, ProdOver)):
        kids = [k for k in t.items if not isinstance(k, Zero)]
        if not kids:
            return Zero()
        if len(kids) == 1:
            return kids[0]
        if len(kids) != len(t.items):
            return type(t)(tuple(kids), t.stratum)
    return None


def _prod_to_sum(t, c):
    # finite products and finite sums agree in an additive category
    if isinstance(t, ProdOver):
        return SumOver(t.items, t.stratum)
    return None


def _flatten(t, c):
    if isinstance(t, SumOver) and any(isinstance(k, SumOver) for k in t.items):
        out = []
        for k in t.items:
            out.extend(k.items if isinstance(k, SumOver) else [k])
        return SumOver(tuple(out), t.stratum)
    return None


def _shift_norm(t, c):
    if isinstance(t, Shift):
        if t.n == 0:
            return t.t
        if isinstance(t.t, Shift):
            return Shift(t.n + t.t.n, t.t.t)
    return None


def _shift_sum(t, c):
    if isinstance(t, Shift) and isinstance(t.t, (SumOver, ProdOver)):
        return type(t.t)(tuple(Shift(t.n, k) for k in t.t.items), t.t.stratum)
    return None


def _hom_src_shift(t, c):
    # Hom(S^a s, t) = Hom(s, S^-a t)
    if isinstance(t, Hom) and isinstance(t.s, Shift):
        return Hom(t.s.t, Shift(-t.s.n, t.t))
    return None


def _hom_src_sum(t, c):
    if isinstance(t, Hom) and isinstance(t.s, SumOver):
        return ProdOver(tuple(Hom(k, t.t) for k in t.s.items), t.s.stratum)
    return None


def _hom_tgt_sum(t, c):
    if isinstance(t, Hom) and isinstance(t.t, (SumOver, ProdOver)):
        return SumOver(tuple(Hom(t.s, k) for k in t.t.items), t.t.stratum)
    return None


def _unfold_stratum(t, c):
    # T(n) is unfolded under any parent except a Hom that R10 closes
    kids = t.children()
    if not any(isinstance(k, TStratum) for k in kids):
        return None
    if isinstance(t, Hom) and isinstance(t.s, TStratum) and isinstance(t.t, TStratum) \
            and _r10_applies(t.s, t.t, c):
        return None
    return t.with_children([expand_stratum(c.poset, k) if isinstance(k, TStratum) else k
                            for k in kids])


def _r1(t, c):
    if isinstance(t, Gamma) and isinstance(t.t, Gamma):
        return Gamma(t.V & t.t.V, t.t.t)
    return None


def _r2(t, c):
    if isinstance(t, Lambda) and isinstance(t.t, Gamma) and t.t.V == _fs(c.poset.up_closure(t.I)):
        return Lambda(t.I, t.t.t)
    if isinstance(t, Gamma) and isinstance(t.t, Lambda) and t.V == _fs(c.poset.up_closure(t.t.I)):
        return Gamma(t.V, t.t.t)
    return None


def _r3(t, c):
    if isinstance(t, Hom) and isinstance(t.s, Gamma) and isinstance(t.s.t, RingUnit):
        return LambdaSet(t.s.V, t.t)
    return None


def _r4(t, c):
    if isinstance(t, LambdaSet):
        I = _is_upclosure(c.poset, t.V)
        if I is not None:
            return Lambda(I, t.t)
    return None


def _lc_target(t, c):
    """Split a Hom target into (shift, RGamma parts) when it is a shifted local cohomology."""
    b, inner = _shifted(t)
    parts = local_cohomology_parts(inner, c.poset)
    return (b, parts) if parts else None


def _r5(t, c):
    # general source RGamma_p R_p against a target no sharper rule understands
    if not isinstance(t, Hom):
        return None
    src = local_cohomology_parts(t.s, c.poset)
    if src is None or src[1] != "1":
        return None
    if _lc_target(t.t, c) is not None or _lc_sum_target(t.t, c) is not None:
        return None
    if isinstance(t.t, (Shift, SumOver, ProdOver, Zero, TStratum)):
        return None
    if isinstance(t.t, Hom) and isinstance(t.t.s, LocalizeAt):
        return None
    return Lambda(src[0], Hom(LocalizeAt(src[0], RingUnit()), t.t))


def _r6(t, c):
    if not isinstance(t, Hom):
        return None
    src = local_cohomology_parts(t.s, c.poset)
    tgt = _lc_target(t.t, c)
    if src is None or tgt is None:
        return None
    p = src[0]
    q = tgt[1][0]
    if not c.poset.le(p, q):
        return Zero()
    return None


def _r7(t, c):
    if not isinstance(t, Hom):
        return None
    src = local_cohomology_parts(t.s, c.poset)
    tgt = _lc_target(t.t, c)
    if src is None or tgt is None or src[1] != "1":
        return None
    b, (q, kappa) = tgt
    if src[0] == q:
        out = Adelic(_fs([q]), free(kappa))
        return Shift(b, out) if b else out
    return None


def _lc_sum_target(t, c):
    """S^1 applied to a sum of RGamma_q R_q^(kappa), as (kappa, [q...]), or None."""
    if isinstance(t, Shift) and t.n == 1 and isinstance(t.t, (SumOver, ProdOver)):
        inner = t.t.items
        shift = 1
    elif isinstance(t, (SumOver, ProdOver)) and t.items and all(isinstance(k, Shift) and k.n == 1 for k in t.items):
        inner = tuple(k.t for k in t.items)
        shift = 1
    else:
        return None
    qs, kap = [], set()
    for k in inner:
        parts = local_cohomology_parts(k, c.poset)
        if parts is None:
            return None
        qs.append(parts[0])
        kap.add(parts[1])
    if len(kap) != 1 or shift != 1:
        return None
    return kap.pop(), qs


def _r8(t, c):
    if not isinstance(t, Hom):
        return None
    src = local_cohomology_parts(t.s, c.poset)
    if src is None or src[1] != "1":
        return None
    p = src[0]
    tgt = _lc_target(t.t, c)
    if tgt is not None:
        b, (q, kappa) = tgt
        W = [q]
        if b != 1:
            return None
    else:
        summ = _lc_sum_target(t.t, c)
        if summ is None:
            return None
        kappa, W = summ
    P = c.poset
    covers = set(P.upper_covers(p))
    inside = [q for q in W if P.le(p, q)]
    if not inside or any(q not in covers for q in inside):
        return None
    prod = ProdOver(tuple(Adelic(_fs([q]), free(kappa)) for q in sorted(inside, key=P.index)),
                    _fs(inside))
    return Lambda(p, LocalizeAt(p, prod))


def _r8_flat(t, c):
    # two-step Hom out of a minimal prime in a poset of dimension <= 2: flat, no closed form
    if not c.dim2_flat or not isinstance(t, Hom):
        return None
    src = local_cohomology_parts(t.s, c.poset)
    tgt = _lc_target(t.t, c)
    if src is None or tgt is None or src[1] != "1":
        return None
    b, (q, kappa) = tgt
    p = src[0]
    P = c.poset
    if b != 2 or not P.lt(p, q) or P.lower_covers(p) or P.dimension() > 2:
        return None
    if P.heights()[q] - P.heights()[p] != 2 or q in P.upper_covers(p):
        return None
    return Opaque("Flat[Hom(RG_%s, S^2 RG_%s%s)]" % (p, q, "" if kappa == "1" else "^(%s)" % kappa),
                  "flat R-module; closed form not determined")


def _r9a(t, c):
    if isinstance(t, Lambda) and isinstance(t.t, LocalizeAt) and t.t.p == t.I:
        return Adelic(_fs([t.I]), t.t.t)
    return None


def _r9_orth(t, c):
    # A^W A^U t keeps the p in W with some q in U above it and the q in U with
    # some p in W below it, since A^p A^q = 0 unless p <= q
    if isinstance(t, Adelic) and isinstance(t.t, Adelic):
        le = c.poset.le
        W = _fs(p for p in t.W if any(le(p, q) for q in t.t.W))
        U = _fs(q for q in t.t.W if any(le(p, q) for p in t.W))
        if (W, U) != (t.W, t.t.W):
            return Adelic(W, Adelic(U, t.t.t)) if W else Zero()
    return None


def _r9_merge(t, c):
    """Aggregate adelic summands of one stratum into a single A^W.

    Summands A^{W_i}(x) with the same x and all W_i on one level merge to
    A^{union W_i}(x).  Two-level summands A^{W_i}A^{U_i}(x) merge to
    A^{W}A^{U}(x) exactly when they account for every nonzero pair
    A^p A^q (p <= q) of W x U once.  A group merges all at once, so the
    result does not depend on the order in which summands are visited.
    """
    if not isinstance(t, SumOver):
        return None
    if any(isinstance(k, (SumOver, ProdOver, Zero)) for k in t.items):
        return None
    groups = {}
    for idx, k in enumerate(t.items):
        key = _merge_key(k, c)
        if key is not None:
            groups.setdefault(key, []).append(idx)
    for key in sorted(groups, key=repr):
        idxs = groups[key]
        if len(idxs) < 2:
            continue
        merged = _merge_group([t.items[i] for i in idxs], c.poset)
        if merged is None:
            continue
        rest = [k for i, k in enumerate(t.items) if i not in idxs]
        rest.insert(idxs[0], merged)
        return SumOver(tuple(rest), t.stratum)
    return None


def _merge_key(k, c):
    if not isinstance(k, Adelic) or not k.W:
        return None
    lw = {c.level(p) for p in k.W}
    if len(lw) != 1:
        return None
    if isinstance(k.t, Adelic):
        lu = {c.level(q) for q in k.t.W}
        if len(lu) != 1:
            return None
        return (2, lw.pop(), lu.pop(), k.t.t)
    return (1, lw.pop(), k.t)


def _merge_group(items, P):
    W = frozenset().union(*(k.W for k in items))
    if sum(len(k.W) for k in items) != len(W) and not isinstance(items[0].t, Adelic):
        return None
    if not P.is_antichain(W):
        return None
    if not isinstance(items[0].t, Adelic):
        return Adelic(W, items[0].t)
    U = frozenset().union(*(k.t.W for k in items))
    if not P.is_antichain(U):
        return None
    seen = set()
    for k in items:
        for p in k.W:
            for q in k.t.W:
                if P.le(p, q):
                    if (p, q) in seen:
                        return None
                    seen.add((p, q))
    full = {(p, q) for p in W for q in U if P.le(p, q)}
    if seen != full:
        return None
    return Adelic(W, Adelic(U, items[0].t.t))


def _r10_applies(s: TStratum, u: TStratum, c):
    if s.n <= u.n:
        return False
    P = c.poset
    return not any(P.le(p, q) for p in s.W for q in u.W)


def _r10(t, c):
    if isinstance(t, Hom) and isinstance(t.s, TStratum) and isinstance(t.t, TStratum):
        if _r10_applies(t.s, t.t, c):
            return Zero()
    return None


RULES = [
    ("Z", "zero absorption", _zero),
    ("S1", "shift composition", _shift_norm),
    ("R1", "Gamma absorption: Gamma_A Gamma_B = Gamma_(A n B)", _r1),
    ("R2", "RGamma_I LLambda^I = RGamma_I and LLambda^I RGamma_I = LLambda^I", _r2),
    ("R3", "Hom(RGamma_V R, -) = lambda^V", _r3),
    ("R4", "lambda^V(I) = LLambda^I", _r4),
    ("R10", "Hom(T(i), T(j)) = 0 for i > j", _r10),
    ("R6", "Hom(RGamma_p R_p, RGamma_q R_q) = 0 unless p <= q", _r6),
    ("R7", "Hom(RGamma_p R_p, RGamma_p R_p^(k)) = A^p(R^(k))", _r7),
    ("R8", "Hom(RGamma_p R_p, S RGamma_q R_q^(k)) for covers p < q", _r8),
    ("R8f", "two-step Hom from a minimal prime in dimension 2 is flat", _r8_flat),
    ("R5", "Hom(RGamma_p R_p, -) = LLambda^p Hom(R_p, -)", _r5),
    ("R9a", "LLambda^p((-)_p) = A^p", _r9a),
    ("R9o", "A^W A^U drops nodes with no partner, as A^p A^q = 0 unless p <= q", _r9_orth),
    ("R9", "aggregate A^{W1} + A^{W2} = A^{W1 u W2}", _r9_merge),
    ("U", "unfold T(n) into its summands", _unfold_stratum),
    ("D1", "Hom out of a finite sum is a product", _hom_src_sum),
    ("D2", "Hom into a finite sum is a sum", _hom_tgt_sum),
    ("D0", "Hom(S^a s, t) = Hom(s, S^-a t)", _hom_src_shift),
    ("S2", "shift distributes over finite sums", _shift_sum),
    ("P", "finite products are finite sums", _prod_to_sum),
    ("F", "flatten nested sums", _flatten),
    ("C", "drop zero summands, unwrap singletons", _sum_clean),
]

RULE_IDS = [r[0] for r in RULES]


def rules():
    return [(rid, desc) for rid, desc, _ in RULES]


# -- normalization -------------------------------------------------------------

@dataclass
class Unresolved:
    subterm: Term
    reason: str

    def __str__(self):
        return "Unresolved[%s: %s]" % (render(self.subterm), self.reason)


@dataclass
class NormalizeResult:
    term: Term
    trace: list = field(default_factory=list)
    measures: list = field(default_factory=list)
    unresolved: Unresolved = None

    @property
    def ok(self):
        return self.unresolved is None


def _replace(t, path, new):
    if not path:
        return new
    kids = list(t.children())
    kids[path[0]] = _replace(kids[path[0]], path[1:], new)
    return t.with_children(kids)


def _step(t, ctx, order, stuck):
    """First redex in post-order (innermost-leftmost) and its rewrite.

    Rules only inspect the subtree they match, so a subtree with no redex
    stays so until it is replaced; ``stuck`` remembers such subtrees by id
    (holding a reference keeps the id valid) and they are skipped.
    """
    def visit(node, path):
        if id(node) in stuck:
            return None
        for i, k in enumerate(node.children()):
            hit = visit(k, path + (i,))
            if hit is not None:
                return hit
        for rid, _, fn in order:
            out = fn(node, ctx)
            if out is not None and out != node:
                return rid, path, out
        stuck[id(node)] = node
        return None

    hit = visit(t, ())
    if hit is None:
        return None
    rid, path, out = hit
    return rid, path, _replace(t, path, out)


def _measure_memo(t, memo):
    """``measure`` with per-subtree memoization by id, for the step loop."""
    hit = memo.get(id(t))
    if hit is not None:
        return hit[1]
    if isinstance(t, (Hom, Tensor)):
        v = _measure_memo(t.s, memo) ** 2 * _measure_memo(t.t, memo)
    elif isinstance(t, Shift):
        v = 2 * _measure_memo(t.t, memo)
    elif isinstance(t, SumOver):
        v = 2 + sum(_measure_memo(x, memo) for x in t.items)
    elif isinstance(t, ProdOver):
        v = 3 + sum(_measure_memo(x, memo) for x in t.items)
    elif isinstance(t, LambdaSet):
        v = _measure_memo(t.t, memo) + 3
    elif isinstance(t, (Gamma, Lambda, LocalizeAt)):
        v = _measure_memo(t.t, memo) + 2
    elif isinstance(t, Adelic):
        v = _measure_memo(t.t, memo) + len(t.W) + 1
    else:
        v = measure(t)
    memo[id(t)] = (t, v)
    return v


def canonical(t: Term) -> Term:
    """Sort sum/product items and stratum sets for comparison."""
    kids = tuple(canonical(k) for k in t.children())
    if isinstance(t, (SumOver, ProdOver)):
        return type(t)(tuple(sorted(kids, key=lambda x: (render(x), repr(x)))), frozenset())
    return t.with_children(kids) if kids else t


def _unresolved_reason(t, ctx):
    P = ctx.poset
    if isinstance(t, Hom):
        src = local_cohomology_parts(t.s, P)
        tgt = _lc_target(t.t, ctx)
        if src and tgt:
            p, (b, (q, _)) = src[0], tgt
            if P.lt(p, q) and q not in P.upper_covers(p):
                return "non-adjacent strata: %s is not in min(V(%s) minus {%s})" % (q, p, p)
            if P.lt(p, q):
                return "shift %d on a cover; only shift 1 has a closed form" % b
        if src and src[1] != "1":
            return "source with free multiplicity has no rule"
    return "no rule applies"


def _first_abnormal(t):
    if not isinstance(t, NORMAL_CONSTRUCTORS):
        return t
    for k in t.children():
        bad = _first_abnormal(k)
        if bad is not None:
            return bad
    return None


MAX_STEPS = 100000


def normalize(term: Term, poset: FinitePoset, filtration=None, order=None,
              dim2_flat=True, max_steps=MAX_STEPS) -> NormalizeResult:
    """Rewrite to normal form, recording (rule id, position path) per step."""
    check_term(term, poset)
    if filtration is not None and filtration.poset != poset:
        raise IllFormedTerm("filtration lives on a different poset")
    ctx = Ctx(poset, dim2_flat, filtration)
    if isinstance(term, TStratum):
        term = expand_stratum(poset, term)
    rules_used = RULES if order is None else [r for rid in order for r in RULES if r[0] == rid]
    if order is not None and sorted(order) != sorted(RULE_IDS):
        raise LocCalcError("rule order must be a permutation of the rule ids")
    t = term
    trace = []
    stuck, memo = {}, {}
    meas = [_measure_memo(t, memo)]
    for _ in range(max_steps):
        st = _step(t, ctx, rules_used, stuck)
        if st is None:
            break
        rid, path, t = st
        m = _measure_memo(t, memo)
        if m >= meas[-1]:
            raise LocCalcError("measure did not decrease under rule %s" % rid)
        trace.append((rid, path))
        meas.append(m)
    else:
        raise LocCalcError("step limit reached")
    t = canonical(t)
    bad = _first_abnormal(t)
    unres = Unresolved(bad, _unresolved_reason(bad, ctx)) if bad is not None else None
    return NormalizeResult(t, trace, meas, unres)


def random_orders(n, seed=0):
    """n random permutations of the rule list, the default order first."""
    rng = random.Random(seed)
    out = [list(RULE_IDS)]
    while len(out) < n:
        o = list(RULE_IDS)
        rng.shuffle(o)
        out.append(o)
    return out


# -- endomorphism rings -------------------------------------------------------

def block_form(phi: SpFiltration) -> Term:
    """Expected normal form of Hom(T_Phi, T_Phi) for two adjacent strata or fewer."""
    st = strata(phi)
    items = [Adelic(W, RingUnit()) for _, W in st]
    for (n, W), (m, U) in zip(st, st[1:]):
        if m == n + 1:
            items.append(Adelic(W, Adelic(U, RingUnit())))
    return canonical(SumOver(tuple(items)) if len(items) > 1 else items[0])


@dataclass
class RingPresentation:
    strata: list                      # [(n, W_n)]
    entries: dict                     # (row, col) -> Term; row = target, col = source
    provenance: dict                  # (row, col) -> list of (rule id, path)
    unresolved: dict                  # (row, col) -> Unresolved

    def size(self):
        return len(self.strata)

    def is_lower_triangular(self):
        return all(isinstance(self.entries[(r, c)], Zero)
                   for r in range(self.size()) for c in range(self.size()) if c > r)

    def rendered(self, flavour=None):
        return {k: render_entry(v, self, k, flavour) for k, v in sorted(self.entries.items())}


def end_ring_of_TPhi(poset: FinitePoset, phi: SpFiltration, kappa="1", dim2_flat=True) -> RingPresentation:
    if phi.poset != poset:
        raise LocCalcError("filtration lives on a different poset")
    if not classify(phi).codimension:
        raise NotCodimension("End(T_Phi) presentation needs a codimension filtration")
    st = strata(phi)
    entries, prov, unres = {}, {}, {}
    for col, (i, Wi) in enumerate(st):
        for row, (j, Wj) in enumerate(st):
            term = Hom(TStratum(i, Wi, "1"), TStratum(j, Wj, str(kappa)))
            res = normalize(term, poset, phi, dim2_flat=dim2_flat)
            entries[(row, col)] = res.term
            prov[(row, col)] = res.trace
            if res.unresolved is not None:
                unres[(row, col)] = res.unresolved
    return RingPresentation(st, entries, prov, unres)


def render_entry(t: Term, pres: RingPresentation, key, flavour=None):
    """Human names for the blocks; ``flavour='Z'`` uses Q and Z_p."""
    if flavour == "Z" and pres.size() == 2:
        W0 = pres.strata[0][1]
        W1 = pres.strata[1][1]
        ps = ",".join(sorted((w.strip("()") for w in W1), key=lambda s: int(s)))
        if t == Adelic(W0, RingUnit()):
            return "Q"
        if t == Adelic(W1, RingUnit()):
            return "prod_{p in {%s}} Z_p" % ps
        if t == Adelic(W0, Adelic(W1, RingUnit())):
            return "(prod_{p in {%s}} Z_p) (x) Q" % ps
    if pres.size() >= 1:
        W0 = pres.strata[0][1]
        if t == Adelic(W0, RingUnit()) and pres.size() == 2:
            return "S^-1 R = " + render(LocalizeAt(_set_str(W0), RingUnit()))
        if pres.size() == 2:
            W1 = pres.strata[1][1]
            if t == Adelic(W1, RingUnit()):
                return "prod_m R^_m = " + render(t)
            if t == Adelic(W0, Adelic(W1, RingUnit())):
                return "(prod_m R^_m) (x)_R S^-1 R = " + render(t)
    return render(t)


def matches_dimension_one_shape(pres: RingPresentation) -> bool:
    if pres.size() != 2:
        return False
    (_, W0), (_, W1) = pres.strata
    e = pres.entries
    return (e[(0, 0)] == Adelic(W0, RingUnit()) and isinstance(e[(0, 1)], Zero)
            and e[(1, 1)] == Adelic(W1, RingUnit())
            and e[(1, 0)] == Adelic(W0, Adelic(W1, RingUnit())))
