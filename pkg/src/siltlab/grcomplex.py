"""Multigraded monomial rings, degreewise modules and cochain complexes.

Every module built by the constructors here is a finite direct sum of cyclic
pieces k[x]_S / J shifted to start in some multidegree, where S is a set of
inverted variables and J a monomial ideal.  Each such summand is at most
one-dimensional in every multidegree, and the maps the constructors need
(multiplication by a monomial, localization, quotient) send basis monomial to
basis monomial or to zero.  A differential is then a sparse table of scalar
coefficients between summands, and the complex in multidegree d is a complex
of small vector spaces.
"""
import re
from dataclasses import dataclass
from itertools import product

from .linalg import Field, complement_in, is_zero_matrix, kernel_basis, matmul, rank, zeros


class ComplexError(Exception):
    pass


class NonVariableGenerator(ComplexError):
    pass


class UnsupportedComponent(ComplexError):
    pass


class NoCertificate(ComplexError):
    pass


def _minimal(rels):
    """Drop duplicates and relations divisible by another relation."""
    rels = sorted(set(tuple(r) for r in rels), key=lambda r: (sum(r), r))
    out = []
    for r in rels:
        if not any(all(a <= b for a, b in zip(g, r)) for g in out):
            out.append(r)
    return tuple(out)


def _localize_rels(rels, inverted):
    return _minimal(tuple(0 if i in inverted else e for i, e in enumerate(r)) for r in rels)


class MonomialRing:
    """k[x_1..x_n] / (monomials), with the variables in ``inverted`` made units."""

    def __init__(self, vars, relations=(), inverted=(), char=0):
        self.vars = tuple(vars)
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("repeated variable name")
        self.field = Field(char)
        n = len(self.vars)
        inv = set()
        for v in inverted:
            inv.add(self.var_index(v) if isinstance(v, str) else int(v))
        self.inverted = frozenset(inv)
        rels = []
        for r in relations:
            e = self.parse_monomial(r) if isinstance(r, str) else tuple(r)
            if len(e) != n or any(x < 0 for x in e):
                raise ValueError("bad relation %r" % (r,))
            rels.append(e)
        self.relations = _localize_rels(rels, self.inverted)

    @property
    def nvars(self):
        return len(self.vars)

    @property
    def char(self):
        return self.field.char

    def var_index(self, name):
        try:
            return self.vars.index(name)
        except ValueError:
            raise ComplexError("unknown variable %r" % (name,)) from None

    def unit(self, i):
        return tuple(1 if j == i else 0 for j in range(self.nvars))

    def zero_degree(self):
        return (0,) * self.nvars

    def parse_monomial(self, text):
        """Parse 'x^2*y', 'x^2 y', 'x^2y' or 'xy' (longest variable name wins)."""
        e = [0] * self.nvars
        t = text.replace("²", "^2").replace("³", "^3").strip()
        if t == "1":
            return tuple(e)
        names = sorted(self.vars, key=len, reverse=True)
        pos = 0
        while pos < len(t):
            if t[pos] in " *":
                pos += 1
                continue
            name = next((v for v in names if t.startswith(v, pos)), None)
            if name is None:
                raise ComplexError("cannot parse monomial %r at %d" % (text, pos))
            pos += len(name)
            m = re.match(r"\^(\d+)", t[pos:])
            k = 1
            if m:
                k = int(m.group(1))
                pos += m.end()
            e[self.vars.index(name)] += k
        return tuple(e)

    def monomial_str(self, e):
        parts = []
        for name, k in zip(self.vars, e):
            if k == 1:
                parts.append(name)
            elif k:
                parts.append("%s^%d" % (name, k))
        return "*".join(parts) or "1"

    def localize(self, vars_to_invert):
        inv = set(self.inverted)
        for v in vars_to_invert:
            inv.add(self.var_index(v) if isinstance(v, str) else int(v))
        return MonomialRing(self.vars, self.relations, inv, self.char)

    def localize_at_prime(self, prime_vars):
        """Proxy for R_p: invert every variable outside the monomial prime p."""
        idx = {self.var_index(v) if isinstance(v, str) else int(v) for v in prime_vars}
        return self.localize([i for i in range(self.nvars) if i not in idx])

    def is_zero_ring(self):
        return any(not any(r) for r in self.relations)

    def __eq__(self, other):
        return (isinstance(other, MonomialRing) and self.vars == other.vars
                and self.relations == other.relations and self.inverted == other.inverted
                and self.char == other.char)

    def __hash__(self):
        return hash((self.vars, self.relations, self.inverted, self.char))

    def __repr__(self):
        s = "%s[%s]" % (self.field, ",".join(self.vars))
        if self.relations:
            s += "/(%s)" % ",".join(self.monomial_str(r) for r in self.relations)
        if self.inverted:
            s += "[1/%s]" % "".join(self.vars[i] for i in sorted(self.inverted))
        return s


@dataclass(frozen=True)
class Cyclic:
    """k[x]_inv / (rels), generated in multidegree ``shift``."""
    inv: frozenset
    rels: tuple
    shift: tuple

    @staticmethod
    def make(inv, rels, shift):
        inv = frozenset(inv)
        return Cyclic(inv, _localize_rels(rels, inv), tuple(shift))

    def supports(self, d) -> bool:
        e = [a - b for a, b in zip(d, self.shift)]
        for i, x in enumerate(e):
            if x < 0 and i not in self.inv:
                return False
        for g in self.rels:
            if all(g[i] <= e[i] for i in range(len(e)) if i not in self.inv):
                return False
        return True

    def is_zero(self) -> bool:
        return any(not any(g) for g in self.rels)

    def tensor(self, other):
        sh = tuple(a + b for a, b in zip(self.shift, other.shift))
        return Cyclic.make(self.inv | other.inv, self.rels + other.rels, sh)

    def shifted(self, delta):
        return Cyclic(self.inv, self.rels, tuple(a + b for a, b in zip(self.shift, delta)))

    def localized(self, extra):
        return Cyclic.make(self.inv | frozenset(extra), self.rels, self.shift)

    def breakpoints(self, i):
        """Values of d_i at which membership of multidegree d can change."""
        if i in self.inv:
            return []
        pts = {self.shift[i]}
        for g in self.rels:
            if g[i] > 0:
                pts.add(self.shift[i] + g[i])
        return sorted(pts)


class DegreewiseModule:
    """A multigraded module given by its pieces and variable actions.

    ``piece(d)`` returns a list of basis labels for the degree-d piece;
    ``action(i, d)`` returns the matrix of x_i from piece(d) to piece(d + e_i).
    """

    def __init__(self, ring, piece, action):
        self.ring = ring
        self._piece = piece
        self._action = action

    def piece(self, d):
        return list(self._piece(tuple(d)))

    def dim(self, d):
        return len(self.piece(d))

    def action(self, i, d):
        return self._action(i, tuple(d))


class MonomialModule(DegreewiseModule):
    """Direct sum of Cyclic summands."""

    def __init__(self, ring, summands):
        self.ring = ring
        self.summands = list(summands)

    def piece(self, d):
        d = tuple(d)
        return [j for j, c in enumerate(self.summands) if c.supports(d)]

    def action(self, i, d):
        d = tuple(d)
        src = self.piece(d)
        d2 = tuple(a + (1 if k == i else 0) for k, a in enumerate(d))
        tgt = self.piece(d2)
        K = self.ring.field
        M = zeros(len(tgt), len(src), K)
        pos = {j: r for r, j in enumerate(tgt)}
        for c, j in enumerate(src):
            if j in pos:
                M[pos[j]][c] = K(1)
        return M


class Complex:
    """Finite cochain complex of degreewise modules.

    ``differentials[i]`` is a callable d -> matrix from component(i) at d to
    component(i + 1) at d.
    """

    certified = False

    def __init__(self, ring, lo, hi, components, differentials):
        self.ring = ring
        self.lo, self.hi = lo, hi
        self.components = dict(components)
        self.differentials = dict(differentials)

    def component(self, i):
        return self.components.get(i)

    def dim(self, i, d):
        c = self.components.get(i)
        return 0 if c is None else c.dim(d)

    def matrix(self, i, d):
        """Differential C^i(d) -> C^{i+1}(d) as a dense matrix."""
        m, n = self.dim(i + 1, d), self.dim(i, d)
        if i not in self.differentials or m == 0 or n == 0:
            return zeros(m, n, self.ring.field)
        return self.differentials[i](tuple(d))


class MonomialComplex(Complex):
    """Complex whose components are sums of Cyclic summands.

    ``diffs[i]`` maps (source index in C^i, target index in C^{i+1}) to a
    scalar; the underlying module map is the canonical one between the two
    cyclic summands (multiplication by x^(shift_src - shift_tgt)).
    """

    certified = True

    def __init__(self, ring, comps, diffs, name=""):
        self.ring = ring
        comps = {i: list(v) for i, v in comps.items() if v}
        self.comps = comps
        self.diffs = {i: {k: v for k, v in dd.items() if v} for i, dd in diffs.items()}
        self.lo = min(comps) if comps else 0
        self.hi = max(comps) if comps else -1
        self.name = name
        self.components = {i: MonomialModule(ring, s) for i, s in comps.items()}
        self.differentials = {i: (lambda d, i=i: self.matrix(i, d)) for i in comps}

    def summands(self, i):
        return self.comps.get(i, [])

    def support_indices(self, i, d):
        return [j for j, c in enumerate(self.summands(i)) if c.supports(d)]

    def dim(self, i, d):
        return len(self.support_indices(i, tuple(d)))

    def matrix(self, i, d):
        d = tuple(d)
        K = self.ring.field
        src = self.support_indices(i, d)
        tgt = self.support_indices(i + 1, d)
        M = zeros(len(tgt), len(src), K)
        if not src or not tgt:
            return M
        tpos = {j: r for r, j in enumerate(tgt)}
        spos = {j: c for c, j in enumerate(src)}
        for (a, b), coef in self.diffs.get(i, {}).items():
            if a in spos and b in tpos:
                M[tpos[b]][spos[a]] = K(coef)
        return M

    def __repr__(self):
        ranks = ", ".join("%d:%d" % (i, len(self.comps[i])) for i in sorted(self.comps))
        return "MonomialComplex(%s%s)" % (self.name + " " if self.name else "", ranks)


def ring_complex(ring) -> MonomialComplex:
    """R concentrated in degree 0."""
    c = Cyclic.make(ring.inverted, ring.relations, ring.zero_degree())
    return MonomialComplex(ring, {0: [c]}, {}, name="R")


def free_module_complex(ring, shift) -> MonomialComplex:
    c = Cyclic.make(ring.inverted, ring.relations, tuple(shift))
    return MonomialComplex(ring, {0: [c]}, {}, name="R(-a)")


def quotient_complex(ring, gens) -> MonomialComplex:
    """R/(gens) in degree 0, gens given as monomial strings or exponent tuples."""
    ex = [ring.parse_monomial(g) if isinstance(g, str) else tuple(g) for g in gens]
    c = Cyclic.make(ring.inverted, ring.relations + tuple(ex), ring.zero_degree())
    return MonomialComplex(ring, {0: [c]}, {}, name="R/I")


def residue_field(ring, prime_vars) -> MonomialComplex:
    """kappa(q) proxy for a monomial prime q: invert the variables outside q, kill q."""
    idx = sorted({ring.var_index(v) if isinstance(v, str) else int(v) for v in prime_vars})
    if any(i in ring.inverted for i in idx):
        raise ComplexError("prime meets the inverted variables")
    for r in ring.relations:
        if not any(r[i] > 0 for i in idx):
            raise ComplexError("prime does not contain relation %s" % ring.monomial_str(r))
    inv = set(ring.inverted) | {i for i in range(ring.nvars) if i not in idx}
    rels = ring.relations + tuple(ring.unit(i) for i in idx)
    c = Cyclic.make(inv, rels, ring.zero_degree())
    return MonomialComplex(ring, {0: [c]}, {}, name="kappa")


def _two_term(ring, lo_cyc, hi_cyc, lo_deg):
    return MonomialComplex(ring, {lo_deg: [lo_cyc], lo_deg + 1: [hi_cyc]},
                           {lo_deg: {(0, 0): 1}})


def _as_exponent(ring, m):
    if isinstance(m, str):
        return ring.parse_monomial(m)
    if isinstance(m, int):
        return ring.unit(m)
    return tuple(m)


def koszul_complex(ring, elements=()) -> MonomialComplex:
    """K(m_1, ..., m_t): tensor of R(-deg m) --m--> R, in degrees -t..0."""
    X = ring_complex(ring)
    for m in elements:
        e = _as_exponent(ring, m)
        base = Cyclic.make(ring.inverted, ring.relations, ring.zero_degree())
        factor = _two_term(ring, base.shifted(e), base, -1)
        X = tensor(X, factor)
    X.name = "K(%s)" % ",".join(ring.monomial_str(_as_exponent(ring, m)) for m in elements)
    return X


def cech_complex(ring, elements=()) -> MonomialComplex:
    """C(x_1, ..., x_t): tensor of R -> R_{x_i}, in degrees 0..t; variables only."""
    X = ring_complex(ring)
    names = []
    for m in elements:
        e = _as_exponent(ring, m)
        if sum(e) != 1:
            raise NonVariableGenerator("Cech generators must be variables, got %s" % ring.monomial_str(e))
        i = e.index(1)
        names.append(ring.vars[i])
        base = Cyclic.make(ring.inverted, ring.relations, ring.zero_degree())
        factor = _two_term(ring, base, base.localized({i}), 0)
        X = tensor(X, factor)
    X.name = "C(%s)" % ",".join(names)
    return X


def _need_monomial(X):
    if not isinstance(X, MonomialComplex):
        raise NoCertificate("complex was not built from the monomial constructors")


def tensor(X, Y) -> MonomialComplex:
    """Total tensor complex with d(a*b) = da*b + (-1)^|a| a*db."""
    _need_monomial(X)
    _need_monomial(Y)
    ring = X.ring
    comps = {}
    index = {}
    for i in sorted(X.comps):
        for j in sorted(Y.comps):
            n = i + j
            lst = comps.setdefault(n, [])
            for a, ca in enumerate(X.comps[i]):
                for b, cb in enumerate(Y.comps[j]):
                    index[(i, a, j, b)] = len(lst)
                    lst.append(ca.tensor(cb))
    diffs = {}
    for (i, a, j, b), pos in index.items():
        n = i + j
        dd = diffs.setdefault(n, {})
        for (s, t), coef in X.diffs.get(i, {}).items():
            if s == a:
                key = (pos, index[(i + 1, t, j, b)])
                dd[key] = dd.get(key, 0) + coef
        sign = -1 if i % 2 else 1
        for (s, t), coef in Y.diffs.get(j, {}).items():
            if s == b:
                key = (pos, index[(i, a, j + 1, t)])
                dd[key] = dd.get(key, 0) + sign * coef
    return MonomialComplex(ring, comps, diffs)


def shift(X, n: int) -> MonomialComplex:
    """(Sigma^n X)^i = X^(i+n), differential multiplied by (-1)^n."""
    _need_monomial(X)
    sign = -1 if n % 2 else 1
    comps = {i - n: list(v) for i, v in X.comps.items()}
    diffs = {i - n: {k: sign * c for k, c in dd.items()} for i, dd in X.diffs.items()}
    Y = MonomialComplex(X.ring, comps, diffs, name="S^%d %s" % (n, X.name) if n else X.name)
    return Y


def localize_complex(X, vars_to_invert) -> MonomialComplex:
    """Exact monomial localization, applied summand by summand."""
    _need_monomial(X)
    ring = X.ring.localize(vars_to_invert)
    extra = ring.inverted
    comps = {i: [c.localized(extra) for c in v] for i, v in X.comps.items()}
    return MonomialComplex(ring, comps, X.diffs, name=X.name + "_loc")


def localize_at_prime(X, prime_vars) -> MonomialComplex:
    idx = {X.ring.var_index(v) if isinstance(v, str) else int(v) for v in prime_vars}
    return localize_complex(X, [i for i in range(X.ring.nvars) if i not in idx])


def _is_free(ring, c: Cyclic):
    base = Cyclic.make(ring.inverted, ring.relations, c.shift)
    return c.inv == base.inv and c.rels == base.rels


def hom_from_finite_free(P, X) -> MonomialComplex:
    """Hom(P, X) for P with finite free components.

    Hom^n = prod_i Hom(P^i, X^(i+n)), d(phi) = d_X phi - (-1)^n phi d_P.
    Hom(R(-a), C) is C with its generator moved from degree s to s - a.
    """
    _need_monomial(P)
    _need_monomial(X)
    ring = X.ring
    for i, cs in P.comps.items():
        for c in cs:
            if not _is_free(P.ring, c):
                raise UnsupportedComponent("component %d of the source is not free" % i)
    comps = {}
    index = {}
    for i in sorted(P.comps):
        for k in sorted(X.comps):
            n = k - i
            lst = comps.setdefault(n, [])
            for a, pa in enumerate(P.comps[i]):
                for b, xb in enumerate(X.comps[k]):
                    index[(i, a, k, b)] = len(lst)
                    neg = tuple(-s for s in pa.shift)
                    lst.append(Cyclic.make(xb.inv | pa.inv, xb.rels, xb.shift).shifted(neg))
    diffs = {}
    for (i, a, k, b), pos in index.items():
        n = k - i
        dd = diffs.setdefault(n, {})
        for (s, t), coef in X.diffs.get(k, {}).items():
            if s == b:
                key = (pos, index[(i, a, k + 1, t)])
                dd[key] = dd.get(key, 0) + coef
        # phi on P^i contributes to Hom(P^(i-1), X^k) through d_P: P^(i-1) -> P^i
        sign = 1 if n % 2 else -1
        for (s, t), coef in P.diffs.get(i - 1, {}).items():
            if t == a:
                key = (pos, index[(i - 1, s, k, b)])
                dd[key] = dd.get(key, 0) + sign * coef
    return MonomialComplex(ring, comps, diffs, name="Hom(%s,%s)" % (P.name, X.name))


@dataclass
class HomologyPiece:
    dim: int
    basis: list
    labels: list


def homology(X: Complex, i: int, d) -> HomologyPiece:
    """H^i(X) in multidegree d: dimension and representative cycles."""
    d = tuple(d)
    K = X.ring.field
    n = X.dim(i, d)
    labels = (X.support_indices(i, d) if isinstance(X, MonomialComplex)
              else (X.component(i).piece(d) if X.component(i) else []))
    if n == 0:
        return HomologyPiece(0, [], labels)
    out = X.matrix(i, d)
    inc = X.matrix(i - 1, d)
    ker = kernel_basis(out if X.dim(i + 1, d) else [], n, K)
    m_in = X.dim(i - 1, d)
    img = [[row[j] for row in inc] for j in range(m_in)] if m_in else []
    r_in = rank(inc, K) if m_in else 0
    dim = len(ker) - r_in
    basis = complement_in(img, ker, K) if dim else []
    return HomologyPiece(dim, basis, labels)


def check_dd(X: Complex, d) -> bool:
    K = X.ring.field
    for i in range(X.lo, X.hi):
        a = X.matrix(i, d)
        b = X.matrix(i + 1, d)
        if X.dim(i, d) and X.dim(i + 2, d) and X.dim(i + 1, d):
            if not is_zero_matrix(matmul(b, a, K)):
                return False
    return True


@dataclass
class SupportBox:
    """Per-coordinate degree ranges plus the stabilization data.

    For coordinate i: below ``ranges[i][0]`` every piece is zero when
    ``lower_zero[i]`` holds and otherwise equal to the piece at the lower end
    (multiplication by the inverted variable is an isomorphism there); above
    ``ranges[i][1]`` every piece equals the piece at the upper end via the
    +e_i action.
    """
    ranges: list
    lower_zero: list
    breakpoints: list

    def degrees(self):
        return product(*[range(a, b + 1) for a, b in self.ranges])

    def representative(self, d):
        """Box degree whose piece complex equals the one at d, or None if d is in a zero region."""
        out = []
        for x, (a, b), z in zip(d, self.ranges, self.lower_zero):
            if x < a:
                if z:
                    return None
                x = a
            out.append(min(x, b))
        return tuple(out)

    def certificate(self):
        cert = []
        for i, ((a, b), z, bp) in enumerate(zip(self.ranges, self.lower_zero, self.breakpoints)):
            cert.append({"coordinate": i, "range": [a, b],
                         "below": "zero" if z else "iso along -e_%d" % (i + 1),
                         "above": "iso along +e_%d" % (i + 1),
                         "breakpoints": list(bp)})
        return cert


def homology_support_box(X: Complex) -> SupportBox:
    if not isinstance(X, MonomialComplex):
        raise NoCertificate("complex was not built from the monomial constructors")
    n = X.ring.nvars
    ranges, lower_zero, bps = [], [], []
    summands = [c for v in X.comps.values() for c in v if not c.is_zero()]
    for i in range(n):
        pts = sorted({p for c in summands for p in c.breakpoints(i)})
        any_inverted = any(i in c.inv for c in summands)
        if not pts:
            ranges.append((0, 0))
            lower_zero.append(not summands)
        elif any_inverted:
            ranges.append((pts[0] - 1, pts[-1]))
            lower_zero.append(False)
        else:
            ranges.append((pts[0], pts[-1]))
            lower_zero.append(True)
        bps.append(pts)
    return SupportBox(ranges, lower_zero, bps)


def homology_at(X: Complex, i: int, d) -> int:
    """Dimension of H^i in degree d, answered through the box certificate."""
    box = homology_support_box(X)
    r = box.representative(tuple(d))
    if r is None:
        return 0
    return homology(X, i, r).dim


def nonzero_degrees(X: Complex, box=None):
    """Cohomological degrees i with H^i(X) != 0 anywhere (certified)."""
    if box is None:
        box = homology_support_box(X)
    degs = set()
    pts = list(box.degrees())
    for i in range(X.lo, X.hi + 1):
        for d in pts:
            if homology(X, i, d).dim:
                degs.add(i)
                break
    return degs


def hilbert_table(X: Complex, i: int, box=None):
    if box is None:
        box = homology_support_box(X)
    return {d: homology(X, i, d).dim for d in box.degrees()}
