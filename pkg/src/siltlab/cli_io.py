"""Job files, task dispatch, report emission and the silt-lab command.

A job file is plain text split into sections:

    [ring]                      [poset]
    poly(Q; x,y)                node a b c
    rel x^2                     cover a < b < c
    invert y
    # or: ring Z primes = 2,3,5

    [filtration]
    f (x) = 0                   # function form, or
    level 0 = (x),(x,y)         # a level table with
    outside = clamp             # all | empty | clamp, or
    canonical = height          # height | codimension | grade

    [source] / [map]            # pullback only: a poset and lines "g a = b"

    [task]
    depth ideal=(x,y)

Terms for the normalize task use a parenthesized prefix syntax, see
``parse_term``.  Structured output is sorted-key JSON under a one-line
version header.
"""
import argparse
import json
import sys
from dataclasses import dataclass, field

from . import arith, extint, grcomplex, invariants, loccalc, poset_core, spfilt
from .extint import is_finite

FORMAT_VERSION = "silt-lab-report 1"

TASKS = ("spec-window", "classify", "canonical-filtrations", "pullback", "koszul", "cech",
         "depth", "width", "depth-over-set", "grade-filtration", "supp", "aisle-u",
         "coaisle-v", "aisle-y", "cm-concentration", "normalize", "end-ring",
         "verify-end-z", "tilting-summary")

SECTIONS = ("ring", "poset", "filtration", "source", "map", "task")


class JobError(Exception):
    pass


class ParseError(JobError):
    def __init__(self, line, column, expected, found=""):
        self.line, self.column, self.expected, self.found = line, column, expected, found
        msg = "line %d, column %d: expected %s" % (line, column, expected)
        if found:
            msg += ", found %r" % (found,)
        super().__init__(msg)


class UnknownTask(JobError):
    def __init__(self, name, line=0):
        self.name, self.line = name, line
        super().__init__("unknown task %r (line %d)" % (name, line))


class UnknownNode(JobError):
    def __init__(self, node, line=0):
        self.node, self.line = node, line
        super().__init__("unknown node %r (line %d)" % (node, line))


# -- small lexing helpers -------------------------------------------------------

def split_top(text, sep=","):
    """Split on ``sep`` outside parentheses and braces."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last or out:
        out.append(last)
    return [x for x in out if x != ""]


def split_ws(text):
    """Whitespace split outside parentheses and braces."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def parse_node_set(text):
    t = text.strip()
    if t.startswith("{") and t.endswith("}"):
        t = t[1:-1]
    return split_top(t)


# -- term syntax ----------------------------------------------------------------
#
#   0 | R | (Free k) | (Opaque sym) | (Gamma {nodes} t) | (LambdaSet {nodes} t)
#   (Lambda node t) | (Loc node t) | (Shift n t) | (Hom s t) | (Tensor s t)
#   (Sum t ...) | (Prod t ...) | (A {nodes} t) | (T n [k]) | (TPhi [k]) | (RG node [k])
#
# A node is a bare token or a braced name such as {(x,y)}.

def _term_tokens(text):
    toks, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            toks.append((ch, i))
            i += 1
        elif ch == "{":
            depth, j = 0, i
            while j < len(text):
                depth += {"{": 1, "}": -1}.get(text[j], 0)
                if depth == 0:
                    break
                j += 1
            if j >= len(text):
                raise ParseError(1, i + 1, "closing brace")
            toks.append((text[i:j + 1], i))
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "(){}":
                j += 1
            toks.append((text[i:j], i))
            i = j
    return toks


def parse_term(text, poset=None, phi=None, line=1):
    toks = _term_tokens(text)
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else (None, len(text))

    def take(expected):
        tok, col = peek()
        if tok is None:
            raise ParseError(line, col + 1, expected, "end of input")
        pos[0] += 1
        return tok, col

    def node(expected="node"):
        tok, col = take(expected)
        if tok in ("(", ")"):
            raise ParseError(line, col + 1, expected, tok)
        name = tok[1:-1] if tok.startswith("{") else tok
        if poset is not None and name not in poset:
            raise UnknownNode(name, line)
        return name

    def nodes():
        tok, col = take("node set")
        if not tok.startswith("{"):
            raise ParseError(line, col + 1, "node set in braces", tok)
        names = parse_node_set(tok)
        if poset is not None:
            for n in names:
                if n not in poset:
                    raise UnknownNode(n, line)
        return frozenset(names)

    def integer():
        tok, col = take("integer")
        try:
            return int(tok)
        except ValueError:
            raise ParseError(line, col + 1, "integer", tok) from None

    def close():
        tok, col = take("')'")
        if tok != ")":
            raise ParseError(line, col + 1, "')'", tok)

    def opt_kappa():
        tok, _ = peek()
        if tok is not None and tok not in ("(", ")"):
            pos[0] += 1
            return tok
        return "1"

    def term():
        tok, col = take("term")
        if tok == "0":
            return loccalc.Zero()
        if tok == "R":
            return loccalc.RingUnit()
        if tok != "(":
            raise ParseError(line, col + 1, "term", tok)
        head, hcol = take("constructor")
        if head == "Free":
            k, _ = take("cardinal symbol")
            out = loccalc.free(k)
        elif head == "Opaque":
            s, _ = take("symbol")
            out = loccalc.Opaque(s[1:-1] if s.startswith("{") else s)
        elif head in ("Gamma", "LambdaSet", "A"):
            V = nodes()
            cls = {"Gamma": loccalc.Gamma, "LambdaSet": loccalc.LambdaSet, "A": loccalc.Adelic}[head]
            out = cls(V, term())
        elif head in ("Lambda", "Loc"):
            p = node()
            out = (loccalc.Lambda if head == "Lambda" else loccalc.LocalizeAt)(p, term())
        elif head == "Shift":
            n = integer()
            out = loccalc.Shift(n, term())
        elif head in ("Hom", "Tensor"):
            s = term()
            out = (loccalc.Hom if head == "Hom" else loccalc.Tensor)(s, term())
        elif head in ("Sum", "Prod"):
            items = []
            while peek()[0] not in (")", None):
                items.append(term())
            out = (loccalc.SumOver if head == "Sum" else loccalc.ProdOver)(tuple(items))
        elif head == "T":
            if phi is None:
                raise ParseError(line, hcol + 1, "a [filtration] section for T(n)")
            n = integer()
            out = loccalc.t_stratum(phi, n, opt_kappa())
        elif head == "TPhi":
            if phi is None:
                raise ParseError(line, hcol + 1, "a [filtration] section for TPhi")
            out = loccalc.t_phi(phi, opt_kappa())
        elif head == "RG":
            if poset is None:
                raise ParseError(line, hcol + 1, "a poset for RG")
            p = node()
            out = loccalc.rgamma_local(poset, p, opt_kappa())
        else:
            raise ParseError(line, hcol + 1, "constructor name", head)
        close()
        return out

    t = term()
    tok, col = peek()
    if tok is not None:
        raise ParseError(line, col + 1, "end of term", tok)
    return t


def _node_tok(p):
    return p if all(c not in p for c in "(){}, ") else "{%s}" % p


def term_to_text(t) -> str:
    """Inverse of parse_term; T(n) prints folded, TPhi as a sum of strata."""
    L = loccalc
    if isinstance(t, L.Zero):
        return "0"
    if isinstance(t, L.RingUnit):
        return "R"
    if isinstance(t, L.FreeCopies):
        return "(Free %s)" % t.kappa
    if isinstance(t, L.Opaque):
        return "(Opaque {%s})" % t.symbol
    if isinstance(t, (L.Gamma, L.LambdaSet, L.Adelic)):
        head = {L.Gamma: "Gamma", L.LambdaSet: "LambdaSet", L.Adelic: "A"}[type(t)]
        S = t.W if isinstance(t, L.Adelic) else t.V
        return "(%s {%s} %s)" % (head, ",".join(sorted(S)), term_to_text(t.t))
    if isinstance(t, L.Lambda):
        return "(Lambda %s %s)" % (_node_tok(t.I), term_to_text(t.t))
    if isinstance(t, L.LocalizeAt):
        return "(Loc %s %s)" % (_node_tok(t.p), term_to_text(t.t))
    if isinstance(t, L.Shift):
        return "(Shift %d %s)" % (t.n, term_to_text(t.t))
    if isinstance(t, (L.Hom, L.Tensor)):
        head = "Hom" if isinstance(t, L.Hom) else "Tensor"
        return "(%s %s %s)" % (head, term_to_text(t.s), term_to_text(t.t))
    if isinstance(t, (L.SumOver, L.ProdOver)):
        head = "Sum" if isinstance(t, L.SumOver) else "Prod"
        return "(%s%s)" % (head, "".join(" " + term_to_text(x) for x in t.items))
    if isinstance(t, L.TStratum):
        # the stratum itself is recovered from the job's filtration
        return "(T %d%s)" % (t.n, "" if t.kappa == "1" else " " + t.kappa)
    raise loccalc.IllFormedTerm("cannot print %r" % (t,))


# -- jobs -----------------------------------------------------------------------

@dataclass
class Job:
    task: str
    params: dict = field(default_factory=dict)
    source_kind: str = ""            # "ring", "z" or "poset"
    ring: object = None
    primes: list = field(default_factory=list)
    poset: object = None
    filtration: object = None
    filtration_spec: dict = field(default_factory=dict)
    source_poset: object = None
    map: dict = field(default_factory=dict)
    fmt: str = "human"
    level: int = 4
    box: tuple = None
    seed: int = 0
    task_line: int = 0


def _sections(text):
    secs = {}
    current = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        s = line.strip()
        if s.startswith("["):
            if not s.endswith("]"):
                raise ParseError(ln, len(line) + 1, "']'")
            name = s[1:-1].strip()
            if name not in SECTIONS:
                raise ParseError(ln, 2, "one of " + ", ".join(SECTIONS), name)
            if name in secs:
                raise ParseError(ln, 2, "each section at most once", name)
            secs[name] = []
            current = name
            continue
        if current is None:
            raise ParseError(ln, 1, "a section header", s)
        col = len(line) - len(line.lstrip()) + 1
        secs[current].append((ln, col, s))
    return secs


def _parse_ring(lines):
    ln, col, first = lines[0]
    if first.startswith("ring Z") or first.startswith("Z "):
        rest = first.split("Z", 1)[1].strip()
        if not rest.startswith("primes"):
            raise ParseError(ln, col + first.index("Z") + 1, "'primes = p,q,...'", rest)
        _, _, vals = rest.partition("=")
        try:
            ps = [int(x) for x in split_top(vals)]
        except ValueError:
            raise ParseError(ln, col, "comma separated primes", vals.strip()) from None
        if len(lines) > 1:
            raise ParseError(lines[1][0], lines[1][1], "nothing after the Z window line", lines[1][2])
        try:
            W = poset_core.integer_window(ps)
        except poset_core.PosetError as e:
            raise ParseError(ln, col, "primes", str(e)) from None
        return "z", None, sorted(set(ps)), W
    if not (first.startswith("poly(") and first.endswith(")")):
        raise ParseError(ln, col, "'poly(FIELD; vars)' or 'ring Z primes = ...'", first)
    inner = first[5:-1]
    if ";" not in inner:
        raise ParseError(ln, col + 5, "';' between field and variables", inner)
    fld, vs = inner.split(";", 1)
    fld = fld.strip()
    if fld == "Q":
        char = 0
    elif fld.startswith("F") and fld[1:].isdigit():
        char = int(fld[1:])
    else:
        raise ParseError(ln, col + 5, "field Q or Fp", fld)
    names = [v.strip() for v in vs.split(",") if v.strip()]
    if not names:
        raise ParseError(ln, col + 5 + len(fld) + 1, "at least one variable")
    rels, inv = [], []
    for ln2, col2, s in lines[1:]:
        kw, _, arg = s.partition(" ")
        if kw == "rel":
            rels.append((ln2, col2, arg.strip()))
        elif kw == "invert":
            for v in arg.replace(",", " ").split():
                if v not in names:
                    raise ParseError(ln2, col2 + 7, "a ring variable", v)
                inv.append(v)
        else:
            raise ParseError(ln2, col2, "'rel MONOMIAL' or 'invert VAR'", kw)
    try:
        ring = grcomplex.MonomialRing(names, (), inv, char)
    except (ValueError, grcomplex.ComplexError) as e:
        raise ParseError(ln, col, "valid ring data", str(e)) from None
    exps = []
    for ln2, col2, r in rels:
        try:
            exps.append(ring.parse_monomial(r))
        except (ValueError, grcomplex.ComplexError):
            raise ParseError(ln2, col2 + 4, "a monomial in the ring variables", r) from None
    ring = grcomplex.MonomialRing(names, exps, inv, char)
    return "ring", ring, [], invariants.window(ring)


def _parse_poset(lines):
    nodes, covers = [], []
    for ln, col, s in lines:
        kw, _, arg = s.partition(" ")
        if kw == "node":
            nodes.extend(arg.split())
        elif kw == "cover":
            parts = [p.strip() for p in arg.split("<")]
            if len(parts) < 2 or not all(parts):
                raise ParseError(ln, col + 6, "'a < b'", arg)
            for a, b in zip(parts, parts[1:]):
                covers.append((a, b, ln))
        else:
            raise ParseError(ln, col, "'node NAME...' or 'cover A < B'", kw)
    for a, b, ln in covers:
        for n in (a, b):
            if n not in nodes:
                raise UnknownNode(n, ln)
    return poset_core.FinitePoset(nodes, [(a, b) for a, b, _ in covers])


def _parse_filtration(lines, P, ring):
    fvals, levels, outside, canonical = {}, {}, None, None
    for ln, col, s in lines:
        if s.startswith("f "):
            lhs, eq, rhs = s[2:].partition("=")
            if not eq:
                raise ParseError(ln, col + 2, "'f NODE = VALUE'", s)
            node = lhs.strip()
            if node not in P:
                raise UnknownNode(node, ln)
            try:
                fvals[node] = extint.parse(rhs.strip())
            except (ValueError, TypeError):
                raise ParseError(ln, col + s.index("=") + 2, "integer or +inf/-inf", rhs.strip()) from None
        elif s.startswith("level "):
            lhs, eq, rhs = s[6:].partition("=")
            try:
                n = int(lhs.strip())
            except ValueError:
                raise ParseError(ln, col + 6, "integer level", lhs.strip()) from None
            names = parse_node_set(rhs)
            for nm in names:
                if nm not in P:
                    raise UnknownNode(nm, ln)
            levels[n] = frozenset(names)
        elif s.startswith("outside"):
            v = s.partition("=")[2].strip()
            if v not in ("all", "empty", "clamp"):
                raise ParseError(ln, col + s.index("=") + 2, "all, empty or clamp", v)
            outside = v
        elif s.startswith("canonical"):
            v = s.partition("=")[2].strip()
            if v not in ("height", "codimension", "grade"):
                raise ParseError(ln, col + s.index("=") + 2, "height, codimension or grade", v)
            canonical = v
        else:
            raise ParseError(ln, col, "'f', 'level', 'outside' or 'canonical' line", s.split()[0])
    kinds = sum(bool(x) for x in (fvals, levels, canonical))
    if kinds > 1:
        raise ParseError(lines[0][0], 1, "one filtration form per job")
    if outside is not None and not levels:
        raise ParseError(lines[0][0], 1, "'outside' only together with level lines")
    if fvals:
        missing = [p for p in P.nodes if p not in fvals]
        if missing:
            raise ParseError(lines[-1][0] + 1, 1, "a value for node %s" % missing[0])
        return {"form": "function"}, fvals
    if levels:
        return {"form": "levels", "outside": outside or "clamp"}, levels
    return {"form": "canonical", "name": canonical}, None


def _build_filtration(spec, data, P, ring):
    if spec["form"] == "function":
        return spfilt.SpFiltration(P, data)
    if spec["form"] == "levels":
        return spfilt.filtration_from_levels(P, data, spec["outside"])
    name = spec["name"]
    if name == "height":
        return spfilt.height_filtration(P)
    if name == "codimension":
        return spfilt.SpFiltration(P, poset_core.codimension_functions(P).values)
    if ring is None:
        raise JobError("grade filtration needs a monomial ring")
    return invariants.grade_filtration(ring)


def _parse_task(lines):
    ln, col, first = lines[0]
    words = split_ws(first)
    name = words[0]
    if name not in TASKS:
        raise UnknownTask(name, ln)
    params = {}
    items = [(ln, col, w) for w in words[1:]]
    for ln2, col2, s in lines[1:]:
        items.extend((ln2, col2, w) for w in split_ws(s))
    for ln2, col2, w in items:
        k, eq, v = w.partition("=")
        if not eq or not k:
            raise ParseError(ln2, col2, "'key=value'", w)
        params[k] = v
    return name, params, ln


def parse_job(text) -> Job:
    secs = _sections(text)
    if "task" not in secs or not secs["task"]:
        raise ParseError(len(text.splitlines()) + 1, 1, "a [task] section with a task line")
    task, params, tline = _parse_task(secs["task"])
    has_ring = bool(secs.get("ring"))
    has_poset = bool(secs.get("poset"))
    if has_ring and has_poset:
        ln = secs["poset"][0][0]
        raise ParseError(ln, 1, "exactly one of [ring] or [poset]")
    job = Job(task, params, task_line=tline)
    if has_ring:
        job.source_kind, job.ring, job.primes, job.poset = _parse_ring(secs["ring"])
    elif has_poset:
        job.source_kind = "poset"
        job.poset = _parse_poset(secs["poset"])
    if secs.get("filtration"):
        if job.poset is None:
            raise ParseError(secs["filtration"][0][0], 1, "a [ring] or [poset] before a filtration")
        job.filtration_spec, data = _parse_filtration(secs["filtration"], job.poset, job.ring)
        job.filtration_spec["data"] = data
    if secs.get("source"):
        job.source_poset = _parse_poset(secs["source"])
    if secs.get("map"):
        for ln, col, s in secs["map"]:
            if not s.startswith("g "):
                raise ParseError(ln, col, "'g NODE = NODE'", s)
            lhs, _, rhs = s[2:].partition("=")
            a, b = lhs.strip(), rhs.strip()
            if job.source_poset is not None and a not in job.source_poset:
                raise UnknownNode(a, ln)
            if job.poset is not None and b not in job.poset:
                raise UnknownNode(b, ln)
            job.map[a] = b
    return job


# -- reports --------------------------------------------------------------------

@dataclass
class Report:
    task: str = ""
    exit_code: int = 0
    data: dict = field(default_factory=dict)
    human: str = ""

    def tree(self):
        if not self.task and not self.data:
            return {}
        return plain({"task": self.task, "exit_code": self.exit_code, "result": self.data})


def plain(x):
    """Convert to JSON-ready data with a fixed ordering of every collection."""
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): plain(v)
                for k, v in x.items()}
    if isinstance(x, (set, frozenset)):
        return sorted((plain(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, float) and not is_finite(x):
        return extint.fmt(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return x
    return str(x)


def emit_structured(report) -> str:
    tree = report.tree() if isinstance(report, Report) else plain(report)
    if not tree:
        return FORMAT_VERSION + "\n"
    return FORMAT_VERSION + "\n" + json.dumps(tree, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_structured(text):
    head, _, body = text.partition("\n")
    if head != FORMAT_VERSION:
        raise ParseError(1, 1, repr(FORMAT_VERSION), head)
    if not body.strip():
        return {}
    try:
        return json.loads(body)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno + 1, e.colno, "JSON", e.msg) from None


def emit_human(report: Report) -> str:
    return report.human if report.human.endswith("\n") or not report.human else report.human + "\n"


# -- task implementations ---------------------------------------------------------

class MathFailure(Exception):
    """A mathematical hypothesis failed; reported with exit status 1."""

    def __init__(self, message, data=None, module="cli_io", kind="MathFailure"):
        super().__init__(message)
        self.data = data or {}
        self.module = module
        self.kind = kind


def _fmt(v):
    return extint.fmt(v) if not is_finite(v) else v


def _need(job, what):
    if what == "poset" and job.poset is None:
        raise JobError("task %s needs a [ring] or [poset] section" % job.task)
    if what == "ring" and job.ring is None:
        raise JobError("task %s needs a monomial [ring] section" % job.task)
    if what == "filtration" and job.filtration is None:
        raise JobError("task %s needs a [filtration] section" % job.task)


def _ideal(job, key="ideal"):
    if key not in job.params:
        raise JobError("task %s needs %s=(...)" % (job.task, key))
    gens = invariants._gens(job.ring, job.params[key])
    for g in gens:
        job.ring.parse_monomial(g)
    return gens


def _module(job):
    """The complex named by module= (R, kappa:(x), quot:x^2,y, free:1,0) and shift=n."""
    R = job.ring
    spec = job.params.get("module", "R")
    kind, _, arg = spec.partition(":")
    if kind == "R":
        X = grcomplex.ring_complex(R)
    elif kind == "kappa":
        X = grcomplex.residue_field(R, invariants._gens(R, arg))
    elif kind == "quot":
        X = grcomplex.quotient_complex(R, split_top(arg))
    elif kind == "free":
        X = grcomplex.free_module_complex(R, [int(a) for a in split_top(arg)])
    else:
        raise JobError("module must be R, kappa:(...), quot:... or free:...")
    n = int(job.params.get("shift", 0))
    return grcomplex.shift(X, n) if n else X


def _poset_data(P):
    h = P.heights()
    return {"nodes": list(P.nodes), "covers": [list(c) for c in P.sorted_covers()],
            "heights": {p: h[p] for p in P.nodes}, "dimension": P.dimension()}


def _filt_data(phi):
    return {p: _fmt(phi.f[p]) for p in phi.poset.nodes}


def _box(job, X):
    cert = grcomplex.homology_support_box(X)
    if job.box is None:
        return cert, cert
    lo, hi = job.box
    n = X.ring.nvars
    return grcomplex.SupportBox([(lo, hi)] * n, [True] * n, [[] for _ in range(n)]), cert


def _complex_report(job, X):
    box, cert = _box(job, X)
    degs = sorted(grcomplex.nonzero_degrees(X, cert))
    tables = {}
    for i in range(X.lo, X.hi + 1):
        tab = {",".join(map(str, d)): v for d, v in grcomplex.hilbert_table(X, i, box).items() if v}
        if tab:
            tables[str(i)] = tab
    comps = {str(i): len(X.summands(i)) for i in range(X.lo, X.hi + 1)}
    data = {"name": X.name, "components": comps, "nonzero_degrees": degs,
            "certificate": cert.certificate(), "homology": tables,
            "box_override": list(job.box) if job.box else None}
    human = ["%s: H^i != 0 for i in %s" % (X.name, degs)]
    for i, tab in tables.items():
        human.append("  H^%s: %s" % (i, ", ".join("%s:%d" % kv for kv in sorted(tab.items()))))
    return data, "\n".join(human)


def _t_spec_window(job):
    _need(job, "poset")
    P = job.poset
    cat, wit = poset_core.is_catenary(P)
    data = _poset_data(P)
    data["catenary"] = cat
    if wit is not None:
        data["catenary_witness"] = list(wit)
    data["source"] = job.source_kind
    human = "%d nodes, %d covers, dimension %d, catenary %s" % (
        len(P.nodes), len(P.covers), P.dimension(), cat)
    return data, human


def _t_classify(job):
    _need(job, "filtration")
    fl = spfilt.classify(job.filtration)
    data = {"f": _filt_data(job.filtration), "flags": fl.as_dict(), "witnesses": fl.witnesses}
    human = "\n".join("%s: %s" % (k, v) for k, v in fl.as_dict().items())
    return data, human


def _t_canonical(job):
    _need(job, "poset")
    P = job.poset
    cat, wit = poset_core.is_catenary(P)
    out = spfilt.canonical_filtrations(P)
    data = {"catenary": cat, "filtrations": {k: _filt_data(v) for k, v in out.items()}}
    if wit is not None:
        data["catenary_witness"] = list(wit)
    lines = ["%s: %s" % (k, _filt_data(v)) for k, v in sorted(out.items())]
    if "codimension" not in out:
        try:
            poset_core.codimension_functions(P)
        except poset_core.NoCodimensionFunction as e:
            data["no_codimension_function"] = [list(c) for c in e.cycle]
            lines.append("no codimension function: covers %s" % e.cycle)
        if job.params.get("require") == "codimension":
            raise MathFailure("no codimension function exists", data, "poset_core",
                              "NoCodimensionFunction")
    return data, "\n".join(lines)


def _t_pullback(job):
    _need(job, "filtration")
    if job.source_poset is None or not job.map:
        raise JobError("pullback needs [source] and [map] sections")
    psi = spfilt.pullback(job.filtration, job.source_poset, job.map)
    a, b = spfilt.classify(job.filtration), spfilt.classify(psi)
    data = {"f": _filt_data(psi), "target_slice": a.slice, "source_slice": b.slice,
            "flags": b.as_dict(), "witnesses": b.witnesses}
    return data, "pulled back f: %s\nslice: %s -> %s" % (_filt_data(psi), a.slice, b.slice)


def _t_koszul(job):
    _need(job, "ring")
    return _complex_report(job, grcomplex.koszul_complex(job.ring, _ideal(job, "elements")))


def _t_cech(job):
    _need(job, "ring")
    return _complex_report(job, grcomplex.cech_complex(job.ring, _ideal(job, "elements")))


def _t_depth(job):
    _need(job, "ring")
    X = _module(job)
    gens = _ideal(job)
    route = job.params.get("route", "koszul")
    if route == "koszul":
        d = invariants.depth(X, gens)
    elif route == "cech":
        d = invariants.depth_cech(X, gens)
    elif route == "both":
        d = invariants.depth(X, gens)
        c = invariants.depth_cech(X, gens)
        if c != d:
            raise MathFailure("Koszul and Cech routes disagree", {"koszul": _fmt(d), "cech": _fmt(c)},
                              "invariants")
    else:
        raise JobError("route must be koszul, cech or both")
    return {"ideal": gens, "module": job.params.get("module", "R"), "route": route,
            "depth": _fmt(d)}, "depth = %s" % extint.fmt(d)


def _t_width(job):
    _need(job, "ring")
    w = invariants.width(_module(job), _ideal(job))
    return {"ideal": _ideal(job), "module": job.params.get("module", "R"),
            "width": _fmt(w)}, "width = %s" % extint.fmt(w)


def _t_depth_over_set(job):
    _need(job, "ring")
    if "set" not in job.params:
        raise JobError("depth-over-set needs set={...}")
    W = parse_node_set(job.params["set"])
    for p in W:
        if p not in job.poset:
            raise UnknownNode(p, job.task_line)
    X = _module(job)
    d = invariants.depth_over_set(X, W, job.poset)
    data = {"set": sorted(W), "depth": _fmt(d)}
    if job.params.get("oracle") == "yes":
        o = invariants.depth_over_set_oracle(X, W, job.poset)
        data["oracle"] = _fmt(o)
        if o != d:
            raise MathFailure("local and ideal-wise depth disagree", data, "invariants")
    return data, "depth over %s = %s" % (sorted(W), extint.fmt(d))


def _t_grade(job):
    _need(job, "ring")
    phi = invariants.grade_filtration(job.ring)
    h = job.poset.heights()
    fl = spfilt.classify(phi)
    low = [p for p in job.poset.nodes if phi.f[p] < h[p]]
    data = {"f": _filt_data(phi), "heights": h, "grade_below_height": low, "flags": fl.as_dict()}
    return data, "grade: %s\ngrade < height at %s" % (_filt_data(phi), low)


def _t_supp(job):
    _need(job, "ring")
    s = invariants.supp_cohomology(_module(job), job.poset)
    data = {"supp": {str(n): sorted(v) for n, v in s.items()}}
    return data, "\n".join("H^%d: %s" % (n, sorted(v)) for n, v in s.items()) or "acyclic"


def _t_membership(fn, label):
    def run(job):
        _need(job, "ring")
        _need(job, "filtration")
        ok = fn(_module(job), job.filtration)
        return {"member": ok, "class": label, "module": job.params.get("module", "R"),
                "shift": int(job.params.get("shift", 0))}, "%s: %s" % (label, ok)
    return run


def _t_cm(job):
    _need(job, "ring")
    if "prime" not in job.params:
        raise JobError("cm-concentration needs prime=(...)")
    r = invariants.cm_concentration(job.ring, job.params["prime"])
    verdict = "concentrated in degree %d" % r.height if r.concentrated else \
        "not concentrated: nonzero in degrees %s" % r.degrees
    return r.as_dict(), "%s: %s" % (r.prime, verdict)


def _t_normalize(job):
    _need(job, "poset")
    if "term" not in job.params:
        raise JobError("normalize needs term=(...)")
    term = parse_term(job.params["term"], job.poset, job.filtration, job.task_line)
    flat = job.params.get("flat", "yes") != "no"
    res = loccalc.normalize(term, job.poset, job.filtration, dim2_flat=flat)
    data = {"input": term_to_text(term), "normal_form": term_to_text(res.term),
            "rendered": loccalc.render(res.term), "trace": [[r, list(p)] for r, p in res.trace],
            "measures": res.measures, "resolved": res.ok}
    if res.unresolved is not None:
        data["unresolved"] = {"subterm": loccalc.render(res.unresolved.subterm),
                              "reason": res.unresolved.reason}
    n = int(job.params.get("orders", 1))
    if n > 1:
        forms = {loccalc.render(loccalc.normalize(term, job.poset, job.filtration, order=o,
                                                  dim2_flat=flat).term)
                 for o in loccalc.random_orders(n, job.seed)}
        data["confluent"] = len(forms) == 1
    human = loccalc.render(res.term)
    if res.unresolved is not None:
        human += "\nunresolved: %s (%s)" % (data["unresolved"]["subterm"], res.unresolved.reason)
    return data, human


def _pres_data(pres, flavour):
    rend = pres.rendered(flavour)
    return {"strata": [[n, sorted(W)] for n, W in pres.strata],
            "entries": [{"row": r, "col": c, "term": term_to_text(pres.entries[(r, c)]),
                         "rendered": rend[(r, c)],
                         "trace": [[rid, list(p)] for rid, p in pres.provenance[(r, c)]],
                         "unresolved": None if (r, c) not in pres.unresolved else
                         pres.unresolved[(r, c)].reason}
                        for r, c in sorted(pres.entries)],
            "lower_triangular": pres.is_lower_triangular()}


def _default_codim(job):
    if job.filtration is not None:
        return job.filtration
    try:
        return spfilt.SpFiltration(job.poset, poset_core.codimension_functions(job.poset).values)
    except poset_core.NoCodimensionFunction as e:
        raise MathFailure("no codimension function exists",
                          {"no_codimension_function": [list(c) for c in e.cycle]},
                          "poset_core", "NoCodimensionFunction") from None


def _t_end_ring(job):
    _need(job, "poset")
    phi = _default_codim(job)
    flavour = "Z" if job.source_kind == "z" else None
    pres = loccalc.end_ring_of_TPhi(job.poset, phi, dim2_flat=job.params.get("flat", "yes") != "no")
    data = _pres_data(pres, flavour)
    human = ["End(T_Phi), rows = target stratum, columns = source stratum"]
    for e in data["entries"]:
        human.append("  [%d,%d] %s" % (e["row"], e["col"], e["rendered"]))
    if job.source_kind == "z":
        rep = arith.verify_end_matrix_Z(job.primes, job.level)
        data["arith"] = rep.as_dict()
        data["shape_matches"] = loccalc.matches_dimension_one_shape(pres) if job.primes else True
        human.append("arith check at level %d: %s" % (job.level, "all blocks match"
                                                      if rep.all_matched else "MISMATCH"))
    return data, "\n".join(human)


def _t_verify_end_z(job):
    if job.source_kind != "z":
        raise JobError("verify-end-z needs 'ring Z primes = ...'")
    rep = arith.verify_end_matrix_Z(job.primes, job.level)
    data = rep.as_dict()
    human = ["level %d, primes %s" % (job.level, job.primes)]
    for e in rep.entries:
        human.append("  [%d,%d] %s: %s (%s)" % (e.row, e.col, e.symbolic, e.claim,
                                               "ok" if e.matched else "FAILED"))
    if not rep.all_matched:
        raise MathFailure("endomorphism matrix check failed", data, "arith")
    return data, "\n".join(human)


def _t_tilting(job):
    _need(job, "filtration")
    phi = job.filtration
    fl = spfilt.classify(phi)
    P = job.poset
    out = []
    silting = fl.slice and fl.bounded
    out.append({"hypothesis": "bounded slice filtration", "holds": silting,
                "conclusion": "T_Phi is silting" if silting else "silting criterion does not apply"})
    out.append({"hypothesis": "T_Phi tilting implies codimension filtration",
                "holds": fl.codimension,
                "conclusion": "necessary condition met" if fl.codimension
                else "T_Phi is not tilting"})
    if fl.codimension and P.dimension() <= 1:
        out.append({"hypothesis": "codimension filtration, dimension <= 1", "holds": True,
                    "conclusion": "T_Phi is tilting"})
    if fl.codimension and job.ring is not None:
        cm = all(invariants.cm_concentration(job.ring, p).concentrated for p in P.nodes)
        out.append({"hypothesis": "codimension filtration on a Cohen-Macaulay window",
                    "holds": cm, "conclusion": "T_Phi is tilting" if cm
                    else "Cohen-Macaulay criterion does not apply"})
    data = {"flags": fl.as_dict(), "implications": out, "verified_tilting": False}
    human = "\n".join("%s: %s -> %s" % (d["hypothesis"], d["holds"], d["conclusion"]) for d in out)
    return data, human + "\n(implications only; tiltingness itself is not verified)"


DISPATCH = {
    "spec-window": _t_spec_window, "classify": _t_classify,
    "canonical-filtrations": _t_canonical, "pullback": _t_pullback,
    "koszul": _t_koszul, "cech": _t_cech, "depth": _t_depth, "width": _t_width,
    "depth-over-set": _t_depth_over_set, "grade-filtration": _t_grade, "supp": _t_supp,
    "aisle-u": _t_membership(invariants.in_aisle_U, "U_Phi"),
    "coaisle-v": _t_membership(invariants.in_coaisle_V, "V_Phi"),
    "aisle-y": _t_membership(invariants.in_Y, "Y_Phi"),
    "cm-concentration": _t_cm, "normalize": _t_normalize, "end-ring": _t_end_ring,
    "verify-end-z": _t_verify_end_z, "tilting-summary": _t_tilting,
}

_MODULE_TAGS = ((poset_core.PosetError, "poset_core"), (spfilt.FiltrationError, "spfilt"),
                (grcomplex.ComplexError, "grcomplex"), (invariants.InvariantError, "invariants"),
                (loccalc.LocCalcError, "loccalc"), (arith.ArithError, "arith"),
                (JobError, "cli_io"))

# errors meaning "the input is fine but the mathematics says no"
_MATH_ERRORS = (poset_core.NoCodimensionFunction, spfilt.FiberNotZeroDimensional,
                loccalc.NotCodimension)


def _error_report(job, exc, code):
    tag = next((t for cls, t in _MODULE_TAGS if isinstance(exc, cls)), "python")
    kind = type(exc).__name__
    if isinstance(exc, MathFailure):
        tag, kind = exc.module, exc.kind
    err = {"module": tag, "type": kind, "message": str(exc)}
    for attr in ("cycle", "pair", "node", "level", "q", "line", "column", "expected"):
        if hasattr(exc, attr):
            err[attr] = plain(getattr(exc, attr))
    data = {"error": err}
    if isinstance(exc, MathFailure):
        data.update(exc.data)
    return Report(job.task if job else "", code, data, "error [%s] %s: %s" % (tag, err["type"], exc))


def run(job: Job) -> Report:
    try:
        if job.filtration is None and job.filtration_spec:
            spec = dict(job.filtration_spec)
            job.filtration = _build_filtration(spec, spec.pop("data"), job.poset, job.ring)
        data, human = DISPATCH[job.task](job)
    except MathFailure as e:
        return _error_report(job, e, 1)
    except _MATH_ERRORS as e:
        return _error_report(job, e, 1)
    except (JobError, poset_core.PosetError, spfilt.FiltrationError, grcomplex.ComplexError,
            invariants.InvariantError, loccalc.LocCalcError, arith.ArithError,
            ValueError, KeyError) as e:
        return _error_report(job, e, 2)
    return Report(job.task, 0, data, human)


# -- command line -----------------------------------------------------------------

def _parse_box(text):
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("box must look like lo..hi")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("box bounds must be integers") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("box needs lo <= hi")
    return lo, hi


def build_parser():
    ap = argparse.ArgumentParser(prog="silt-lab", description="sp-filtrations, local cohomology "
                                 "and localization calculus on finite prime windows")
    ap.add_argument("jobfile", help="job file, or - for stdin")
    ap.add_argument("--task", choices=TASKS, help="override the task named in the job")
    ap.add_argument("--level", type=int, default=4, help="p-adic precision for arith checks")
    ap.add_argument("--box", type=_parse_box, help="degree box lo..hi for homology tables")
    ap.add_argument("--format", choices=("human", "structured"), default="human")
    ap.add_argument("--seed", type=int, default=0, help="seed for random rule orders")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.jobfile == "-" else open(args.jobfile, encoding="utf-8").read()
    except OSError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    try:
        job = parse_job(text)
    except (JobError, poset_core.PosetError, spfilt.FiltrationError) as e:
        rep = _error_report(None, e, 2)
    else:
        if args.task:
            job.task = args.task
        job.level, job.box, job.seed, job.fmt = args.level, args.box, args.seed, args.format
        if job.level < 1:
            rep = _error_report(job, JobError("--level must be >= 1"), 2)
        else:
            rep = run(job)
    out = emit_structured(rep) if args.format == "structured" else emit_human(rep)
    sys.stdout.write(out)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
