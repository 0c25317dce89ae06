"""Maurer-Cartan forms: cogenerators, exterior forms, relation sets.

Conventions.  omega^i = X^i_j dx^j, mu^i_K are the Maurer-Cartan forms with
mu^i = d_G X^i, so on a target fiber (X^i constant) mu^i = -omega^i.  The
universal structure equations are

    d mu^i_K = sum_j omega^j & mu^i_{K+j}
               + sum_{L+M=K, |M|>=1} binom(K,L) sum_j mu^i_{L+j} & mu^j_M

and d omega^i = -sum_j omega^j & mu^i_j (which makes d(d omega^i) = 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .expr import (Expr, JetSymbol, Kind, ParseError, Registry, mi_add, mi_binom,
                   mi_below, mi_order, mi_sub, mi_unit, mi_zero)
from .jet import PseudoGroup, identity_values, total_derivative

__all__ = [
    "Cog", "Form", "MCRelation", "RelationSet", "structure_equation",
    "d_omega", "exterior_derivative", "mc_dependencies", "prolong_defining",
    "parse_form", "linearize_rule",
]

DX, OMEGA, MU, THETA = 0, 1, 2, 3


@dataclass(frozen=True)
class Cog:
    """A cogenerator: dx^i, omega^i, mu^i_K or theta^a_J."""

    kind: int
    comp: int
    index: tuple = ()

    @property
    def order(self) -> int:
        return sum(self.index)

    @property
    def key(self):
        return (self.kind, sum(self.index), self.comp, self.index)

    def __lt__(self, other: "Cog"):
        return self.key < other.key

    @staticmethod
    def omega(i: int) -> "Cog":
        return Cog(OMEGA, i, ())

    @staticmethod
    def mu(i: int, K) -> "Cog":
        return Cog(MU, i, tuple(K))

    @staticmethod
    def theta(a: int, J) -> "Cog":
        return Cog(THETA, a, tuple(J))

    @staticmethod
    def dx(i: int) -> "Cog":
        return Cog(DX, i, ())

    def shifted(self, i: int) -> "Cog":
        n = len(self.index)
        return Cog(self.kind, self.comp, mi_add(self.index, mi_unit(n, i)))

    def name(self, reg: Registry, style: str = "machine") -> str:
        if self.kind == DX:
            b = reg.base[self.comp]
            return {"latex": f"d{b}"}.get(style, f"d{b}")
        if self.kind == OMEGA:
            b = reg.base[self.comp]
            return {"human": f"ω^{b}", "latex": f"\\omega^{{{b}}}"}.get(style, f"omega^{b}")
        if self.kind == MU:
            b = reg.base[self.comp]
            suf = reg.suffix(self.index)
            if style == "human":
                return f"μ^{b}" + (f"_{suf}" if suf else "")
            if style == "latex":
                return f"\\mu^{{{b}}}" + (f"_{{{suf}}}" if suf else "")
            return f"mu^{b}" + (f"_{suf}" if suf else "")
        f = reg.fiber[self.comp]
        suf = reg.suffix(self.index)
        if style == "human":
            return f"ϑ^{f}" + (f"_{suf}" if suf else "")
        if style == "latex":
            return f"\\vartheta^{{{f}}}" + (f"_{{{suf}}}" if suf else "")
        return f"theta^{f}" + (f"_{suf}" if suf else "")


def _merge(a: tuple, b: tuple):
    """Wedge of sorted cogenerator tuples: (sign, tuple) or (0, None)."""
    if set(a) & set(b):
        return 0, None
    seq = list(a) + list(b)
    # parity of the sorting permutation by counting inversions
    inv = 0
    for x in a:
        for y in b:
            if y < x:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(seq))


class Form:
    """Exterior form: {sorted tuple of Cog: Expr coefficient}."""

    __slots__ = ("reg", "grade", "terms")

    def __init__(self, reg: Registry, grade: int, terms: Mapping[tuple, Expr] | None = None):
        self.reg = reg
        self.grade = grade
        self.terms: dict[tuple, Expr] = {}
        for k, v in (terms or {}).items():
            if len(k) != grade:
                raise ValueError("term grade mismatch")
            if len(set(k)) != len(k):
                continue
            srt = tuple(sorted(k))
            sign = _perm_sign(k, srt)
            if not v.is_zero():
                cur = self.terms.get(srt)
                val = v if sign > 0 else -v
                val = val if cur is None else cur + val
                if val.is_zero():
                    self.terms.pop(srt, None)
                else:
                    self.terms[srt] = val

    # constructors
    @staticmethod
    def zero(reg: Registry, grade: int = 1) -> "Form":
        return Form(reg, grade)

    @staticmethod
    def scalar(e: Expr) -> "Form":
        return Form(e.reg, 0, {(): e})

    @staticmethod
    def cog(reg: Registry, c: Cog, coef: Expr | None = None) -> "Form":
        return Form(reg, 1, {(c,): coef if coef is not None else Expr.constant(reg, 1)})

    def _new(self, grade, terms):
        f = Form.__new__(Form)
        f.reg, f.grade, f.terms = self.reg, grade, terms
        return f

    # arithmetic
    def __add__(self, other: "Form") -> "Form":
        if other.grade != self.grade and not (other.is_zero() or self.is_zero()):
            raise ValueError("adding forms of different grade")
        if self.is_zero():
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            cur = out.get(k)
            val = v if cur is None else cur + v
            if val.is_zero():
                out.pop(k, None)
            else:
                out[k] = val
        return self._new(self.grade, out)

    def __neg__(self) -> "Form":
        return self._new(self.grade, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        if not isinstance(c, Expr):
            c = Expr.constant(self.reg, c)
        if c.is_zero():
            return self._new(self.grade, {})
        return self._new(self.grade, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def wedge(self, other: "Form") -> "Form":
        out: dict[tuple, Expr] = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                sign, k = _merge(ka, kb)
                if not sign:
                    continue
                val = va * vb
                if sign < 0:
                    val = -val
                cur = out.get(k)
                val = val if cur is None else cur + val
                if val.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = val
        return self._new(self.grade + other.grade, out)

    __and__ = wedge

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def cogs(self) -> set[Cog]:
        return {c for k in self.terms for c in k}

    def coeff(self, *cogs: Cog) -> Expr:
        srt = tuple(sorted(cogs))
        sign = _perm_sign(cogs, srt)
        v = self.terms.get(srt)
        if v is None:
            return Expr.constant(self.reg, 0)
        return v if sign > 0 else -v

    def map(self, f: Callable[[Expr], Expr]) -> "Form":
        out = {}
        for k, v in self.terms.items():
            w = f(v)
            if not w.is_zero():
                out[k] = w
        return self._new(self.grade, out)

    def subs(self, rules) -> "Form":
        return self.map(lambda e: e.subs(rules))

    def replace(self, images: Mapping[Cog, "Form"]) -> "Form":
        """Substitute one-forms for cogenerators."""
        if not any(c in images for c in self.cogs()):
            return self
        out = Form(self.reg, self.grade)
        for k, v in self.terms.items():
            if not any(c in images for c in k):
                out = out + self._new(self.grade, {k: v})
                continue
            acc = Form.scalar(v)
            for c in k:
                acc = acc.wedge(images[c] if c in images else Form.cog(self.reg, c))
            out = out + acc if not acc.is_zero() else out
        if out.grade != self.grade:
            out = self._new(self.grade, out.terms)
        return out

    def drop(self, pred: Callable[[Cog], bool]) -> "Form":
        """Remove terms containing a cogenerator satisfying pred."""
        return self._new(self.grade, {k: v for k, v in self.terms.items()
                                      if not any(pred(c) for c in k)})

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(str(self))

    # printing
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: [c.key for c in t[0]])

    def to_string(self, style: str = "machine") -> str:
        if not self.terms:
            return "0"
        wedge = {"human": "∧", "latex": " \\wedge "}.get(style, "&")
        parts = []
        for k, v in self.sorted_terms():
            names = wedge.join(c.name(self.reg, style) for c in k)
            cs = v.latex() if style == "latex" else str(v)
            neg = cs.startswith("-") and not _needs_paren(cs[1:])
            body = cs[1:] if neg else cs
            if not k:
                term = body
            elif body == "1":
                term = names
            elif _needs_paren(body):
                term = f"({body})*{names}" if style != "latex" else f"\\left({body}\\right){names}"
            else:
                term = f"{body}*{names}" if style != "latex" else f"{body}\\,{names}"
            parts.append(("-" if neg else "+", term))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sg, t in parts[1:]:
            s += f" {sg} {t}"
        return s

    def __str__(self):
        return self.to_string("machine")

    def __repr__(self):
        return f"Form({self})"


def _perm_sign(seq, srt) -> int:
    perm = [srt.index(c) for c in seq]
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _needs_paren(s: str) -> bool:
    depth = 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in "+-" and i > 0:
            return True
    return False


# ---------------------------------------------------------------------------
# parsing forms

_COG_RE = re.compile(r"^(omega|w|ω|mu|μ|theta|ϑ)\^([A-Za-z]+)(?:_([A-Za-z0-9]*))?$")
_TOKEN = re.compile(r"\s*(?:(?P<cog>(?:omega|w|ω|mu|μ|theta|ϑ)\^[A-Za-z]+(?:_[A-Za-z0-9]+)?)"
                    r"|(?P<num>\d+)|(?P<id>[A-Za-z][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^&()∧]))")


def parse_cog(reg: Registry, text: str) -> Cog | None:
    m = _COG_RE.match(text.strip())
    if not m:
        return None
    head, letter, suf = m.groups()
    if head in ("omega", "w", "ω"):
        if suf or letter not in reg.base:
            return None
        return Cog.omega(reg.base.index(letter))
    if head in ("mu", "μ"):
        if letter not in reg.base:
            return None
        return Cog.mu(reg.base.index(letter), reg.parse_suffix(suf or ""))
    if letter not in reg.fiber:
        return None
    return Cog.theta(reg.fiber.index(letter), reg.parse_suffix(suf or ""))


class _FormParser:
    """Sums, products and wedges of scalars and cogenerators.

    ``d<x>`` for a base letter denotes the coordinate form dx.
    """

    def __init__(self, reg: Registry, text: str):
        self.reg, self.text = reg, text.replace("−", "-")
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        t = self.text
        while pos < len(t):
            if t[pos:].strip() == "":
                break
            m = _TOKEN.match(t, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {t[pos]!r}", pos, t)
            kind = m.lastgroup
            val = m.group(kind)
            self.toks.append((kind, "^" if val == "**" else ("&" if val == "∧" else val), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, val=None):
        tok = self.peek()
        if tok[0] is None or (val is not None and tok[1] != val):
            raise ParseError(f"expected {val or 'token'}", tok[2], self.text)
        self.i += 1
        return tok

    def parse(self):
        v = self.sum()
        if self.peek()[0] is not None:
            raise ParseError("trailing input", self.peek()[2], self.text)
        return v

    def sum(self):
        v = self.wedge()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            w = self.wedge()
            v = _add(v, w) if op == "+" else _add(v, _neg(w))
        return v

    def wedge(self):
        v = self.product()
        while self.peek()[1] == "&":
            self.take()
            w = self.product()
            v = _mul(v, w, wedge=True)
        return v

    def product(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            w = self.unary()
            if op == "*":
                v = _mul(v, w)
            else:
                if isinstance(w, Form):
                    raise ParseError("division by a form", self.peek()[2], self.text)
                v = _mul(v, w.inv())
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return _neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        v = self.atom()
        if self.peek()[1] == "^":
            self.take()
            neg = False
            if self.peek()[1] == "-":
                self.take()
                neg = True
            kind, val, pos = self.take()
            if kind != "num" or isinstance(v, Form):
                raise ParseError("integer exponent expected", pos, self.text)
            v = v ** (-int(val) if neg else int(val))
        return v

    def atom(self):
        kind, val, pos = self.take()
        reg = self.reg
        if kind == "num":
            return Expr.constant(reg, int(val))
        if kind == "cog":
            c = parse_cog(reg, val)
            if c is None:
                raise ParseError(f"unknown form {val!r}", pos, self.text)
            return Form.cog(reg, c)
        if kind == "id":
            if val == "sqrt" and self.peek()[1] == "(":
                self.take("(")
                e = self.sum()
                self.take(")")
                return reg.sqrt(e)
            if len(val) == 2 and val[0] == "d" and val[1] in reg.base and val not in reg._heads:
                return Form.cog(reg, Cog.dx(reg.base.index(val[1])))
            try:
                return reg.sym(reg.resolve(val))
            except KeyError:
                raise ParseError(f"unknown identifier {val!r}", pos, self.text) from None
        if val == "(":
            v = self.sum()
            self.take(")")
            return v
        raise ParseError(f"unexpected {val!r}", pos, self.text)


def _neg(v):
    return -v


def _add(a, b):
    if isinstance(a, Form) and isinstance(b, Form):
        return a + b
    if isinstance(a, Expr) and isinstance(b, Expr):
        return a + b
    f, e = (a, b) if isinstance(a, Form) else (b, a)
    if e.is_zero():
        return f
    raise ParseError("adding a scalar to a form")


def _mul(a, b, wedge=False):
    if isinstance(a, Form) and isinstance(b, Form):
        if not wedge:
            raise ParseError("use & for the wedge product")
        return a.wedge(b)
    if isinstance(a, Form):
        return a.scale(b)
    if isinstance(b, Form):
        return b.scale(a)
    return a * b


def parse_form(reg: Registry, text: str) -> Form:
    """Parse a form such as '(U_Y)*w^x&w^y - 1/2*w^u&mu^x_x'."""
    v = _FormParser(reg, text).parse()
    if isinstance(v, Expr):
        return Form.scalar(v) if not v.is_zero() else Form(reg, 1)
    return v


# ---------------------------------------------------------------------------
# relations

@dataclass(frozen=True)
class MCRelation:
    lhs: Cog
    rhs: Form

    def to_string(self, style: str = "machine") -> str:
        return f"{self.lhs.name(self.rhs.reg, style)} = {self.rhs.to_string(style)}"

    def __str__(self):
        return self.to_string()


class RelationSet:
    """Fully reduced set of linear relations lhs = rhs among one-forms.

    Relations for jets that are principal for the pseudo-group are produced
    on demand by ``provider`` (a callable Cog -> Form or None).  Every stored
    right-hand side is reduced with respect to every left-hand side, so a
    single substitution pass rewrites any form to normal form.
    """

    def __init__(self, reg: Registry, provider: Callable[[Cog], Form | None] | None = None):
        self.reg = reg
        self.provider = provider
        self.solved: dict[Cog, Form] = {}
        self.lazy: dict[Cog, Form | None] = {}
        self.order_log: list[Cog] = []

    def copy(self) -> "RelationSet":
        out = RelationSet(self.reg, self.provider)
        out.solved = dict(self.solved)
        out.lazy = dict(self.lazy)
        out.order_log = list(self.order_log)
        return out

    def _lookup(self, c: Cog) -> Form | None:
        if c in self.solved:
            return self.solved[c]
        if c.kind != MU or self.provider is None:
            return None
        if c not in self.lazy:
            self.lazy[c] = None  # guard
            f = self.provider(c)
            if f is not None:
                f = self.rewrite(f)
            self.lazy[c] = f
        return self.lazy[c]

    def is_dependent(self, c: Cog) -> bool:
        return self._lookup(c) is not None

    def rewrite(self, f: Form) -> Form:
        for _ in range(32):
            images = {}
            for c in f.cogs():
                r = self._lookup(c)
                if r is not None:
                    images[c] = r
            if not images:
                return f
            f = f.replace(images)
        raise RuntimeError("relation rewriting did not terminate")

    def add(self, lhs: Cog, rhs: Form) -> None:
        rhs = self.rewrite(rhs)
        if lhs in rhs.cogs():
            raise ValueError("relation is not solved for its left-hand side")
        if self.is_dependent(lhs):
            raise ValueError(f"{lhs.name(self.reg)} is already dependent")
        img = {lhs: rhs}
        for k in list(self.solved):
            self.solved[k] = self.solved[k].replace(img)
        for k, v in list(self.lazy.items()):
            if v is not None:
                self.lazy[k] = v.replace(img)
        self.solved[lhs] = rhs
        self.order_log.append(lhs)

    def map_coeffs(self, f: Callable[[Expr], Expr]) -> None:
        for k in list(self.solved):
            self.solved[k] = self.solved[k].map(f)
        for k, v in list(self.lazy.items()):
            if v is not None:
                self.lazy[k] = v.map(f)

    def relations(self, max_order: int | None = None) -> list[MCRelation]:
        out = []
        for c, r in list(self.solved.items()) + [(k, v) for k, v in self.lazy.items() if v is not None]:
            if max_order is None or c.order <= max_order:
                out.append(MCRelation(c, r))
        return sorted(out, key=lambda m: m.lhs.key)


# ---------------------------------------------------------------------------
# structure equations

def structure_equation(reg: Registry, i: int, K, relations: RelationSet | None = None) -> Form:
    """d mu^i_K from the universal structure equations, rewritten modulo relations."""
    n = reg.n
    K = tuple(K)
    one = Expr.constant(reg, 1)
    f = Form(reg, 2)
    terms: dict = {}
    for j in range(n):
        _acc(terms, (Cog.omega(j), Cog.mu(i, mi_add(K, mi_unit(n, j)))), one)
    for M in mi_below(K):
        if sum(M) == 0:
            continue
        L = mi_sub(K, M)
        b = mi_binom(K, L)
        for j in range(n):
            _acc(terms, (Cog.mu(i, mi_add(L, mi_unit(n, j))), Cog.mu(j, M)), Expr.constant(reg, b))
    f = Form(reg, 2, terms)
    return relations.rewrite(f) if relations is not None else f


def _acc(terms, k, v):
    terms[k] = terms[k] + v if k in terms else v


def d_omega(reg: Registry, i: int, relations: RelationSet | None = None) -> Form:
    one = Expr.constant(reg, 1)
    f = Form(reg, 2, {(Cog.omega(j), Cog.mu(i, mi_unit(reg.n, j))): -one for j in range(reg.n)})
    return relations.rewrite(f) if relations is not None else f


def d_cog(reg: Registry, c: Cog, relations: RelationSet | None = None) -> Form:
    if c.kind == OMEGA:
        return d_omega(reg, c.comp, relations)
    if c.kind == MU:
        return structure_equation(reg, c.comp, c.index, relations)
    if c.kind == DX:
        return Form(reg, 2)
    raise ValueError("theta forms have no intrinsic differential here")


def exterior_derivative(f: Form, dfun: Callable[[Expr], Form],
                        relations: RelationSet | None = None,
                        dcog: Callable[[Cog], Form] | None = None,
                        drop_theta: bool = True) -> Form:
    """d f = sum d(coef) & tuple + coef * sum (-1)^j a_1..d(a_j)..a_k.

    ``dfun`` maps a coefficient to its differential (a one-form).  The result
    is rewritten modulo ``relations``; theta terms are dropped on request.
    """
    reg = f.reg
    if dcog is None:
        dcog = lambda c: d_cog(reg, c, relations)
    out = Form(reg, f.grade + 1)
    cache: dict[Cog, Form] = {}
    for k, v in f.terms.items():
        dv = dfun(v)
        if not dv.is_zero():
            out = out + dv.wedge(Form(reg, f.grade, {k: Expr.constant(reg, 1)}))
        for j, c in enumerate(k):
            if c not in cache:
                cache[c] = dcog(c)
            dc = cache[c]
            if dc.is_zero():
                continue
            left = Form(reg, j, {k[:j]: v})
            right = Form(reg, len(k) - j - 1, {k[j + 1:]: Expr.constant(reg, 1)})
            term = left.wedge(dc).wedge(right)
            out = out + (term if j % 2 == 0 else -term)
    if relations is not None:
        out = relations.rewrite(out)
    if drop_theta:
        out = out.drop(lambda c: c.kind == THETA)
    return out


# ---------------------------------------------------------------------------
# dependencies from defining equations

def prolong_defining(defining: Iterable[Expr], steps: int, n: int | None = None) -> list[Expr]:
    """The equations and all their total derivatives of order <= steps."""
    eqs = list(defining)
    out: list[Expr] = []
    seen: set[str] = set()

    def push(e):
        if e.is_zero():
            return
        k = str(e)
        if k not in seen and str(-e) not in seen:
            seen.add(k)
            out.append(e)

    for e in eqs:
        push(e)
    frontier = list(out)
    for _ in range(steps):
        nxt = []
        for e in frontier:
            nn = n if n is not None else e.reg.n
            for i in range(nn):
                d = total_derivative(e, i)
                before = len(out)
                push(d)
                if len(out) > before:
                    nxt.append(d)
        frontier = nxt
    return out


def linearize_rule(group: PseudoGroup, s: JetSymbol) -> dict[JetSymbol, Expr]:
    """Identity linearization of s = value(s): {parametric jet t: coefficient(x)}."""
    reg = group.reg
    rhs = group.value(s)
    if rhs is None:
        raise ValueError("not a principal jet")
    syms = [t for t in rhs.jet_symbols() if t.kind == Kind.GROUP]
    ident = identity_values(reg, syms)
    out = {}
    for t in syms:
        d = rhs.diff(t)
        if d.is_zero():
            continue
        v = d.subs(ident)
        if not v.is_zero():
            out[t] = v
    return out


def mc_dependencies(group: PseudoGroup, target_normals: Mapping[int, Expr] | None = None,
                    max_order: int | None = None) -> RelationSet:
    """Relation set for the Maurer-Cartan forms of a pseudo-group.

    Principal jets' relations are generated on demand (optionally only up
    to ``max_order``).  Source coordinates in the coefficients are replaced by
    target coordinates X^i, then by the given target normals; mu^i = -omega^i
    for every normalized target axis.
    """
    reg = group.reg
    n = reg.n
    normals = dict(target_normals or {})
    xsub = {}
    for i in range(n):
        X = reg.sym(reg.group_jet(i, mi_zero(n)))
        xsub[reg.base_var(i)] = normals.get(i, X)
    tsub = {reg.group_jet(i, mi_zero(n)): v for i, v in normals.items()}
    def provider(c: Cog) -> Form | None:
        if c.kind != MU or (max_order is not None and c.order > max_order):
            return None
        s = reg.group_jet(c.comp, c.index)
        if not group.is_principal(s):
            return None
        lin = linearize_rule(group, s)
        terms = {}
        for t, coef in lin.items():
            coef = coef.subs(xsub)
            if tsub:
                coef = coef.subs(tsub)
            if not coef.is_zero():
                terms[(Cog.mu(t.comp, t.index),)] = coef
        return Form(reg, 1, terms)

    rel = RelationSet(reg, provider)
    for i in sorted(normals):
        rel.add(Cog.mu(i, mi_zero(n)), -Form.cog(reg, Cog.omega(i)))
    return rel
