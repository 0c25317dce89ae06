"""Exact rational expressions over jet symbols.

An :class:`Expr` is a quotient ``num/den`` of multivariate polynomials with
rational coefficients, kept GCD-reduced with a monic denominator.  The
polynomial arithmetic is delegated to FLINT (``fmpq_mpoly``).  Square roots
produced by quadratic solves are adjoined as radical symbols ``r`` with the
side relation ``r**2 = radicand``; numerators are kept linear in every radical
and denominators free of them, which keeps the representation canonical.

Symbols live in a :class:`Registry`, which owns the naming scheme
(``u_xy`` fiber jets, ``X_xx`` group jets, ``U_YY`` lifted invariants) and the
FLINT context.  The context grows in blocks as new symbols are registered;
polynomials made in an older context are projected on demand.
"""

from __future__ import annotations

import enum
import re
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from math import comb, factorial, isqrt
from typing import Iterable, Mapping

import flint

__all__ = [
    "Kind", "JetSymbol", "Registry", "Expr", "ParseError", "SolveError",
    "mi_zero", "mi_unit", "mi_add", "mi_sub", "mi_le", "mi_order", "mi_binom",
    "mi_below", "mi_all", "solve_for", "substitute",
]

_BLOCK = 32


# ---------------------------------------------------------------------------
# multi-indices

def mi_zero(n: int) -> tuple[int, ...]:
    return (0,) * n


def mi_unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(n))


def mi_add(a, b) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a, b) -> tuple[int, ...]:
    out = tuple(x - y for x, y in zip(a, b))
    if min(out, default=0) < 0:
        raise ValueError(f"multi-index {b} is not below {a}")
    return out


def mi_le(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mi_order(a) -> int:
    return sum(a)


def mi_binom(K, L) -> int:
    """K!/(L!(K-L)!) computed componentwise; requires L <= K."""
    if not mi_le(L, K):
        raise ValueError(f"binom({K}, {L}) undefined")
    out = 1
    for k, l in zip(K, L):
        out *= comb(k, l)
    return out


def mi_below(K) -> list[tuple[int, ...]]:
    """All L with L <= K componentwise."""
    out = [()]
    for k in K:
        out = [t + (j,) for t in out for j in range(k + 1)]
    return out


def mi_all(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices in n variables of exactly the given order."""
    if n == 0:
        return [()] if order == 0 else []
    if n == 1:
        return [(order,)]
    return [(k,) + rest for k in range(order, -1, -1)
            for rest in mi_all(n - 1, order - k)]


# ---------------------------------------------------------------------------
# symbols

class Kind(enum.IntEnum):
    BASE = 0
    FIBER = 1
    GROUP = 2
    LIFTED = 3
    CONST = 4


@total_ordering
@dataclass(frozen=True)
class JetSymbol:
    """Tagged coordinate. ``comp`` is the axis (BASE, GROUP) or fiber index."""

    kind: Kind
    comp: int = 0
    index: tuple[int, ...] = ()
    label: str = ""

    @property
    def order(self) -> int:
        return sum(self.index)

    def sort_key(self):
        return (int(self.kind), self.comp, self.order, self.index, self.label)

    def __lt__(self, other):
        if not isinstance(other, JetSymbol):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def shifted(self, i: int) -> "JetSymbol":
        """The symbol with one more derivative along axis i."""
        idx = list(self.index)
        idx[i] += 1
        return JetSymbol(self.kind, self.comp, tuple(idx), self.label)


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        where = "" if pos is None else f" at position {pos}"
        super().__init__(f"{msg}{where}")


class SolveError(ValueError):
    pass


_SUFFIX = re.compile(r"(\d*)([A-Za-z])")


class Registry:
    """Symbol table and FLINT context for one session.

    Base variables must be single letters so that jet suffixes are
    unambiguous.  Group coordinates are the capitalized base names and
    lifted invariants the capitalized fiber names.
    """

    def __init__(self, base_vars: Iterable[str], fiber_vars: Iterable[str] = ()):
        self.base = tuple(base_vars)
        self.fiber = tuple(fiber_vars)
        self.n = len(self.base)
        for b in self.base:
            if len(b) != 1 or not b.islower():
                raise ValueError(f"base variable {b!r} must be a single lowercase letter")
        if len(set(self.base)) != self.n:
            raise ValueError("duplicate base variables")
        self.group = tuple(b.upper() for b in self.base)
        self.lifted = tuple(f[0].upper() + f[1:] for f in self.fiber)
        heads = list(self.base) + list(self.fiber) + list(self.group) + list(self.lifted)
        if len(set(heads)) != len(heads):
            raise ValueError(f"name collision among {heads}")
        for f in self.fiber:
            if "_" in f or not f[0].islower():
                raise ValueError(f"fiber variable {f!r} must start lowercase and contain no '_'")
        self._heads = {}
        for i, b in enumerate(self.base):
            self._heads[b] = (Kind.BASE, i)
        for a, f in enumerate(self.fiber):
            self._heads[f] = (Kind.FIBER, a)
        for i, g in enumerate(self.group):
            self._heads[g] = (Kind.GROUP, i)
        for a, g in enumerate(self.lifted):
            self._heads[g] = (Kind.LIFTED, a)
        self._lock = threading.RLock()
        self._syms: list[JetSymbol] = []
        self._index: dict[JetSymbol, int] = {}
        self._consts: dict[str, JetSymbol] = {}
        self.radicands: dict[JetSymbol, Expr] = {}
        self._radical_of: dict[str, JetSymbol] = {}
        self._cap = 0
        self.ctx = None
        self._grow(_BLOCK)
        self._names: dict[JetSymbol, str] = {}

    # -- context management -------------------------------------------------
    def _grow(self, cap: int):
        self._cap = cap
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(f"v{i}" for i in range(cap)), "deglex")

    def index(self, s: JetSymbol) -> int:
        i = self._index.get(s)
        if i is not None:
            return i
        with self._lock:
            i = self._index.get(s)
            if i is not None:
                return i
            self._validate(s)
            i = len(self._syms)
            if i >= self._cap:
                self._grow(self._cap + max(_BLOCK, self._cap // 2))
            self._syms.append(s)
            self._index[s] = i
            return i

    def _validate(self, s: JetSymbol):
        if s.kind in (Kind.BASE, Kind.GROUP):
            if not 0 <= s.comp < self.n:
                raise ValueError(f"axis {s.comp} out of range")
        elif s.kind in (Kind.FIBER, Kind.LIFTED):
            if not 0 <= s.comp < len(self.fiber):
                raise ValueError(f"fiber component {s.comp} out of range")
        if s.kind == Kind.BASE and s.index:
            raise ValueError("base variables carry no multi-index")
        if s.kind in (Kind.FIBER, Kind.GROUP, Kind.LIFTED):
            if len(s.index) != self.n or min(s.index, default=0) < 0:
                raise ValueError(f"bad multi-index {s.index}")

    def symbol_at(self, i: int) -> JetSymbol:
        return self._syms[i]

    def convert(self, p):
        """Project a polynomial from an older (smaller) context."""
        if p.context() is self.ctx:
            return p
        return p.project_to_context(self.ctx)

    # -- constructors ---------------------------------------------------------
    def base_var(self, i: int) -> JetSymbol:
        return JetSymbol(Kind.BASE, i)

    def fiber_jet(self, a: int, J=None) -> JetSymbol:
        return JetSymbol(Kind.FIBER, a, tuple(J) if J is not None else mi_zero(self.n))

    def group_jet(self, i: int, K=None) -> JetSymbol:
        return JetSymbol(Kind.GROUP, i, tuple(K) if K is not None else mi_zero(self.n))

    def lifted_sym(self, a: int, J=None) -> JetSymbol:
        return JetSymbol(Kind.LIFTED, a, tuple(J) if J is not None else mi_zero(self.n))

    def constant(self, label: str) -> JetSymbol:
        with self._lock:
            s = self._consts.get(label)
            if s is None:
                if not label.startswith("_") and (label in self._heads or "_" in label):
                    raise ValueError(f"constant name {label!r} is reserved")
                s = JetSymbol(Kind.CONST, len(self._consts), (), label)
                self._consts[label] = s
            return s

    def sym(self, s: JetSymbol) -> "Expr":
        i = self.index(s)
        ctx = self.ctx
        return Expr(self, ctx.gen(i), ctx.from_dict({}) + 1, _canon=False)

    def const(self, c) -> "Expr":
        return Expr.constant(self, c)

    def parse(self, text: str) -> "Expr":
        return _Parser(self, text).parse()

    def __call__(self, text: str) -> "Expr":
        return self.parse(text)

    # -- naming ---------------------------------------------------------------
    def suffix(self, J, upper: bool = False) -> str:
        out = "".join(b * k for b, k in zip(self.base, J))
        return out.upper() if upper else out

    def name(self, s: JetSymbol) -> str:
        nm = self._names.get(s)
        if nm is not None:
            return nm
        if s.kind == Kind.BASE:
            nm = self.base[s.comp]
        elif s.kind == Kind.FIBER:
            suf = self.suffix(s.index)
            nm = self.fiber[s.comp] + ("_" + suf if suf else "")
        elif s.kind == Kind.GROUP:
            suf = self.suffix(s.index)
            nm = self.group[s.comp] + ("_" + suf if suf else "")
        elif s.kind == Kind.LIFTED:
            suf = self.suffix(s.index, upper=True)
            nm = self.lifted[s.comp] + ("_" + suf if suf else "")
        elif s in self.radicands:
            nm = f"sqrt({self.radicands[s]})"
        else:
            nm = s.label
        self._names[s] = nm
        return nm

    def _parse_suffix(self, suf: str, upper: bool, name: str) -> tuple[int, ...]:
        J = [0] * self.n
        pos = 0
        letters = [b.upper() if upper else b for b in self.base]
        for m in _SUFFIX.finditer(suf):
            if m.start() != pos:
                break
            pos = m.end()
            cnt = int(m.group(1)) if m.group(1) else 1
            ch = m.group(2)
            if ch not in letters:
                raise KeyError(name)
            J[letters.index(ch)] += cnt
        if pos != len(suf) or not suf:
            raise KeyError(name)
        return tuple(J)

    def parse_suffix(self, suf: str, upper: bool = False) -> tuple[int, ...]:
        """Multi-index of a derivative suffix ('' is the zero index)."""
        if not suf:
            return mi_zero(self.n)
        return self._parse_suffix(suf, upper, suf)

    def resolve(self, name: str) -> JetSymbol:
        """Map an identifier such as ``u_xy``, ``X_xx``, ``Q_4P`` to a symbol."""
        head, _, suf = name.partition("_")
        if head in self._heads:
            kind, c = self._heads[head]
            if kind == Kind.BASE:
                if suf:
                    raise KeyError(name)
                return self.base_var(c)
            if not suf:
                return JetSymbol(kind, c, mi_zero(self.n))
            J = self._parse_suffix(suf, kind == Kind.LIFTED, name)
            return JetSymbol(kind, c, J)
        if name in self._consts:
            return self._consts[name]
        raise KeyError(name)

    # -- radicals -------------------------------------------------------------
    def radicals_present(self, p) -> list[tuple[JetSymbol, int]]:
        if not self.radicands:
            return []
        degs = p.degrees()
        out = []
        for r in self.radicands:
            i = self._index[r]
            if i < len(degs) and degs[i] > 0:
                out.append((r, i))
        return out

    def sqrt(self, e: "Expr") -> "Expr":
        """Positive square root of a radical-free expression.

        Square factors are pulled out of the radicand; the remaining
        squarefree part becomes (or reuses) a radical symbol.
        """
        if not e.is_radical_free():
            raise SolveError("nested radicals are not supported")
        if e.is_zero():
            return e
        n, d = e.num, e.den
        p = n * d
        c, facs = p.factor_squarefree()
        c = Fraction(int(c.p), int(c.q))
        out = self.ctx.from_dict({}) + 1
        inner = self.ctx.from_dict({}) + 1
        for f, m in facs:
            f = self.convert(f)
            out *= f ** (int(m) // 2)
            if int(m) % 2:
                inner *= f
        # normalise the monic squarefree part; fold its leading coefficient into c
        lc = inner.leading_coefficient()
        inner = inner / lc
        c *= Fraction(int(lc.p), int(lc.q))
        sgn = -1 if c < 0 else 1
        cn, cd = abs(c.numerator), c.denominator
        # sqrt(cn/cd) = sqrt(cn*cd)/cd ; pull squares out of cn*cd
        m = cn * cd
        sq = 1
        k = 2
        rest = m
        while k * k <= rest:
            while rest % (k * k) == 0:
                rest //= k * k
                sq *= k
            k += 1
        coef = Fraction(sq, cd)
        rad = inner * (sgn * rest)
        outE = Expr(self, out, d) * coef
        if rad.is_one():
            return outE
        radE = Expr(self, rad, self.ctx.from_dict({}) + 1)
        key = str(radE)
        with self._lock:
            r = self._radical_of.get(key)
            if r is None:
                r = JetSymbol(Kind.CONST, 10_000 + len(self._radical_of), (), f"r{len(self._radical_of)}")
                self.index(r)
                self.radicands[r] = radE
                self._radical_of[key] = r
        return outE * self.sym(r)


# ---------------------------------------------------------------------------
# polynomial helpers

def _poly_coeffs(p, i: int) -> dict[int, object]:
    """Coefficients of p as a univariate polynomial in variable i."""
    ctx = p.context()
    groups: dict[int, dict] = defaultdict(dict)
    for exps, c in p.terms():
        k = exps[i]
        if k:
            exps = exps[:i] + (0,) + exps[i + 1:]
        groups[k][exps] = c
    return {k: ctx.from_dict(dd) for k, dd in groups.items()}


def _fq(c) -> flint.fmpq:
    if isinstance(c, flint.fmpq):
        return c
    if isinstance(c, Fraction):
        return flint.fmpq(c.numerator, c.denominator)
    return flint.fmpq(c)


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.p), int(c.q))


# ---------------------------------------------------------------------------
# expressions

class Expr:
    """Canonical rational function over registry symbols. Immutable."""

    __slots__ = ("reg", "num", "den", "_str")

    def __init__(self, reg: Registry, num, den=None, _canon: bool = True):
        self.reg = reg
        if den is None:
            den = reg.ctx.from_dict({}) + 1
        if num.context() is not den.context():
            num, den = reg.convert(num), reg.convert(den)
        if _canon:
            num, den = _canon_pair(reg, num, den)
        self.num = num
        self.den = den
        self._str = None

    # -- construction ---------------------------------------------------------
    @staticmethod
    def constant(reg: Registry, c) -> "Expr":
        one = reg.ctx.from_dict({}) + 1
        return Expr(reg, one * _fq(c), one, _canon=False)

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.reg is not self.reg:
                raise ValueError("expressions from different registries")
            return other
        if isinstance(other, (int, Fraction, flint.fmpq)):
            return Expr.constant(self.reg, other)
        raise TypeError(f"cannot combine Expr with {type(other).__name__}")

    def _pair(self, other):
        o = self._coerce(other)
        a, b = self, o
        if a.num.context() is not b.num.context():
            a, b = a._lifted(), b._lifted()
        return a, b

    def _lifted(self) -> "Expr":
        ctx = self.reg.ctx
        if self.num.context() is ctx:
            return self
        return Expr(self.reg, self.reg.convert(self.num), self.reg.convert(self.den), _canon=False)

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other):
        a, b = self._pair(other)
        if a.den.is_one() and b.den.is_one():
            return Expr(a.reg, a.num + b.num, a.den, _canon=False)
        if a.den == b.den:
            return Expr(a.reg, a.num + b.num, a.den)
        g = a.den.gcd(b.den)
        if g.is_one():
            return Expr(a.reg, a.num * b.den + b.num * a.den, a.den * b.den, _canon=False)._fix_sign()
        bd, ad = b.den / g, a.den / g
        num = a.num * bd + b.num * ad
        g2 = num.gcd(g)
        if not g2.is_one():
            num = num / g2
            den = ad * (b.den / g2)
        else:
            den = ad * b.den
        return Expr(a.reg, num, den, _canon=False)._fix_sign()

    __radd__ = __add__

    def __neg__(self):
        e = self._lifted()
        return Expr(e.reg, -e.num, e.den, _canon=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        a, b = self._pair(other)
        if a.num.is_zero() or b.num.is_zero():
            return Expr.constant(a.reg, 0)
        if b.den.is_one() and b.num.is_constant():
            return Expr(a.reg, a.num * b.num.leading_coefficient(), a.den, _canon=False)
        if a.den.is_one() and a.num.is_constant():
            return Expr(a.reg, b.num * a.num.leading_coefficient(), b.den, _canon=False)
        if a.reg.radicands and (a.reg.radicals_present(a.num) and a.reg.radicals_present(b.num)):
            return Expr(a.reg, a.num * b.num, a.den * b.den)
        g1 = a.num.gcd(b.den)
        g2 = b.num.gcd(a.den)
        n1, d2 = (a.num / g1, b.den / g1) if not g1.is_one() else (a.num, b.den)
        n2, d1 = (b.num / g2, a.den / g2) if not g2.is_one() else (b.num, a.den)
        return Expr(a.reg, n1 * n2, d1 * d2, _canon=False)._fix_sign()

    __rmul__ = __mul__

    def inv(self) -> "Expr":
        e = self._lifted()
        if e.num.is_zero():
            raise ZeroDivisionError("division by the zero expression")
        if e.reg.radicals_present(e.num):
            return Expr(e.reg, e.den, e.num)
        return Expr(e.reg, e.den, e.num, _canon=False)._fix_sign()

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __pow__(self, k):
        if isinstance(k, Expr):
            if not k.is_constant() or k.constant_value().denominator != 1:
                raise ValueError("exponent must be an integer constant")
            k = k.constant_value().numerator
        if not isinstance(k, int):
            raise TypeError("integer exponents only")
        e = self._lifted()
        if k < 0:
            return e.inv() ** (-k)
        if k == 0:
            return Expr.constant(e.reg, 1)
        if e.reg.radicals_present(e.num):
            out = Expr.constant(e.reg, 1)
            base = e
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return Expr(e.reg, e.num ** k, e.den ** k, _canon=False)

    def _fix_sign(self) -> "Expr":
        d = self.den
        if d.is_zero():
            raise ZeroDivisionError("zero denominator")
        lc = d.leading_coefficient()
        if lc != 1:
            self.num = self.num / lc
            self.den = d / lc
        if self.num.is_zero():
            self.den = self.den.context().from_dict({}) + 1
        return self

    # -- predicates -----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        if self.num.is_zero():
            return Fraction(0)
        return _to_fraction(self.num.leading_coefficient()) / _to_fraction(self.den.leading_coefficient())

    def is_radical_free(self) -> bool:
        return not (self.reg.radicals_present(self.num) or self.reg.radicals_present(self.den))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.constant(self.reg, other)
        if not isinstance(other, Expr):
            return NotImplemented
        a, b = self._pair(other)
        return a.num == b.num and a.den == b.den

    def __hash__(self):
        return hash(str(self))

    def __bool__(self):
        return not self.is_zero()

    # -- structure ------------------------------------------------------------
    def _symbols_of(self, p) -> set[JetSymbol]:
        degs = p.degrees()
        syms = self.reg._syms
        return {syms[i] for i, d in enumerate(degs) if d > 0 and i < len(syms)}

    def free_symbols(self) -> set[JetSymbol]:
        return self._symbols_of(self.num) | self._symbols_of(self.den)

    def jet_symbols(self) -> set[JetSymbol]:
        """Free symbols with radicals replaced by the symbols of their radicands."""
        out = set()
        for s in self.free_symbols():
            if s in self.reg.radicands:
                out |= self.reg.radicands[s].free_symbols()
            else:
                out.add(s)
        return out

    def numerator(self) -> "Expr":
        return Expr(self.reg, self.num, None, _canon=False)

    def denominator(self) -> "Expr":
        return Expr(self.reg, self.den, None, _canon=False)

    def degree(self, s: JetSymbol) -> int:
        """Degree of the numerator in s (the denominator must not contain s)."""
        e = self._lifted()
        i = e.reg.index(s)
        e = e._lifted()
        degs = e.den.degrees()
        if i < len(degs) and degs[i] > 0:
            raise ValueError(f"{e.reg.name(s)} occurs in a denominator")
        degs = e.num.degrees()
        return max(degs[i], 0) if i < len(degs) else 0

    def coeffs(self, s: JetSymbol) -> dict[int, "Expr"]:
        """Write self = sum_k c_k s^k; requires s absent from the denominator."""
        e = self._lifted()
        i = e.reg.index(s)
        e = e._lifted()
        if e.den.degrees()[i] > 0:
            raise ValueError(f"{e.reg.name(s)} occurs in a denominator")
        return {k: Expr(e.reg, c, e.den) for k, c in _poly_coeffs(e.num, i).items()}

    def terms(self) -> list[tuple[Fraction, dict[JetSymbol, int]]]:
        """Numerator terms as (coefficient, monomial) pairs."""
        syms = self.reg._syms
        out = []
        for exps, c in self.num.terms():
            mono = {syms[i]: k for i, k in enumerate(exps) if k}
            out.append((_to_fraction(c), mono))
        return out

    # -- calculus -------------------------------------------------------------
    def diff(self, s: JetSymbol) -> "Expr":
        """Partial derivative; radicals are differentiated through their radicand."""
        e = self._lifted()
        reg = e.reg
        if s not in reg._index:
            return Expr.constant(reg, 0)
        out = e._pdiff(reg._index[s])
        for r, ri in reg.radicals_present(e.num) + reg.radicals_present(e.den):
            R = reg.radicands[r]
            if s in R.free_symbols() and r != s:
                dr = R.diff(s) * reg.sym(r) / (2 * R)
                out = out + e._pdiff(ri) * dr
        return out

    def _pdiff(self, i: int) -> "Expr":
        n, d = self.num, self.den
        dn = n.derivative(i)
        dd = d.derivative(i)
        if dd.is_zero():
            return Expr(self.reg, dn, d)
        return Expr(self.reg, dn * d - n * dd, d * d)

    def derivation(self, images: Mapping[JetSymbol, "Expr"]) -> "Expr":
        """Apply the derivation sending each symbol s to images[s] (others to 0)."""
        e = self._lifted()
        reg = e.reg
        idx = []
        for s, v in images.items():
            i = reg._index.get(s)
            if i is not None:
                idx.append((i, v))
        e = e._lifted()
        pure = all(v.den.is_one() for _, v in idx)
        rads = reg.radicals_present(e.num) + reg.radicals_present(e.den)
        if pure and not rads:
            n, d = e.num, e.den
            degn, degd = n.degrees(), d.degrees()
            dn = reg.ctx.from_dict({})
            dd = reg.ctx.from_dict({})
            for i, v in idx:
                vp = reg.convert(v.num)
                if i < len(degn) and degn[i] > 0:
                    dn += n.derivative(i) * vp
                if i < len(degd) and degd[i] > 0:
                    dd += d.derivative(i) * vp
            if dd.is_zero():
                return Expr(reg, dn, d)
            return Expr(reg, dn * d - n * dd, d * d)
        out = Expr.constant(reg, 0)
        for i, v in idx:
            s = reg.symbol_at(i)
            if s in reg.radicands:
                continue
            out = out + e._pdiff(i) * v
        for r, ri in rads:
            R = reg.radicands[r]
            dR = R.derivation(images)
            if not dR.is_zero():
                out = out + e._pdiff(ri) * (dR * reg.sym(r) / (2 * R))
        return out

    # -- substitution ---------------------------------------------------------
    def subs(self, rules: Mapping[JetSymbol, "Expr | int | Fraction"]) -> "Expr":
        """Simultaneous substitution.

        Radicals whose radicand involves a substituted symbol are re-derived
        from the substituted radicand.
        """
        reg = self.reg
        rules = {s: self._coerce(v) for s, v in rules.items()}
        e = self._lifted()
        present = e.free_symbols()
        live = {s: v for s, v in rules.items() if s in present}
        for r in list(present):
            if r in reg.radicands and r not in live:
                R = reg.radicands[r]
                if R.free_symbols() & set(rules):
                    live[r] = reg.sqrt(R.subs(rules))
        if not live:
            return e
        if any(v.free_symbols() & set(live) for v in live.values()):
            # route through fresh placeholders to keep the substitution simultaneous
            tmp = {s: reg.sym(reg.constant(f"_tmp{k}")) for k, s in enumerate(sorted(live))}
            e = e._compose({s: tmp[s] for s in live})
            return e.subs({tmp[s].free_symbols().pop(): v for s, v in live.items()})
        poly = {s: v for s, v in live.items() if v.den.is_one()}
        if poly:
            e = e._compose(poly)
        for s in sorted(live):
            if s not in poly:
                e = e._subs_one(s, live[s])
        return e

    def _compose(self, images: Mapping[JetSymbol, "Expr"]) -> "Expr":
        reg = self.reg
        e = self._lifted()
        ctx = reg.ctx
        gens = list(ctx.gens())
        for s, v in images.items():
            gens[reg._index[s]] = reg.convert(v.num)
        n = e.num.compose(*gens, ctx=ctx)
        d = e.den.compose(*gens, ctx=ctx)
        return Expr(reg, n, d)

    def _subs_one(self, s: JetSymbol, v: "Expr") -> "Expr":
        reg = self.reg
        e = self._lifted()
        i = reg.index(s)
        e, v = e._lifted(), v._lifted()
        a, b = v.num, v.den
        qn, dn = _horner(e.num, i, a, b)
        qd, dd = _horner(e.den, i, a, b)
        # e = (qn / b^dn) / (qd / b^dd)
        if dd >= dn:
            return Expr(reg, qn * b ** (dd - dn), qd)
        return Expr(reg, qn, qd * b ** (dn - dd))

    def evaluate(self, values: Mapping[JetSymbol, Fraction | int]) -> Fraction:
        """Exact rational value at a point (radicals must be absent)."""
        e = self._lifted()
        reg = e.reg
        sel = {}
        for s in e.free_symbols():
            if s not in values:
                raise KeyError(reg.name(s))
            sel[s] = values[s]
        if not sel:
            return e.constant_value()
        out = e.subs({s: Expr.constant(reg, v) for s, v in sel.items()})
        return out.constant_value()

    # -- printing -------------------------------------------------------------
    def __str__(self):
        if self._str is None:
            self._str = _Printer(self.reg).expr(self)
        return self._str

    def __repr__(self):
        return f"Expr({self})"

    def latex(self) -> str:
        return _Printer(self.reg, latex=True).expr(self)


def _horner(p, i, a, b):
    """Return (Q, d) with p(x_i = a/b) = Q / b^d."""
    cs = _poly_coeffs(p, i)
    if not cs:
        return p, 0
    d = max(cs)
    if d == 0:
        return p, 0
    zero = p.context().from_dict({})
    bpow = [p.context().from_dict({}) + 1]
    for _ in range(d):
        bpow.append(bpow[-1] * b)
    q = cs.get(d, zero)
    for k in range(d - 1, -1, -1):
        q = q * a
        c = cs.get(k)
        if c is not None:
            q = q + c * bpow[d - k]
    return q, d


def _topo(rules: Mapping[JetSymbol, Expr]) -> list[JetSymbol]:
    """Order targets so that a target is processed before any rule whose image contains it."""
    deps = {s: (v.free_symbols() & set(rules)) - {s} for s, v in rules.items()}
    out, state = [], {}

    def visit(s):
        st = state.get(s)
        if st == 1:
            raise ValueError("circular substitution rules")
        if st == 2:
            return
        state[s] = 1
        for t in sorted(deps[s]):
            visit(t)
        state[s] = 2
        out.append(s)

    for s in sorted(rules):
        visit(s)
    return out


def _canon_pair(reg: Registry, num, den):
    if den.is_zero():
        raise ZeroDivisionError("zero denominator")
    if num.is_zero():
        return num, den.context().from_dict({}) + 1
    if reg.radicands:
        num, den = _reduce_radicals(reg, num, den)
    if not den.is_constant():
        g = num.gcd(den)
        if not g.is_one():
            num, den = num / g, den / g
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num / lc, den / lc
    return num, den


def _split_radical(p, i, Rn, Rd):
    """p = (P0 + P1 r) / Rd^M using r^2 = Rn/Rd. Returns (P0, P1, M)."""
    cs = _poly_coeffs(p, i)
    deg = max(cs)
    M = deg // 2
    ctx = p.context()
    P0 = ctx.from_dict({})
    P1 = ctx.from_dict({})
    Rnp = [ctx.from_dict({}) + 1]
    Rdp = [ctx.from_dict({}) + 1]
    for _ in range(M):
        Rnp.append(Rnp[-1] * Rn)
        Rdp.append(Rdp[-1] * Rd)
    for k, c in cs.items():
        m = k // 2
        t = c * Rnp[m] * Rdp[M - m]
        if k % 2:
            P1 += t
        else:
            P0 += t
    return P0, P1, M


def _reduce_radicals(reg: Registry, num, den):
    for r, i in sorted(set(reg.radicals_present(num) + reg.radicals_present(den)), key=lambda t: t[1]):
        degs_n, degs_d = num.degrees(), den.degrees()
        if degs_n[i] < 2 and degs_d[i] == 0:
            continue
        R = reg.radicands[r]
        Rn, Rd = reg.convert(R.num), reg.convert(R.den)
        rp = reg.ctx.gen(i)
        P0, P1, M = _split_radical(num, i, Rn, Rd)
        if degs_d[i] == 0:
            num = P0 + P1 * rp
            den = den * Rd ** M
            continue
        Q0, Q1, M2 = _split_radical(den, i, Rn, Rd)
        # (P0 + P1 r) Rd^M2 / ((Q0 + Q1 r) Rd^M), multiply by (Q0 - Q1 r)
        A = P0 * Q0 * Rd - P1 * Q1 * Rn
        B = (P1 * Q0 - P0 * Q1) * Rd
        D = Q0 * Q0 * Rd - Q1 * Q1 * Rn
        if D.is_zero():
            raise ZeroDivisionError("denominator vanishes modulo the radical relation")
        num = (A + B * rp) * Rd ** M2
        den = D * Rd ** M
    return num, den


def substitute(e: Expr, rules: Mapping[JetSymbol, "Expr | int | Fraction"]) -> Expr:
    """Triangular substitution: rule images are themselves fully substituted.

    Raises ValueError when the rules are circular.
    """
    if not rules:
        return e
    rules = {s: e._coerce(v) for s, v in rules.items()}
    done: dict[JetSymbol, Expr] = {}
    for s in _topo(rules):
        v = rules[s]
        live = {t: done[t] for t in v.free_symbols() if t in done}
        done[s] = v.subs(live) if live else v
    return e.subs(done)


# ---------------------------------------------------------------------------
# solving

def solve_for(eq: Expr, s: JetSymbol):
    """Solve eq = 0 for s.

    Returns ``(solution, side_conditions, branch_note)``.  Linear equations
    a*s + b give -b/a with side condition a.  Quadratics must have the shape
    a*s^2 + c and return the positive root, recording the radicand.
    """
    reg = eq.reg
    if s not in eq.free_symbols():
        raise SolveError(f"{reg.name(s)} does not occur in {eq}")
    num = eq.numerator()
    cs = num.coeffs(s)
    deg = max(cs)
    zero = Expr.constant(reg, 0)
    if deg == 1:
        a = cs[1]
        b = cs.get(0, zero)
        if a.free_symbols() & {s}:
            raise SolveError("coefficient depends on the unknown")
        return -b / a, _sides(a), None
    if deg == 2:
        if 1 in cs and not cs[1].is_zero():
            raise SolveError(f"quadratic in {reg.name(s)} has a linear term")
        a = cs[2]
        c = cs.get(0, zero)
        rad = -c / a
        sol = reg.sqrt(rad)
        note = f"positive root chosen: {reg.name(s)} = +sqrt({rad}), requires {rad} > 0"
        return sol, _sides(a) + _sides(rad), note
    raise SolveError(f"degree {deg} in {reg.name(s)} is not supported")


def _sides(a: Expr) -> list[Expr]:
    if a.is_constant():
        return []
    return [a]


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


class _Parser:
    def __init__(self, reg: Registry, text: str):
        self.reg = reg
        self.text = text
        self.toks = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                rest = text[pos:]
                if rest.strip():
                    bad = pos + len(rest) - len(rest.lstrip())
                    raise ParseError(f"unexpected character {text[bad]!r}", bad, text)
                break
            tok = m.group(1) or m.group(2) or m.group(3)
            kind = "num" if m.group(1) else "id" if m.group(2) else "op"
            if tok == "**":
                tok = "^"
            self.toks.append((kind, tok, m.start(m.lastindex)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, tok=None):
        k, t, p = self.peek()
        if tok is not None and t != tok:
            raise ParseError(f"expected {tok!r}", p, self.text)
        if k is None:
            raise ParseError("unexpected end of input", p, self.text)
        self.i += 1
        return k, t, p

    def parse(self) -> Expr:
        if not self.toks:
            raise ParseError("empty expression", 0, self.text)
        e = self.sum()
        k, t, p = self.peek()
        if k is not None:
            raise ParseError(f"unexpected {t!r}", p, self.text)
        return e

    def sum(self):
        e = self.product()
        while self.peek()[1] in ("+", "-"):
            _, t, _ = self.take()
            r = self.product()
            e = e + r if t == "+" else e - r
        return e

    def product(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, t, p = self.take()
            r = self.unary()
            if t == "*":
                e = e * r
            else:
                if r.is_zero():
                    raise ParseError("division by zero", p, self.text)
                e = e / r
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, p = self.take()
            ex = self.unary()
            if not ex.is_constant() or ex.constant_value().denominator != 1:
                raise ParseError("exponent must be an integer", p, self.text)
            k = ex.constant_value().numerator
            if k < 0 and base.is_zero():
                raise ParseError("division by zero", p, self.text)
            return base ** k
        return base

    def atom(self):
        k, t, p = self.take()
        if k == "num":
            return Expr.constant(self.reg, int(t))
        if k == "id":
            if t == "sqrt" and self.peek()[1] == "(":
                self.take("(")
                e = self.sum()
                self.take(")")
                try:
                    return self.reg.sqrt(e)
                except SolveError as exc:
                    raise ParseError(str(exc), p, self.text) from None
            try:
                s = self.reg.resolve(t)
            except KeyError:
                raise ParseError(f"unknown identifier {t!r}", p, self.text) from None
            return self.reg.sym(s)
        if t == "(":
            e = self.sum()
            self.take(")")
            return e
        raise ParseError(f"unexpected {t!r}", p, self.text)


# ---------------------------------------------------------------------------
# printer

class _Printer:
    def __init__(self, reg: Registry, latex: bool = False):
        self.reg = reg
        self.latex = latex

    def symname(self, s: JetSymbol) -> str:
        reg = self.reg
        if not self.latex:
            return reg.name(s)
        if s in reg.radicands:
            return r"\sqrt{" + self.expr(reg.radicands[s]) + "}"
        nm = reg.name(s)
        head, _, suf = nm.partition("_")
        return head + ("_{" + suf + "}" if suf else "")

    def poly_terms(self, p, scale: Fraction):
        syms = self.reg._syms
        items = []
        for exps, c in p.terms():
            mono = sorted(((syms[i], k) for i, k in enumerate(exps) if k), key=lambda t: t[0].sort_key())
            deg = sum(k for _, k in mono)
            key = (-deg, tuple((s.sort_key(), -k) for s, k in mono))
            items.append((key, _to_fraction(c) * scale, mono))
        items.sort(key=lambda t: t[0])
        return [(c, mono) for _, c, mono in items]

    def mono(self, mono) -> str:
        parts = []
        for s, k in mono:
            nm = self.symname(s)
            if k == 1:
                parts.append(nm)
            elif self.latex:
                parts.append(f"{nm}^{{{k}}}")
            else:
                parts.append(f"{nm}^{k}")
        return (" " if self.latex else "*").join(parts)

    def poly(self, terms) -> str:
        out = []
        for j, (c, mono) in enumerate(terms):
            neg = c < 0
            a = abs(c)
            body = self.mono(mono)
            if a.denominator != 1:
                cs = f"{a.numerator}/{a.denominator}" if not self.latex else rf"\frac{{{a.numerator}}}{{{a.denominator}}}"
            else:
                cs = str(a.numerator)
            if not body:
                txt = cs
            elif a == 1:
                txt = body
            else:
                txt = cs + (" " if self.latex else "*") + body
            if j == 0:
                out.append(("-" if neg else "") + txt)
            else:
                out.append((" - " if neg else " + ") + txt)
        return "".join(out) if out else "0"

    def expr(self, e: Expr) -> str:
        if e.num.is_zero():
            return "0"
        # integer normalisation of the pair
        coeffs = [_to_fraction(c) for c in e.num.coeffs()] + [_to_fraction(c) for c in e.den.coeffs()]
        L = 1
        for c in coeffs:
            L = L * c.denominator // _gcd(L, c.denominator)
        G = 0
        for c in coeffs:
            G = _gcd(G, abs(c.numerator) * (L // c.denominator))
        scale = Fraction(L, G)
        dterms = self.poly_terms(e.den, scale)
        if dterms[0][0] < 0:
            scale = -scale
            dterms = [(-c, m) for c, m in dterms]
        nterms = self.poly_terms(e.num, scale)
        if len(dterms) == 1 and dterms[0][0] == 1 and not dterms[0][1]:
            return self.poly(nterms)
        ns, ds = self.poly(nterms), self.poly(dterms)
        if self.latex:
            return rf"\frac{{{ns}}}{{{ds}}}"
        if len(nterms) > 1:
            ns = f"({ns})"
        dsimple = len(dterms) == 1 and (
            (dterms[0][0] == 1 and len(dterms[0][1]) == 1) or not dterms[0][1])
        if not dsimple:
            ds = f"({ds})"
        return f"{ns}/{ds}"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a
