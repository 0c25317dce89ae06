"""Jet calculus: total derivatives, principal-derivative rules, generators.

Group jets X^i_K and fiber jets u^a_J are ranked by (order, component,
multi-index) with earlier base axes ranking higher inside one order.  The
leading jet of an equation is its highest-ranked jet; solving for it gives a
rule ``jet -> rhs`` with rhs in lower-ranked (parametric) jets.  Derivatives
of a principal jet are principal and are obtained by differentiating the rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .expr import (Expr, JetSymbol, Kind, Registry, SolveError, mi_add, mi_all,
                   mi_le, mi_sub, mi_unit, mi_zero, solve_for)

__all__ = [
    "JetContext", "JetRules", "PseudoGroup", "LinearizedGenerator",
    "total_derivative", "identity_values", "identity_linearize",
    "prolong_generator", "Generator", "jet_rank",
]


def jet_rank(s: JetSymbol):
    """Ranking key: larger means more leading."""
    return (s.order, s.comp, s.index)


class JetContext:
    """Base/fiber names, symbol registry, truncation order."""

    def __init__(self, base_vars: Iterable[str], fiber_vars: Iterable[str] = (),
                 max_order: int = 4, registry: Registry | None = None):
        self.reg = registry or Registry(base_vars, fiber_vars)
        self.base = self.reg.base
        self.fiber = self.reg.fiber
        self.n = self.reg.n
        self.max_order = max_order

    def raise_order(self, k: int) -> None:
        self.max_order = max(self.max_order, k)

    # convenience constructors
    def x(self, i: int) -> Expr:
        return self.reg.sym(self.reg.base_var(i))

    def u(self, a: int, J=None) -> Expr:
        return self.reg.sym(self.reg.fiber_jet(a, J))

    def X(self, i: int, K=None) -> Expr:
        return self.reg.sym(self.reg.group_jet(i, K))

    def lifted(self, a: int, J=None) -> Expr:
        return self.reg.sym(self.reg.lifted_sym(a, J))

    def parse(self, text: str) -> Expr:
        return self.reg.parse(text)

    def unit(self, i: int):
        return mi_unit(self.n, i)

    def zero(self):
        return mi_zero(self.n)


def total_derivative(e: Expr, i: int) -> Expr:
    """D_i e on the jet space of base, fiber and group jets (no rules applied)."""
    reg = e.reg
    images: dict[JetSymbol, Expr] = {}
    for s in e.jet_symbols():
        if s.kind == Kind.BASE:
            if s.comp == i:
                images[s] = Expr.constant(reg, 1)
        elif s.kind in (Kind.FIBER, Kind.GROUP):
            images[s] = reg.sym(s.shifted(i))
    if not images:
        return Expr.constant(reg, 0)
    return e.derivation(images)


class JetRules:
    """Principal-derivative rules for one kind of jet (FIBER or GROUP).

    ``rules[(comp, L)] = rhs`` says u^comp_L = rhs; every u^comp_K with
    K >= L is then principal and its value is the rule differentiated
    along K - L, with principal jets substituted throughout.
    """

    def __init__(self, reg: Registry, kind: Kind, other: "JetRules | None" = None):
        self.reg = reg
        self.kind = kind
        self.rules: dict[tuple[int, tuple], Expr] = {}
        self._cache: dict[JetSymbol, Expr | None] = {}
        self.other = other

    def copy(self) -> "JetRules":
        out = JetRules(self.reg, self.kind, self.other)
        out.rules = dict(self.rules)
        return out

    def add(self, s: JetSymbol, rhs: Expr) -> None:
        if s.kind != self.kind:
            raise ValueError("rule kind mismatch")
        self.rules[(s.comp, s.index)] = rhs
        self._cache.clear()

    def lhs_symbols(self) -> list[JetSymbol]:
        return [JetSymbol(self.kind, c, L) for (c, L) in self.rules]

    def base_rule(self, s: JetSymbol):
        """The rule lhs L <= s.index of lowest rank, or None."""
        best = None
        for (c, L) in self.rules:
            if c == s.comp and mi_le(L, s.index):
                key = (sum(L), L)
                if best is None or key < best[0]:
                    best = (key, L)
        return None if best is None else best[1]

    def is_principal(self, s: JetSymbol) -> bool:
        return s.kind == self.kind and self.base_rule(s) is not None

    def value(self, s: JetSymbol) -> Expr | None:
        if s.kind != self.kind:
            return None
        if s in self._cache:
            return self._cache[s]
        L = self.base_rule(s)
        if L is None:
            self._cache[s] = None
            return None
        if L == s.index:
            v = self.reduce(self.rules[(s.comp, L)])
        else:
            M = mi_sub(s.index, L)
            i = next(j for j, m in enumerate(M) if m)
            prev = JetSymbol(self.kind, s.comp, mi_sub(s.index, mi_unit(len(M), i)))
            v = self.D(self.value(prev), i)
        self._cache[s] = v
        return v

    def principal_in(self, e: Expr) -> dict[JetSymbol, Expr]:
        out = {}
        for s in e.jet_symbols():
            if s.kind == self.kind:
                v = self.value(s)
                if v is not None:
                    out[s] = v
        return out

    def reduce(self, e: Expr) -> Expr:
        """Substitute every principal jet (of both rule sets) by its value."""
        for _ in range(64):
            sub = self.principal_in(e)
            if self.other is not None:
                sub.update(self.other.principal_in(e))
            if not sub:
                return e
            e = e.subs(sub)
        raise RuntimeError("principal substitution did not terminate")

    def D(self, e: Expr, i: int) -> Expr:
        return self.reduce(total_derivative(e, i))


def _reducer(*rule_sets: JetRules | None):
    sets = [r for r in rule_sets if r is not None]

    def red(e: Expr) -> Expr:
        for _ in range(64):
            sub = {}
            for r in sets:
                sub.update(r.principal_in(e))
            if not sub:
                return e
            e = e.subs(sub)
        raise RuntimeError("principal substitution did not terminate")
    return red


class PseudoGroup:
    """Defining equations of a Lie pseudo-group, completed to formal integrability.

    The equations are turned into a rule set by repeatedly solving for the
    leading group jet and adding cross-derivative conditions between rules
    of the same component (the integrability conditions) up to ``order``.
    """

    def __init__(self, ctx: JetContext, defining: Iterable[Expr], order: int):
        self.ctx = ctx
        self.reg = ctx.reg
        self.defining = list(defining)
        self.order = order
        self.rules = JetRules(self.reg, Kind.GROUP)
        self.integrability: list[Expr] = []
        self.side_conditions: list[Expr] = []
        self._complete()

    @staticmethod
    def leading(e: Expr) -> JetSymbol | None:
        gs = [s for s in e.jet_symbols() if s.kind == Kind.GROUP]
        return max(gs, key=jet_rank) if gs else None

    def _solve(self, F: Expr):
        s = self.leading(F)
        if s is None:
            raise ValueError(f"defining equation {F} = 0 contains no group jets")
        try:
            sol, sides, note = solve_for(F, s)
        except SolveError as exc:
            raise ValueError(f"cannot solve {F} = 0 for its leading jet: {exc}") from None
        if note is not None:
            raise ValueError(f"leading jet of {F} occurs quadratically")
        return s, sol, sides

    def _complete(self):
        queue = list(self.defining)
        done_pairs: set = set()
        while True:
            while queue:
                F = self.rules.reduce(queue.pop(0))
                if F.is_zero():
                    continue
                s, sol, sides = self._solve(F)
                if s.order > self.order + 1:
                    continue
                # rules made redundant by the new one go back in the queue
                for t in list(self.rules.lhs_symbols()):
                    if t.comp == s.comp and mi_le(s.index, t.index):
                        rhs = self.rules.rules.pop((t.comp, t.index))
                        queue.append(self.reg.sym(t) - rhs)
                self.rules.add(s, sol)
                self.side_conditions.extend(sides)
                # keep right-hand sides reduced
                for key, rhs in list(self.rules.rules.items()):
                    self.rules.rules[key] = self.rules.reduce(rhs) if key != (s.comp, s.index) else rhs
                self.rules._cache.clear()
            new = []
            lhs = self.rules.lhs_symbols()
            for a in lhs:
                for b in lhs:
                    if a.comp != b.comp or not (a < b):
                        continue
                    M = tuple(max(p, q) for p, q in zip(a.index, b.index))
                    if sum(M) > self.order + 1:
                        continue
                    key = (a, b)
                    if key in done_pairs:
                        continue
                    done_pairs.add(key)
                    va = self._lift_rule(a, M)
                    vb = self._lift_rule(b, M)
                    d = self.rules.reduce(va - vb)
                    if not d.is_zero():
                        new.append(d)
                        self.integrability.append(d)
            if not new:
                break
            queue.extend(new)

    def _lift_rule(self, a: JetSymbol, M) -> Expr:
        """D_{M - a.index} of the rule for a."""
        e = self.rules.rules[(a.comp, a.index)]
        rest = mi_sub(M, a.index)
        for i, k in enumerate(rest):
            for _ in range(k):
                e = self.rules.D(e, i)
        return e

    def is_principal(self, s: JetSymbol) -> bool:
        return self.rules.is_principal(s)

    def value(self, s: JetSymbol):
        return self.rules.value(s)

    def parametric(self, order: int) -> list[JetSymbol]:
        """Parametric group jets of exactly this order, highest rank first."""
        out = []
        for i in range(self.ctx.n):
            for K in mi_all(self.ctx.n, order):
                s = self.reg.group_jet(i, K)
                if not self.rules.is_principal(s):
                    out.append(s)
        return sorted(out, key=jet_rank, reverse=True)


# ---------------------------------------------------------------------------
# linearized generators

class LinearizedGenerator:
    """sum_{i,K} c_{iK} zeta^i_K with coefficients in base and fiber jets."""

    __slots__ = ("reg", "coeffs")

    def __init__(self, reg: Registry, coeffs: Mapping[tuple[int, tuple], Expr] | None = None):
        self.reg = reg
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if not v.is_zero()}

    @staticmethod
    def zeta(reg: Registry, i: int, K) -> "LinearizedGenerator":
        return LinearizedGenerator(reg, {(i, tuple(K)): Expr.constant(reg, 1)})

    def __add__(self, other: "LinearizedGenerator") -> "LinearizedGenerator":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return LinearizedGenerator(self.reg, out)

    def __neg__(self):
        return LinearizedGenerator(self.reg, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Expr) -> "LinearizedGenerator":
        return LinearizedGenerator(self.reg, {k: v * c for k, v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def D(self, i: int, reduce=None) -> "LinearizedGenerator":
        """Total derivative: coefficients by D_i, zeta^j_K -> zeta^j_{K+e_i}."""
        n = self.reg.n
        out: dict = {}
        ei = mi_unit(n, i)
        for (j, K), c in self.coeffs.items():
            dc = total_derivative(c, i)
            if reduce is not None:
                dc = reduce(dc)
            if not dc.is_zero():
                out[(j, K)] = out[(j, K)] + dc if (j, K) in out else dc
            K2 = mi_add(K, ei)
            out[(j, K2)] = out[(j, K2)] + c if (j, K2) in out else c
        return LinearizedGenerator(self.reg, out)

    def map(self, f) -> "LinearizedGenerator":
        return LinearizedGenerator(self.reg, {k: f(v) for k, v in self.coeffs.items()})

    def __str__(self):
        reg = self.reg
        parts = []
        for (i, K), c in sorted(self.coeffs.items(), key=lambda t: (sum(t[0][1]), t[0][0], t[0][1])):
            parts.append(f"({c})*zeta^{reg.base[i]}_{reg.suffix(K) or '0'}")
        return " + ".join(parts) or "0"


def identity_values(reg: Registry, syms: Iterable[JetSymbol]) -> dict[JetSymbol, Expr]:
    """Values of group jets at the identity jet: X^i = x^i, X^i_j = delta, higher 0."""
    out = {}
    for s in syms:
        if s.kind != Kind.GROUP:
            continue
        if s.order == 0:
            out[s] = reg.sym(reg.base_var(s.comp))
        elif s.order == 1:
            out[s] = Expr.constant(reg, 1 if s.index[s.comp] == 1 else 0)
        else:
            out[s] = Expr.constant(reg, 0)
    return out


def identity_linearize(lifted: Expr) -> LinearizedGenerator:
    """sum (d lifted / d X^i_K)|_identity zeta^i_K.

    Differentiation happens before evaluation at the identity.
    """
    reg = lifted.reg
    syms = [s for s in lifted.jet_symbols() if s.kind == Kind.GROUP]
    ident = identity_values(reg, syms)
    coeffs = {}
    for s in syms:
        d = lifted.diff(s)
        if d.is_zero():
            continue
        try:
            v = d.subs(ident)
        except ZeroDivisionError:
            raise ValueError(f"identity evaluation of d/d{reg.name(s)} hits a zero denominator") from None
        if not v.is_zero():
            coeffs[(s.comp, s.index)] = v
    return LinearizedGenerator(reg, coeffs)


class Generator:
    """Prolonged infinitesimal generator of a horizontal action.

    ``phi0[a]`` is the zeroth-order fiber component; base components are
    xi^i = zeta^i unless ``xi`` gives them.  ``reduce`` is applied to every
    coefficient (fiber-jet relations).
    """

    def __init__(self, reg: Registry, phi0: Mapping[int, LinearizedGenerator], reduce=None,
                 xi: Mapping[int, LinearizedGenerator] | None = None):
        self.reg = reg
        self.n = reg.n
        self.reduce = reduce
        self._phi: dict[tuple[int, tuple], LinearizedGenerator] = {}
        for a, g in phi0.items():
            self._phi[(a, mi_zero(self.n))] = g.map(reduce) if reduce else g
        if xi is None:
            self._dxi = {(j, i): LinearizedGenerator.zeta(reg, j, mi_unit(self.n, i))
                         for j in range(self.n) for i in range(self.n)}
        else:
            z = LinearizedGenerator(reg)
            self._dxi = {(j, i): xi.get(j, z).D(i, reduce) for j in range(self.n) for i in range(self.n)}

    def phi(self, a: int, J) -> LinearizedGenerator:
        J = tuple(J)
        g = self._phi.get((a, J))
        if g is not None:
            return g
        i = max(k for k, m in enumerate(J) if m)
        Jp = mi_sub(J, mi_unit(self.n, i))
        prev = self.phi(a, Jp)
        g = prev.D(i, self.reduce)
        for j in range(self.n):
            uj = self.reg.sym(self.reg.fiber_jet(a, mi_add(Jp, mi_unit(self.n, j))))
            if self.reduce is not None:
                uj = self.reduce(uj)
            g = g - self._dxi[(j, i)].scale(uj)
        self._phi[(a, J)] = g
        return g


def prolong_generator(phi0: LinearizedGenerator, a: int, J, reduce=None,
                      xi: Mapping[int, LinearizedGenerator] | None = None) -> LinearizedGenerator:
    """phi^a_J from phi^a via phi_{J,i} = D_i phi_J - sum_j u_{J,j} D_i xi^j."""
    return Generator(phi0.reg, {a: phi0}, reduce, xi).phi(a, J)
