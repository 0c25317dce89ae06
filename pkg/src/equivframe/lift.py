"""Lifted invariants of a horizontal extended action and the recurrence formula.

A lifted invariant U^a_J is the target jet coordinate written in source
jets and group jets.  Its invariant derivatives follow from
D_j U_J = sum_i X^i_j U_{J,i}, and its Maurer-Cartan part is the prolonged
infinitesimal generator evaluated at the identity and lifted:

    d U_J = sum_i U_{J+i} omega^i + theta_J + sum lambda(phi_J coefficients) mu^i_K.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .expr import Expr, JetSymbol, Kind, Registry, mi_add, mi_sub, mi_unit, mi_zero
from .jet import (Generator, JetContext, JetRules, LinearizedGenerator, PseudoGroup,
                  _reducer, identity_linearize, identity_values, total_derivative)
from .linalg import inverse
from .mc import Cog, Form

__all__ = ["LiftedInvariant", "HorizontalJacobian", "LiftEngine", "top_order"]


@dataclass
class LiftedInvariant:
    """A named invariant: a lifted jet U^a_J or a linear combination of them."""

    name: str
    expr: Expr                      # in Lifted symbols
    formula: Expr                   # in source jets and group jets
    frame_value: Expr | None = None

    @property
    def symbols(self) -> list[JetSymbol]:
        return sorted((s for s in self.expr.free_symbols() if s.kind == Kind.LIFTED),
                      key=lambda s: s.sort_key())


class HorizontalJacobian:
    """Matrix X^i_j of total derivatives of the target coordinates, with inverse."""

    def __init__(self, reg: Registry, reduce):
        n = reg.n
        self.entries = [[reduce(reg.sym(reg.group_jet(i, mi_unit(n, j)))) for j in range(n)]
                        for i in range(n)]
        self.inverse, self.det = inverse(self.entries)
        self.side_condition = self.det


def top_order(e: Expr) -> int:
    orders = [s.order for s in e.jet_symbols() if s.kind == Kind.GROUP]
    return max(orders) if orders else -1


class LiftEngine:
    """Lifted formulas, invariant prolongation and recurrence for one action.

    ``formulas[a]`` is the lifted fiber coordinate U^a in group jets, base
    coordinates and u^a; ``fiber_rules`` holds principal fiber-jet relations
    (jet relations and branch constraints).
    """

    def __init__(self, ctx: JetContext, group: PseudoGroup, formulas: Mapping[int, Expr],
                 fiber_rules: JetRules | None = None, invariant_rules: bool = True):
        self.ctx = ctx
        # invariant rules may be lifted directly; other restrictions are prolonged
        self.invariant_rules = invariant_rules
        self.reg = ctx.reg
        self.n = ctx.n
        self.group = group
        self.fiber_rules = fiber_rules or JetRules(self.reg, Kind.FIBER)
        self.reduce = _reducer(group.rules, self.fiber_rules)
        self.raw_formulas = dict(formulas)
        self.formulas = {a: self.reduce(f) for a, f in formulas.items()}
        self._cache: dict[tuple, Expr] = {}
        self._jac: HorizontalJacobian | None = None
        self._gen: Generator | None = None
        self._fiber_reduce = _reducer(self.fiber_rules)

    def with_fiber_rules(self, rules: JetRules, invariant_rules: bool = True) -> "LiftEngine":
        return LiftEngine(self.ctx, self.group, self.raw_formulas, rules, invariant_rules)

    # -- formulas -------------------------------------------------------------
    @property
    def jacobian(self) -> HorizontalJacobian:
        if self._jac is None:
            self._jac = HorizontalJacobian(self.reg, self.reduce)
        return self._jac

    def D(self, e: Expr, j: int) -> Expr:
        return self.reduce(total_derivative(e, j))

    def lifted_prolong(self, formula: Expr, i: int, zero_from: int | None = None) -> Expr:
        """Invariant derivative: sum_j (X^-1)^j_i D_j(formula)."""
        inv = self.jacobian.inverse
        out = Expr.constant(self.reg, 0)
        for j in range(self.n):
            c = inv[j][i]
            if c.is_zero():
                continue
            d = self.D(formula, j)
            if zero_from is not None:
                d = self.zero_top(d, zero_from)
            out = out + c * d
        if zero_from is not None:
            out = self.zero_top(out, zero_from)
        return out

    def zero_top(self, e: Expr, m: int) -> Expr:
        rules = {s: Expr.constant(self.reg, 0) for s in e.jet_symbols()
                 if s.kind == Kind.GROUP and s.order >= m}
        return e.subs(rules) if rules else e

    def formula(self, a: int, J=None, zero_from: int | None = None) -> Expr:
        """Lifted formula of U^a_J (group jets of order >= zero_from dropped)."""
        J = tuple(J) if J is not None else mi_zero(self.n)
        key = (a, J, zero_from)
        if key in self._cache:
            return self._cache[key]
        s = self.reg.fiber_jet(a, J)
        rule = self.fiber_rules.value(s) if self.invariant_rules else None
        if rule is not None:
            # a principal fiber jet of an invariant relation: lift its value
            v = self.lift(rule, zero_from)
        elif sum(J) == 0:
            v = self.formulas[a]
            if zero_from is not None:
                v = self.zero_top(v, zero_from)
        else:
            i = self._parent_axis(a, J)
            parent = self.formula(a, mi_sub(J, mi_unit(self.n, i)), zero_from)
            v = self.lifted_prolong(parent, i, zero_from)
        self._cache[key] = v
        return v

    def _parent_axis(self, a: int, J) -> int:
        # prefer a parent that is already cached, else the last axis present
        cands = [i for i, k in enumerate(J) if k]
        for i in reversed(cands):
            if (a, mi_sub(J, mi_unit(self.n, i)), None) in self._cache:
                return i
        return cands[-1]

    def lift(self, e: Expr, zero_from: int | None = None) -> Expr:
        """Replace x^i by X^i and u^a_J by the lifted formulas."""
        images = {}
        for s in e.jet_symbols():
            if s.kind == Kind.BASE:
                images[s] = self.reg.sym(self.reg.group_jet(s.comp, mi_zero(self.n)))
            elif s.kind == Kind.FIBER:
                images[s] = self.formula(s.comp, s.index, zero_from)
        return e.subs(images) if images else e

    # -- invariants by name ---------------------------------------------------
    def parse_invariant(self, name: str) -> Expr:
        e = self.reg.parse(name)
        bad = [s for s in e.free_symbols() if s.kind not in (Kind.LIFTED, Kind.CONST)]
        if bad:
            raise KeyError(f"{name}: not an expression in lifted invariants")
        return e

    def invariant(self, name: str, zero_from: int | None = None) -> LiftedInvariant:
        e = self.parse_invariant(name)
        return LiftedInvariant(name, e, self.formula_of(e, zero_from))

    def formula_of(self, e: Expr, zero_from: int | None = None) -> Expr:
        images = {s: self.formula(s.comp, s.index, zero_from)
                  for s in e.free_symbols() if s.kind == Kind.LIFTED}
        out = e.subs(images)
        if zero_from is not None:
            out = self.zero_top(out, zero_from)
        return out

    # -- recurrence -----------------------------------------------------------
    @property
    def generator(self) -> Generator:
        if self._gen is None:
            phi0 = {a: identity_linearize(f) for a, f in self.formulas.items()}
            self._gen = Generator(self.reg, phi0, self._fiber_reduce)
        return self._gen

    def phi(self, a: int, J) -> LinearizedGenerator:
        J = tuple(J)
        s = self.reg.fiber_jet(a, J)
        rule = self.fiber_rules.value(s)
        if rule is not None:
            return self.phi_of(rule)
        return self.generator.phi(a, J)

    def phi_of(self, e: Expr) -> LinearizedGenerator:
        """Infinitesimal action on a function of base and fiber jets."""
        out = LinearizedGenerator(self.reg)
        for s in e.jet_symbols():
            if s.kind == Kind.BASE:
                g = LinearizedGenerator.zeta(self.reg, s.comp, mi_zero(self.n))
            elif s.kind == Kind.FIBER:
                g = self.phi(s.comp, s.index)
            else:
                continue
            out = out + g.scale(e.diff(s))
        return out

    def lam(self, e: Expr, target: Mapping[int, Expr] | None = None) -> Expr:
        """lambda on base/fiber expressions: x -> target, u_J -> U_J symbols."""
        e = self._fiber_reduce(e)
        images = {}
        for s in e.jet_symbols():
            if s.kind == Kind.BASE:
                if target is not None and s.comp in target:
                    images[s] = target[s.comp]
                else:
                    images[s] = self.reg.sym(self.reg.group_jet(s.comp, mi_zero(self.n)))
            elif s.kind == Kind.FIBER:
                images[s] = self.reg.sym(self.reg.lifted_sym(s.comp, s.index))
        return e.subs(images) if images else e

    def lam_symbol(self, s: JetSymbol) -> Expr:
        """lambda(u^a_J) with principal fiber jets replaced by their values."""
        return self.lam(self.reg.sym(self.reg.fiber_jet(s.comp, s.index)))

    def dG_raw(self, a: int, J, target: Mapping[int, Expr] | None = None) -> Form:
        """sum lambda(coefficient of zeta^i_K in phi^a_J) mu^i_K, not yet reduced."""
        g = self.phi(a, J)
        terms = {}
        for (i, K), c in g.coeffs.items():
            v = self.lam(c, target)
            if not v.is_zero():
                terms[(Cog.mu(i, K),)] = v
        return Form(self.reg, 1, terms)

    def dG_of(self, e: Expr, target: Mapping[int, Expr] | None = None) -> Form:
        """d_G of an expression in lifted symbols (chain rule)."""
        out = Form(self.reg, 1)
        for s in e.free_symbols():
            if s.kind != Kind.LIFTED:
                continue
            c = e.diff(s)
            out = out + self.dG_raw(s.comp, s.index, target).scale(c)
        return out

    def horizontal_of(self, e: Expr, target: Mapping[int, Expr] | None = None) -> Form:
        """sum_i (invariant derivative of e along omega^i) omega^i."""
        out = Form(self.reg, 1)
        for s in e.free_symbols():
            if s.kind != Kind.LIFTED:
                continue
            c = e.diff(s)
            for i in range(self.n):
                sh = self.lam(self.reg.sym(self.reg.fiber_jet(s.comp, mi_add(s.index, mi_unit(self.n, i)))),
                              target)
                out = out + Form.cog(self.reg, Cog.omega(i), sh * c)
        return out

    def full_differential(self, e: Expr, target: Mapping[int, Expr] | None = None,
                          sections: bool = True) -> Form:
        """Horizontal part + d_G part (+ theta terms unless restricted to sections)."""
        f = self.horizontal_of(e, target) + self.dG_of(e, target)
        if not sections:
            for s in e.free_symbols():
                if s.kind == Kind.LIFTED:
                    f = f + Form.cog(self.reg, Cog.theta(s.comp, s.index), e.diff(s))
        return f
