"""Partial moving frames.

A frame state records normalizations of lifted invariants, the group
parameters solved from them, the Maurer-Cartan relations implied by the
recurrence formula, side conditions and branch constraints.  From it we read
off structure equations, reduced Cartan characters and the involution test.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .expr import Expr, JetSymbol, Kind, SolveError, mi_all, mi_zero, solve_for
from .jet import JetContext, JetRules, PseudoGroup, identity_values, jet_rank
from .lift import LiftEngine
from .linalg import det, rank_expr, rank_fraction
from .mc import DX, MU, OMEGA, Cog, Form, RelationSet, d_cog, exterior_derivative, mc_dependencies

__all__ = ["FrameError", "Problem", "Normalization", "CartanReport", "FrameState"]


class FrameError(ValueError):
    """A frame operation whose preconditions fail."""


def _eq(reg, text) -> Expr:
    if isinstance(text, Expr):
        return text
    if "=" in text:
        lhs, rhs = text.split("=", 1)
        return reg.parse(lhs) - reg.parse(rhs)
    return reg.parse(text)


def _dedupe(exprs: Iterable[Expr]) -> list[Expr]:
    out, seen = [], set()
    for e in exprs:
        # e != 0 on the locus where its denominator is defined
        e = e.numerator()
        if e.is_constant():
            continue
        k = str(e)
        if k not in seen and str(-e) not in seen:
            seen.add(k)
            out.append(e)
    return out


class Problem:
    """An equivalence problem: pseudo-group, horizontal extended action, targets.

    ``action`` maps each fiber variable to its lifted formula, ``targets``
    maps base variables to the constants their lifts are normalized to.
    """

    def __init__(self, base: Iterable[str], fiber: Iterable[str], defining: Iterable = (),
                 action: Mapping[str, object] | None = None, jet_relations: Iterable = (),
                 group_order: int = 2, max_order: int = 4,
                 targets: Mapping[str, object] | None = None, name: str = "problem"):
        self.name = name
        self.ctx = JetContext(base, fiber, max_order)
        self.reg = reg = self.ctx.reg
        self.group_order = group_order
        self.defining = [_eq(reg, t) for t in defining]
        self.group = PseudoGroup(self.ctx, self.defining, group_order)
        action = dict(action or {})
        formulas = {}
        for a, v in enumerate(reg.fiber):
            if v not in action:
                raise ValueError(f"no extended action given for fiber variable {v}")
            formulas[a] = _eq(reg, action.pop(v))
        if action:
            raise ValueError(f"extended action for unknown variables: {sorted(action)}")
        self.targets: dict[int, Expr] = {}
        for k, v in (targets or {}).items():
            i = reg.base.index(k) if isinstance(k, str) else int(k)
            self.targets[i] = _eq(reg, v) if not isinstance(v, int) else reg.const(v)
        plain = LiftEngine(self.ctx, self.group, formulas)
        self._check_identity(plain)
        rules = JetRules(reg, Kind.FIBER)
        self.jet_relations = []
        for t in jet_relations:
            E = _eq(reg, t)
            lead, sol = self._solve_fiber(E)
            rules.add(lead, sol)
            self.jet_relations.append(E)
        self.engine = LiftEngine(self.ctx, self.group, formulas, rules)
        for E in self.jet_relations:
            if not self.invariance_defect(self.engine, E, rules).is_zero():
                raise ValueError(f"jet relation {E} = 0 is not invariant under the action")
        self._base_rel = None

    # -- checks ---------------------------------------------------------------
    def _check_identity(self, engine: LiftEngine) -> None:
        reg = self.reg
        for a, f in engine.formulas.items():
            syms = [s for s in f.jet_symbols() if s.kind == Kind.GROUP]
            v = f.subs(identity_values(reg, syms)) if syms else f
            if not (v - reg.sym(reg.fiber_jet(a))).is_zero():
                raise ValueError(f"action on {reg.fiber[a]} does not restrict to the identity: {v}")

    def _solve_fiber(self, E: Expr):
        fs = [s for s in E.jet_symbols() if s.kind == Kind.FIBER]
        if not fs:
            raise FrameError(f"{E} contains no fiber jets")
        lead = max(fs, key=jet_rank)
        try:
            sol, sides, note = solve_for(E, lead)
        except SolveError as exc:
            raise FrameError(f"cannot solve {E} = 0 for {self.reg.name(lead)}: {exc}") from None
        if note is not None:
            raise FrameError(f"leading jet of {E} occurs quadratically")
        return lead, sol

    def invariance_defect(self, engine: LiftEngine, E: Expr, rules: JetRules) -> Form:
        """v(E) on the locus cut out by ``rules``, modulo the group relations at the identity.

        Zero exactly when the relation E = 0 defines an invariant set.
        """
        reg = self.reg
        rel = mc_dependencies(self.group, {i: reg.sym(reg.base_var(i)) for i in range(reg.n)})
        g = engine.phi_of(E)
        f = Form(reg, 1, {(Cog.mu(i, K),): rules.reduce(c) for (i, K), c in g.coeffs.items()})
        return rel.rewrite(f).map(rules.reduce)

    @property
    def base_relations(self) -> RelationSet:
        if self._base_rel is None:
            self._base_rel = mc_dependencies(self.group, self.targets)
        return self._base_rel

    def initial_frame(self, name: str = "main") -> "FrameState":
        return FrameState(self, name)


@dataclass(frozen=True)
class Normalization:
    name: str
    expr: Expr                      # in lifted symbols
    value: Expr
    param: JetSymbol | None         # solved group jet (None if identically satisfied)
    mu: Cog | None                  # Maurer-Cartan form solved from the recurrence
    rule: tuple | None = None       # (lifted symbol, value) installed as known
    note: str | None = None


@dataclass
class CartanReport:
    characters: list[int]
    projected: list[Cog]            # free forms of the current level
    free_params: list[Cog]          # free forms of the next level
    level: int
    degree_count: int = 0
    free_count: int = 0
    involutive: bool | None = None
    confirmed: bool = True
    matrix: list = field(default_factory=list, repr=False)

    @property
    def degree_sum(self) -> int:
        return sum((k + 1) * s for k, s in enumerate(self.characters))


class FrameState:
    """An immutable-by-convention snapshot of a partial moving frame."""

    def __init__(self, problem: Problem, name: str = "main"):
        reg = problem.reg
        self.problem = problem
        self.reg = reg
        self.n = reg.n
        self.engine = problem.engine        # recurrence: invariant relations only
        self.evaluator = problem.engine     # explicit formulas (sections allowed)
        self.targets = dict(problem.targets)
        self.solved: dict[JetSymbol, Expr] = {reg.group_jet(i, mi_zero(self.n)): v
                                              for i, v in sorted(self.targets.items())}
        self.relations = mc_dependencies(problem.group, self.targets)
        self.known: dict[JetSymbol, Expr] = {}
        self.normalizations: list[Normalization] = []
        self.side_conditions: list[Expr] = []
        self.branch_constraints: list[Expr] = []
        self.sections: list[Expr] = []
        self.coframe: list[Cog] = [Cog.omega(i) for i in range(self.n)]
        self.level = 1
        self.invariants: dict[str, tuple[Expr, Expr]] = {}
        self.notes: list[str] = []
        self.name = name
        self.parent: FrameState | None = None
        self._dcache: dict = {}
        self._svals: dict = {}

    def _clone(self) -> "FrameState":
        st = object.__new__(FrameState)
        st.__dict__.update(self.__dict__)
        st.solved = dict(self.solved)
        st.relations = self.relations.copy()
        st.known = dict(self.known)
        st.normalizations = list(self.normalizations)
        st.side_conditions = list(self.side_conditions)
        st.branch_constraints = list(self.branch_constraints)
        st.sections = list(self.sections)
        st.coframe = list(self.coframe)
        st.invariants = dict(self.invariants)
        st.notes = list(self.notes)
        st.parent = self
        st._dcache = {}
        st._svals = {}
        return st

    # -- symbols ----------------------------------------------------------------
    @property
    def order(self) -> int:
        orders = [s.order for s in self.solved] + [c.order for c in self.coframe]
        return max([1, self.level] + orders)

    def parse_invariant(self, text: str) -> Expr:
        if text in self.invariants:
            return self.invariants[text][0]
        return self.engine.parse_invariant(text)

    def _known(self, e: Expr, known: Mapping[JetSymbol, Expr] | None = None) -> Expr:
        """Substitute known lifted values and lifted invariant jet relations."""
        known = self.known if known is None else known
        reg = self.reg
        for _ in range(32):
            rules = {}
            for s in e.free_symbols():
                if s.kind != Kind.LIFTED:
                    continue
                if s in known:
                    rules[s] = known[s]
                    continue
                fj = reg.fiber_jet(s.comp, s.index)
                if self.engine.fiber_rules.value(fj) is not None:
                    rules[s] = self.engine.lam(reg.sym(fj), self.targets)
            if not rules:
                break
            e = e.subs(rules)
        else:
            raise RuntimeError("known-value substitution did not terminate")
        if self.sections and any(s.kind == Kind.LIFTED for s in e.free_symbols()):
            # off an invariant locus the whole coefficient is evaluated explicitly
            key = str(e)
            if key not in self._svals:
                self._svals[key] = self.formula(e)
            e = self._svals[key]
        return e

    def free_forms(self, order: int) -> list[Cog]:
        """Maurer-Cartan forms of free group parameters of the given order."""
        out = []
        for s in self.problem.group.parametric(order):
            c = Cog.mu(s.comp, s.index)
            if not self.relations.is_dependent(c):
                out.append(c)
        return sorted(out, key=lambda c: c.key)

    def free_params(self, order: int) -> list[JetSymbol]:
        return [self.reg.group_jet(c.comp, c.index) for c in self.free_forms(order)]

    # -- differentials -----------------------------------------------------------
    def differential(self, e: Expr) -> Form:
        """Full differential of a lifted expression on the frame, modulo relations."""
        f = self.engine.full_differential(e, self.targets)
        f = self.relations.rewrite(f.map(self._known))
        return f.map(self._known)

    def dG(self, e: Expr) -> Form:
        """The Maurer-Cartan part of the differential on the frame."""
        return self.differential(e).drop(lambda c: c.kind == OMEGA)

    def recur(self, name: str) -> Form:
        return self.differential(self.parse_invariant(name))

    # -- explicit formulas -------------------------------------------------------
    def restrict(self, e: Expr) -> Expr:
        live = {s: v for s, v in self.solved.items() if s in e.free_symbols()}
        return e.subs(live) if live else e

    def shortcut_order(self, e: Expr) -> int | None:
        """Smallest order m from which group jets may be dropped when computing e.

        Dropping jets of order >= m is sound when e, restricted to the
        normalizations of parameters of order < m, has no Maurer-Cartan part
        of order >= m.  Returns None when no m below the top order qualifies.
        """
        base = self.problem.base_relations
        top = -1
        for s in e.free_symbols():
            if s.kind == Kind.LIFTED:
                f = base.rewrite(self.engine.dG_raw(s.comp, s.index, self.targets))
                top = max([top] + [c.order for c in f.cogs() if c.kind == MU])
        dG = self.engine.dG_of(e, self.targets)
        for m in range(1, top + 1):
            if self._shortcut_valid(dG, m):
                return m
        return None

    def _shortcut_valid(self, dG: Form, m: int) -> bool:
        # judged on the latest ancestor holding only normalizations of order < m;
        # a later low-order normalization may rely on a higher-order one
        low = lambda nz: nz.param is None or nz.param.order < m
        if not all(low(nz) for nz in self.normalizations):
            k = next(i for i, nz in enumerate(self.normalizations) if not low(nz))
            if not all(not low(nz) for nz in self.normalizations[k:] if nz.param is not None):
                return False
            st = self
            while st is not None and len(st.normalizations) > k:
                st = st.parent
            if st is None:
                return False
        else:
            st = self
        f = st.relations.rewrite(dG.map(st._known)).map(st._known)
        return not any(c.kind == MU and c.order >= m for c in f.cogs())

    def formula(self, e: Expr, shortcut: bool | None = None) -> Expr:
        """Explicit value of a lifted expression on the frame."""
        m = None
        lifted = [s for s in e.free_symbols() if s.kind == Kind.LIFTED]
        if shortcut is None:
            shortcut = len(lifted) > 1
        if shortcut:
            # soundness of the shortcut is decided on the invariant frame
            inv = self
            while inv.sections and inv.parent is not None:
                inv = inv.parent
            m = inv.shortcut_order(e)
        return self.restrict(self.evaluator.formula_of(e, zero_from=m))

    def invariant_value(self, name: str, shortcut: bool | None = None) -> Expr:
        return self.formula(self.parse_invariant(name), shortcut)

    def define_invariant(self, label: str, text: str | None = None,
                         shortcut: bool | None = None) -> "FrameState":
        e = self.engine.parse_invariant(text if text is not None else label)
        st = self._clone()
        st.invariants[label] = (e, st.formula(e, shortcut))
        return st

    # -- normalization -----------------------------------------------------------
    def normalize(self, name: str, value=None, param: str | JetSymbol | None = None,
                  shortcut: bool | None = None) -> "FrameState":
        """Normalize a lifted invariant to a constant and solve the Maurer-Cartan relation."""
        reg = self.reg
        e = self.parse_invariant(name)
        values = [reg.const(0), reg.const(1)] if value is None else [_eq(reg, value) if isinstance(value, str)
                                                                     else reg.const(value) if not isinstance(value, Expr)
                                                                     else value]
        dU = self.differential(e)
        cands = sorted((c for c in dU.cogs() if c.kind == MU), key=lambda c: (c.order, c.comp, c.index),
                       reverse=True)
        if param is not None:
            s = reg.resolve(param) if isinstance(param, str) else param
            if s.kind != Kind.GROUP:
                raise FrameError(f"{param} is not a group parameter")
            c = Cog.mu(s.comp, s.index)
            if c not in cands:
                raise FrameError(f"the Maurer-Cartan part of {name} does not contain {c.name(reg)}")
            cands = [c]
        formula = self.formula(e, shortcut)
        last_err = None
        for val in values:
            eq = formula - val
            if eq.is_zero():
                return self._record_trivial(name, e, val)
            rule = self._lifted_rule(e, val)
            known = dict(self.known)
            if rule is not None:
                known[rule[0]] = rule[1]
            for c in cands:
                s = reg.group_jet(c.comp, c.index)
                if s not in eq.free_symbols():
                    continue
                if self._known(dU.coeff(c), known).is_zero():
                    # the form drops out once the invariant takes this value
                    continue
                try:
                    sol, sides, note = solve_for(eq, s)
                except SolveError as exc:
                    last_err = exc
                    continue
                return self._install(name, e, val, s, c, sol, sides, note)
        if not cands:
            raise FrameError(f"{name}: no unresolved Maurer-Cartan form in its differential; "
                             "it is already determined on this frame")
        raise FrameError(f"{name}: no solvable group parameter" + (f" ({last_err})" if last_err else ""))

    def _lifted_rule(self, e: Expr, val: Expr):
        lifted = [s for s in e.free_symbols() if s.kind == Kind.LIFTED]
        if not lifted:
            return None
        lead = max(lifted, key=lambda s: (s.order, s.comp, s.index))
        sol, _, _ = solve_for(e - val, lead)
        return lead, sol

    def _record_trivial(self, name, e, val) -> "FrameState":
        st = self._clone()
        rule = st._lifted_rule(e, val)
        if rule is not None:
            st.known[rule[0]] = rule[1]
            st.relations.map_coeffs(st._known)
        st.normalizations.append(Normalization(name, e, val, None, None, rule,
                                               "identically satisfied on the frame"))
        return st

    def _install(self, name, e, val, s, c, sol, sides, note) -> "FrameState":
        reg = self.reg
        st = self._clone()
        for k in list(st.solved):
            if s in st.solved[k].free_symbols():
                st.solved[k] = st.solved[k].subs({s: sol})
        st.solved[s] = sol
        st.side_conditions = _dedupe(st.side_conditions + sides)
        if note:
            st.notes.append(note)
        rule = st._lifted_rule(e, val)
        st.known[rule[0]] = rule[1]
        st.relations.map_coeffs(st._known)
        dU = st.differential(e)
        a = dU.coeff(c)
        if a.is_zero():
            raise FrameError(f"{name}: coefficient of {c.name(reg)} vanishes on the frame")
        rest = dU - Form.cog(reg, c, a)
        st.relations.add(c, rest.scale(-a.inv()))
        st.relations.map_coeffs(st._known)
        st.normalizations.append(Normalization(name, e, val, s, c, rule, note))
        return st

    def solve_mc(self, name: str) -> "FrameState":
        """Maurer-Cartan relation of an invariant assumed normalized (explicit solve skipped)."""
        reg = self.reg
        e = self.parse_invariant(name)
        st = self._clone()
        if not any(nz.name == name for nz in st.normalizations):
            raise FrameError(f"{name} has not been normalized")
        dU = st.differential(e)
        mus = sorted((c for c in dU.cogs() if c.kind == MU), key=lambda c: (c.order, c.comp, c.index))
        if not mus:
            return st
        c = mus[-1]
        a = dU.coeff(c)
        st.relations.add(c, (dU - Form.cog(reg, c, a)).scale(-a.inv()))
        st.relations.map_coeffs(st._known)
        return st

    # -- structure -----------------------------------------------------------------
    def d(self, c: Cog) -> Form:
        if c not in self._dcache:
            f = d_cog(self.reg, c, self.relations)
            self._dcache[c] = self.relations.rewrite(f.map(self._known)).map(self._known)
        return self._dcache[c]

    def structure(self) -> list[tuple[Cog, Form]]:
        return [(c, self.d(c)) for c in self.coframe]

    def torsion(self) -> list[tuple[Cog, tuple[Cog, Cog], Expr]]:
        """Non-constant coefficients of purely horizontal two-forms."""
        out = []
        for c, f in self.structure():
            for k, v in f.sorted_terms():
                if all(q.kind == OMEGA for q in k) and not v.is_constant():
                    out.append((c, k, v))
        return out

    def coframe_forms(self) -> list[tuple[Cog, Form]]:
        """omega^i = sum_j X^i_j dx^j restricted to the frame."""
        reg = self.reg
        jac = self.evaluator.jacobian
        out = []
        for i in range(self.n):
            terms = {}
            for j in range(self.n):
                v = self.restrict(jac.entries[i][j])
                if not v.is_zero():
                    terms[(Cog.dx(j),)] = v
            out.append((Cog.omega(i), Form(reg, 1, terms)))
        return out

    def d_coefficient(self, e: Expr) -> Form:
        """Differential of a coefficient (lifted symbols and lifted base coordinates)."""
        reg = self.reg
        out = Form(reg, 1)
        for s in e.free_symbols():
            if s.kind == Kind.LIFTED:
                ds = self.differential(reg.sym(s))
            elif s.kind == Kind.GROUP and s.order == 0:
                ds = self.relations.rewrite(Form.cog(reg, Cog.omega(s.comp)) + Form.cog(reg, Cog.mu(s.comp, s.index)))
            elif s.kind == Kind.CONST:
                continue
            else:
                raise FrameError(f"coefficient depends on {reg.name(s)}")
            out = out + ds.scale(e.diff(s))
        return out.map(self._known)

    def d2(self, f: Form) -> Form:
        """d of a two-form on the frame (zero for consistent structure equations)."""
        out = exterior_derivative(f, self.d_coefficient, self.relations, dcog=self.d)
        return self.relations.rewrite(out.map(self._known)).map(self._known)

    # -- Cartan characters ---------------------------------------------------------
    def _contraction_tensor(self):
        eqs = self.structure()
        pis = [c for c in self.free_forms(self.level) if c not in self.coframe]
        C = [[[f.coeff(Cog.omega(j), p) for p in pis] for j in range(self.n)] for _, f in eqs]
        return eqs, pis, C

    def _stacked(self, C, k, vs):
        rows = []
        for t in range(k):
            for a in range(len(C)):
                row = []
                for r in range(len(C[a][0]) if C and C[a] else 0):
                    acc = None
                    for j in range(self.n):
                        term = C[a][j][r] * vs[t][j]
                        acc = term if acc is None else acc + term
                    row.append(acc)
                rows.append(row)
        return rows

    def cartan_characters(self, trials: int = 3, seed: int = 20240601, confirm: bool = True) -> CartanReport:
        reg = self.reg
        eqs, pis, C = self._contraction_tensor()
        nxt = [c for c in self.free_forms(self.level + 1) if c not in self.coframe]
        n = self.n
        rep = CartanReport([0] * n, pis, nxt, self.level, matrix=C)
        if not pis:
            return rep
        syms = set()
        for blk in C:
            for row in blk:
                for e in row:
                    syms |= e.free_symbols()
        syms = sorted(syms, key=lambda s: s.sort_key())
        rng = random.Random(seed)
        best = [0] * (n + 1)
        best_pt = None
        for _ in range(trials):
            for _attempt in range(20):
                vals = {s: Fraction(rng.randint(-97, 97), rng.randint(1, 29)) for s in syms}
                vs = [[Fraction(rng.randint(-97, 97), rng.randint(1, 29)) for _ in range(n)] for _ in range(n)]
                try:
                    num = [[[e.evaluate(vals) for e in row] for row in blk] for blk in C]
                except ZeroDivisionError:
                    continue
                ranks = [0] + [rank_fraction(self._stacked(num, k, vs)) for k in range(1, n + 1)]
                if ranks > best:
                    best, best_pt = ranks, (vals, vs)
                break
        if confirm:
            rep.confirmed = self._confirm(C, best)
        rep.characters = [best[k] - best[k - 1] for k in range(1, n + 1)]
        return rep

    def generic_vectors(self, k: int) -> list[list[Expr]]:
        reg = self.reg
        return [[reg.sym(reg.constant(f"_v{t}_{j}")) for j in range(self.n)] for t in range(k)]

    def _confirm(self, C, ranks) -> bool:
        """Exact check that each stacked matrix has the claimed generic rank."""
        for k in range(1, self.n + 1):
            M = self._stacked(C, k, self.generic_vectors(k))
            if rank_expr(M) != ranks[k]:
                return False
        return True

    def involution_test(self, **kw) -> CartanReport:
        rep = self.cartan_characters(**kw)
        rep.degree_count = rep.degree_sum
        rep.free_count = len(rep.free_params)
        rep.involutive = rep.free_count == rep.degree_count
        return rep

    def prolong(self) -> "FrameState":
        """Adjoin the free Maurer-Cartan forms of the current level to the coframe."""
        st = self._clone()
        new = [c for c in self.free_forms(self.level) if c not in self.coframe]
        st.coframe = self.coframe + new
        st.level = self.level + 1
        return st

    # -- branching -----------------------------------------------------------------
    def branch(self, expr) -> tuple["FrameState | None", "FrameState | None"]:
        """(nonzero branch, zero branch) for a fiber-jet expression."""
        reg = self.reg
        E = _eq(reg, expr)
        if E.is_zero():
            return None, self._clone_named("zero")
        if E.is_constant():
            return self._clone_named("nonzero"), None
        nz = self._clone_named("nonzero")
        nz.side_conditions = _dedupe(nz.side_conditions + [E])
        z = self._clone_named("zero")
        lead, sol = self.problem._solve_fiber(E)
        _, sides, _ = solve_for(E, lead)
        rules = self.engine.fiber_rules.copy()
        rules.add(lead, sol)
        invariant = not self.sections and self.problem.invariance_defect(self.engine, E, rules).is_zero()
        if invariant:
            z.engine = self.engine.with_fiber_rules(rules)
            z.evaluator = z.engine
            z.branch_constraints.append(E)
        else:
            erules = self.evaluator.fiber_rules.copy()
            erules.add(lead, sol)
            z.evaluator = self.evaluator.with_fiber_rules(erules, invariant_rules=False)
            z.sections.append(E)
            z.notes.append(f"{E} = 0 is not an invariant condition; used for evaluation only")
        red = z.evaluator.reduce
        z.solved = {k: red(v) for k, v in z.solved.items()}
        for k, v in list(z.invariants.items()):
            z.invariants[k] = (v[0], z.formula(v[0]))
        z.side_conditions = _dedupe([red(c) for c in z.side_conditions] + sides)
        if invariant:
            z.relations.map_coeffs(z._known)
        # on sections relations stay in lifted symbols and are evaluated on use
        return nz, z

    def _clone_named(self, label: str) -> "FrameState":
        st = self._clone()
        st.name = f"{self.name}/{label}"
        return st

    # -- inspection ----------------------------------------------------------------
    def suggest(self, max_order: int = 1) -> list[tuple[str, Cog]]:
        """Lifted invariants whose Maurer-Cartan part contains an unresolved form."""
        reg = self.reg
        out = []
        done = {nz.name for nz in self.normalizations}
        for a in range(len(reg.fiber)):
            for k in range(max_order + 1):
                for J in mi_all(self.n, k):
                    s = reg.lifted_sym(a, J)
                    name = reg.name(s)
                    if s in self.known or name in done:
                        continue
                    if self.engine.fiber_rules.value(reg.fiber_jet(a, J)) is not None:
                        continue
                    f = self.dG(reg.sym(s))
                    mus = sorted((c for c in f.cogs() if c.kind == MU), key=lambda c: (c.order, c.comp, c.index))
                    if mus:
                        out.append((name, mus[-1]))
        return out

    def soundness_defects(self) -> list[tuple[str, Expr]]:
        """Normalized invariants whose restricted formula differs from their constant."""
        out = []
        for nz in self.normalizations:
            v = self.formula(nz.expr) - nz.value
            if not v.is_zero():
                out.append((nz.name, v))
        return out

    def all_relations(self, order: int | None = None):
        order = self.order if order is None else order
        for k in range(order + 1):
            for i in range(self.n):
                for K in mi_all(self.n, k):
                    self.relations.is_dependent(Cog.mu(i, K))
        return self.relations.relations(order)

    # -- reports ---------------------------------------------------------------------
    def report(self, style: str = "machine", cartan: bool = True, solved: bool = True) -> str:
        from .report import render
        return render(self, style, cartan=cartan, solved=solved)
