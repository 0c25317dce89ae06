"""Maurer-Cartan relations, structure equations and exterior calculus."""

from __future__ import annotations

import itertools
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivframe.cli import load
from equivframe.expr import mi_all, solve_for
from equivframe.frame import Problem
from equivframe.jet import JetContext, PseudoGroup
from equivframe.mc import (Cog, Form, d_cog, d_omega, exterior_derivative, mc_dependencies, parse_form,
                           prolong_defining, structure_equation)
from equivframe.problems import spec_path

OM, MU = Cog.omega, Cog.mu


def F(reg, text) -> Form:
    return parse_form(reg, text)


# -- dependencies ----------------------------------------------------------------

def test_point_pseudogroup_relations():
    ctx = JetContext(["x", "u", "p"], ["q"], 3)
    reg = ctx.reg
    group = PseudoGroup(ctx, [reg.parse("X_p"), reg.parse("U_p"),
                              reg.parse("P*(X_x + p*X_u) - U_x - p*U_u")], 2)
    rel = mc_dependencies(group)
    assert rel.rewrite(F(reg, "mu^x_p")).is_zero()
    assert rel.rewrite(F(reg, "mu^u_p")).is_zero()
    want = F(reg, "mu^u_x + P*mu^u_u - P*mu^x_x - P^2*mu^x_u")
    assert (rel.rewrite(F(reg, "mu^p")) - rel.rewrite(want)).is_zero()


def test_contact_relations_at_the_target():
    _, fr = load(spec_path("divergence"))
    rel, reg = fr.relations, fr.reg
    for lhs, rhs in [("mu^p_p", "mu^u_u - mu^x_x"), ("mu^u_x", "-omega^p"), ("mu^p_pp", "-2*mu^x_u")]:
        assert (rel.rewrite(F(reg, lhs)) - rel.rewrite(F(reg, rhs))).is_zero(), lhs


def test_full_diffeomorphism_group_has_no_relations():
    ctx = JetContext(["x", "u"], ["v"], 3)
    rel = mc_dependencies(PseudoGroup(ctx, [], 2))
    f = F(ctx.reg, "mu^x_xu + 2*mu^u + omega^x")
    assert rel.rewrite(f) == f
    assert not rel.relations(2)


def test_relation_rewrite_is_idempotent():
    _, fr = load(spec_path("point"))
    rel, reg = fr.relations, fr.reg
    cogs = [MU(i, K) for i in range(3) for k in range(3) for K in mi_all(3, k) if sum(K) == k]
    f = Form(reg, 1, {(c,): reg.const(k + 1) for k, c in enumerate(cogs)})
    once = rel.rewrite(f)
    assert rel.rewrite(once) == once


# -- prolongation of defining equations ---------------------------------------------

def test_prolong_point_relation_in_p():
    ctx = JetContext(["x", "u", "p"], ["q"], 3)
    reg = ctx.reg
    E = reg.parse("P*(X_x + p*X_u) - U_x - p*U_u")
    out = prolong_defining([E], 1)
    flat = {reg.resolve(n): 0 for n in ["U_xp", "U_up", "X_xp", "X_up"]}
    Dp = [e.subs(flat) for e in out if reg.resolve("P_p") in e.free_symbols()]
    assert len(Dp) == 1
    sol, _, _ = solve_for(Dp[0], reg.resolve("P_p"))
    assert (sol - reg.parse("(U_u - P*X_u)/(X_x + p*X_u)")).is_zero()


def test_prolong_trivial_cases():
    ctx = JetContext(["x", "y"], ["u"], 3)
    reg = ctx.reg
    out = prolong_defining([reg.parse("X_y")], 1)
    assert {str(e) for e in out} == {"X_y", "X_xy", "X_yy"}
    assert prolong_defining([reg.parse("X_y")], 0) == [reg.parse("X_y")]


# -- structure equations ----------------------------------------------------------------

def test_structure_equation_of_mu_i():
    ctx = JetContext(["x", "u"], ["v"], 3)
    reg = ctx.reg
    assert structure_equation(reg, 0, (0, 0)) == F(reg, "omega^x&mu^x_x + omega^u&mu^x_u")
    # with mu^i = -omega^i the coframe satisfies d omega^i = -omega^j & mu^i_j (see ledger)
    assert d_omega(reg, 0) == -structure_equation(reg, 0, (0, 0))


def test_point_structure_of_omega_x_on_first_frame(point):
    fr = point.session.state_after("structeq")
    reg = fr.reg
    assert fr.d(OM(0)) == -F(reg, "omega^x&mu^x_x + omega^u&mu^x_u")


@pytest.mark.xfail(strict=True, reason="printed structure equations use the opposite sign convention")
def test_point_structure_of_omega_x_printed(point):
    fr = point.session.state_after("structeq")
    assert fr.d(OM(0)) == F(fr.reg, "omega^x&mu^x_x + omega^u&mu^x_u")


def test_divergence_structure_of_mu_u_u():
    _, fr = load(spec_path("divergence"))
    reg = fr.reg
    want = fr.relations.rewrite(F(reg, "omega^x&mu^u_xu + omega^u&mu^u_uu + omega^p&mu^u_up + mu^u_x&mu^x_u"))
    assert structure_equation(reg, 1, (0, 1, 0), fr.relations) == want


def _brute_binomials(K) -> Counter:
    """Leibniz expansion of D^K on a product, counting the part M taken by the second factor."""
    word = [i for i, k in enumerate(K) for _ in range(k)]
    out = Counter()
    for r in range(len(word) + 1):
        for S in itertools.combinations(range(len(word)), r):
            M = [0] * len(K)
            for s in S:
                M[word[s]] += 1
            out[tuple(M)] += 1
    return out


@pytest.mark.parametrize("K", [K for k in range(1, 4) for K in mi_all(2, k) if sum(K) == k])
def test_structure_binomials_match_leibniz(K):
    ctx = JetContext(["x", "u"], ["v"], 5)
    reg = ctx.reg
    f = structure_equation(reg, 0, K)
    counts = _brute_binomials(K)
    want = Form(reg, 2, {(OM(j), MU(0, tuple(a + (b == j) for b, a in enumerate(K)))): reg.const(1)
                         for j in range(2)})
    for M, c in counts.items():
        if sum(M) == 0:
            continue
        L = tuple(k - m for k, m in zip(K, M))
        for j in range(2):
            Lj = tuple(a + (b == j) for b, a in enumerate(L))
            want = want + Form(reg, 2, {(MU(0, Lj), MU(j, M)): reg.const(c)})
    assert f == want


# -- exterior algebra ------------------------------------------------------------------------

REG2 = JetContext(["x", "u"], ["v"], 3).reg
COGS = [OM(0), OM(1)] + [MU(i, K) for i in range(2) for k in range(3) for K in mi_all(2, k) if sum(K) == k]


@st.composite
def forms(draw):
    grade = draw(st.integers(0, 3))
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        k = tuple(draw(st.lists(st.sampled_from(COGS), min_size=grade, max_size=grade, unique=True)))
        terms[k] = REG2.parse(draw(st.sampled_from(["1", "-2", "V", "V_X + 1", "3*V_U*V"])))
    return Form(REG2, grade, terms)


@settings(max_examples=80, deadline=None, derandomize=True, database=None)
@given(forms(), forms())
def test_wedge_antisymmetry(a, b):
    sign = -1 if (a.grade * b.grade) % 2 else 1
    assert a.wedge(b) == b.wedge(a).scale(sign)


def test_d_squared_on_frames(medolaghi, medolaghi_zero):
    fr = medolaghi.frame
    assert fr.d2(fr.d(OM(0))).is_zero()
    assert fr.d2(fr.d(OM(1))).is_zero()
    z = medolaghi_zero.frame
    sigma = MU(0, (1, 0))
    assert sigma in z.coframe
    assert all(v.is_constant() for _, f in z.structure() for v in f.terms.values())
    assert z.d2(z.d(sigma)).is_zero()


def test_d_of_constant_is_zero():
    fr = Problem(["x"], ["v"], action={"v": "v"}, name="trivial").initial_frame()
    one = Form.scalar(fr.reg.const(1))
    assert exterior_derivative(one, fr.d_coefficient, fr.relations).is_zero()
    assert d_cog(fr.reg, Cog.dx(0)).is_zero()
