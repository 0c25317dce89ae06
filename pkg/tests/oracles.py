"""Independent sympy oracles.

Nothing here imports the engine's algebra: lifted invariants are recomputed
from explicit transformations, structure functions from explicit coframes in
coordinates, and Cartan characters from symbolic minors.  Results are frozen
in golden/oracles.json; test_oracles.py recomputes them.
"""

from __future__ import annotations

import itertools
import re

import sympy as sp

_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def symbols_of(text: str) -> dict[str, sp.Symbol]:
    names = set(_NAME.findall(text)) - {"sqrt"}
    return {n: sp.Symbol(n, positive=True) for n in names}


def to_sympy(text) -> sp.Expr:
    """Parse an engine-printed expression; every identifier is a positive symbol."""
    text = str(text).replace("^", "**")
    return sp.sympify(text, locals=symbols_of(text))


def same(a, b) -> bool:
    a, b = to_sympy(a), to_sympy(b)
    return sp.simplify(a - b) == 0


def jet_symbols(expr: sp.Expr, funcs: dict[str, sp.Function], coords) -> sp.Expr:
    """Replace derivatives of the named functions by engine-style jet symbols."""
    reps = {}
    for d in expr.atoms(sp.Derivative):
        name = d.expr.func.__name__
        suf = "".join(str(v) * k for v, k in d.variable_count)
        suf = "".join(sorted(suf, key=lambda ch: [str(c) for c in coords].index(ch)))
        reps[d] = sp.Symbol(f"{name}_{suf}", positive=True)
    expr = expr.subs(reps)
    for name, f in funcs.items():
        expr = expr.subs(f, sp.Symbol(name, positive=True))
    return expr


# -- structure functions of explicit coframes ---------------------------------

def structure_functions(M: sp.Matrix, coords) -> dict[tuple[int, int, int], sp.Expr]:
    """c[a, b, c] (b < c) with d theta^a = sum c[a,b,c] theta^b & theta^c.

    Row a of M holds the components of theta^a in the basis dz^k.
    """
    n = len(coords)
    Minv = sp.simplify(M.inv())
    out = {}
    for a in range(n):
        # d theta^a = sum_{i<j} (d_i M_aj - d_j M_ai) dz^i & dz^j
        F = sp.zeros(n, n)
        for i in range(n):
            for j in range(n):
                F[i, j] = sp.diff(M[a, j], coords[i]) - sp.diff(M[a, i], coords[j])
        G = Minv.T * F * Minv     # dz = Minv theta
        for b in range(n):
            for c in range(b + 1, n):
                v = sp.simplify(G[b, c])
                if v != 0:
                    out[(a, b, c)] = v
    return out


def diffop_coframe():
    x, u = sp.symbols("x u", positive=True)
    f, g = sp.Function("f")(x), sp.Function("g")(x)
    a = (2 * g - sp.diff(f, x)) / (3 * f)
    M = sp.Matrix([[1 / sp.sqrt(f * u), 0], [a, 1 / u]])
    return structure_functions(M, (x, u))


def medolaghi_coframe():
    x, y = sp.symbols("x y", positive=True)
    u = sp.Function("u")(x, y)
    s = sp.sqrt(sp.diff(u, y, 2))
    M = sp.Matrix([[s, 0], [-u * s, s]])
    c = structure_functions(M, (x, y))
    return {k: jet_symbols(v, {"u": u}, (x, y)) for k, v in c.items()}


def medolaghi_affine_coframe():
    """omega^x, omega^y, sigma on u = A(x) y + B(x), coordinates (x, y, X_x)."""
    x, y, a = sp.symbols("x y a", positive=True)
    A, B = sp.Function("A")(x), sp.Function("B")(x)
    u = A * y + B
    sigma = [sp.diff(u, y), 0, 1 / a]      # dX_x / X_x - X_xx/X_x dx with X_xx = -u_y X_x
    M = sp.Matrix([[a, 0, 0], [-u * a, a, 0], sigma])
    return structure_functions(M, (x, y, a))


# -- lifted invariants ------------------------------------------------------------

def diffop_invariant() -> sp.Expr:
    """F_XX - 2 G_X on the frame F = 1, G = H = F_X = 0, U = 1.

    The operator f D^2 + g D + h is transformed by x -> phi(x),
    u -> u psi(x), and the frame is solved at a point.
    """
    x, u = sp.symbols("x u", positive=True)
    phi, psi = sp.Function("phi")(x), sp.Function("psi")(x)
    f, g, h = [sp.Function(n)(x) for n in "fgh"]
    X, U = phi, u * psi
    Xx, Uu, Ux = sp.diff(X, x), sp.diff(U, u), sp.diff(U, x)
    Xxx, Uxx = sp.diff(X, x, 2), sp.diff(U, x, 2)
    F = f * Xx**2 / Uu
    G = -f * (2 * Ux * Xx - Xxx * Uu * u) / (u * Uu**2) + g * Xx / Uu
    H = -f * (Uxx * Uu * u - 2 * Ux**2) / (u**2 * Uu**3) - g * Ux / (u * Uu**2) + h / Uu

    def DX(e):
        return (Uu * sp.diff(e, x) - Ux * sp.diff(e, u)) / (sp.diff(X, x) * Uu)

    inv = DX(DX(F)) - 2 * DX(G)
    FX = DX(F)
    p, q = sp.symbols("p0:6"), sp.symbols("q0:6")
    sub = {}
    for k in range(5, -1, -1):
        sub[sp.diff(phi, x, k) if k else phi] = p[k]
        sub[sp.diff(psi, x, k) if k else psi] = q[k]
    ev = lambda e: e.subs(sub)
    sol = {q[0]: 1 / u}
    roots = sp.solve(ev(F - 1).subs(sol), p[1])
    sol[p[1]] = [r for r in roots if r.subs({f: 2, u: 3}).is_positive][0]
    sol[p[2]] = sp.solve(ev(G).subs(sol), p[2])[0]
    sol[q[2]] = sp.solve(ev(H).subs(sol), q[2])[0]
    sol[q[1]] = sp.solve(ev(FX).subs(sol), q[1])[0]
    for _ in range(4):
        sol = {k: sp.simplify(v.subs(sol)) for k, v in sol.items()}
    val = sp.factor(sp.simplify(ev(inv).subs(sol).subs(sol)))
    return jet_symbols(val, {"f": f, "g": g, "h": h}, (x,))


def point_I() -> sp.Expr:
    """Q_PPPP for q = u_xx under a point transformation, at P = 0.

    Q = D P / D X with D the total derivative along a section q(x, u, p),
    and d/dP = (1/P_p) d/dp at fixed (x, u).
    """
    x, u, p = sp.symbols("x u p")
    J = dict(zip(["X_x", "X_u", "U_x", "U_u", "X_xx", "X_xu", "X_uu", "U_xx", "U_xu", "U_uu"],
                 sp.symbols("X_x X_u U_x U_u X_xx X_xu X_uu U_xx U_xu U_uu", positive=True)))
    X = J["X_x"] * x + J["X_u"] * u + (J["X_xx"] * x**2 + 2 * J["X_xu"] * x * u + J["X_uu"] * u**2) / 2
    U = J["U_x"] * x + J["U_u"] * u + (J["U_xx"] * x**2 + 2 * J["U_xu"] * x * u + J["U_uu"] * u**2) / 2
    q = sp.Function("q")(x, u, p)
    D = lambda e: sp.diff(e, x) + p * sp.diff(e, u) + q * sp.diff(e, p)
    P = D(U) / D(X)
    e = D(P) / D(X)
    Pp = sp.diff(P, p)
    for _ in range(4):
        e = sp.diff(e, p) / Pp
    e = e.subs({x: 0, u: 0})
    e = sp.factor(sp.simplify(e.subs(J["U_x"], -p * J["U_u"])))
    return e.subs(sp.Derivative(sp.Function("q")(0, 0, p), (p, 4)), sp.Symbol("q_pppp", positive=True))


# -- Cartan characters by symbolic minors -------------------------------------------

def rank_by_minors(M: sp.Matrix) -> int:
    """Largest k with a nonzero k x k minor."""
    rows, cols = M.shape
    for k in range(min(rows, cols), 0, -1):
        for R in itertools.combinations(range(rows), k):
            for C in itertools.combinations(range(cols), k):
                if sp.expand(M.extract(list(R), list(C)).det(method="berkowitz")) != 0:
                    return k
    return 0


def reduced_characters(C: list) -> list[int]:
    """C[a][j][r]: coefficient of omega^j & pi^r in the a-th structure equation.

    The k-th rank is that of the stacked contractions along k generic vectors.
    """
    if not C or not C[0] or not C[0][0]:
        return [0] * (len(C[0]) if C else 0)
    n = len(C[0])
    npi = len(C[0][0])
    ranks = [0]
    for k in range(1, n + 1):
        v = sp.symbols(f"v0:{k * n}")
        rows = []
        for t in range(k):
            for a in range(len(C)):
                rows.append([sum(C[a][j][r] * v[t * n + j] for j in range(n)) for r in range(npi)])
        ranks.append(rank_by_minors(sp.Matrix(rows)))
    return [ranks[k] - ranks[k - 1] for k in range(1, n + 1)]


# -- linearizations at the identity ------------------------------------------------

def density_linearization(order: int = 2) -> dict[str, dict[str, str]]:
    """v -> v / X' on the line, prolonged by V_X = (dV/dx) / X'.

    Returns, for each k <= order, the coefficients of xi^(j) in
    d/d eps of V_{X^k} along X = x + eps xi(x).
    """
    x, eps = sp.symbols("x eps")
    v, xi = sp.Function("v")(x), sp.Function("xi")(x)
    X = x + eps * xi
    V = v / sp.diff(X, x)
    out = {}
    for k in range(order + 1):
        lin = sp.expand(sp.diff(V, eps).subs(eps, 0))
        coeffs = {}
        for j in range(k + 3):
            d = sp.diff(xi, x, j) if j else xi
            c = sp.expand(lin.coeff(d))
            lin = sp.expand(lin - c * d)
            if c != 0:
                coeffs[str(j)] = str(jet_symbols(c, {"v": v}, (x,)))
        assert lin == 0
        out[str(k)] = coeffs
        V = sp.diff(V, x) / sp.diff(X, x)
    return out


def action_linearization(formulas: dict[str, str], jets: list[str], ident: dict[str, int]) -> dict:
    """Coefficients d F / d g at the identity for each group jet g in ``jets``."""
    out = {}
    for name, text in formulas.items():
        F = to_sympy(text)
        syms = symbols_of(text)
        at = {syms[g]: ident.get(g, 0) for g in syms if g in jets}
        coeffs = {}
        for g in jets:
            if g in syms:
                c = sp.simplify(sp.diff(F, syms[g]).subs(at))
                if c != 0:
                    coeffs[g] = str(c)
        out[name] = coeffs
    return out


DIVERGENCE_ACTION = {
    "w": "w/(P_p**2*(p*X_u + X_x))",
    "z": "z/(P_p*(p*X_u + X_x)**2) + (p*P_u + P_x)/(p*X_u + X_x)*w/(P_p**2*(p*X_u + X_x))",
}
DIVERGENCE_JETS = ["X_x", "X_u", "P_p", "P_u", "P_x"]


def divergence_linearization() -> dict:
    return action_linearization(DIVERGENCE_ACTION, DIVERGENCE_JETS, {"X_x": 1, "P_p": 1})


# -- freezing --------------------------------------------------------------------------

def _key(k) -> str:
    return ",".join(map(str, k)) if isinstance(k, tuple) else str(k)


def serialize(value):
    if isinstance(value, dict):
        return {_key(k): serialize(v) for k, v in value.items()}
    return str(value)


ORACLES = {
    "diffop_coframe": diffop_coframe,
    "diffop_invariant": diffop_invariant,
    "medolaghi_coframe": medolaghi_coframe,
    "medolaghi_affine_coframe": medolaghi_affine_coframe,
    "point_I": point_I,
    "density_linearization": density_linearization,
    "divergence_linearization": divergence_linearization,
}


def freeze(path) -> None:
    """Recompute every oracle and write the frozen values."""
    import json
    data = {k: serialize(f()) for k, f in sorted(ORACLES.items())}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
