"""Lagrangians L(x, u, p) up to divergence, on the degenerate branch 3 w w_pp = 4 w_p^2.

Run: python3 demos/divergence.py
"""

from equivframe.cli import Script, load, run
from equivframe.problems import script_path, spec_path

_, fr = load(spec_path("divergence"))
print("suggested first normalizations:", [(n, c.name(fr.reg)) for n, c in fr.suggest(0)])

sess = run(fr, Script.parse(script_path("divergence").read_text()), branch="zero")
reg = sess.frame.reg

print("W_PP =", sess.state_after("invariant W_PP").invariants["W_PP"][1])
rep = sess.state_after("involution").involution_test()
print("characters", rep.characters, f"; {rep.free_count} free parameter against {rep.degree_count}")

fin = sess.frame
print("\non w = 1, z = 0")
for c, f in fin.structure():
    print(f"  d{c.name(reg)} = {f}")
print("J =", fin.invariants["J"][1])
