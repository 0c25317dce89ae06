"""Medolaghi's example: the pseudo-group X = f(x), Y = f'(x) y + g(x) on u(x, y).

The problem branches on u_yy.  Both branches are followed.
Run: python3 demos/medolaghi.py
"""

from equivframe.cli import load
from equivframe.problems import spec_path

_, fr = load(spec_path("medolaghi"))
reg = fr.reg

for name in ("U", "U_Y", "U_X"):
    print(f"d{name} =", fr.recur(name))
    fr = fr.normalize(name, 0)
    nz = fr.normalizations[-1]
    print(f"  {name} = 0 solves {reg.name(nz.param)} = {fr.solved[nz.param]}")

fr = fr.define_invariant("U_YY")
print("\nU_YY =", fr.invariants["U_YY"][1])
nonzero, zero = fr.branch("u_yy")

nonzero = nonzero.normalize("U_YY", 1)
print("\nbranch u_yy != 0")
for c, f in nonzero.coframe_forms():
    print(f"  {c.name(reg)} = {f}")
for name in ("U_YYY", "U_YYX"):
    print(f"  {name} =", nonzero.invariant_value(name))
for c, f in nonzero.structure():
    print(f"  d{c.name(reg)} = {f}")

print("\nbranch u_yy = 0")
zero = zero.prolong()
for c, f in zero.structure():
    print(f"  d{c.name(reg)} = {f}")
print("  involutive:", zero.involution_test().involutive)
