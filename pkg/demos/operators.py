"""Second order operators f D^2 + g D + h on the line under change of variable and gauge.

Run: python3 demos/operators.py
"""

from equivframe.cli import load
from equivframe.mc import Cog
from equivframe.problems import spec_path

_, fr = load(spec_path("diffop"))
reg = fr.reg

print("dF on the initial frame:", fr.recur("F"))
fr = fr.normalize("F", 1).normalize("G", 0).normalize("H", 0)
fr = fr.normalize("F_X", 0).define_invariant("I", "F_XX - 2*G_X")
for nz in fr.normalizations:
    print(f"{nz.name} = {nz.value} solves {reg.name(nz.param)} = {fr.solved[nz.param]}")

print("\ncoframe")
for c, f in fr.coframe_forms():
    print(f"  {c.name(reg)} = {f}")
print("\nstructure")
for c, f in fr.structure():
    print(f"  d{c.name(reg)} = {f}")
print("\nI =", fr.invariants["I"][1])
rep = fr.involution_test()
print("characters", rep.characters, "involutive" if rep.involutive else "not involutive")
print("d omega^u vanishes:", fr.d(Cog.omega(1)).is_zero())
