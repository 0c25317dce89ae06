"""A problem built in code: densities v(x) dx on the line under affine maps.

The affine group is cut out by X_xx = 0.  Normalizing the lifted density
V to 1 fixes X_x, and V_X is then an invariant.
Run: python3 demos/custom.py
"""

from equivframe.frame import FrameError, Problem

prob = Problem(["x"], ["v"], defining=["X_xx = 0"], action={"v": "v/X_x"},
               group_order=2, max_order=3, name="affine density")
fr = prob.initial_frame()
reg = fr.reg

print("dV =", fr.recur("V"))
fr = fr.normalize("V", 1)
print("V = 1 gives X_x =", fr.solved[reg.resolve("X_x")])
print("dV_X =", fr.recur("V_X"))
try:
    fr.normalize("V_X", 0)
except FrameError as exc:
    print("normalize V_X:", exc)
fr = fr.define_invariant("V_X")
print("V_X =", fr.invariants["V_X"][1])
print()
print(fr.report("human"))
