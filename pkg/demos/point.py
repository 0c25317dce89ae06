"""Point equivalence of u_xx = q(x, u, u_x).

Normalizes the first order jets of Q, runs Cartan's test, prolongs and
finishes with the two invariants I and J.  Takes about half a minute.
Run: python3 demos/point.py
"""

import time

from equivframe.cli import Script, load, run
from equivframe.problems import script_path, spec_path

t = time.perf_counter()
_, fr = load(spec_path("point"))
sess = run(fr, Script.parse(script_path("point").read_text()))

first = sess.state_after("normalize Q = 0")
print("dQ_X on the Q = 0 frame:", first.recur("Q_X"))

inv = sess.state_after("involution").involution_test()
print("characters", inv.characters, f"; {inv.free_count} free parameters against {inv.degree_count}")

fin = sess.frame
reg = fin.reg
print("\nprolonged structure")
for c, f in fin.structure():
    print(f"  d{c.name(reg)} = {f}")
print("\nI =", fin.invariants["I"][1])
print("J has", len(str(fin.invariants["J"][1])), "characters")
print(f"\n{time.perf_counter() - t:.1f}s")
