"""Human, machine and LaTeX serializations of a frame state."""

from __future__ import annotations

from .expr import Expr

__all__ = ["render", "SECTIONS"]

SECTIONS = ["NORMALIZATIONS", "SOLVED", "SIDE_CONDITIONS", "BRANCH", "MC_RELATIONS", "COFRAME",
            "STRUCTURE", "TORSION", "CARTAN", "INVARIANTS", "NOTES"]

_TITLES = {
    "NORMALIZATIONS": "Normalizations", "SOLVED": "Solved group parameters",
    "SIDE_CONDITIONS": "Side conditions (nonzero)", "BRANCH": "Branch constraints",
    "MC_RELATIONS": "Maurer-Cartan relations", "COFRAME": "Coframe",
    "STRUCTURE": "Structure equations", "TORSION": "Torsion coefficients",
    "CARTAN": "Cartan test", "INVARIANTS": "Invariants", "NOTES": "Notes",
}


def _e(e: Expr, style: str) -> str:
    return e.latex() if style == "latex" else str(e)


def render(frame, style: str = "machine", cartan: bool = True, solved: bool = True) -> str:
    if style not in ("machine", "human", "latex"):
        raise ValueError(f"unknown report format {style!r}")
    reg = frame.reg
    fs = "latex" if style == "latex" else ("human" if style == "human" else "machine")
    eq = " = " if style != "latex" else " &= "
    sec: dict[str, list[str]] = {k: [] for k in SECTIONS}

    tex = style == "latex"
    sep = (lambda w: f" \\quad \\text{{{w} }}") if tex else (lambda w: f" ; {w} ")
    word = (lambda w: f"\\text{{{w}}}") if tex else (lambda w: w)
    for nz in frame.normalizations:
        tail = ""
        if nz.param is not None:
            pname = reg.sym(nz.param).latex() if tex else reg.name(nz.param)
            tail = f"{sep('param')}{pname}{sep('form')}{nz.mu.name(reg, fs)}"
        elif nz.note:
            tail = f"{sep(nz.note)}".rstrip()
        sec["NORMALIZATIONS"].append(f"{_e(nz.expr, style)}{eq}{_e(nz.value, style)}{tail}")
    if solved:
        for s in sorted(frame.solved, key=lambda s: s.sort_key()):
            name = reg.sym(s).latex() if tex else reg.name(s)
            sec["SOLVED"].append(f"{name}{eq}{_e(frame.solved[s], style)}")
    for c in frame.side_conditions:
        sec["SIDE_CONDITIONS"].append(f"{_e(c, style)} != 0" if style != "latex" else f"{c.latex()} \\neq 0")
    for c in frame.branch_constraints:
        sec["BRANCH"].append(f"{_e(c, style)}{eq}0{sep('invariant')}".rstrip())
    for c in frame.sections:
        sec["BRANCH"].append(f"{_e(c, style)}{eq}0{sep('evaluation only')}".rstrip())
    for r in frame.all_relations():
        sec["MC_RELATIONS"].append(f"{r.lhs.name(reg, fs)}{eq}{r.rhs.to_string(fs)}")
    for c, f in frame.coframe_forms():
        sec["COFRAME"].append(f"{c.name(reg, fs)}{eq}{f.to_string(fs)}")
    dname = lambda c: f"d{c.name(reg, fs)}"
    for c, f in frame.structure():
        sec["STRUCTURE"].append(f"{dname(c)}{eq}{f.to_string(fs)}")
    for c, k, v in frame.torsion():
        w = ("&" if style == "machine" else "∧" if style == "human" else " \\wedge ").join(q.name(reg, fs) for q in k)
        mid, tail = (" &: ", " \\quad ") if tex else (" : ", " : ")
        sec["TORSION"].append(f"{dname(c)}{mid}{w}{tail}{_e(v, style)}")
    if cartan:
        rep = frame.involution_test()
        sp = "\\ " if tex else " "
        sec["CARTAN"].append(f"{word('level')}{eq}{rep.level}")
        sec["CARTAN"].append(f"{word('characters')}{eq}{sp.join(map(str, rep.characters))}")
        sec["CARTAN"].append(f"{word('projected')}{eq}{sp.join(c.name(reg, fs) for c in rep.projected)}")
        sec["CARTAN"].append(f"{word('free next' if tex else 'free_next')}{eq}"
                             f"{sp.join(c.name(reg, fs) for c in rep.free_params)}")
        count = f"{rep.free_count}{sep('degree sum')}= {rep.degree_count}" if tex else \
            f"{rep.free_count} ; degree_sum{eq}{rep.degree_count}"
        sec["CARTAN"].append(f"{word('count')}{eq}{count}")
        sec["CARTAN"].append(f"{word('involutive')}{eq}{word('yes' if rep.involutive else 'no')}")
    for k in sorted(frame.invariants):
        e, v = frame.invariants[k]
        label = "\\text{" + k.replace("_", "\\_") + "} = " if tex else f"{k}{eq}"
        head = label if k != str(e) else ""
        sec["INVARIANTS"].append(f"{head}{_e(e, style)}{eq}{_e(v, style)}")
    sec["NOTES"].extend(frame.notes)

    lines = []
    if style == "machine":
        lines.append(f"FRAME {frame.name}")
        for k in SECTIONS:
            lines.append(k)
            lines.extend("  " + x for x in sec[k])
    elif style == "human":
        lines.append(f"Frame {frame.name}")
        for k in SECTIONS:
            if not sec[k]:
                continue
            lines.append("")
            lines.append(_TITLES[k])
            lines.extend("  " + x for x in sec[k])
    else:
        lines.append(f"% frame {frame.name}")
        for k in SECTIONS:
            if not sec[k]:
                continue
            lines.append(f"\\paragraph{{{_TITLES[k]}}}")
            if k == "NOTES":
                lines.extend(x.replace("_", "\\_") + "\\\\" for x in sec[k])
            else:
                lines.append("\\begin{align*}")
                lines.extend(f"{x}\\\\" for x in sec[k])
                lines.append("\\end{align*}")
    return "\n".join(lines) + "\n"
