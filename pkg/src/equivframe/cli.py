"""Problem-spec parser, script runner and interactive driver.

    equivframe run <spec> <script> [--branch zero|nonzero] [--max-order N]
                   [--out DIR] [--format human|machine|latex]
    equivframe repl <spec> [--transcript FILE]

Exit codes: 0 success, 2 command error, 3 parse error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, TextIO

from .expr import ParseError, SolveError
from .frame import FrameError, FrameState, Problem

__all__ = ["ProblemSpec", "Script", "Session", "SpecError", "CommandError", "load", "load_spec",
           "parse_spec", "parse_script", "run", "repl", "main", "CACHE_ENV"]

CACHE_ENV = "EQUIVFRAME_CACHE"
SECTIONS = ("base", "fiber", "defining", "extended", "jet_relations", "options")
COMMANDS = ("normalize", "recur", "solve-mc", "structeq", "cartan", "involution", "prolong",
            "branch", "invariant", "report", "show", "suggest")


class SpecError(ValueError):
    """Malformed problem spec or script (exit code 3)."""


class CommandError(RuntimeError):
    """A script command failed (exit code 2)."""

    def __init__(self, index: int, line: str, cause: Exception, snapshot: str = ""):
        super().__init__(f"command {index} ({line!r}) failed: {cause}")
        self.index, self.line, self.cause, self.snapshot = index, line, cause, snapshot


# -- problem specs ---------------------------------------------------------------------
@dataclass
class ProblemSpec:
    base_vars: list[str]
    fiber_vars: list[str]
    defining: list[str] = field(default_factory=list)
    extended: dict[str, str] = field(default_factory=dict)
    jet_relations: list[str] = field(default_factory=list)
    group_order: int = 2
    max_order: int = 4
    targets: dict[str, str] = field(default_factory=dict)
    name: str = "problem"

    def problem(self, max_order: int | None = None) -> Problem:
        try:
            return Problem(self.base_vars, self.fiber_vars, self.defining, self.extended,
                           self.jet_relations, group_order=self.group_order,
                           max_order=self.max_order if max_order is None else max_order,
                           targets=self.targets, name=self.name)
        except (ParseError, SolveError, KeyError, ValueError) as exc:
            raise SpecError(f"spec {self.name}: {exc}") from exc


def _items(line: str) -> list[str]:
    return [t.strip() for t in line.split(";") if t.strip()]


def parse_spec(text: str, name: str = "problem") -> ProblemSpec:
    blocks: dict[str, list[tuple[int, str]]] = {}
    cur = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            cur = line[1:-1].strip().lower()
            if cur not in SECTIONS:
                raise SpecError(f"line {no}: unknown section [{cur}]")
            blocks.setdefault(cur, [])
            continue
        if cur is None:
            raise SpecError(f"line {no}: text outside a section")
        blocks[cur].append((no, line))
    for req in ("base", "fiber"):
        if not blocks.get(req):
            raise SpecError(f"missing [{req}] section")
    spec = ProblemSpec([v for _, l in blocks["base"] for v in l.replace(",", " ").split()],
                       [v for _, l in blocks["fiber"] for v in l.replace(",", " ").split()], name=name)
    spec.defining = [t for _, l in blocks.get("defining", []) for t in _items(l)]
    spec.jet_relations = [t for _, l in blocks.get("jet_relations", []) for t in _items(l)]
    for no, l in blocks.get("extended", []):
        for t in _items(l):
            lhs, eq, rhs = t.partition("=")
            if not eq or not rhs.strip():
                raise SpecError(f"line {no}: extended action must read 'var = formula'")
            spec.extended[lhs.strip()] = rhs.strip()
    for no, l in blocks.get("options", []):
        for t in _items(l):
            key, eq, val = t.partition("=")
            key, val = key.strip(), val.strip()
            if not eq:
                raise SpecError(f"line {no}: option must read 'key = value'")
            if key in ("group_order", "max_order"):
                try:
                    setattr(spec, key, int(val))
                except ValueError:
                    raise SpecError(f"line {no}: {key} must be an integer") from None
            elif key == "targets":
                for pair in val.replace(",", " ").split():
                    var, colon, c = pair.partition(":")
                    if not colon:
                        raise SpecError(f"line {no}: targets entries read 'var:value'")
                    spec.targets[var] = c
            elif key == "name":
                spec.name = val
            else:
                raise SpecError(f"line {no}: unknown option {key}")
    return spec


def load_spec(path: str | os.PathLike) -> ProblemSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {p}: {exc}") from exc
    return parse_spec(text, name=p.stem)


def load(path: str | os.PathLike, max_order: int | None = None) -> tuple[ProblemSpec, FrameState]:
    spec = load_spec(path)
    problem = spec.problem(max_order)
    return spec, problem.initial_frame(spec.name)


# -- scripts ---------------------------------------------------------------------------
@dataclass
class Script:
    commands: list[str]

    @classmethod
    def parse(cls, text: str) -> "Script":
        cmds = []
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            body = _unguard(line)[1]
            head = body.split()[0] if body.split() else ""
            if head not in COMMANDS:
                raise SpecError(f"script line {no}: unknown command {head!r}")
            cmds.append(line)
        return cls(cmds)


def _unguard(line: str) -> tuple[str | None, str]:
    """Split an optional 'zero:' / 'nonzero:' branch guard off a command."""
    head, colon, rest = line.partition(":")
    if colon and head.strip() in ("zero", "nonzero"):
        return head.strip(), rest.strip()
    return None, line.strip()


def parse_script(text: str) -> Script:
    return Script.parse(text)


class Session:
    """Executes commands against an evolving frame; every command output is logged."""

    def __init__(self, frame: FrameState, branch: str = "nonzero", fmt: str = "machine"):
        self.frame = frame
        self.default_branch = branch
        self.fmt = fmt
        self.log: list[str] = []
        self.reports: list[str] = []
        self.transcript: list[str] = []
        self.siblings: dict[str, FrameState] = {}
        self.side: str | None = None       # side taken by the last branch command
        self.states: list[tuple[str, FrameState]] = []   # frame after each command

    def state_after(self, line: str, occurrence: int = 1) -> FrameState:
        """Frame right after the given occurrence of a command line."""
        hits = [f for c, f in self.states if c == line]
        if len(hits) < occurrence:
            raise KeyError(f"command {line!r} was not run {occurrence} time(s)")
        return hits[occurrence - 1]

    def emit(self, text: str) -> None:
        self.log.extend(text.rstrip("\n").split("\n"))

    def execute(self, line: str) -> str:
        """Run one command, returning its output."""
        start = len(self.log)
        guard, body = _unguard(line)
        if guard is not None and guard != self.side:
            return ""
        head, _, rest = body.partition(" ")
        rest = rest.strip()
        fn: Callable[[str], None] | None = getattr(self, "_cmd_" + head.replace("-", "_"), None)
        if fn is None:
            raise SpecError(f"unknown command {head!r}")
        fn(rest)
        self.transcript.append(line.strip())
        self.states.append((line.strip(), self.frame))
        return "\n".join(self.log[start:])

    # -- commands ----------------------------------------------------------------
    def _cmd_normalize(self, rest: str) -> None:
        # normalize EXPR [= VALUE] [param NAME] [shortcut on|off]
        param = shortcut = None
        words = rest.split()
        while len(words) >= 2 and words[-2] in ("param", "shortcut"):
            if words[-2] == "param":
                param = words[-1]
            else:
                shortcut = words[-1] == "on"
            words = words[:-2]
        text = " ".join(words)
        expr, eq, value = text.partition("=")
        expr = expr.strip()
        if not expr:
            raise SpecError("normalize needs an invariant")
        self.frame = self.frame.normalize(expr, value.strip() if eq else None, param=param,
                                          shortcut=shortcut)
        nz = self.frame.normalizations[-1]
        reg = self.frame.reg
        if nz.param is None:
            self.emit(f"normalize {expr} = {nz.value} ; {nz.note}")
        else:
            self.emit(f"normalize {expr} = {nz.value} ; {reg.name(nz.param)} = "
                      f"{self.frame.solved[nz.param]} ; {nz.mu.name(reg)} solved")

    def _cmd_recur(self, rest: str) -> None:
        f = self.frame.recur(rest)
        self.emit(f"d {rest} = {f}")

    def _cmd_solve_mc(self, rest: str) -> None:
        self.frame = self.frame.solve_mc(rest)
        self.emit(f"solve-mc {rest}")

    def _cmd_structeq(self, rest: str) -> None:
        reg = self.frame.reg
        for c, f in self.frame.structure():
            self.emit(f"d{c.name(reg)} = {f}")

    def _cartan_lines(self, rep, involution: bool) -> None:
        reg = self.frame.reg
        self.emit(f"characters = {' '.join(map(str, rep.characters))}")
        self.emit(f"projected = {' '.join(c.name(reg) for c in rep.projected)}")
        if involution:
            self.emit(f"free_next = {' '.join(c.name(reg) for c in rep.free_params)}")
            self.emit(f"count = {rep.free_count} ; degree_sum = {rep.degree_count}")
            self.emit(f"involutive = {'yes' if rep.involutive else 'no'}")
            if not rep.involutive:
                self.emit("not involutive: prolong adjoins the free Maurer-Cartan forms")

    def _cmd_cartan(self, rest: str) -> None:
        self._cartan_lines(self.frame.cartan_characters(), False)

    def _cmd_involution(self, rest: str) -> None:
        self._cartan_lines(self.frame.involution_test(), True)

    def _cmd_prolong(self, rest: str) -> None:
        self.frame = self.frame.prolong()
        reg = self.frame.reg
        self.emit(f"coframe = {' '.join(c.name(reg) for c in self.frame.coframe)}")

    def _cmd_branch(self, rest: str) -> None:
        words = rest.split()
        side = self.default_branch
        if words and words[-1] in ("zero", "nonzero"):
            side, words = words[-1], words[:-1]
        expr = " ".join(words)
        nz, z = self.frame.branch(expr)
        chosen, other = (z, nz) if side == "zero" else (nz, z)
        if chosen is None:
            raise FrameError(f"the {side} branch of {expr} does not exist")
        if other is not None:
            self.siblings[other.name] = other
        self.frame = chosen
        self.side = side
        self.emit(f"branch {expr} ; following {chosen.name}")

    def _cmd_invariant(self, rest: str) -> None:
        label, eq, text = rest.partition("=")
        label = label.strip()
        self.frame = self.frame.define_invariant(label, text.strip() if eq else None)
        self.emit(f"invariant {label} = {self.frame.invariants[label][1]}")

    def _cmd_report(self, rest: str) -> None:
        style = rest or self.fmt
        text = self.frame.report(style)
        self.reports.append(text)
        self.emit(text)

    def _cmd_suggest(self, rest: str) -> None:
        reg = self.frame.reg
        order = int(rest) if rest else 1
        for name, c in self.frame.suggest(order):
            self.emit(f"{name} ; {c.name(reg)}")

    def _cmd_show(self, rest: str) -> None:
        reg = self.frame.reg
        what = rest or "frame"
        if what == "relations":
            for r in self.frame.all_relations():
                self.emit(f"{r.lhs.name(reg)} = {r.rhs}")
        elif what in ("free", "parameters"):
            params = self.frame.free_params(self.frame.level) + self.frame.free_params(self.frame.level + 1)
            self.emit(" ".join(reg.name(s) for s in params))
        elif what == "characters":
            rep = self.frame.cartan_characters()
            self.emit("(" + ",".join(map(str, rep.characters)) + ")")
        elif what == "structure":
            self._cmd_structeq("")
        elif what == "normalizations":
            for nz in self.frame.normalizations:
                self.emit(f"{nz.name} = {nz.value}")
        elif what == "branches":
            self.emit(" ".join([self.frame.name] + sorted(self.siblings)))
        elif what == "frame":
            self.emit(self.frame.report(self.fmt, cartan=False))
        else:
            raise SpecError(f"show: unknown topic {what!r}")


def run(frame: FrameState, script: Script, branch: str = "nonzero", fmt: str = "machine") -> Session:
    """Run every command; a failure raises CommandError with a frame snapshot."""
    sess = Session(frame, branch, fmt)
    for k, line in enumerate(script.commands, 1):
        try:
            sess.execute(line)
        except SpecError:
            raise
        except (FrameError, ParseError, SolveError, KeyError, ValueError, ZeroDivisionError) as exc:
            raise CommandError(k, line, exc, sess.frame.report(fmt, cartan=False)) from exc
    if not sess.reports:
        sess.reports.append(sess.frame.report(fmt))
    return sess


def _write_reports(sess: Session, out: Path, stem: str, fmt: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ext = {"machine": "txt", "human": "md", "latex": "tex"}
    styles = ["machine", "human"] + (["latex"] if fmt == "latex" else [])
    for style in styles:
        (out / f"{stem}.{style}.{ext[style]}").write_text(sess.frame.report(style))
    (out / f"{stem}.log").write_text("\n".join(sess.log) + "\n")


def repl(frame: FrameState, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout,
         transcript: str | os.PathLike | None = None, fmt: str = "human") -> Session:
    """Interactive loop; errors are reported and the session continues."""
    sess = Session(frame, fmt=fmt)
    interactive = stdin.isatty()
    while True:
        if interactive:
            stdout.write("equivframe> ")
            stdout.flush()
        raw = stdin.readline()
        if not raw:
            break
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        if line == "help":
            stdout.write("commands: " + " ".join(COMMANDS) + " quit\n")
            continue
        try:
            out = sess.execute(line)
        except Exception as exc:  # a failed command never ends the session
            stdout.write(f"error: {exc}\n")
            continue
        if out:
            stdout.write(out + "\n")
    if transcript is None and os.environ.get(CACHE_ENV):
        transcript = Path(os.environ[CACHE_ENV]) / "transcript.script"
    if transcript is not None:
        Path(transcript).parent.mkdir(parents=True, exist_ok=True)
        Path(transcript).write_text("".join(c + "\n" for c in sess.transcript))
        stdout.write(f"transcript saved to {transcript}\n")
    return sess


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="equivframe", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a script against a problem spec")
    r.add_argument("spec")
    r.add_argument("script")
    r.add_argument("--branch", default="nonzero", choices=["zero", "nonzero"],
                   help="side followed by branch commands that name none")
    r.add_argument("--max-order", type=int, default=None)
    r.add_argument("--out", default=None, help="directory for report files")
    r.add_argument("--format", default="machine", choices=["human", "machine", "latex"])
    p = sub.add_parser("repl", help="interactive session")
    p.add_argument("spec")
    p.add_argument("--transcript", default=None)
    p.add_argument("--max-order", type=int, default=None)
    args = ap.parse_args(argv)

    try:
        spec, frame = load(args.spec, args.max_order)
        if args.command == "repl":
            repl(frame, transcript=args.transcript)
            return 0
        try:
            script = Script.parse(Path(args.script).read_text())
        except OSError as exc:
            raise SpecError(f"cannot read {args.script}: {exc}") from exc
        sess = run(frame, script, args.branch, args.format)
    except SpecError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.snapshot, file=sys.stderr, end="")
        return 2
    if args.out:
        _write_reports(sess, Path(args.out), Path(args.script).stem, args.format)
    sys.stdout.write("\n".join(sess.log) + "\n")
    if not any(c.startswith("report") for c in sess.transcript):
        sys.stdout.write(sess.reports[-1])
    return 0


if __name__ == "__main__":
    sys.exit(main())
