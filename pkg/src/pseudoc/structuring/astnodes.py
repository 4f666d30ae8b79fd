"""Structured output tree.

There is deliberately no goto variant: restructuring produces sequences,
conditionals, loops, switches, break/continue and returns, nothing else.
Conditions and loop guards are logic-engine terms; everything executable
inside Code nodes is plain IR instructions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..ir.model import Expression, Instruction, Variable


class AstNode:
    def children(self) -> list["AstNode"]:
        return []

    def walk(self):
        yield self
        for c in self.children():
            yield from c.walk()


@dataclass
class Seq(AstNode):
    statements: list[AstNode] = field(default_factory=list)

    def children(self):
        return list(self.statements)


@dataclass
class Code(AstNode):
    instructions: list[Instruction] = field(default_factory=list)


@dataclass
class CondNode(AstNode):
    condition: object  # logic term
    then: AstNode
    orelse: AstNode | None = None

    def children(self):
        return [self.then] + ([self.orelse] if self.orelse is not None else [])


@dataclass
class Loop(AstNode):
    kind: str  # while | do_while | for | endless
    guard: object | None  # logic term; None for endless
    body: AstNode
    init: Instruction | None = None
    update: Instruction | None = None

    def children(self):
        return [self.body]


@dataclass
class SwitchCase:
    values: tuple[int, ...]
    body: AstNode
    fallthrough: bool = False


@dataclass
class Switch(AstNode):
    subject: Expression
    cases: list[SwitchCase]
    default: AstNode | None = None

    def children(self):
        out = [c.body for c in self.cases]
        if self.default is not None:
            out.append(self.default)
        return out


@dataclass
class Break(AstNode):
    pass


@dataclass
class Continue(AstNode):
    pass


@dataclass
class AstReturn(AstNode):
    value: Expression | None = None


@dataclass
class FunctionAst:
    name: str
    params: tuple[Variable, ...]
    return_type: object
    body: AstNode
    warnings: list[str] = field(default_factory=list)

    def walk(self):
        yield from self.body.walk()


def code_instructions(node: AstNode) -> list[Instruction]:
    """All instructions in Code nodes plus loop headers and returns, in order."""
    out: list[Instruction] = []
    from ..ir.model import Return

    for n in node.walk():
        if isinstance(n, Code):
            out.extend(n.instructions)
        elif isinstance(n, Loop):
            if n.init is not None:
                out.append(n.init)
            if n.update is not None:
                out.append(n.update)
        elif isinstance(n, AstReturn):
            out.append(Return(n.value))
    return out


def max_cond_depth(node: AstNode) -> int:
    """Deepest nesting of conditional nodes (loops/switches not counted)."""

    def depth(n: AstNode) -> int:
        inner = max((depth(c) for c in n.children()), default=0)
        return inner + (1 if isinstance(n, CondNode) else 0)

    return depth(node)


def max_nesting_depth(node: AstNode) -> int:
    """Deepest structural nesting over conditionals, loops and switches."""

    def depth(n: AstNode) -> int:
        inner = max((depth(c) for c in n.children()), default=0)
        return inner + (1 if isinstance(n, (CondNode, Loop, Switch)) else 0)

    return depth(node)


def dump_sexpr(node: AstNode, render_cond=None, render_instr=None) -> str:
    """Compact s-expression dump used by --dump and the stage runner."""
    rc = render_cond or (lambda c: str(c))
    ri = render_instr or (lambda i: str(i))

    def fmt(n: AstNode) -> str:
        if isinstance(n, Seq):
            return "(seq " + " ".join(fmt(c) for c in n.statements) + ")"
        if isinstance(n, Code):
            return "(code " + " ".join(f"{{{ri(i)}}}" for i in n.instructions) + ")"
        if isinstance(n, CondNode):
            parts = f"(if {{{rc(n.condition)}}} {fmt(n.then)}"
            if n.orelse is not None:
                parts += f" {fmt(n.orelse)}"
            return parts + ")"
        if isinstance(n, Loop):
            guard = f"{{{rc(n.guard)}}}" if n.guard is not None else "{}"
            extra = ""
            if n.init is not None:
                extra += f" :init {{{ri(n.init)}}}"
            if n.update is not None:
                extra += f" :update {{{ri(n.update)}}}"
            return f"({n.kind} {guard}{extra} {fmt(n.body)})"
        if isinstance(n, Switch):
            cases = []
            for c in n.cases:
                values = ",".join(str(v) for v in c.values)
                ft = " :fallthrough" if c.fallthrough else ""
                cases.append(f"(case {values}{ft} {fmt(c.body)})")
            if n.default is not None:
                cases.append(f"(default {fmt(n.default)})")
            return "(switch " + " ".join(cases) + ")"
        if isinstance(n, Break):
            return "(break)"
        if isinstance(n, Continue):
            return "(continue)"
        if isinstance(n, AstReturn):
            return f"(return {{{ri(n.value)}}})" if n.value is not None else "(return)"
        raise AssertionError(type(n))

    return fmt(node)
