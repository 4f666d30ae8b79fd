"""Core IR data model: types, expressions, instructions, basic blocks and CFGs.

Expressions and instructions are immutable values and may be shared freely
between containers and threads.  Basic blocks and CFGs are mutable containers;
transformation passes copy the CFG they receive and return a fresh one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

VALID_WIDTHS = (8, 16, 32, 64)

BIN_OPS = ("add", "sub", "mul", "div", "mod", "and", "or", "xor", "shl", "shr")
CMP_OPS = ("cmp_eq", "cmp_ne", "cmp_lt", "cmp_le", "cmp_gt", "cmp_ge")
UN_OPS = ("neg", "not")

# Binary operators whose result bits below k depend only on operand bits below k.
LOW_BITS_OPS = frozenset({"add", "sub", "mul", "and", "or", "xor", "shl"})
# Operators whose semantics depend on operand signedness.
SIGN_SENSITIVE_OPS = frozenset({"div", "mod", "shr"})


class IrError(Exception):
    """Structural problem in an IR value."""


@dataclass(frozen=True)
class DataType:
    kind: str  # int | pointer | char | void
    width: int = 0
    signed: bool = False
    pointee: "DataType | None" = None

    def __post_init__(self):
        if self.kind in ("int", "pointer", "char") and self.width not in VALID_WIDTHS:
            raise IrError(f"invalid width {self.width} for {self.kind}")

    @property
    def is_pointer(self) -> bool:
        return self.kind == "pointer"

    def render(self) -> str:
        if self.kind == "void":
            return "void"
        if self.kind == "char":
            return "char"
        if self.kind == "pointer":
            if self.pointee is None or self.pointee.kind == "void":
                return "ptr"
            return f"ptr<{self.pointee.render()}>"
        return ("i" if self.signed else "u") + str(self.width)

    def __str__(self) -> str:
        return self.render()


I8 = DataType("int", 8, True)
I16 = DataType("int", 16, True)
I32 = DataType("int", 32, True)
I64 = DataType("int", 64, True)
U8 = DataType("int", 8, False)
U16 = DataType("int", 16, False)
U32 = DataType("int", 32, False)
U64 = DataType("int", 64, False)
CHAR = DataType("char", 8, False)
VOID = DataType("void")
BOOL = U8  # comparison results


def int_type(width: int, signed: bool) -> DataType:
    return DataType("int", width, signed)


def ptr_to(pointee: DataType | None = None, width: int = 64) -> DataType:
    return DataType("pointer", width, False, pointee)


class Expression:
    """Base class for all expression nodes."""

    dtype: DataType

    def children(self) -> tuple["Expression", ...]:
        return ()

    def with_children(self, children: tuple["Expression", ...]) -> "Expression":
        assert not children
        return self

    def walk(self):
        yield self
        for c in self.children():
            yield from c.walk()

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children())

    @property
    def width(self) -> int:
        return self.dtype.width


@dataclass(frozen=True)
class Const(Expression):
    value: int
    dtype: DataType
    style: str | None = field(default=None, compare=False)  # render hint

    def __post_init__(self):
        mask = (1 << self.dtype.width) - 1
        if self.value != self.value & mask:
            object.__setattr__(self, "value", self.value & mask)

    @property
    def signed_value(self) -> int:
        v = self.value
        if self.dtype.signed and v >= 1 << (self.dtype.width - 1):
            v -= 1 << self.dtype.width
        return v


@dataclass(frozen=True)
class Variable(Expression):
    """An SSA variable (name, version) or a plain named variable (version None)."""

    name: str
    version: int | None
    dtype: DataType = field(compare=False, hash=False)

    @property
    def key(self) -> tuple[str, int | None]:
        return (self.name, self.version)

    def render(self) -> str:
        if self.version is None:
            return self.name
        return f"{self.name}#{self.version}"

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class BinOp(Expression):
    op: str  # BIN_OPS
    left: Expression
    right: Expression
    dtype: DataType

    def children(self):
        return (self.left, self.right)

    def with_children(self, children):
        return replace(self, left=children[0], right=children[1])


@dataclass(frozen=True)
class Cmp(Expression):
    """Width-8 boolean (0/1) comparison; operand interpretation is explicit."""

    op: str  # CMP_OPS
    left: Expression
    right: Expression
    unsigned: bool
    dtype: DataType = BOOL

    def children(self):
        return (self.left, self.right)

    def with_children(self, children):
        return replace(self, left=children[0], right=children[1])


@dataclass(frozen=True)
class UnOp(Expression):
    op: str  # UN_OPS
    operand: Expression
    dtype: DataType

    def children(self):
        return (self.operand,)

    def with_children(self, children):
        return replace(self, operand=children[0])


@dataclass(frozen=True)
class Cast(Expression):
    """Width/sign conversion; source width and signedness come from the operand."""

    operand: Expression
    dtype: DataType

    def children(self):
        return (self.operand,)

    def with_children(self, children):
        return replace(self, operand=children[0])


@dataclass(frozen=True)
class Deref(Expression):
    address: Expression
    dtype: DataType

    def children(self):
        return (self.address,)

    def with_children(self, children):
        return replace(self, address=children[0])


@dataclass(frozen=True)
class AddrOf(Expression):
    var: Variable
    dtype: DataType

    def children(self):
        return (self.var,)

    def with_children(self, children):
        return replace(self, var=children[0])


@dataclass(frozen=True)
class ArrayIndex(Expression):
    """base[index] with a fixed element size; produced by array-access detection."""

    base: Expression
    index: Expression
    elem_size: int
    dtype: DataType

    def children(self):
        return (self.base, self.index)

    def with_children(self, children):
        return replace(self, base=children[0], index=children[1])


@dataclass(frozen=True)
class CallExpr(Expression):
    """Pure intrinsic call usable inside expressions (e.g. abs)."""

    callee: str
    args: tuple[Expression, ...]
    dtype: DataType

    def children(self):
        return self.args

    def with_children(self, children):
        return replace(self, args=tuple(children))


class Instruction:
    """Base class for instructions."""

    def expressions(self) -> tuple[Expression, ...]:
        """Top-level expression operands of this instruction."""
        return ()

    def with_expressions(self, exprs: tuple[Expression, ...]) -> "Instruction":
        assert not exprs
        return self

    def defined_var(self) -> Variable | None:
        return None


@dataclass(frozen=True)
class Assign(Instruction):
    target: Expression  # Variable or Deref
    value: Expression
    tags: tuple[str, ...] = ()

    def expressions(self):
        return (self.target, self.value)

    def with_expressions(self, exprs):
        return replace(self, target=exprs[0], value=exprs[1])

    def defined_var(self):
        return self.target if isinstance(self.target, Variable) else None

    @property
    def is_copy(self) -> bool:
        return isinstance(self.target, Variable) and isinstance(self.value, Variable)


@dataclass(frozen=True)
class Phi(Instruction):
    target: Variable
    args: tuple[tuple[str, Expression], ...]  # (predecessor block id, Variable|Const)

    def expressions(self):
        return (self.target,) + tuple(v for _, v in self.args)

    def with_expressions(self, exprs):
        args = tuple((b, e) for (b, _), e in zip(self.args, exprs[1:]))
        return replace(self, target=exprs[0], args=args)

    def defined_var(self):
        return self.target

    def arg_for(self, block_id: str) -> Expression:
        for b, v in self.args:
            if b == block_id:
                return v
        raise IrError(f"phi {self.target} has no argument for predecessor {block_id}")


@dataclass(frozen=True)
class Call(Instruction):
    target: Variable | None
    callee: str
    args: tuple[Expression, ...]
    tags: tuple[str, ...] = ()

    def expressions(self):
        base = (self.target,) if self.target is not None else ()
        return base + self.args

    def with_expressions(self, exprs):
        if self.target is not None:
            return replace(self, target=exprs[0], args=tuple(exprs[1:]))
        return replace(self, args=tuple(exprs))

    def defined_var(self):
        return self.target


@dataclass(frozen=True)
class Return(Instruction):
    value: Expression | None = None

    def expressions(self):
        return (self.value,) if self.value is not None else ()

    def with_expressions(self, exprs):
        return replace(self, value=exprs[0]) if exprs else self


@dataclass(frozen=True)
class Branch(Instruction):
    """Two-way conditional; targets live on the true/false edges."""

    condition: Expression

    def expressions(self):
        return (self.condition,)

    def with_expressions(self, exprs):
        return replace(self, condition=exprs[0])


@dataclass(frozen=True)
class Jump(Instruction):
    """Unconditional; target lives on the uncond edge."""


@dataclass(frozen=True)
class IndirectJump(Instruction):
    """Jump-table dispatch; the default target lives on the fallthrough edge."""

    offset: Expression
    table: tuple[tuple[int, str], ...]  # (case value, target block id)

    def expressions(self):
        return (self.offset,)

    def with_expressions(self, exprs):
        return replace(self, offset=exprs[0])


TERMINATORS = (Branch, Jump, IndirectJump, Return)


def is_terminator(instr: Instruction) -> bool:
    return isinstance(instr, TERMINATORS)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: str  # uncond | true | false | case | fallthrough
    value: int | None = None  # case value


@dataclass
class BasicBlock:
    id: str
    instructions: list[Instruction] = field(default_factory=list)

    @property
    def terminator(self) -> Instruction | None:
        if self.instructions and is_terminator(self.instructions[-1]):
            return self.instructions[-1]
        return None

    def phis(self) -> list[Phi]:
        return [i for i in self.instructions if isinstance(i, Phi)]

    def body(self) -> list[Instruction]:
        """Instructions without phis and without the terminator."""
        end = len(self.instructions) - (1 if self.terminator is not None else 0)
        return [i for i in self.instructions[:end] if not isinstance(i, Phi)]


@dataclass
class ControlFlowGraph:
    name: str
    params: tuple[Variable, ...]
    return_type: DataType
    blocks: dict[str, BasicBlock]
    edges: list[Edge]
    entry: str
    ssa_form: bool = False
    ptr_width: int = 64

    def block_ids(self) -> list[str]:
        return sorted(self.blocks)

    def successors(self, block_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == block_id]

    def predecessors(self, block_id: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == block_id]

    def succ_map(self) -> dict[str, list[Edge]]:
        out: dict[str, list[Edge]] = {b: [] for b in self.blocks}
        for e in self.edges:
            out[e.src].append(e)
        return out

    def pred_map(self) -> dict[str, list[Edge]]:
        out: dict[str, list[Edge]] = {b: [] for b in self.blocks}
        for e in self.edges:
            out[e.dst].append(e)
        return out

    def copy(self) -> "ControlFlowGraph":
        """Structural copy: fresh blocks and edge list, shared immutable instructions."""
        return ControlFlowGraph(
            name=self.name,
            params=self.params,
            return_type=self.return_type,
            blocks={b.id: BasicBlock(b.id, list(b.instructions)) for b in self.blocks.values()},
            edges=list(self.edges),
            entry=self.entry,
            ssa_form=self.ssa_form,
            ptr_width=self.ptr_width,
        )

    def fresh_block_id(self, hint: str) -> str:
        candidate = hint
        n = 0
        while candidate in self.blocks:
            n += 1
            candidate = f"{hint}_{n}"
        return candidate

    def rebuild_edges_from_terminators(self, branch_targets: dict[str, tuple[str, ...]]):
        """Recompute the edge list; branch/jump targets are supplied per block."""
        edges: list[Edge] = []
        for bid in self.block_ids():
            term = self.blocks[bid].terminator
            targets = branch_targets.get(bid, ())
            if isinstance(term, Jump):
                edges.append(Edge(bid, targets[0], "uncond"))
            elif isinstance(term, Branch):
                edges.append(Edge(bid, targets[0], "true"))
                edges.append(Edge(bid, targets[1], "false"))
            elif isinstance(term, IndirectJump):
                for value, dst in term.table:
                    edges.append(Edge(bid, dst, "case", value))
                edges.append(Edge(bid, targets[0], "fallthrough"))
        self.edges = edges

    def variables(self) -> list[Variable]:
        """All distinct variables, parameters first, then by first appearance."""
        seen: dict[tuple[str, int | None], Variable] = {}
        for p in self.params:
            seen.setdefault(p.key, p)
        for bid in self.block_ids():
            for instr in self.blocks[bid].instructions:
                for expr in instr.expressions():
                    for node in expr.walk():
                        if isinstance(node, Variable):
                            seen.setdefault(node.key, node)
        return list(seen.values())

    def instruction_count(self) -> int:
        return sum(len(b.instructions) for b in self.blocks.values())


def validate_cfg(cfg: ControlFlowGraph) -> list[str]:
    """Structural validation; returns a list of problems (empty when clean)."""
    problems: list[str] = []
    if cfg.entry not in cfg.blocks:
        return [f"entry block {cfg.entry!r} does not exist"]
    preds = cfg.pred_map()
    if preds[cfg.entry]:
        problems.append(f"entry block {cfg.entry} has predecessors")
    for e in cfg.edges:
        if e.src not in cfg.blocks:
            problems.append(f"edge from unknown block {e.src}")
        if e.dst not in cfg.blocks:
            problems.append(f"edge to unknown block {e.dst}")
    succs = cfg.succ_map()
    for bid in cfg.block_ids():
        block = cfg.blocks[bid]
        for i, instr in enumerate(block.instructions):
            if is_terminator(instr) and i != len(block.instructions) - 1:
                problems.append(f"{bid}: terminator not last instruction")
            if isinstance(instr, Phi) and any(
                not isinstance(x, Phi) for x in block.instructions[:i]
            ):
                problems.append(f"{bid}: phi after non-phi instruction")
        term = block.terminator
        out = succs[bid]
        kinds = sorted(e.kind for e in out)
        if isinstance(term, Jump) and kinds != ["uncond"]:
            problems.append(f"{bid}: jump needs exactly one uncond edge, got {kinds}")
        elif isinstance(term, Branch) and kinds != ["false", "true"]:
            problems.append(f"{bid}: branch needs one true and one false edge, got {kinds}")
        elif isinstance(term, Return) and out:
            problems.append(f"{bid}: return block has outgoing edges")
        elif isinstance(term, IndirectJump):
            case_values = [e.value for e in out if e.kind == "case"]
            if sorted(case_values) != sorted(v for v, _ in term.table):
                problems.append(f"{bid}: switch edges do not match the jump table")
            if len(set(case_values)) != len(case_values):
                problems.append(f"{bid}: duplicate switch case values")
            if sum(1 for e in out if e.kind == "fallthrough") != 1:
                problems.append(f"{bid}: switch needs exactly one default edge")
        elif term is None and out:
            problems.append(f"{bid}: block without terminator has outgoing edges")
        if term is None and not out and bid != cfg.entry:
            # A block that neither branches nor returns is a dead end.
            problems.append(f"{bid}: block neither returns nor jumps")
        pred_ids = sorted(e.src for e in preds[bid])
        for phi in block.phis():
            phi_preds = sorted(b for b, _ in phi.args)
            if phi_preds != pred_ids:
                problems.append(
                    f"{bid}: phi {phi.target} arguments {phi_preds} do not cover predecessors {pred_ids}"
                )
    return problems
