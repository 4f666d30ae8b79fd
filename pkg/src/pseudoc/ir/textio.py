"""Parser and serializer for the textual IR format.

The format is line oriented: one instruction per line, `;` starts a comment.
See docs/ir_grammar.ebnf for the grammar.  parse_ir and serialize_ir are
inverse up to structural equality; the serializer always emits the canonical
explicit operator form (`add.i32 x#1, 5`), while the parser additionally
accepts C-style infix sugar (`x#1 + 5`) wherever operand types are inferable.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .model import (
    BIN_OPS,
    CMP_OPS,
    UN_OPS,
    AddrOf,
    ArrayIndex,
    Assign,
    BasicBlock,
    BinOp,
    Branch,
    Call,
    CallExpr,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    DataType,
    Deref,
    Edge,
    Expression,
    IndirectJump,
    Instruction,
    Jump,
    Phi,
    Return,
    UnOp,
    VOID,
    Variable,
    int_type,
    ptr_to,
    validate_cfg,
)


class IrParseError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>;[^\n]*)
  | (?P<newline>\n)
  | (?P<var>[A-Za-z_][A-Za-z0-9_]*\#[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<hex>0x[0-9a-fA-F]+)
  | (?P<int>[0-9]+)
  | (?P<op><<|>>|<=|>=|==|!=|->|[-+*/%&|^~<>(){}\[\],:=.#])
""",
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # var | ident | int | op | newline | eof
    text: str
    value: int | None
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise IrParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "newline":
            tokens.append(Token("newline", raw, None, line, col))
            line += 1
            col = 1
        else:
            if kind == "hex":
                tokens.append(Token("int", raw, int(raw, 16), line, col))
            elif kind == "int":
                tokens.append(Token("int", raw, int(raw), line, col))
            elif kind in ("var", "ident", "op"):
                tokens.append(Token(kind, raw, None, line, col))
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", "", None, line, col))
    return tokens


_TYPE_NAMES = {"char", "void", "ptr"}
_INT_TYPE_RE = re.compile(r"^([iu])(8|16|32|64)$")

_OP_NAMES = set(BIN_OPS) | set(CMP_OPS) | set(UN_OPS) | {
    "cast",
    "deref",
    "addr_of",
    "array_index",
    "const",
}

_INFIX_LEVELS = [
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]

_INFIX_TO_OP = {
    "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
    "&": "and", "|": "or", "^": "xor", "<<": "shl", ">>": "shr",
    "==": "cmp_eq", "!=": "cmp_ne", "<": "cmp_lt", "<=": "cmp_le",
    ">": "cmp_gt", ">=": "cmp_ge",
}


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.ptr_width = 64

    # -- token helpers -------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise IrParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def expect_kind(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            self.error(f"expected {kind}, found {tok.text!r}", tok)
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def end_of_line(self):
        tok = self.next()
        if tok.kind not in ("newline", "eof"):
            self.error(f"unexpected {tok.text!r} at end of instruction", tok)

    # -- types ---------------------------------------------------------

    def parse_type(self) -> DataType:
        tok = self.expect_kind("ident")
        name = tok.text
        m = _INT_TYPE_RE.match(name)
        if m:
            return int_type(int(m.group(2)), m.group(1) == "i")
        if name == "char":
            return DataType("char", 8, False)
        if name == "void":
            return VOID
        if name == "ptr":
            pointee = None
            if self.accept("<"):
                pointee = self.parse_type()
                self.expect(">")
            return ptr_to(pointee, self.ptr_width)
        self.error(f"unknown type {name!r}", tok)

    # -- module --------------------------------------------------------

    def parse_module(self) -> list[ControlFlowGraph]:
        self.skip_newlines()
        if self.at("target"):
            self.next()
            tok = self.expect_kind("ident")
            m = re.match(r"^ptr(8|16|32|64)$", tok.text)
            if not m:
                self.error("expected pointer width such as ptr64", tok)
            self.ptr_width = int(m.group(1))
            self.end_of_line()
        functions = []
        self.skip_newlines()
        while self.at("func"):
            functions.append(self.parse_function())
            self.skip_newlines()
        if self.peek().kind != "eof":
            self.error(f"expected 'func', found {self.peek().text!r}")
        if not functions:
            raise IrParseError("no functions in input", 1, 1)
        return functions

    def parse_function(self) -> ControlFlowGraph:
        self.expect("func")
        name = self.expect_kind("ident").text
        self.expect("(")
        params: list[Variable] = []
        if not self.at(")"):
            while True:
                ptok = self.next()
                if ptok.kind not in ("var", "ident"):
                    self.error("expected parameter name", ptok)
                pname, pver = _split_var(ptok.text)
                self.expect(":")
                ptype = self.parse_type()
                params.append(Variable(pname, pver, ptype))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("->")
        rtype = self.parse_type()
        ssa_form = self.accept("ssa")
        self.expect("{")
        self.end_of_line()

        blocks: list[_RawBlock] = []
        first_tok = None
        while True:
            self.skip_newlines()
            if self.accept("}"):
                break
            tok = self.peek()
            if tok.kind == "eof":
                self.error("unexpected end of input inside function")
            if not self.at("block"):
                self.error("expected 'block'", tok)
            first_tok = first_tok or tok
            blocks.append(self.parse_block())
        if not blocks:
            self.error("function has no blocks")
        return _assemble(name, tuple(params), rtype, blocks, ssa_form, self.ptr_width)

    def parse_block(self) -> "_RawBlock":
        self.expect("block")
        tok = self.expect_kind("ident")
        self.expect(":")
        self.end_of_line()
        raw = _RawBlock(tok.text, tok)
        while True:
            self.skip_newlines()
            nxt = self.peek()
            if nxt.text in ("block", "}") or nxt.kind == "eof":
                return raw
            raw.instructions.append(self.parse_instruction(raw))

    # -- instructions (untyped pass) ------------------------------------

    def parse_instruction(self, raw: "_RawBlock"):
        tok = self.peek()
        if tok.text == "jump":
            self.next()
            target = self.expect_kind("ident").text
            self.end_of_line()
            return _RawInstr("jump", tok, targets=[target])
        if tok.text == "branch":
            self.next()
            cond = self.parse_uexpr()
            self.expect(",")
            t = self.expect_kind("ident").text
            self.expect(",")
            f = self.expect_kind("ident").text
            self.end_of_line()
            return _RawInstr("branch", tok, exprs=[cond], targets=[t, f])
        if tok.text == "switch":
            self.next()
            offset = self.parse_uexpr()
            self.expect("[")
            table: list[tuple[int, str]] = []
            while not self.at("]"):
                v = self.parse_int_literal()
                self.expect(":")
                dst = self.expect_kind("ident").text
                table.append((v, dst))
                if not self.at("]"):
                    self.expect(",")
            self.expect("]")
            self.expect("default")
            default = self.expect_kind("ident").text
            self.end_of_line()
            return _RawInstr("switch", tok, exprs=[offset], targets=[default], table=table)
        if tok.text == "return":
            self.next()
            value = None
            if self.peek().kind not in ("newline", "eof"):
                value = self.parse_uexpr()
            self.end_of_line()
            return _RawInstr("return", tok, exprs=[value] if value else [])
        if tok.text == "store":
            self.next()
            self.expect(".")
            ty = self.parse_type()
            self.expect("*")
            self.expect("(")
            addr = self.parse_uexpr()
            self.expect(")")
            self.expect(",")
            value = self.parse_uexpr()
            self.end_of_line()
            return _RawInstr("store", tok, exprs=[addr, value], dtype=ty)
        if tok.text == "call":
            return self.parse_call(tok, target=None)
        if tok.kind in ("var", "ident"):
            self.next()
            name, ver = _split_var(tok.text)
            self.expect("=")
            if self.at("phi"):
                self.next()
                phi_type = None
                if self.accept("."):
                    phi_type = self.parse_type()
                self.expect("[")
                args: list[tuple[str, "_U"]] = []
                while not self.at("]"):
                    pred = self.expect_kind("ident").text
                    self.expect(":")
                    args.append((pred, self.parse_primary_uexpr()))
                    if not self.at("]"):
                        self.expect(",")
                self.expect("]")
                self.end_of_line()
                return _RawInstr("phi", tok, target=(name, ver), phi_args=args, dtype=phi_type)
            if self.at("call"):
                return self.parse_call(tok, target=(name, ver))
            value = self.parse_uexpr(toplevel=True)
            self.end_of_line()
            return _RawInstr("assign", tok, target=(name, ver), exprs=[value])
        self.error(f"expected instruction, found {tok.text!r}", tok)

    def parse_call(self, tok: Token, target: tuple[str, int | None] | None):
        self.expect("call")
        dtype = None
        if self.accept("."):
            dtype = self.parse_type()
        callee = self.expect_kind("ident").text
        self.expect("(")
        args: list[_U] = []
        while not self.at(")"):
            args.append(self.parse_uexpr())
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        self.end_of_line()
        if target is not None and dtype is None:
            self.error("call with a target needs a result type, e.g. call.i32", tok)
        return _RawInstr("call", tok, target=target, exprs=args, callee=callee, dtype=dtype)

    def parse_int_literal(self) -> int:
        neg = self.accept("-")
        tok = self.expect_kind("int")
        return -tok.value if neg else tok.value

    # -- untyped expressions --------------------------------------------

    def parse_uexpr(self, toplevel: bool = False, level: int = 0) -> "_U":
        if toplevel:
            # Explicit top-level operator form: `add.i32 x#1, 5` without parens.
            tok = self.peek()
            if (
                tok.kind == "ident"
                and tok.text in _OP_NAMES
                and self.tokens[self.pos + 1].text == "."
            ):
                self.next()
                self.expect(".")
                ty = self.parse_type()
                args = [self.parse_uexpr()]
                while self.accept(","):
                    args.append(self.parse_uexpr())
                return _U("op", tok, opname=tok.text, dtype=ty, args=args)
            return self.parse_uexpr()
        if level >= len(_INFIX_LEVELS):
            return self.parse_primary_uexpr()
        left = self.parse_uexpr(level=level + 1)
        while self.peek().text in _INFIX_LEVELS[level]:
            op_tok = self.next()
            right = self.parse_uexpr(level=level + 1)
            left = _U("infix", op_tok, opname=op_tok.text, args=[left, right])
        return left

    def parse_primary_uexpr(self) -> "_U":
        tok = self.peek()
        if tok.text == "-":
            self.next()
            operand = self.parse_primary_uexpr()
            if operand.kind == "const":
                operand.value = -operand.value
                return operand
            return _U("neg", tok, args=[operand])
        if tok.text == "~":
            self.next()
            return _U("not", tok, args=[self.parse_primary_uexpr()])
        if tok.text == "*":
            self.next()
            self.expect("(")
            addr = self.parse_uexpr()
            self.expect(")")
            return _U("deref", tok, args=[addr])
        if tok.text == "&":
            self.next()
            vtok = self.next()
            if vtok.kind not in ("var", "ident"):
                self.error("expected variable after '&'", vtok)
            return _U("addrof", vtok, value=_split_var(vtok.text))
        if tok.text == "(":
            self.next()
            inner = self.parse_uexpr()
            self.expect(")")
            return inner
        if tok.kind == "int":
            self.next()
            return _U("const", tok, value=tok.value)
        if tok.kind in ("var", "ident"):
            # op.TY(...) form, intrinsic NAME.TY(...), or a plain variable.
            if self.tokens[self.pos + 1].text == "." and tok.kind == "ident":
                self.next()
                self.expect(".")
                ty = self.parse_type()
                self.expect("(")
                args: list[_U] = []
                while not self.at(")"):
                    args.append(self.parse_uexpr())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
                kind = "op" if tok.text in _OP_NAMES else "intrinsic"
                return _U(kind, tok, opname=tok.text, dtype=ty, args=args)
            self.next()
            return _U("var", tok, value=_split_var(tok.text))
        self.error(f"expected expression, found {tok.text!r}", tok)


def _split_var(text: str) -> tuple[str, int | None]:
    if "#" in text:
        name, _, ver = text.partition("#")
        return name, int(ver)
    return text, None


class _U:
    """Untyped expression node produced by the first parse phase."""

    __slots__ = ("kind", "tok", "opname", "dtype", "args", "value")

    def __init__(self, kind, tok, opname=None, dtype=None, args=None, value=None):
        self.kind = kind
        self.tok = tok
        self.opname = opname
        self.dtype = dtype
        self.args = args or []
        self.value = value


@dataclass
class _RawInstr:
    kind: str
    tok: Token
    target: tuple[str, int | None] | None = None
    exprs: list[_U] | None = None
    targets: list[str] | None = None
    table: list[tuple[int, str]] | None = None
    phi_args: list[tuple[str, _U]] | None = None
    callee: str | None = None
    dtype: DataType | None = None


@dataclass
class _RawBlock:
    id: str
    tok: Token
    instructions: list[_RawInstr] = None

    def __post_init__(self):
        self.instructions = []


# -- type resolution and assembly ---------------------------------------


def _u_type(u: _U, env: dict[tuple[str, int | None], DataType]) -> DataType | None:
    """Best-effort type of an untyped expression given the variable environment."""
    if u.kind == "var":
        return env.get(u.value)
    if u.kind == "op":
        if u.opname in CMP_OPS:
            return int_type(8, False)
        return u.dtype
    if u.kind == "intrinsic":
        return u.dtype
    if u.kind == "infix":
        if u.opname in ("==", "!=", "<", "<=", ">", ">="):
            return int_type(8, False)
        return _u_type(u.args[0], env) or _u_type(u.args[1], env)
    if u.kind in ("neg", "not"):
        return _u_type(u.args[0], env)
    if u.kind == "addrof":
        return None  # resolved during build
    return None  # const, deref


def _resolve_types(
    params: tuple[Variable, ...], blocks: list[_RawBlock]
) -> dict[tuple[str, int | None], DataType]:
    env = {p.key: p.dtype for p in params}
    changed = True
    while changed:
        changed = False
        for raw in blocks:
            for instr in raw.instructions:
                if instr.target is None or instr.target in env:
                    continue
                ty = None
                if instr.kind == "call":
                    ty = instr.dtype
                elif instr.kind == "phi":
                    ty = instr.dtype
                    for _, arg in instr.phi_args:
                        if ty:
                            break
                        ty = _u_type(arg, env)
                elif instr.kind == "assign":
                    ty = _u_type(instr.exprs[0], env)
                if ty is not None:
                    env[instr.target] = ty
                    changed = True
    return env


class _Builder:
    def __init__(self, env, ptr_width):
        self.env = env
        self.ptr_width = ptr_width

    def fail(self, message: str, u: _U):
        raise IrParseError(message, u.tok.line, u.tok.column)

    def build(self, u: _U, expected: DataType | None) -> Expression:
        if u.kind == "const":
            if expected is None or expected.kind == "void":
                self.fail("constant needs a typed context (use const.TY)", u)
            return Const(u.value, expected)
        if u.kind == "var":
            ty = self.env.get(u.value)
            if ty is None:
                self.fail(f"cannot infer a type for variable {u.value[0]!r}", u)
            if expected is not None and expected.width != ty.width:
                self.fail(
                    f"width mismatch: variable {u.value[0]!r} is {ty}, context wants {expected}",
                    u,
                )
            return Variable(u.value[0], u.value[1], ty)
        if u.kind == "deref":
            if expected is None:
                self.fail("untyped dereference: use deref.TY(...) here", u)
            return Deref(self.build_address(u.args[0]), expected)
        if u.kind == "addrof":
            ty = self.env.get(u.value)
            if ty is None:
                self.fail(f"cannot infer a type for variable {u.value[0]!r}", u)
            return AddrOf(Variable(u.value[0], u.value[1], ty), ptr_to(ty, self.ptr_width))
        if u.kind == "neg":
            inner = self.build(u.args[0], expected)
            return UnOp("neg", inner, inner.dtype)
        if u.kind == "not":
            inner = self.build(u.args[0], expected)
            return UnOp("not", inner, inner.dtype)
        if u.kind == "infix":
            return self.build_infix(u, expected)
        if u.kind == "intrinsic":
            args = tuple(self.build(a, None) for a in u.args)
            return CallExpr(u.opname, args, u.dtype)
        if u.kind == "op":
            return self.build_op(u, expected)
        raise AssertionError(u.kind)

    def build_address(self, u: _U) -> Expression:
        addr = self.build(u, ptr_to(None, self.ptr_width) if u.kind == "const" else None)
        if addr.dtype.width != self.ptr_width:
            self.fail(f"address expression must be {self.ptr_width} bits wide", u)
        return addr

    def build_infix(self, u: _U, expected: DataType | None) -> Expression:
        name = u.opname
        if name in ("==", "!=", "<", "<=", ">", ">="):
            lty = _u_type(u.args[0], self.env) or _u_type(u.args[1], self.env)
            if lty is None:
                self.fail("cannot infer comparison operand types (use cmp_xx.TY)", u)
            left = self.build(u.args[0], lty)
            right = self.build(u.args[1], lty)
            return Cmp(_INFIX_TO_OP[name], left, right, unsigned=not lty.signed)
        ty = expected or _u_type(u.args[0], self.env) or _u_type(u.args[1], self.env)
        if ty is None or ty.kind == "void":
            self.fail("cannot infer a type for this expression (use OP.TY form)", u)
        left = self.build(u.args[0], ty)
        right = self.build(u.args[1], ty)
        return BinOp(_INFIX_TO_OP[name], left, right, ty)

    def build_op(self, u: _U, expected: DataType | None) -> Expression:
        name, ty = u.opname, u.dtype
        if name == "const":
            if len(u.args) != 1 or u.args[0].kind != "const":
                self.fail("const.TY takes a single literal", u)
            return Const(u.args[0].value, ty)
        if name == "cast":
            self.check_arity(u, 1)
            return Cast(self.build(u.args[0], None), ty)
        if name == "deref":
            self.check_arity(u, 1)
            return Deref(self.build_address(u.args[0]), ty)
        if name == "addr_of":
            self.check_arity(u, 1)
            inner = self.build(u.args[0], None)
            if not isinstance(inner, Variable):
                self.fail("addr_of takes a variable", u)
            return AddrOf(inner, ty)
        if name == "array_index":
            self.check_arity(u, 3)
            base = self.build(u.args[0], None)
            index = self.build(u.args[1], None if u.args[1].kind != "const" else int_type(64, True))
            if u.args[2].kind != "const":
                self.fail("array_index element size must be a literal", u)
            return ArrayIndex(base, index, u.args[2].value, ty)
        if name in UN_OPS:
            self.check_arity(u, 1)
            return UnOp(name, self.build(u.args[0], ty), ty)
        if name in CMP_OPS:
            self.check_arity(u, 2)
            left = self.build(u.args[0], ty)
            right = self.build(u.args[1], ty)
            return Cmp(name, left, right, unsigned=not ty.signed)
        if name in BIN_OPS:
            self.check_arity(u, 2)
            return BinOp(name, self.build(u.args[0], ty), self.build(u.args[1], ty), ty)
        raise AssertionError(name)

    def check_arity(self, u: _U, n: int):
        if len(u.args) != n:
            self.fail(f"{u.opname} takes {n} operand(s), got {len(u.args)}", u)


def _assemble(name, params, rtype, raw_blocks, ssa_form, ptr_width) -> ControlFlowGraph:
    seen: dict[str, _RawBlock] = {}
    for raw in raw_blocks:
        if raw.id in seen:
            raise IrParseError(f"duplicate block id {raw.id!r}", raw.tok.line, raw.tok.column)
        seen[raw.id] = raw
    env = _resolve_types(params, raw_blocks)
    builder = _Builder(env, ptr_width)

    blocks: dict[str, BasicBlock] = {}
    edges: list[Edge] = []
    phi_fixups: list[tuple[str, _RawInstr]] = []
    for raw in raw_blocks:
        instrs: list[Instruction] = []
        for ri in raw.instructions:
            instrs.append(
                _build_instr(ri, raw, builder, env, edges, seen, phi_fixups, rtype)
            )
        blocks[raw.id] = BasicBlock(raw.id, instrs)

    cfg = ControlFlowGraph(name, params, rtype, blocks, edges, raw_blocks[0].id, ssa_form, ptr_width)

    preds = cfg.pred_map()
    for bid, ri in phi_fixups:
        pred_ids = sorted(e.src for e in preds[bid])
        for pb, _ in ri.phi_args:
            if pb not in pred_ids:
                raise IrParseError(
                    f"phi references {pb!r} which is not a predecessor of {bid!r}",
                    ri.tok.line,
                    ri.tok.column,
                )
    problems = validate_cfg(cfg)
    if problems:
        raise IrParseError(f"function {name!r}: " + "; ".join(problems))
    unreachable = _unreachable_blocks(cfg)
    if unreachable:
        raise IrParseError(f"function {name!r}: unreachable blocks: {', '.join(unreachable)}")
    return cfg


def _build_instr(ri, raw, builder, env, edges, seen, phi_fixups, rtype) -> Instruction:
    def check_target(dst: str):
        if dst not in seen:
            raise IrParseError(f"edge to unknown block {dst!r}", ri.tok.line, ri.tok.column)

    if ri.kind == "jump":
        check_target(ri.targets[0])
        edges.append(Edge(raw.id, ri.targets[0], "uncond"))
        return Jump()
    if ri.kind == "branch":
        for t in ri.targets:
            check_target(t)
        edges.append(Edge(raw.id, ri.targets[0], "true"))
        edges.append(Edge(raw.id, ri.targets[1], "false"))
        return Branch(builder.build(ri.exprs[0], None))
    if ri.kind == "switch":
        offset = builder.build(ri.exprs[0], None)
        values = set()
        table = []
        for v, dst in ri.table:
            check_target(dst)
            v &= (1 << offset.dtype.width) - 1
            if v in values:
                raise IrParseError(f"duplicate case value {v}", ri.tok.line, ri.tok.column)
            values.add(v)
            table.append((v, dst))
            edges.append(Edge(raw.id, dst, "case", v))
        check_target(ri.targets[0])
        edges.append(Edge(raw.id, ri.targets[0], "fallthrough"))
        return IndirectJump(offset, tuple(table))
    if ri.kind == "return":
        if ri.exprs:
            expected = rtype if rtype.kind != "void" else None
            return Return(builder.build(ri.exprs[0], expected))
        return Return(None)
    if ri.kind == "store":
        addr = builder.build_address(ri.exprs[0])
        value = builder.build(ri.exprs[1], ri.dtype)
        return Assign(Deref(addr, ri.dtype), value)
    if ri.kind == "call":
        args = tuple(builder.build(a, None) for a in ri.exprs)
        target = None
        if ri.target is not None:
            target = Variable(ri.target[0], ri.target[1], env[ri.target])
        return Call(target, ri.callee, args)
    if ri.kind == "phi":
        ty = env.get(ri.target)
        if ty is None:
            raise IrParseError(
                f"cannot infer a type for phi target {ri.target[0]!r}", ri.tok.line, ri.tok.column
            )
        args = tuple((b, builder.build(a, ty)) for b, a in ri.phi_args)
        phi_fixups.append((raw.id, ri))
        return Phi(Variable(ri.target[0], ri.target[1], ty), args)
    if ri.kind == "assign":
        ty = env.get(ri.target)
        value = builder.build(ri.exprs[0], ty)
        if ty is None:
            raise IrParseError(
                f"cannot infer a type for {ri.target[0]!r}", ri.tok.line, ri.tok.column
            )
        return Assign(Variable(ri.target[0], ri.target[1], ty), value)
    raise AssertionError(ri.kind)


def _unreachable_blocks(cfg: ControlFlowGraph) -> list[str]:
    succs = cfg.succ_map()
    seen = {cfg.entry}
    stack = [cfg.entry]
    while stack:
        for e in succs[stack.pop()]:
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return sorted(set(cfg.blocks) - seen)


def parse_ir(text: str) -> list[ControlFlowGraph]:
    """Parse a module of functions; raises IrParseError with line/column info."""
    return _Parser(text).parse_module()


# -- serialization -------------------------------------------------------


def _type_of_operands(cmp: Cmp) -> str:
    return ("u" if cmp.unsigned else "i") + str(cmp.left.dtype.width)


def render_expr(expr: Expression, toplevel: bool = False, typed_context: bool = False) -> str:
    """Canonical text for an expression.

    typed_context means the surrounding syntax already fixes this expression's
    type (operator argument positions, store values, phi arguments).
    """
    if isinstance(expr, Const):
        if typed_context:
            return str(expr.value)
        return f"const.{expr.dtype.render()} {expr.value}" if toplevel else f"const.{expr.dtype.render()}({expr.value})"
    if isinstance(expr, Variable):
        return expr.render()
    sep = (" ", ", ") if toplevel else ("(", ", ")
    close = "" if toplevel else ")"

    def form(op: str, ty: str, args: list[str]) -> str:
        return f"{op}.{ty}{sep[0]}{sep[1].join(args)}{close}"

    if isinstance(expr, BinOp):
        return form(expr.op, expr.dtype.render(),
                    [render_expr(expr.left, typed_context=True),
                     render_expr(expr.right, typed_context=True)])
    if isinstance(expr, Cmp):
        return form(expr.op, _type_of_operands(expr),
                    [render_expr(expr.left, typed_context=True),
                     render_expr(expr.right, typed_context=True)])
    if isinstance(expr, UnOp):
        return form(expr.op, expr.dtype.render(), [render_expr(expr.operand, typed_context=True)])
    if isinstance(expr, Cast):
        return form("cast", expr.dtype.render(), [render_expr(expr.operand)])
    if isinstance(expr, Deref):
        return form("deref", expr.dtype.render(), [render_expr(expr.address)])
    if isinstance(expr, AddrOf):
        return form("addr_of", expr.dtype.render(), [render_expr(expr.var)])
    if isinstance(expr, ArrayIndex):
        return form("array_index", expr.dtype.render(),
                    [render_expr(expr.base), render_expr(expr.index), str(expr.elem_size)])
    if isinstance(expr, CallExpr):
        return form(expr.callee, expr.dtype.render(), [render_expr(a) for a in expr.args])
    raise AssertionError(type(expr))


def _phis_needing_annotation(cfg: ControlFlowGraph) -> set:
    """Phi targets whose type the parser could not re-infer from arguments.

    Mirrors the parser's fixpoint: every definition form except plain copies
    and phis carries an explicit type; copies ground through their source,
    phis through any grounded variable argument.
    """
    grounded = {p.key for p in cfg.params}
    copies: list[tuple] = []
    phis: list[tuple] = []
    for bid in cfg.block_ids():
        for instr in cfg.blocks[bid].instructions:
            if isinstance(instr, Phi):
                arg_keys = [a.key for _, a in instr.args if isinstance(a, Variable)]
                phis.append((instr.target.key, arg_keys))
            elif isinstance(instr, Assign) and isinstance(instr.target, Variable):
                if isinstance(instr.value, Variable):
                    copies.append((instr.target.key, instr.value.key))
                else:
                    grounded.add(instr.target.key)
            else:
                d = instr.defined_var()
                if d is not None:
                    grounded.add(d.key)
    changed = True
    while changed:
        changed = False
        for dst, src in copies:
            if dst not in grounded and src in grounded:
                grounded.add(dst)
                changed = True
        for dst, args in phis:
            if dst not in grounded and any(a in grounded for a in args):
                grounded.add(dst)
                changed = True
    return {dst for dst, _ in phis if dst not in grounded}


def render_instr(instr: Instruction, cfg: ControlFlowGraph, block_id: str, annotate_phis: set | None = None) -> str:
    if isinstance(instr, Phi):
        args = ", ".join(f"{b}: {render_expr(v, typed_context=True)}" for b, v in instr.args)
        suffix = ""
        if annotate_phis is None or instr.target.key in annotate_phis:
            suffix = f".{instr.target.dtype.render()}"
        return f"{instr.target.render()} = phi{suffix} [{args}]"
    if isinstance(instr, Assign):
        if isinstance(instr.target, Deref):
            addr = render_expr(instr.target.address)
            value = render_expr(instr.value, typed_context=True)
            return f"store.{instr.target.dtype.render()} *({addr}), {value}"
        return f"{instr.target.render()} = {render_expr(instr.value, toplevel=True)}"
    if isinstance(instr, Call):
        args = ", ".join(render_expr(a) for a in instr.args)
        if instr.target is not None:
            return f"{instr.target.render()} = call.{instr.target.dtype.render()} {instr.callee}({args})"
        return f"call {instr.callee}({args})"
    if isinstance(instr, Return):
        if instr.value is None:
            return "return"
        return f"return {render_expr(instr.value)}"
    if isinstance(instr, Jump):
        (edge,) = cfg.successors(block_id)
        return f"jump {edge.dst}"
    if isinstance(instr, Branch):
        out = {e.kind: e.dst for e in cfg.successors(block_id)}
        return f"branch {render_expr(instr.condition)}, {out['true']}, {out['false']}"
    if isinstance(instr, IndirectJump):
        entries = ", ".join(f"{v}: {dst}" for v, dst in instr.table)
        default = next(e.dst for e in cfg.successors(block_id) if e.kind == "fallthrough")
        return f"switch {render_expr(instr.offset)} [{entries}] default {default}"
    raise AssertionError(type(instr))


def serialize_ir(cfg: ControlFlowGraph) -> str:
    """Deterministic canonical text for a CFG (blocks in id order)."""
    lines = []
    if cfg.ptr_width != 64:
        lines.append(f"target ptr{cfg.ptr_width}")
    params = ", ".join(f"{p.render()}: {p.dtype.render()}" for p in cfg.params)
    ssa = " ssa" if cfg.ssa_form else ""
    lines.append(f"func {cfg.name}({params}) -> {cfg.return_type.render()}{ssa} {{")
    annotate = _phis_needing_annotation(cfg)
    order = [cfg.entry] + [b for b in cfg.block_ids() if b != cfg.entry]
    for bid in order:
        lines.append(f"block {bid}:")
        for instr in cfg.blocks[bid].instructions:
            lines.append("    " + render_instr(instr, cfg, bid, annotate))
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_module(cfgs: list[ControlFlowGraph]) -> str:
    parts = []
    if cfgs and cfgs[0].ptr_width != 64:
        parts.append(f"target ptr{cfgs[0].ptr_width}\n")
    for cfg in cfgs:
        text = serialize_ir(cfg)
        if text.startswith("target"):
            text = text.split("\n", 1)[1]
        parts.append(text)
    return "\n".join(parts)
