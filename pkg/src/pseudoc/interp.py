"""Deterministic interpreter for CFG IR and for the structured AST.

This is the semantic-equivalence oracle: every transformation pass is checked
by running the program before and after on shared inputs and comparing
outcomes (diff_test).  Arithmetic is two's-complement with wrap-around; memory
is a single little-endian scratch array; external calls go through a stub
table so every run is reproducible.

Not modelled: floating point, syscalls, threads, taking the address of a
register variable.  Recursion is capped at a fixed frame depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .ir.model import (
    AddrOf,
    ArrayIndex,
    Assign,
    BinOp,
    Branch,
    Call,
    CallExpr,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    Deref,
    Expression,
    IndirectJump,
    Jump,
    Phi,
    Return,
    UnOp,
    Variable,
)

MAX_FRAMES = 256
DEFAULT_MEMORY = 64 * 1024
HEAP_BASE = 0x8000


class InterpError(Exception):
    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


@dataclass(frozen=True)
class MachineValue:
    """Width-limited unsigned payload; signed views are computed on demand."""

    bits: int
    width: int

    def __post_init__(self):
        assert 0 <= self.bits < (1 << self.width), "payload exceeds width"

    @property
    def signed(self) -> int:
        if self.bits >= 1 << (self.width - 1):
            return self.bits - (1 << self.width)
        return self.bits

    def __repr__(self):
        return f"{self.bits}:u{self.width}"


def mv(value: int, width: int) -> MachineValue:
    return MachineValue(value & ((1 << width) - 1), width)


@dataclass
class ExecTrace:
    returned: MachineValue | None = None
    visited: list[str] = field(default_factory=list)
    steps: int = 0
    writes: list[tuple[int, int, int]] = field(default_factory=list)  # (addr, width, bits)
    prints: list[str] = field(default_factory=list)
    error: str | None = None

    def outcome(self) -> tuple:
        """The part of a run that diff_test compares."""
        ret = (self.returned.bits, self.returned.width) if self.returned else None
        return (self.error, ret, tuple(self.writes), tuple(self.prints))


@dataclass
class Stubs:
    """External-call behaviour.

    pure maps a callee name to a recorded list of return values, replayed per
    call (the last one repeats); scanf_queue feeds scanf; systime_bytes is the
    block filled in by GetSystemTime.
    """

    pure: dict[str, list[int]] = field(default_factory=dict)
    scanf_queue: list[int] = field(default_factory=list)
    systime_bytes: bytes = bytes((17 * i + 3) & 0xFF for i in range(16))

    def fresh_state(self) -> dict:
        return {"pure_idx": {}, "scanf_idx": 0, "heap": HEAP_BASE}


# Stateless mixing functions usable as always-available pure externals.
def _mix(args: list[MachineValue], width: int) -> int:
    h = 0x9E3779B97F4A7C15
    for a in args:
        h ^= a.bits + 0x9E3779B9 + ((h << 6) & (1 << 64) - 1) + (h >> 2)
        h &= (1 << 64) - 1
    return h & ((1 << width) - 1)


class _Machine:
    def __init__(self, module: dict[str, ControlFlowGraph], stubs: Stubs, fuel: int, memory_size: int):
        self.module = module
        self.stubs = stubs
        self.fuel = fuel
        self.memory = bytearray(memory_size)
        self.trace = ExecTrace()
        self.state = stubs.fresh_state()
        self.depth = 0

    # -- bookkeeping ------------------------------------------------------

    def tick(self):
        self.trace.steps += 1
        if self.trace.steps > self.fuel:
            raise InterpError("fuel-exhausted", f"budget of {self.fuel} steps")

    def load(self, addr: int, width: int) -> int:
        nbytes = width // 8
        if addr < 0 or addr + nbytes > len(self.memory):
            raise InterpError("oob-memory", f"load of {nbytes} bytes at {addr:#x}")
        return int.from_bytes(self.memory[addr : addr + nbytes], "little")

    def store(self, addr: int, width: int, bits: int):
        nbytes = width // 8
        if addr < 0 or addr + nbytes > len(self.memory):
            raise InterpError("oob-memory", f"store of {nbytes} bytes at {addr:#x}")
        self.memory[addr : addr + nbytes] = bits.to_bytes(nbytes, "little")
        self.trace.writes.append((addr, width, bits))

    # -- expressions --------------------------------------------------------

    def eval(self, expr: Expression, env: dict) -> MachineValue:
        if isinstance(expr, Const):
            return mv(expr.value, expr.dtype.width)
        if isinstance(expr, Variable):
            try:
                return env[expr.key]
            except KeyError:
                raise InterpError("uninitialized", f"read of {expr.render()}") from None
        if isinstance(expr, BinOp):
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            return self.binop(expr.op, left, right, expr.dtype.width, expr.dtype.signed)
        if isinstance(expr, Cmp):
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            return mv(int(self.compare(expr.op, left, right, expr.unsigned)), 8)
        if isinstance(expr, UnOp):
            val = self.eval(expr.operand, env)
            if expr.op == "neg":
                return mv(-val.bits, val.width)
            return mv(~val.bits, val.width)
        if isinstance(expr, Cast):
            val = self.eval(expr.operand, env)
            src = expr.operand.dtype
            if expr.dtype.width <= val.width:
                return mv(val.bits, expr.dtype.width)
            extended = val.signed if (src.kind == "int" and src.signed) else val.bits
            return mv(extended, expr.dtype.width)
        if isinstance(expr, Deref):
            addr = self.eval(expr.address, env)
            return mv(self.load(addr.bits, expr.dtype.width), expr.dtype.width)
        if isinstance(expr, ArrayIndex):
            return mv(self.load(self.element_address(expr, env), expr.dtype.width), expr.dtype.width)
        if isinstance(expr, AddrOf):
            raise InterpError("unsupported", "address of a register variable")
        if isinstance(expr, CallExpr):
            args = [self.eval(a, env) for a in expr.args]
            return self.pure_call(expr.callee, args, expr.dtype.width)
        raise AssertionError(type(expr))

    def element_address(self, expr: ArrayIndex, env: dict) -> int:
        base = self.eval(expr.base, env)
        index = self.eval(expr.index, env)
        offset = index.signed if expr.index.dtype.signed else index.bits
        return (base.bits + offset * expr.elem_size) & ((1 << base.width) - 1)

    @staticmethod
    def binop(op: str, left: MachineValue, right: MachineValue, width: int, signed: bool) -> MachineValue:
        a, b = left.bits, right.bits
        if op == "add":
            return mv(a + b, width)
        if op == "sub":
            return mv(a - b, width)
        if op == "mul":
            return mv(a * b, width)
        if op == "and":
            return mv(a & b, width)
        if op == "or":
            return mv(a | b, width)
        if op == "xor":
            return mv(a ^ b, width)
        if op == "shl":
            return mv(a << (b & (width - 1)), width)
        if op == "shr":
            amount = b & (width - 1)
            if signed:
                return mv(left.signed >> amount, width)
            return mv(a >> amount, width)
        if op in ("div", "mod"):
            if b == 0:
                raise InterpError("div-by-zero")
            if signed:
                sa, sb = left.signed, right.signed
                q = abs(sa) // abs(sb)
                if (sa < 0) != (sb < 0):
                    q = -q
                return mv(q if op == "div" else sa - q * sb, width)
            return mv(a // b if op == "div" else a % b, width)
        raise AssertionError(op)

    @staticmethod
    def compare(op: str, left: MachineValue, right: MachineValue, unsigned: bool) -> bool:
        a = left.bits if unsigned else left.signed
        b = right.bits if unsigned else right.signed
        return {
            "cmp_eq": a == b,
            "cmp_ne": a != b,
            "cmp_lt": a < b,
            "cmp_le": a <= b,
            "cmp_gt": a > b,
            "cmp_ge": a >= b,
        }[op]

    # -- calls ---------------------------------------------------------------

    def pure_call(self, name: str, args: list[MachineValue], width: int) -> MachineValue:
        if name == "abs":
            return mv(abs(args[0].signed), width)
        if name in ("ext1", "ext2", "ext3"):
            salt = {"ext1": 1, "ext2": 2, "ext3": 3}[name]
            return mv(_mix(args, 64) ^ salt, width)
        if name in self.stubs.pure:
            seq = self.stubs.pure[name]
            idx = self.state["pure_idx"].get(name, 0)
            self.state["pure_idx"][name] = idx + 1
            return mv(seq[min(idx, len(seq) - 1)], width)
        raise InterpError("unstubbed-call", name)

    def call(self, callee: str, args: list[MachineValue], result_width: int | None) -> MachineValue | None:
        if callee in self.module:
            return self.run_function(self.module[callee], args)
        if callee == "printf":
            fmt = args[0].bits if args else 0
            rendered = " ".join(str(a.bits) for a in args[1:])
            self.trace.prints.append(f"printf@{fmt:#x}:{rendered}")
            return mv(0, result_width or 32)
        if callee == "scanf":
            if len(args) < 2:
                raise InterpError("unstubbed-call", "scanf needs a destination pointer")
            idx = self.state["scanf_idx"]
            queue = self.stubs.scanf_queue
            value = queue[idx] if idx < len(queue) else 0
            self.state["scanf_idx"] = idx + 1
            self.store(args[1].bits, 64, value & ((1 << 64) - 1))
            return mv(1, result_width or 32)
        if callee == "strlen":
            addr = args[0].bits
            n = 0
            while self.load(addr + n, 8) != 0:
                n += 1
            return mv(n, result_width or 64)
        if callee == "strcat":
            dst, src = args[0].bits, args[1].bits
            end = dst
            while self.load(end, 8) != 0:
                end += 1
            i = 0
            while True:
                byte = self.load(src + i, 8)
                self.store(end + i, 8, byte)
                if byte == 0:
                    break
                i += 1
            return mv(dst, result_width or 64)
        if callee == "malloc":
            size = args[0].bits if args else 0
            addr = self.state["heap"]
            self.state["heap"] = (addr + size + 15) & ~15
            if self.state["heap"] > len(self.memory):
                raise InterpError("oob-memory", "heap exhausted")
            return mv(addr, result_width or 64)
        if callee == "GetTickCount":
            return self.pure_call(callee, args, result_width or 32) if callee in self.stubs.pure else mv(0x1234ABCD, result_width or 32)
        if callee == "GetSystemTime":
            addr = args[0].bits
            for i, byte in enumerate(self.stubs.systime_bytes):
                self.store(addr + i, 8, byte)
            return mv(0, result_width or 32)
        return self.pure_call(callee, args, result_width or 64)

    # -- CFG execution ---------------------------------------------------------

    def run_function(self, cfg: ControlFlowGraph, args: list[MachineValue]) -> MachineValue | None:
        if len(args) != len(cfg.params):
            raise InterpError("bad-arity", f"{cfg.name} takes {len(cfg.params)} arguments")
        if self.depth >= MAX_FRAMES:
            raise InterpError("stack-overflow", f"more than {MAX_FRAMES} frames")
        self.depth += 1
        env: dict = {}
        for p, a in zip(cfg.params, args):
            if a.width != p.dtype.width:
                raise InterpError("bad-arity", f"argument for {p.render()} has width {a.width}")
            env[p.key] = a
        succs = cfg.succ_map()
        current = cfg.entry
        previous: str | None = None
        try:
            while True:
                self.trace.visited.append(f"{cfg.name}:{current}")
                block = cfg.blocks[current]
                phis = [i for i in block.instructions if isinstance(i, Phi)]
                if phis:
                    incoming = []
                    for phi in phis:
                        self.tick()
                        incoming.append((phi.target.key, self.eval(phi.arg_for(previous), env)))
                    for key, value in incoming:
                        env[key] = value
                for instr in block.instructions[len(phis) :]:
                    self.tick()
                    if isinstance(instr, Assign):
                        value = self.eval(instr.value, env)
                        if isinstance(instr.target, Variable):
                            env[instr.target.key] = value
                        elif isinstance(instr.target, Deref):
                            addr = self.eval(instr.target.address, env)
                            self.store(addr.bits, instr.target.dtype.width, value.bits)
                        elif isinstance(instr.target, ArrayIndex):
                            addr = self.element_address(instr.target, env)
                            self.store(addr, instr.target.dtype.width, value.bits)
                        else:
                            raise InterpError("unsupported", f"assignment target {instr.target}")
                    elif isinstance(instr, Call):
                        width = instr.target.dtype.width if instr.target else None
                        result = self.call(instr.callee, [self.eval(a, env) for a in instr.args], width)
                        if instr.target is not None:
                            env[instr.target.key] = mv(result.bits, instr.target.dtype.width)
                    elif isinstance(instr, Return):
                        return self.eval(instr.value, env) if instr.value is not None else None
                    elif isinstance(instr, Jump):
                        previous, current = current, succs[current][0].dst
                        break
                    elif isinstance(instr, Branch):
                        taken = self.eval(instr.condition, env).bits != 0
                        kind = "true" if taken else "false"
                        target = next(e.dst for e in succs[current] if e.kind == kind)
                        previous, current = current, target
                        break
                    elif isinstance(instr, IndirectJump):
                        value = self.eval(instr.offset, env).bits
                        target = None
                        for v, dst in instr.table:
                            if v == value:
                                target = dst
                                break
                        if target is None:
                            target = next(e.dst for e in succs[current] if e.kind == "fallthrough")
                        previous, current = current, target
                        break
                    else:
                        raise AssertionError(type(instr))
                else:
                    raise InterpError("fell-off-block", current)
        finally:
            self.depth -= 1


def _as_module(cfg: ControlFlowGraph, module) -> dict[str, ControlFlowGraph]:
    table = {cfg.name: cfg}
    if module:
        for other in module if not isinstance(module, dict) else module.values():
            table.setdefault(other.name, other)
    return table


def run_cfg(
    cfg: ControlFlowGraph,
    args: list[MachineValue],
    fuel: int = 1_000_000,
    *,
    stubs: Stubs | None = None,
    module=None,
    memory_size: int = DEFAULT_MEMORY,
) -> ExecTrace:
    """Execute a CFG; trap conditions are recorded in trace.error."""
    machine = _Machine(_as_module(cfg, module), stubs or Stubs(), fuel, memory_size)
    try:
        machine.trace.returned = machine.run_function(cfg, args)
    except InterpError as exc:
        machine.trace.error = exc.kind
    return machine.trace


def eval_expression(expr: Expression, env: dict[tuple, MachineValue]) -> MachineValue:
    """Evaluate a side-effect-free expression against a variable environment."""
    machine = _Machine({}, Stubs(), fuel=1 << 30, memory_size=0)
    return machine.eval(expr, env)


def make_args(cfg: ControlFlowGraph, values: list[int]) -> list[MachineValue]:
    """Wrap raw integers into machine values matching the parameter widths."""
    if len(values) != len(cfg.params):
        raise ValueError(f"{cfg.name} takes {len(cfg.params)} arguments")
    return [mv(v, p.dtype.width) for v, p in zip(values, cfg.params)]


# -- AST execution -------------------------------------------------------------


class _BreakSignal(Exception):
    pass


class _ContinueSignal(Exception):
    pass


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class _AstMachine(_Machine):
    def __init__(self, module, stubs, fuel, memory_size):
        super().__init__(module, stubs, fuel, memory_size)

    def run_ast_function(self, func, args: list[MachineValue]) -> MachineValue | None:
        from .structuring.astnodes import FunctionAst

        assert isinstance(func, FunctionAst)
        if len(args) != len(func.params):
            raise InterpError("bad-arity", f"{func.name} takes {len(func.params)} arguments")
        env: dict = {p.key: a for p, a in zip(func.params, args)}
        try:
            self.exec_node(func.body, env)
        except _ReturnSignal as sig:
            return sig.value
        return None

    def eval_condition(self, cond, env) -> bool:
        from .logic import eval_term

        def leaf(atom: Expression) -> int:
            return self.eval(atom, env).bits

        self.tick()
        return eval_term(cond, leaf) != 0

    def exec_node(self, node, env: dict):
        from .structuring import astnodes as A

        if isinstance(node, A.Seq):
            for child in node.children:
                self.exec_node(child, env)
        elif isinstance(node, A.Code):
            for instr in node.instructions:
                self.tick()
                self.exec_simple(instr, env)
        elif isinstance(node, A.CondNode):
            if self.eval_condition(node.condition, env):
                self.exec_node(node.then, env)
            elif node.orelse is not None:
                self.exec_node(node.orelse, env)
        elif isinstance(node, A.Loop):
            self.exec_loop(node, env)
        elif isinstance(node, A.Switch):
            self.exec_switch(node, env)
        elif isinstance(node, A.Break):
            raise _BreakSignal()
        elif isinstance(node, A.Continue):
            raise _ContinueSignal()
        elif isinstance(node, A.AstReturn):
            self.tick()
            value = self.eval(node.value, env) if node.value is not None else None
            raise _ReturnSignal(value)
        else:
            raise AssertionError(type(node))

    def exec_simple(self, instr, env):
        if isinstance(instr, Assign):
            value = self.eval(instr.value, env)
            if isinstance(instr.target, Variable):
                env[instr.target.key] = value
            elif isinstance(instr.target, Deref):
                addr = self.eval(instr.target.address, env)
                self.store(addr.bits, instr.target.dtype.width, value.bits)
            elif isinstance(instr.target, ArrayIndex):
                self.store(self.element_address(instr.target, env), instr.target.dtype.width, value.bits)
            else:
                raise InterpError("unsupported", f"assignment target {instr.target}")
        elif isinstance(instr, Call):
            width = instr.target.dtype.width if instr.target else None
            result = self.call(instr.callee, [self.eval(a, env) for a in instr.args], width)
            if instr.target is not None:
                env[instr.target.key] = mv(result.bits, instr.target.dtype.width)
        elif isinstance(instr, Return):
            value = self.eval(instr.value, env) if instr.value is not None else None
            raise _ReturnSignal(value)
        else:
            raise InterpError("unsupported", f"instruction {instr} in AST code node")

    def exec_loop(self, node, env):
        if node.init is not None:
            self.tick()
            self.exec_simple(node.init, env)
        first = True
        while True:
            if node.kind in ("while", "for") and not self.eval_condition(node.guard, env):
                break
            if node.kind == "do_while" and not first and not self.eval_condition(node.guard, env):
                break
            first = False
            try:
                self.exec_node(node.body, env)
            except _BreakSignal:
                break
            except _ContinueSignal:
                pass
            if node.kind == "for" and node.update is not None:
                self.tick()
                self.exec_simple(node.update, env)

    def exec_switch(self, node, env):
        self.tick()
        subject = self.eval(node.subject, env).bits
        bodies = []
        matched = False
        for case in node.cases:
            if matched or subject in case.values:
                matched = True
                bodies.append(case.body)
                if not case.fallthrough:
                    break
        if not matched and node.default is not None:
            bodies.append(node.default)
        try:
            for body in bodies:
                self.exec_node(body, env)
        except _BreakSignal:
            pass


def run_ast(
    func,
    args: list[MachineValue],
    fuel: int = 1_000_000,
    *,
    stubs: Stubs | None = None,
    module=None,
    memory_size: int = DEFAULT_MEMORY,
) -> ExecTrace:
    """Execute a structured FunctionAst with the same semantics as run_cfg."""
    table = {}
    if module:
        for other in module if not isinstance(module, dict) else module.values():
            table[other.name] = other
    machine = _AstMachine(table, stubs or Stubs(), fuel, memory_size)
    try:
        machine.trace.returned = machine.run_ast_function(func, args)
    except InterpError as exc:
        machine.trace.error = exc.kind
    return machine.trace


# -- differential comparison ----------------------------------------------------


@dataclass
class DiffVerdict:
    passed: bool
    checked: int
    mismatch_input: list[int] | None = None
    before_outcome: tuple | None = None
    after_outcome: tuple | None = None

    def __bool__(self):
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"PASS ({self.checked} inputs)"
        return (
            f"FAIL on input {self.mismatch_input}: "
            f"{self.before_outcome} vs {self.after_outcome}"
        )


def _run_side(program, args, fuel, stubs, module) -> ExecTrace:
    from .structuring.astnodes import FunctionAst

    if isinstance(program, FunctionAst):
        return run_ast(program, args, fuel, stubs=stubs, module=module)
    return run_cfg(program, args, fuel, stubs=stubs, module=module)


def diff_test(
    before: ControlFlowGraph,
    after,
    inputs: list[list[int]],
    fuel: int = 1_000_000,
    *,
    stubs: Stubs | None = None,
    module=None,
) -> DiffVerdict:
    """Run both program forms on every input; compare returns, memory writes
    and the print log.  A mismatch in error behaviour (one side traps, the
    other returns) is a failure; identical traps on both sides match.
    """
    stubs = stubs or Stubs()
    for raw in inputs:
        args = [mv(v, p.dtype.width) for v, p in zip(raw, before.params)]
        t1 = _run_side(before, args, fuel, stubs, module)
        t2 = _run_side(after, args, fuel, stubs, module)
        if t1.outcome() != t2.outcome():
            return DiffVerdict(False, len(inputs), list(raw), t1.outcome(), t2.outcome())
    return DiffVerdict(True, len(inputs))
