"""Seeded generator of random SSA functions with reducible control flow.

Programs are generated structurally (sequences, if/else, while, do-while,
switch, conditional break/continue), so the resulting CFG is always reducible
and phi placement is exact by construction.  Loop seals can permute variable
versions, which produces the circular phi dependencies (swap patterns) the
out-of-SSA stage has to untangle.

Used by the test suite and by the CLI's --diff-test/--seeds corpus mode.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ir.model import (
    Assign,
    BasicBlock,
    BinOp,
    Branch,
    Call,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    DataType,
    Deref,
    Edge,
    IndirectJump,
    Jump,
    Phi,
    Return,
    UnOp,
    Variable,
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
    int_type,
)

ALL_TYPES = (I8, I16, I32, I64, U8, U16, U32, U64)


@dataclass
class GenConfig:
    seed: int = 0
    target_blocks: int = 12
    max_depth: int = 3
    num_params: tuple[int, int] = (1, 3)
    num_locals: tuple[int, int] = (2, 4)
    types: tuple[DataType, ...] = (I32, I64, U32, U16, U8)
    memory: bool = True
    calls: bool = True
    loops: bool = True
    switches: bool = True
    swap_phis: bool = True
    dead_conditions: bool = False  # sprinkle statically decidable branches
    max_ssa_vars: int = 10_000


@dataclass
class _Scope:
    """name -> (version, dtype) of the reaching definition."""

    versions: dict[str, tuple[int, DataType]] = field(default_factory=dict)

    def copy(self) -> "_Scope":
        return _Scope(dict(self.versions))

    def var(self, name: str) -> Variable:
        version, dtype = self.versions[name]
        return Variable(name, version, dtype)


class _Gen:
    def __init__(self, config: GenConfig, name: str):
        self.cfg_name = name
        self.config = config
        self.rng = random.Random(config.seed)
        self.blocks: dict[str, BasicBlock] = {}
        self.edges: list[Edge] = []
        self.block_counter = 0
        self.version_counter: dict[str, int] = {}
        self.total_vars = 0
        self.current: str | None = None

    # -- plumbing ---------------------------------------------------------

    def new_block(self) -> str:
        bid = f"b{self.block_counter:03d}"
        self.block_counter += 1
        self.blocks[bid] = BasicBlock(bid)
        return bid

    def emit(self, instr):
        self.blocks[self.current].instructions.append(instr)

    def new_version(self, name: str, dtype: DataType, scope: _Scope) -> Variable:
        version = self.version_counter.get(name, 0) + 1
        self.version_counter[name] = version
        scope.versions[name] = (version, dtype)
        self.total_vars += 1
        return Variable(name, version, dtype)

    def jump_to(self, target: str):
        self.emit(Jump())
        self.edges.append(Edge(self.current, target, "uncond"))

    def branch_to(self, cond, true_target: str, false_target: str):
        self.emit(Branch(cond))
        self.edges.append(Edge(self.current, true_target, "true"))
        self.edges.append(Edge(self.current, false_target, "false"))

    def over_budget(self) -> bool:
        return (
            self.block_counter >= self.config.target_blocks
            or self.total_vars >= self.config.max_ssa_vars
        )

    # -- expressions --------------------------------------------------------

    def pick_var(self, scope: _Scope, dtype: DataType | None = None) -> Variable | None:
        names = sorted(
            n for n, (_, t) in scope.versions.items() if dtype is None or t == dtype
        )
        if not names:
            return None
        return scope.var(self.rng.choice(names))

    def expr(self, scope: _Scope, dtype: DataType, depth: int = 0):
        choices = ["const", "var", "var", "bin", "bin"]
        if depth >= 2:
            choices = ["const", "var", "var"]
        if depth < 2:
            choices.append("cast")
        kind = self.rng.choice(choices)
        if kind == "var":
            var = self.pick_var(scope, dtype)
            if var is not None:
                return var
            kind = "const"
        if kind == "const":
            return Const(self.rng.randrange(0, 1 << min(dtype.width, 16)), dtype)
        if kind == "cast":
            src_type = self.rng.choice(self.config.types)
            inner = self.expr(scope, src_type, depth + 1)
            return Cast(inner, dtype)
        op = self.rng.choice(["add", "sub", "mul", "and", "or", "xor", "shl", "shr", "div", "mod"])
        left = self.expr(scope, dtype, depth + 1)
        if op in ("shl", "shr"):
            right = Const(self.rng.randrange(0, dtype.width), dtype)
        elif op in ("div", "mod"):
            right = Const(self.rng.randrange(1, 50), dtype)
        else:
            right = self.expr(scope, dtype, depth + 1)
        return BinOp(op, left, right, dtype)

    def condition(self, scope: _Scope):
        dtype = self.rng.choice(self.config.types)
        left = self.expr(scope, dtype, depth=1)
        if self.config.dead_conditions and self.rng.random() < 0.25:
            # statically decidable: masked value against an out-of-reach bound
            masked = BinOp("and", left, Const(7, dtype), dtype)
            if self.rng.random() < 0.5:
                return Cmp("cmp_lt", masked, Const(100 & ((1 << dtype.width) - 1), dtype), unsigned=True)
            return Cmp("cmp_gt", masked, Const(100 & ((1 << dtype.width) - 1), dtype), unsigned=True)
        op = self.rng.choice(["cmp_eq", "cmp_ne", "cmp_lt", "cmp_le", "cmp_gt", "cmp_ge"])
        right = self.expr(scope, dtype, depth=2)
        return Cmp(op, left, right, unsigned=not dtype.signed)

    def address(self, scope: _Scope):
        """A pointer-sized address guaranteed to stay inside scratch memory."""
        base = Const(0x100 + 8 * self.rng.randrange(0, 32), int_type(64, False))
        var = self.pick_var(scope)
        if var is None or self.rng.random() < 0.4:
            return base
        index = Cast(var, int_type(64, False)) if var.dtype.width != 64 else var
        masked = BinOp("and", index, Const(0xFF, index.dtype), index.dtype)
        return BinOp("add", base, masked, int_type(64, False))

    # -- statements -----------------------------------------------------------

    def statements(self, scope: _Scope, depth: int, loop_ctx):
        """Emit a run of statements into the current block; may create blocks."""
        count = self.rng.randrange(1, 4)
        for _ in range(count):
            roll = self.rng.random()
            if depth < self.config.max_depth and not self.over_budget():
                if roll < 0.25:
                    self.gen_if(scope, depth, loop_ctx)
                    continue
                if roll < 0.38 and self.config.loops:
                    self.gen_loop(scope, depth)
                    continue
                if roll < 0.46 and self.config.switches:
                    self.gen_switch(scope, depth, loop_ctx)
                    continue
            if loop_ctx is not None and roll > 0.92:
                self.gen_loop_interrupt(scope, loop_ctx)
                return  # control left this block
            self.gen_simple(scope)

    def gen_simple(self, scope: _Scope):
        roll = self.rng.random()
        if self.config.memory and roll < 0.15:
            dtype = self.rng.choice((U8, U16, U32, I64))
            self.emit(Assign(Deref(self.address(scope), dtype), self.expr(scope, dtype, depth=1)))
            return
        if self.config.memory and roll < 0.25:
            dtype = self.rng.choice((U8, U16, U32, I64))
            name = self.pick_local_name(scope)
            load = Deref(self.address(scope), dtype)
            self.emit(Assign(self.new_version(name, dtype, scope), load))
            return
        if self.config.calls and roll < 0.33:
            args = tuple(
                v for v in [self.pick_var(scope), self.pick_var(scope)] if v is not None
            )
            if roll < 0.29 and args:
                self.emit(Call(None, "printf", (Const(0x4000, int_type(64, False)),) + args))
            else:
                name = self.pick_local_name(scope)
                target = self.new_version(name, I64, scope)
                self.emit(Call(target, self.rng.choice(["ext1", "ext2", "ext3"]), args))
            return
        dtype = self.rng.choice(self.config.types)
        name = self.pick_local_name(scope)
        value = self.expr(scope, dtype)
        self.emit(Assign(self.new_version(name, dtype, scope), value))

    def pick_local_name(self, scope: _Scope) -> str:
        known = sorted(n for n in scope.versions if not n.startswith("fz"))
        if known and self.rng.random() < 0.75:
            return self.rng.choice(known)
        return f"v{len(self.version_counter)}"

    # -- control flow -----------------------------------------------------------

    def gen_if(self, scope: _Scope, depth: int, loop_ctx):
        cond = self.condition(scope)
        then_id = self.new_block()
        else_id = self.new_block() if self.rng.random() < 0.6 else None
        join_id = self.new_block()
        self.branch_to(cond, then_id, else_id or join_id)

        incomings = []
        self.current = then_id
        then_scope = scope.copy()
        self.statements(then_scope, depth + 1, loop_ctx)
        if self.current is not None:
            self.jump_to(join_id)
            incomings.append((self.current, then_scope))
        if else_id is not None:
            self.current = else_id
            else_scope = scope.copy()
            self.statements(else_scope, depth + 1, loop_ctx)
            if self.current is not None:
                self.jump_to(join_id)
                incomings.append((self.current, else_scope))
        else:
            incomings.append((None, scope.copy()))  # fall-through edge from the branch

        # the fall-through case: the branch block itself is a predecessor
        fixed = []
        branch_block = [e.src for e in self.edges if e.dst == join_id and e.kind == "false"]
        for src, sc in incomings:
            fixed.append((src if src is not None else branch_block[0], sc))
        if not fixed:
            # both arms broke out of a loop: join is unreachable; recycle it
            del self.blocks[join_id]
            self.current = None
            return
        self.current = join_id
        self.seal_join(join_id, fixed, scope)

    def seal_join(self, join_id: str, incomings, scope: _Scope):
        """Insert phis for names whose reaching version differs per predecessor."""
        names = set.intersection(*(set(sc.versions) for _, sc in incomings))
        phis = []
        for name in sorted(names):
            entries = [(src, sc.versions[name]) for src, sc in incomings]
            dtypes = {t for _, (_, t) in entries}
            if len(dtypes) > 1:
                continue  # conflicting types: drop the name from scope
            dtype = dtypes.pop()
            versions = {v for _, (v, _) in entries}
            if len(versions) == 1:
                scope.versions[name] = (versions.pop(), dtype)
                continue
            target = self.new_version(name, dtype, scope)
            args = tuple((src, Variable(name, v, t)) for src, (v, t) in sorted(entries))
            phis.append(Phi(target, args))
        dropped = set(scope.versions) - names
        for name in dropped:
            del scope.versions[name]
        self.blocks[join_id].instructions[:0] = phis

    def gen_loop(self, scope: _Scope, depth: int):
        preheader = self.current
        header = self.new_block()
        body = self.new_block()
        follow = self.new_block()
        latch = self.new_block()

        # every generated loop carries a fuse counter bounding its trip count,
        # so corpus runs never depend on the interpreter's fuel limit
        fuse = f"fz{self.block_counter}"
        trip_limit = self.rng.randrange(2, 13)
        fuse_init = self.new_version(fuse, U32, scope)
        self.emit(Assign(fuse_init, Const(0, U32)))
        self.jump_to(header)

        # header phis: one per name, pessimistically; latch args fixed at seal time
        header_scope = scope.copy()
        phi_meta = []
        for name in sorted(scope.versions):
            _, dtype = scope.versions[name]
            pre_var = scope.var(name)
            target = self.new_version(name, dtype, header_scope)
            phi_meta.append((name, target, pre_var))

        loop_ctx = {"break": follow, "continue": latch, "break_in": [], "continue_in": []}
        self.current = header
        fuse_guard = Cmp("cmp_lt", header_scope.var(fuse), Const(trip_limit, U32), unsigned=True)
        cond = BinOp("and", self.condition(header_scope), fuse_guard, U8)
        self.branch_to(cond, body, follow)

        body_scope = header_scope.copy()
        self.current = body
        bumped = BinOp("add", body_scope.var(fuse), Const(1, U32), U32)
        self.emit(Assign(self.new_version(fuse, U32, body_scope), bumped))
        self.statements(body_scope, depth + 1, loop_ctx)
        if self.current is not None:
            self.jump_to(latch)
            loop_ctx["continue_in"].append((self.current, body_scope))

        # seal the latch: merge normal body exit with continue edges
        self.current = latch
        latch_scope = scope.copy()
        if loop_ctx["continue_in"]:
            self.seal_join(latch, loop_ctx["continue_in"], latch_scope)
        else:
            # body always breaks; the latch is unreachable but must stay valid
            latch_scope = header_scope.copy()
        self.jump_to(header)

        # the variable flowing back for each name on the latch edge
        latch_args = {n: latch_scope.var(n) for n in latch_scope.versions}
        # optionally rotate same-typed slots: models compiled-away parallel
        # copies (a, b = b, a) and yields circular phi dependencies
        if self.config.swap_phis and self.rng.random() < 0.4:
            by_type: dict = {}
            for name in sorted(latch_args):
                if name.startswith("fz"):
                    continue
                by_type.setdefault(latch_args[name].dtype.render(), []).append(name)
            for names in by_type.values():
                if len(names) >= 2 and self.rng.random() < 0.7:
                    rotated = [latch_args[n] for n in names[1:] + names[:1]]
                    for n, arg in zip(names, rotated):
                        latch_args[n] = arg

        # finish header phis now that the latch-edge values are known
        phis = []
        header_block = self.blocks[header]
        for name, target, pre_var in phi_meta:
            latch_arg = latch_args.get(name)
            if latch_arg is None or latch_arg.dtype != pre_var.dtype:
                latch_arg = Variable(target.name, target.version, target.dtype)
            phis.append(Phi(target, ((preheader, pre_var), (latch, latch_arg))))
        header_block.instructions[:0] = phis

        # seal the follow block: preds are the header false edge plus breaks
        follow_incomings = [(header, header_scope)] + loop_ctx["break_in"]
        self.current = follow
        scope.versions.clear()
        scope.versions.update(header_scope.versions)
        self.seal_join(follow, follow_incomings, scope)

    def gen_loop_interrupt(self, scope: _Scope, loop_ctx):
        """Conditional break or continue out of the middle of a loop body."""
        cond = self.condition(scope)
        kind = "break" if self.rng.random() < 0.6 else "continue"
        stay = self.new_block()
        self.branch_to(cond, loop_ctx[kind], stay)
        loop_ctx[kind + "_in"].append((self.current, scope.copy()))
        self.current = stay

    def gen_switch(self, scope: _Scope, depth: int, loop_ctx):
        var = self.pick_var(scope)
        if var is None:
            self.gen_simple(scope)
            return
        n_cases = self.rng.randrange(2, 5)
        join = self.new_block()
        case_blocks = [self.new_block() for _ in range(n_cases)]
        default = self.new_block()
        values = self.rng.sample(range(0, 8), n_cases)
        table = []
        switch_src = self.current
        for v, blk in zip(values, case_blocks):
            table.append((v & ((1 << var.dtype.width) - 1), blk))
        self.emit(IndirectJump(var, tuple(table)))
        for v, blk in table:
            self.edges.append(Edge(switch_src, blk, "case", v))
        self.edges.append(Edge(switch_src, default, "fallthrough"))

        incomings = []
        for blk in case_blocks + [default]:
            self.current = blk
            arm_scope = scope.copy()
            self.statements(arm_scope, depth + 1, loop_ctx)
            if self.current is not None:
                self.jump_to(join)
                incomings.append((self.current, arm_scope))
        if not incomings:
            del self.blocks[join]
            self.current = None
            return
        self.current = join
        self.seal_join(join, incomings, scope)

    # -- whole function -----------------------------------------------------------

    def generate(self) -> ControlFlowGraph:
        rng = self.rng
        n_params = rng.randrange(self.config.num_params[0], self.config.num_params[1] + 1)
        params = tuple(
            Variable(f"p{i}", 0, rng.choice(self.config.types)) for i in range(n_params)
        )
        scope = _Scope({p.name: (0, p.dtype) for p in params})
        for p in params:
            self.version_counter[p.name] = 0
        return_type = rng.choice(self.config.types)

        entry = self.new_block()
        self.current = entry
        n_locals = rng.randrange(self.config.num_locals[0], self.config.num_locals[1] + 1)
        for i in range(n_locals):
            dtype = rng.choice(self.config.types)
            value = self.expr(scope, dtype, depth=1)
            self.emit(Assign(self.new_version(f"v{i}", dtype, scope), value))

        self.statements(scope, 0, None)
        while not self.over_budget() and rng.random() < 0.5:
            self.statements(scope, 0, None)

        if self.current is not None:
            ret_var = self.pick_var(scope, return_type)
            value = ret_var if ret_var is not None else self.expr(scope, return_type, depth=2)
            self.emit(Return(value))

        cfg = ControlFlowGraph(
            self.cfg_name, params, return_type, self.blocks, self.edges, entry, ssa_form=True
        )
        _prune_unreachable(cfg)
        return cfg


def _prune_unreachable(cfg: ControlFlowGraph):
    """Drop blocks orphaned by always-interrupting arms and fix phi arities."""
    while True:
        succs = cfg.succ_map()
        reachable = {cfg.entry}
        stack = [cfg.entry]
        while stack:
            for e in succs[stack.pop()]:
                if e.dst not in reachable:
                    reachable.add(e.dst)
                    stack.append(e.dst)
        if reachable == set(cfg.blocks):
            return
        cfg.blocks = {b: blk for b, blk in cfg.blocks.items() if b in reachable}
        cfg.edges = [e for e in cfg.edges if e.src in reachable and e.dst in reachable]
        for block in cfg.blocks.values():
            block.instructions = [
                Phi(i.target, tuple((b, v) for b, v in i.args if b in reachable))
                if isinstance(i, Phi)
                else i
                for i in block.instructions
            ]


def generate_function(seed: int, config: GenConfig | None = None, name: str | None = None) -> ControlFlowGraph:
    """Deterministic random SSA function for the given seed."""
    config = config or GenConfig()
    if config.seed != seed:
        config = GenConfig(**{**config.__dict__, "seed": seed})
    return _Gen(config, name or f"fn_{seed}").generate()


def random_inputs(cfg: ControlFlowGraph, count: int, seed: int = 0) -> list[list[int]]:
    """Argument vectors covering small, boundary and full-width values."""
    rng = random.Random(seed ^ 0x5EED)
    vectors = []
    for _ in range(count):
        vec = []
        for p in cfg.params:
            roll = rng.random()
            if roll < 0.3:
                vec.append(rng.randrange(0, 8))
            elif roll < 0.5:
                vec.append((1 << p.dtype.width) - rng.randrange(1, 4))
            else:
                vec.append(rng.randrange(0, 1 << p.dtype.width))
        vectors.append(vec)
    return vectors
