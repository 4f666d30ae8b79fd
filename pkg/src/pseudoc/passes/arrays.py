"""Array-access detection.

Dereferences of the shape *(base + offset) against a pointer-typed base
variable become base[index] nodes when every access of that base agrees on
one element size that also matches the access width, and at least one access
uses a computed (non-constant) index.  Bases with mixed strides or widths are
left alone.  The rewrite keeps the exact address arithmetic: index
expressions stay pointer width, so base + index*size is bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..ir.model import (
    ArrayIndex,
    Assign,
    BinOp,
    Const,
    ControlFlowGraph,
    Deref,
    Expression,
    Phi,
    Variable,
    int_type,
)


@dataclass
class _Access:
    base: Variable
    index: Expression | None  # None for constant offsets
    offset: int  # byte offset when index is None
    stride: int  # element size implied by the address computation
    width_bytes: int


def _classify(addr: Expression, width_bytes: int) -> _Access | None:
    if isinstance(addr, Variable) and addr.dtype.is_pointer:
        return _Access(addr, None, 0, width_bytes, width_bytes)
    if not (isinstance(addr, BinOp) and addr.op == "add"):
        return None
    for base, off in ((addr.left, addr.right), (addr.right, addr.left)):
        if not (isinstance(base, Variable) and base.dtype.is_pointer):
            continue
        if isinstance(off, Const):
            return _Access(base, None, off.value, width_bytes, width_bytes)
        if isinstance(off, BinOp) and off.op == "mul":
            for idx, k in ((off.left, off.right), (off.right, off.left)):
                if isinstance(k, Const) and not isinstance(idx, Const):
                    return _Access(base, idx, 0, k.value, width_bytes)
            return None
        if isinstance(off, BinOp) and off.op == "shl" and isinstance(off.right, Const):
            return _Access(base, off.left, 0, 1 << off.right.value, width_bytes)
        return _Access(base, off, 0, 1, width_bytes)
    return None


def _collect_accesses(cfg: ControlFlowGraph):
    found: dict[tuple, list[_Access]] = {}

    def visit(expr: Expression):
        if isinstance(expr, Deref):
            acc = _classify(expr.address, expr.dtype.width // 8)
            if acc is not None:
                found.setdefault(acc.base.key, []).append(acc)
        for c in expr.children():
            visit(c)

    for bid in cfg.block_ids():
        for instr in cfg.blocks[bid].instructions:
            if isinstance(instr, Phi):
                continue
            for e in instr.expressions():
                visit(e)
    return found


def detect_array_accesses(cfg: ControlFlowGraph) -> ControlFlowGraph:
    out = cfg.copy()
    accesses = _collect_accesses(out)
    eligible: set[tuple] = set()
    for base_key, accs in accesses.items():
        strides = {a.stride for a in accs}
        widths = {a.width_bytes for a in accs}
        if len(widths) != 1:
            continue
        width = widths.pop()
        computed = [a for a in accs if a.index is not None]
        if not computed:
            continue  # constant offsets only: not enough evidence for an array
        if strides != {width}:
            continue
        if any(a.index is None and a.offset % width != 0 for a in accs):
            continue
        eligible.add(base_key)

    if not eligible:
        return out

    def rewrite(expr: Expression) -> Expression:
        children = expr.children()
        if children:
            new_children = tuple(rewrite(c) for c in children)
            if any(a is not b for a, b in zip(children, new_children)):
                expr = expr.with_children(new_children)
        if isinstance(expr, Deref):
            width = expr.dtype.width // 8
            acc = _classify(expr.address, width)
            if acc is not None and acc.base.key in eligible:
                if acc.index is not None:
                    index = acc.index
                else:
                    index = Const(acc.offset // width, int_type(64, True))
                return ArrayIndex(acc.base, index, width, expr.dtype)
        return expr

    for bid in out.block_ids():
        block = out.blocks[bid]
        for idx, instr in enumerate(block.instructions):
            if isinstance(instr, Phi):
                continue
            exprs = tuple(rewrite(e) for e in instr.expressions())
            block.instructions[idx] = instr.with_expressions(exprs)
    return out
