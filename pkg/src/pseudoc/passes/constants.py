"""Constant-representation tagging.

Attaches a render style to constants so the backend can print the most
plausible form: decimal for counters and comparison bounds, hex for masks,
character literals for printable bytes in char contexts, quoted byte strings
for printable words stored through char pointers, true/false for boolean
flags.  Purely cosmetic: styles never change a value.
"""
from __future__ import annotations

from dataclasses import replace

from ..ir.model import (
    ArrayIndex,
    Assign,
    BinOp,
    Cmp,
    Const,
    ControlFlowGraph,
    Deref,
    Expression,
    Phi,
    Variable,
)

_PRINTABLE = set(range(0x20, 0x7F))
_ESCAPABLE = {0x00, 0x09, 0x0A, 0x0D}


def _is_char_like(dtype) -> bool:
    return dtype.width == 8


def _char_pointer_target(expr: Expression) -> bool:
    """Is this store target addressed through a char pointer?"""
    base = expr.address if isinstance(expr, Deref) else getattr(expr, "base", None)
    for node in (expr.walk() if base is None else base.walk()):
        if isinstance(node, Variable) and node.dtype.is_pointer:
            pointee = node.dtype.pointee
            if pointee is not None and (pointee.kind == "char" or pointee.width == 8):
                return True
    return False


def _string_bytes_ok(value: int, width: int) -> bool:
    data = value.to_bytes(width // 8, "little")
    return all(b in _PRINTABLE or b in _ESCAPABLE for b in data) and any(
        b in _PRINTABLE for b in data
    )


def _style_const(const: Const, style: str) -> Const:
    if const.style is not None:
        return const
    return replace(const, style=style)


def _walk_with_style(expr: Expression, context: str) -> Expression:
    """Rebuild expr assigning styles by context."""
    if isinstance(expr, Const):
        if context == "mask":
            return _style_const(expr, "hex")
        if context == "char" and _is_char_like(expr.dtype) and expr.value in _PRINTABLE:
            return _style_const(expr, "char")
        if context == "compare" or context == "counter":
            return _style_const(expr, "decimal")
        return expr
    child_context = {
        "and": "mask", "or": "mask", "xor": "mask", "shl": "mask", "shr": "mask",
        "add": "counter", "sub": "counter", "mul": "counter",
    }
    children = expr.children()
    if not children:
        return expr
    if isinstance(expr, BinOp):
        ctx = child_context.get(expr.op, context)
        new_children = tuple(_walk_with_style(c, ctx) for c in children)
    elif isinstance(expr, Cmp):
        char_side = any(
            isinstance(c, Variable) and c.dtype.kind == "char" for c in children
        ) or any(isinstance(c, ArrayIndex) and c.dtype.kind == "char" for c in children)
        ctx = "char" if char_side else "compare"
        new_children = tuple(_walk_with_style(c, ctx) for c in children)
    else:
        new_children = tuple(_walk_with_style(c, context) for c in children)
    if all(a is b for a, b in zip(children, new_children)):
        return expr
    return expr.with_children(new_children)


def choose_constant_representation(cfg: ControlFlowGraph) -> ControlFlowGraph:
    out = cfg.copy()
    for bid in out.block_ids():
        block = out.blocks[bid]
        for idx, instr in enumerate(block.instructions):
            if isinstance(instr, Phi):
                continue
            if isinstance(instr, Assign):
                target, value = instr.target, instr.value
                # a printable word stored through a char pointer reads as the
                # string it spells
                if (
                    isinstance(value, Const)
                    and value.dtype.width >= 16
                    and not isinstance(target, Variable)
                    and _char_pointer_target(target)
                    and _string_bytes_ok(value.value, value.dtype.width)
                ):
                    block.instructions[idx] = replace(
                        instr, value=_style_const(value, "string")
                    )
                    continue
                if (
                    isinstance(value, Const)
                    and isinstance(target, Variable)
                    and target.dtype.kind == "char"
                    and value.value in _PRINTABLE
                ):
                    block.instructions[idx] = replace(instr, value=_style_const(value, "char"))
                    continue
            exprs = tuple(_walk_with_style(e, "plain") for e in instr.expressions())
            block.instructions[idx] = instr.with_expressions(exprs)
    return out
