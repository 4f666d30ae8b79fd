"""Translation between IR condition expressions and logic-engine terms.

Comparisons become relational atoms, bitwise connectives over 0/1-valued
operands become boolean connectives, and add/sub survive inside comparisons.
Anything else (multiplication, casts, wider arithmetic) turns into an opaque
bit-vector leaf keyed by the IR subexpression; hash-consing makes structurally
equal subexpressions the same leaf, which is all the solver may assume.

Conditions that could trap (memory reads, division, calls) are wrapped whole
into a single opaque leaf so that no rewrite can ever drop or duplicate their
evaluation.
"""
from __future__ import annotations

from ..ir.model import BOOL, BinOp, Cmp, Const, Expression, UnOp, Variable
from ..logic import LogicContext, Term
from .common import can_trap

_CMP_TO_KIND = {
    "cmp_eq": ("eq", False),
    "cmp_ne": ("ne", False),
    "cmp_lt": ("lt", False),
    "cmp_le": ("le", False),
    "cmp_gt": ("lt", True),  # swapped operands
    "cmp_ge": ("le", True),
}


def _is_boolean_valued(expr: Expression) -> bool:
    """Value statically known to be 0 or 1."""
    if isinstance(expr, Cmp):
        return True
    if isinstance(expr, Const):
        return expr.value in (0, 1)
    if isinstance(expr, BinOp) and expr.op in ("and", "or", "xor"):
        return _is_boolean_valued(expr.left) and _is_boolean_valued(expr.right)
    return False


def bitvector_term(ctx: LogicContext, expr: Expression) -> Term:
    if isinstance(expr, Const):
        return ctx.const(expr.value, expr.dtype.width)
    if isinstance(expr, BinOp) and expr.op in ("add", "sub"):
        left = bitvector_term(ctx, expr.left)
        right = bitvector_term(ctx, expr.right)
        return ctx.mk(expr.op, [left, right])
    return ctx.atom(expr, expr.dtype.width)


def cond_to_term(ctx: LogicContext, expr: Expression) -> Term:
    """Boolean term equivalent to `expr != 0`."""
    if can_trap(expr):
        return ctx.mk("ne", [ctx.atom(expr, expr.dtype.width), ctx.const(0, expr.dtype.width)])
    return _to_bool(ctx, expr)


def _to_bool(ctx: LogicContext, expr: Expression) -> Term:
    if isinstance(expr, Const):
        return ctx.TRUE if expr.value != 0 else ctx.FALSE
    if isinstance(expr, Cmp):
        kind, swap = _CMP_TO_KIND[expr.op]
        left = bitvector_term(ctx, expr.left)
        right = bitvector_term(ctx, expr.right)
        if swap:
            left, right = right, left
        if kind in ("lt", "le"):
            kind = ("u" if expr.unsigned else "s") + kind
        return ctx.mk(kind, [left, right])
    if isinstance(expr, BinOp) and expr.op in ("and", "or") and _is_boolean_valued(expr):
        connective = expr.op
        return ctx.mk(connective, [_to_bool(ctx, expr.left), _to_bool(ctx, expr.right)])
    if isinstance(expr, BinOp) and expr.op == "xor" and _is_boolean_valued(expr):
        a = _to_bool(ctx, expr.left)
        b = _to_bool(ctx, expr.right)
        return ctx.mk(
            "or",
            [ctx.mk("and", [a, ctx.mk("not", [b])]), ctx.mk("and", [ctx.mk("not", [a]), b])],
        )
    # anything else: an opaque bit-vector tested against zero
    return ctx.mk("ne", [bitvector_term(ctx, expr), ctx.const(0, expr.dtype.width)])
