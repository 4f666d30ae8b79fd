"""Redundant-cast elimination.

Rules, applied bottom-up to a fixpoint:

R1  a cast to the operand's exact type disappears;
R2  a chain cast2(cast1(x)) collapses to a direct cast when the composition
    provably equals it for every bit pattern (see _chain_collapses);
R3  a truncating cast distributes into operators that only observe low bits,
    and a same-width sign-change disappears under sign-oblivious consumers;
R4  sign-changing casts feeding signed comparison, division, modulo or
    arithmetic shift are never touched.

The collapse predicate is checked exhaustively over small widths in the test
suite; correctness never relies on intuition about C promotion rules.
"""
from __future__ import annotations

from ..ir.model import (
    LOW_BITS_OPS,
    BinOp,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    Expression,
    UnOp,
)
from .common import rewrite_expressions, transform_bottom_up


def _chain_collapses(w0: int, s0: bool, w1: int, s1: bool, w2: int) -> bool:
    """Does cast(w1,s1) then cast-to-w2 equal a direct cast of (w0,s0) to w2?

    The direct cast extends by s0; the chain extends first by s0 into w1 and
    then by s1 into w2.  Truncation always keeps low bits, so any chain whose
    net effect re-derives the same low/extension bits may collapse.
    """
    if w2 <= min(w0, w1):
        return True  # both forms keep exactly the low w2 bits of x
    if w1 >= w0 and w0 < w2 <= w1:
        return True  # extension by s0 either way
    if w2 > w1:
        if w1 > w0:
            # double extension: second stage must continue the first's fill
            return (not s0) or s1
        if w1 == w0:
            return s1 == s0  # pure reinterpretation must not change the fill
    return False


def _sign_oblivious(op: str, signed: bool) -> bool:
    """Operators whose result bits ignore operand signedness."""
    if op in ("add", "sub", "mul", "and", "or", "xor", "shl"):
        return True
    if op in ("div", "mod", "shr"):
        return not signed  # R4: unsigned forms only observe bit patterns
    return False


def _rule(expr: Expression) -> Expression:
    if isinstance(expr, Cast):
        inner = expr.operand
        # R1: cast to the identical type
        if inner.dtype == expr.dtype:
            return inner
        # R2: collapse chains when bit-exact
        if isinstance(inner, Cast):
            x = inner.operand
            if _chain_collapses(
                x.dtype.width,
                bool(x.dtype.signed),
                inner.dtype.width,
                bool(inner.dtype.signed),
                expr.dtype.width,
            ):
                collapsed = Cast(x, expr.dtype)
                return _rule(collapsed)
        # casting a constant is just a narrower/wider constant
        if isinstance(inner, Const):
            value = inner.signed_value if inner.dtype.signed else inner.value
            return Const(value & ((1 << expr.dtype.width) - 1), expr.dtype)
        # R3: push a truncation into low-bits operators, then clean up
        if expr.dtype.width < inner.dtype.width:
            pushed = _push_truncation(expr, inner)
            if pushed is not None:
                return pushed
    if isinstance(expr, (BinOp, Cmp)):
        return _strip_reinterpretations(expr)
    return expr


def _push_truncation(cast: Cast, inner: Expression) -> Expression | None:
    w2 = cast.dtype.width
    if isinstance(inner, BinOp) and inner.op in LOW_BITS_OPS:
        if inner.op == "shl":
            if not (isinstance(inner.right, Const) and inner.right.value < w2):
                return None
            left = transform_bottom_up(Cast(inner.left, cast.dtype), _rule)
            right = Const(inner.right.value, cast.dtype)
            narrowed = BinOp("shl", left, right, cast.dtype)
        else:
            left = transform_bottom_up(Cast(inner.left, cast.dtype), _rule)
            right = transform_bottom_up(Cast(inner.right, cast.dtype), _rule)
            narrowed = BinOp(inner.op, left, right, cast.dtype)
        if _cast_count(narrowed) < _cast_count(cast):
            return narrowed
        return None
    if isinstance(inner, UnOp) and inner.op in ("neg", "not"):
        operand = transform_bottom_up(Cast(inner.operand, cast.dtype), _rule)
        narrowed = UnOp(inner.op, operand, cast.dtype)
        if _cast_count(narrowed) < _cast_count(cast):
            return narrowed
    return None


def _strip_reinterpretations(expr: Expression) -> Expression:
    """Drop same-width sign-change casts under sign-oblivious operators."""
    if isinstance(expr, Cmp):
        oblivious = expr.op in ("cmp_eq", "cmp_ne")
        signed = False
    else:
        oblivious = _sign_oblivious(expr.op, expr.dtype.signed)
        signed = expr.dtype.signed
    if not oblivious:
        return expr
    children = expr.children()
    stripped = []
    changed = False
    for i, c in enumerate(children):
        if isinstance(expr, BinOp) and expr.op == "shl" and i == 1:
            stripped.append(c)  # shift amounts stay untouched
            continue
        if (
            isinstance(c, Cast)
            and c.dtype.width == c.operand.dtype.width
        ):
            stripped.append(c.operand)
            changed = True
        else:
            stripped.append(c)
    if not changed:
        return expr
    return expr.with_children(tuple(stripped))


def _cast_count(expr: Expression) -> int:
    return sum(1 for n in expr.walk() if isinstance(n, Cast))


def eliminate_redundant_casts(cfg: ControlFlowGraph) -> ControlFlowGraph:
    out = cfg.copy()
    for _ in range(8):
        changed = rewrite_expressions(out, lambda e: transform_bottom_up(e, _rule))
        if not changed:
            break
    return out
