"""Reversal of arithmetic compiler idioms.

A fixed, hand-written catalog: magic-number unsigned/signed division,
remainder reconstructed from a division, power-of-two modulo, sign extraction
via arithmetic shift and branchless absolute value.  Every pattern carries an
exhaustive verification at a narrow width (see verification_cases), and magic
multiplier matches are additionally validated per-instance with the exact
divisibility bound, so a rewrite never fires on a near-miss constant.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..ir.model import (
    Assign,
    BinOp,
    Call,
    CallExpr,
    Cast,
    Cmp,
    Const,
    ControlFlowGraph,
    Expression,
    Phi,
    UnOp,
    Variable,
    int_type,
)


@dataclass(frozen=True)
class IdiomPattern:
    name: str
    # returns the replacement expression, or None when the node does not match
    rewrite: Callable[[Expression], "Expression | None"]
    # (input expression, expected replacement, input width) at a narrow width
    verification_cases: Callable[[int], list[tuple[Expression, Expression]]]
    verify_width: int = 16


def _magic_is_exact_unsigned(magic: int, shift: int, divisor: int, width: int) -> bool:
    """floor(x * magic / 2^shift) == floor(x / divisor) for all 0 <= x < 2^width.

    Holds iff 2^shift <= magic * divisor <= 2^shift + 2^(shift - width).
    """
    if divisor <= 0 or shift < width:
        return False
    lhs = 1 << shift
    return lhs <= magic * divisor <= lhs + (1 << (shift - width))


def _unsigned_magic_divisor(magic: int, shift: int, width: int) -> int | None:
    for d in ((1 << shift) // magic, (1 << shift) // magic + 1):
        if d > 1 and _magic_is_exact_unsigned(magic, shift, d, width):
            return d
    return None


def _match_udiv_magic(expr: Expression):
    # shr.u2w(mul.u2w(cast.u2w(x : uW), M), S)  ->  cast.u2w(div.uW(x, d))
    if not (isinstance(expr, BinOp) and expr.op == "shr" and not expr.dtype.signed):
        return None
    if not (isinstance(expr.right, Const) and isinstance(expr.left, BinOp)):
        return None
    mul = expr.left
    if mul.op != "mul":
        return None
    for cast_side, const_side in ((mul.left, mul.right), (mul.right, mul.left)):
        if not (isinstance(cast_side, Cast) and isinstance(const_side, Const)):
            continue
        x = cast_side.operand
        if x.dtype.signed or x.dtype.kind != "int":
            continue
        w = x.dtype.width
        mulw = cast_side.dtype.width
        if mulw < 2 * w:
            continue
        magic, shift = const_side.value, expr.right.value
        # the product must not wrap and the shift must be a real shift
        if magic >= (1 << (mulw - w)) or not w <= shift < mulw:
            continue
        divisor = _unsigned_magic_divisor(magic, shift, w)
        if divisor is None:
            continue
        narrow = int_type(w, False)
        return Cast(BinOp("div", x, Const(divisor, narrow), narrow), expr.dtype)
    return None


def _udiv_cases(width: int):
    w2 = width * 2
    x = Variable("x", 0, int_type(width, False))
    cases = []
    for d in (3, 5, 10, 11):
        found = None
        for shift in range(width, 2 * width):
            magic = ((1 << shift) + d - 1) // d
            if magic < (1 << width) and _magic_is_exact_unsigned(magic, shift, d, width):
                found = (magic, shift)
                break
        if found is None:
            continue  # no shift-only encoding at this width
        magic, shift = found
        wide = int_type(w2, False)
        before = BinOp("shr", BinOp("mul", Cast(x, wide), Const(magic, wide), wide), Const(shift, wide), wide)
        after = Cast(BinOp("div", x, Const(d, x.dtype), x.dtype), wide)
        cases.append((before, after))
    assert cases, "no verifiable unsigned magic-division case at this width"
    return cases


def _magic_is_exact_signed(magic: int, shift: int, divisor: int, width: int) -> bool:
    """Exactness of q = (x*magic >> shift) + (x < 0) over signed x."""
    if divisor <= 1:
        return False
    lo = -(1 << (width - 1))
    hi = (1 << (width - 1)) - 1
    # boundary candidates are enough given the monotone error term, but the
    # ranges here are small enough to keep this airtight by brute force when
    # verifying patterns; per-instance validation uses the bound below.
    lhs = 1 << shift
    return lhs < magic * divisor <= lhs + (1 << (shift - width + 1)) and hi >= divisor


def _signed_magic_divisor(magic: int, shift: int, width: int) -> int | None:
    for d in ((1 << shift) // magic, (1 << shift) // magic + 1):
        if d > 1 and _magic_is_exact_signed(magic, shift, d, width):
            return d
    return None


def _match_sdiv_magic(expr: Expression):
    # sub.iW(cast.iW(shr.i2w(mul.i2w(cast.i2w(x), M), S)), shr.iW(x, W-1))
    if not (isinstance(expr, BinOp) and expr.op == "sub" and expr.dtype.signed):
        return None
    left, right = expr.left, expr.right
    if not (
        isinstance(right, BinOp)
        and right.op == "shr"
        and right.dtype.signed
        and isinstance(right.right, Const)
    ):
        return None
    x = right.left
    w = x.dtype.width
    if right.right.value != w - 1:
        return None
    inner = left.operand if isinstance(left, Cast) else left
    if not (
        isinstance(inner, BinOp)
        and inner.op == "shr"
        and inner.dtype.signed
        and isinstance(inner.right, Const)
        and isinstance(inner.left, BinOp)
        and inner.left.op == "mul"
    ):
        return None
    mul = inner.left
    for cast_side, const_side in ((mul.left, mul.right), (mul.right, mul.left)):
        if not (isinstance(cast_side, Cast) and isinstance(const_side, Const)):
            continue
        if cast_side.operand != x:
            continue
        mulw = cast_side.dtype.width
        if mulw < 2 * w:
            continue
        magic, shift = const_side.signed_value, inner.right.value
        if magic <= 0 or magic >= (1 << (mulw - w)) or not w <= shift < mulw:
            continue
        divisor = _signed_magic_divisor(magic, shift, w)
        if divisor is None:
            continue
        narrow = int_type(w, True)
        return BinOp("div", x, Const(divisor, narrow), narrow)
    return None


def _sdiv_cases(width: int):
    w2 = width * 2
    x = Variable("x", 0, int_type(width, True))
    wide = int_type(w2, True)
    cases = []
    for d in (3, 5, 7):
        found = None
        for shift in range(width, 2 * width):
            magic = ((1 << shift) + d) // d
            if magic < (1 << width) and _magic_is_exact_signed(magic, shift, d, width):
                found = (magic, shift)
                break
        if found is None:
            continue
        magic, shift = found
        mulhi = BinOp("shr", BinOp("mul", Cast(x, wide), Const(magic, wide), wide), Const(shift, wide), wide)
        before = BinOp(
            "sub",
            Cast(mulhi, x.dtype),
            BinOp("shr", x, Const(width - 1, x.dtype), x.dtype),
            x.dtype,
        )
        after = BinOp("div", x, Const(d, x.dtype), x.dtype)
        cases.append((before, after))
    return cases


def _match_remainder(expr: Expression):
    # x - (x / c) * c  ->  x % c   (identical by C semantics, signs included)
    if not (isinstance(expr, BinOp) and expr.op == "sub"):
        return None
    x, mul = expr.left, expr.right
    if not (isinstance(mul, BinOp) and mul.op == "mul"):
        return None
    for div_side, const_side in ((mul.left, mul.right), (mul.right, mul.left)):
        if not (isinstance(div_side, BinOp) and div_side.op == "div"):
            continue
        if not (isinstance(const_side, Const) and isinstance(div_side.right, Const)):
            continue
        if const_side.value != div_side.right.value or div_side.left != x:
            continue
        return BinOp("mod", x, div_side.right, expr.dtype)
    return None


def _remainder_cases(width: int):
    ty_u = int_type(width, False)
    ty_s = int_type(width, True)
    cases = []
    for ty in (ty_u, ty_s):
        x = Variable("x", 0, ty)
        d = Const(24, ty)
        before = BinOp("sub", x, BinOp("mul", BinOp("div", x, d, ty), d, ty), ty)
        cases.append((before, BinOp("mod", x, d, ty)))
    return cases


def _match_pow2_mod(expr: Expression):
    # unsigned x & (2^k - 1)  ->  x % 2^k
    if not (isinstance(expr, BinOp) and expr.op == "and" and not expr.dtype.signed):
        return None
    for x, mask in ((expr.left, expr.right), (expr.right, expr.left)):
        if not isinstance(mask, Const) or isinstance(x, Const):
            continue
        if x.dtype.signed:
            continue
        value = mask.value
        if value >= 1 and (value & (value + 1)) == 0 and value != (1 << expr.dtype.width) - 1:
            return BinOp("mod", x, Const(value + 1, expr.dtype), expr.dtype)
    return None


def _pow2_cases(width: int):
    ty = int_type(width, False)
    x = Variable("x", 0, ty)
    return [
        (BinOp("and", x, Const(7, ty), ty), BinOp("mod", x, Const(8, ty), ty)),
        (BinOp("and", x, Const(63, ty), ty), BinOp("mod", x, Const(64, ty), ty)),
    ]


def _match_sign_shift(expr: Expression):
    # signed x >> (W-1)  ->  -(x < 0)
    if not (
        isinstance(expr, BinOp)
        and expr.op == "shr"
        and expr.dtype.signed
        and isinstance(expr.right, Const)
        and expr.right.value == expr.dtype.width - 1
        and not isinstance(expr.left, Const)
    ):
        return None
    x = expr.left
    is_negative = Cmp("cmp_lt", x, Const(0, x.dtype), unsigned=False)
    return UnOp("neg", Cast(is_negative, expr.dtype), expr.dtype)


def _sign_cases(width: int):
    ty = int_type(width, True)
    x = Variable("x", 0, ty)
    before = BinOp("shr", x, Const(width - 1, ty), ty)
    after = UnOp("neg", Cast(Cmp("cmp_lt", x, Const(0, ty), unsigned=False), ty), ty)
    return [(before, after)]


def _is_sign_mask_of(expr: Expression, x: Expression) -> bool:
    return (
        isinstance(expr, BinOp)
        and expr.op == "shr"
        and expr.dtype.signed
        and isinstance(expr.right, Const)
        and expr.right.value == expr.dtype.width - 1
        and expr.left == x
    )


def _match_abs(expr: Expression):
    # (x + s) ^ s or (x ^ s) - s with s = x >> (W-1)  ->  abs(x)
    if isinstance(expr, BinOp) and expr.op == "xor":
        for add_side, mask in ((expr.left, expr.right), (expr.right, expr.left)):
            if (
                isinstance(add_side, BinOp)
                and add_side.op == "add"
            ):
                for x, s in ((add_side.left, add_side.right), (add_side.right, add_side.left)):
                    if _is_sign_mask_of(mask, x) and s == mask:
                        return CallExpr("abs", (x,), expr.dtype)
    if isinstance(expr, BinOp) and expr.op == "sub":
        xor_side, mask = expr.left, expr.right
        if isinstance(xor_side, BinOp) and xor_side.op == "xor":
            for x, s in ((xor_side.left, xor_side.right), (xor_side.right, xor_side.left)):
                if _is_sign_mask_of(mask, x) and s == mask:
                    return CallExpr("abs", (x,), expr.dtype)
    return None


def _abs_cases(width: int):
    ty = int_type(width, True)
    x = Variable("x", 0, ty)
    s = BinOp("shr", x, Const(width - 1, ty), ty)
    before1 = BinOp("xor", BinOp("add", x, s, ty), s, ty)
    before2 = BinOp("sub", BinOp("xor", x, s, ty), s, ty)
    after = CallExpr("abs", (x,), ty)
    return [(before1, after), (before2, after)]


DEFAULT_CATALOG: tuple[IdiomPattern, ...] = (
    IdiomPattern("udiv-magic", _match_udiv_magic, _udiv_cases),
    IdiomPattern("sdiv-magic", _match_sdiv_magic, _sdiv_cases),
    IdiomPattern("remainder-from-div", _match_remainder, _remainder_cases),
    IdiomPattern("abs-via-shift", _match_abs, _abs_cases, verify_width=16),
    IdiomPattern("sign-via-shift", _match_sign_shift, _sign_cases, verify_width=16),
    IdiomPattern("pow2-modulo", _match_pow2_mod, _pow2_cases),
)


def _apply_catalog(expr: Expression, catalog, fired: list[str]) -> Expression:
    children = expr.children()
    if children:
        new_children = tuple(_apply_catalog(c, catalog, fired) for c in children)
        if any(a is not b for a, b in zip(children, new_children)):
            expr = expr.with_children(new_children)
    for pattern in catalog:
        replacement = pattern.rewrite(expr)
        if replacement is not None:
            fired.append(pattern.name)
            return replacement
    return expr


def revert_compiler_idioms(
    cfg: ControlFlowGraph, catalog: tuple[IdiomPattern, ...] = DEFAULT_CATALOG
) -> ControlFlowGraph:
    """Replace matched idiom subtrees; tags the instruction with the idiom name."""
    out = cfg.copy()
    for bid in out.block_ids():
        block = out.blocks[bid]
        for idx, instr in enumerate(block.instructions):
            if isinstance(instr, Phi):
                continue
            fired: list[str] = []
            target = instr.defined_var()
            exprs = list(instr.expressions())
            for i, e in enumerate(exprs):
                if target is not None and i == 0:
                    continue
                exprs[i] = _apply_catalog(e, catalog, fired)
            if fired:
                new_instr = instr.with_expressions(tuple(exprs))
                if isinstance(new_instr, (Assign, Call)):
                    tags = tuple(dict.fromkeys(new_instr.tags + tuple(f"idiom:{n}" for n in fired)))
                    new_instr = new_instr.__class__(**{**new_instr.__dict__, "tags": tags})
                block.instructions[idx] = new_instr
    return out


def verify_catalog(catalog=DEFAULT_CATALOG) -> dict[str, bool]:
    """Exhaustively check every pattern at its narrow verification width."""
    from ..vecexpr import exhaustive_equal

    results = {}
    for pattern in catalog:
        width = pattern.verify_width
        results[pattern.name] = all(
            exhaustive_equal(before, after, ("x", 0), width)
            for before, after in pattern.verification_cases(width)
        )
    return results
