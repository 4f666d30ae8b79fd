"""Vectorized evaluation of pure IR expressions over numpy arrays.

Used wherever a property must hold for every bit pattern: idiom-pattern
verification and the exhaustive cast-rule checks.  Only side-effect-free
expressions are supported (no memory, no calls other than abs).
"""
from __future__ import annotations

import numpy as np

from .ir.model import BinOp, CallExpr, Cast, Cmp, Const, Expression, UnOp, Variable

_U64 = np.uint64


def _mask(width: int) -> np.uint64:
    return _U64((1 << width) - 1)


def _to_signed(a: np.ndarray, width: int) -> np.ndarray:
    sign_bit = _U64(1 << (width - 1))
    return a.astype(np.int64) - ((a & sign_bit).astype(np.int64) << 1)


def eval_vec(expr: Expression, env: dict[tuple, np.ndarray]) -> np.ndarray:
    """Evaluate over uint64 arrays; results are masked to the node width."""
    if isinstance(expr, Const):
        return _U64(expr.value)
    if isinstance(expr, Variable):
        return env[expr.key]
    if isinstance(expr, Cast):
        val = eval_vec(expr.operand, env)
        src = expr.operand.dtype
        if expr.dtype.width <= src.width:
            return val & _mask(expr.dtype.width)
        if src.kind == "int" and src.signed:
            return _to_signed(np.asarray(val, dtype=_U64), src.width).astype(_U64) & _mask(expr.dtype.width)
        return val & _mask(expr.dtype.width)
    if isinstance(expr, UnOp):
        val = eval_vec(expr.operand, env)
        w = _mask(expr.dtype.width)
        if expr.op == "neg":
            return (~val + _U64(1)) & w
        return ~val & w
    if isinstance(expr, Cmp):
        a = eval_vec(expr.left, env)
        b = eval_vec(expr.right, env)
        if not expr.unsigned:
            w = expr.left.dtype.width
            a, b = _to_signed(np.asarray(a, _U64), w), _to_signed(np.asarray(b, _U64), w)
        op = {
            "cmp_eq": np.equal,
            "cmp_ne": np.not_equal,
            "cmp_lt": np.less,
            "cmp_le": np.less_equal,
            "cmp_gt": np.greater,
            "cmp_ge": np.greater_equal,
        }[expr.op]
        return op(a, b).astype(_U64)
    if isinstance(expr, CallExpr) and expr.callee == "abs":
        val = np.asarray(eval_vec(expr.args[0], env), _U64)
        signed = _to_signed(val, expr.args[0].dtype.width)
        return np.abs(signed).astype(_U64) & _mask(expr.dtype.width)
    if isinstance(expr, BinOp):
        a = np.asarray(eval_vec(expr.left, env), _U64)
        b = np.asarray(eval_vec(expr.right, env), _U64)
        width = expr.dtype.width
        w = _mask(width)
        op = expr.op
        if op == "add":
            return (a + b) & w
        if op == "sub":
            return (a - b) & w
        if op == "mul":
            return (a * b) & w
        if op == "and":
            return a & b
        if op == "or":
            return a | b
        if op == "xor":
            return a ^ b
        if op == "shl":
            return (a << (b & _U64(width - 1))) & w
        if op == "shr":
            amount = b & _U64(width - 1)
            if expr.dtype.signed:
                return (_to_signed(a, width) >> amount.astype(np.int64)).astype(_U64) & w
            return a >> amount
        if op in ("div", "mod"):
            if expr.dtype.signed:
                sa, sb = _to_signed(a, width), _to_signed(b, width)
                if np.any(sb == 0):
                    raise ZeroDivisionError("division by zero in vector evaluation")
                q = (np.abs(sa) // np.abs(sb)) * np.sign(sa) * np.sign(sb)
                if op == "div":
                    return q.astype(_U64) & w
                return (sa - q * sb).astype(_U64) & w
            if np.any(b == 0):
                raise ZeroDivisionError("division by zero in vector evaluation")
            return (a // b if op == "div" else a % b) & w
    raise ValueError(f"cannot vector-evaluate {type(expr).__name__}")


def exhaustive_equal(before: Expression, after: Expression, var_key: tuple, width: int) -> bool:
    """Compare two single-variable expressions over every input bit pattern."""
    xs = np.arange(1 << width, dtype=_U64)
    env = {var_key: xs}
    with np.errstate(over="ignore"):
        a = np.asarray(eval_vec(before, env), _U64)
        b = np.asarray(eval_vec(after, env), _U64)
    return bool(np.array_equal(a & _mask(before.dtype.width), b & _mask(after.dtype.width)))
