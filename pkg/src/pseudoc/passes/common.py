"""Utilities shared by the transformation passes."""
from __future__ import annotations

from ..ir.model import (
    Assign,
    BinOp,
    Branch,
    CallExpr,
    Cast,
    Cmp,
    ControlFlowGraph,
    Deref,
    Edge,
    Expression,
    Jump,
    Phi,
    UnOp,
)


def is_pure(expr: Expression) -> bool:
    """No memory reads, no calls, no trap potential anywhere in the tree."""
    for node in expr.walk():
        if isinstance(node, (Deref, CallExpr)):
            return False
        if isinstance(node, BinOp) and node.op in ("div", "mod"):
            return False
        if node.__class__.__name__ in ("ArrayIndex", "AddrOf"):
            return False
    return True


def can_trap(expr: Expression) -> bool:
    for node in expr.walk():
        if isinstance(node, (Deref, CallExpr)):
            return True
        if isinstance(node, BinOp) and node.op in ("div", "mod"):
            return True
        if node.__class__.__name__ == "ArrayIndex":
            return True
    return False


def reads_memory(expr: Expression) -> bool:
    return any(
        isinstance(n, Deref) or n.__class__.__name__ == "ArrayIndex" for n in expr.walk()
    )


def rewrite_expressions(cfg: ControlFlowGraph, fn) -> int:
    """Apply fn to every top-level instruction expression; returns change count."""
    changed = 0
    for bid in cfg.block_ids():
        block = cfg.blocks[bid]
        new_instrs = []
        for instr in block.instructions:
            if isinstance(instr, Phi):
                new_instrs.append(instr)
                continue
            exprs = instr.expressions()
            rewritten = tuple(fn(e) for e in exprs)
            if any(a is not b for a, b in zip(exprs, rewritten)):
                changed += 1
                instr = instr.with_expressions(rewritten)
            new_instrs.append(instr)
        block.instructions = new_instrs
    return changed


def transform_bottom_up(expr: Expression, rule) -> Expression:
    """Rebuild the tree bottom-up, applying rule at every node."""
    children = expr.children()
    if children:
        new_children = tuple(transform_bottom_up(c, rule) for c in children)
        if any(a is not b for a, b in zip(children, new_children)):
            expr = expr.with_children(new_children)
    return rule(expr)


def replace_branch_with_jump(cfg: ControlFlowGraph, block_id: str, surviving_kind: str):
    """Collapse a two-way branch, keeping the edge of surviving_kind.

    Phi functions in a target that is no longer a successor lose their
    argument for this predecessor.
    """
    block = cfg.blocks[block_id]
    assert isinstance(block.terminator, Branch)
    old_targets = {e.dst for e in cfg.successors(block_id)}
    keep = next(e for e in cfg.successors(block_id) if e.kind == surviving_kind)
    block.instructions[-1] = Jump()
    cfg.edges = [e for e in cfg.edges if e.src != block_id]
    cfg.edges.append(Edge(block_id, keep.dst, "uncond"))
    for dst in old_targets - {keep.dst}:
        target = cfg.blocks[dst]
        target.instructions = [
            Phi(i.target, tuple((b, v) for b, v in i.args if b != block_id))
            if isinstance(i, Phi)
            else i
            for i in target.instructions
        ]


def prune_unreachable(cfg: ControlFlowGraph) -> list[str]:
    """Delete unreachable blocks, dropping their phi contributions; returns the
    removed block ids."""
    removed_total: list[str] = []
    while True:
        succs = cfg.succ_map()
        reachable = {cfg.entry}
        stack = [cfg.entry]
        while stack:
            for e in succs[stack.pop()]:
                if e.dst not in reachable:
                    reachable.add(e.dst)
                    stack.append(e.dst)
        dead = set(cfg.blocks) - reachable
        if not dead:
            return removed_total
        removed_total.extend(sorted(dead))
        cfg.blocks = {b: blk for b, blk in cfg.blocks.items() if b in reachable}
        cfg.edges = [e for e in cfg.edges if e.src in reachable and e.dst in reachable]
        for block in cfg.blocks.values():
            block.instructions = [
                Phi(i.target, tuple((b, v) for b, v in i.args if b in reachable))
                if isinstance(i, Phi)
                else i
                for i in block.instructions
            ]
