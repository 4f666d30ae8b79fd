"""Expression propagation: fold definitions forward into their uses."""
from __future__ import annotations

from dataclasses import dataclass

from ..ir.model import (
    Assign,
    Call,
    Const,
    ControlFlowGraph,
    Deref,
    Expression,
    Instruction,
    Phi,
    Variable,
)
from .common import can_trap, is_pure, reads_memory


def _count_uses(cfg: ControlFlowGraph):
    """(uses in plain instructions, uses in phi arguments) per variable."""
    plain: dict = {}
    in_phi: dict = {}
    for bid in cfg.block_ids():
        for instr in cfg.blocks[bid].instructions:
            if isinstance(instr, Phi):
                for _, arg in instr.args:
                    if isinstance(arg, Variable):
                        in_phi[arg.key] = in_phi.get(arg.key, 0) + 1
                continue
            target = instr.defined_var()
            for i, expr in enumerate(instr.expressions()):
                if target is not None and i == 0:
                    continue
                for node in expr.walk():
                    if isinstance(node, Variable):
                        plain[node.key] = plain.get(node.key, 0) + 1
    return plain, in_phi


def _replace_var(expr: Expression, key, replacement: Expression) -> Expression:
    if isinstance(expr, Variable) and expr.key == key:
        return replacement
    children = expr.children()
    if not children:
        return expr
    new_children = tuple(_replace_var(c, key, replacement) for c in children)
    if all(a is b for a, b in zip(children, new_children)):
        return expr
    return expr.with_children(new_children)


def _hazard_between(block, start: int, end: int) -> bool:
    """A store or call between def and use blocks motion of impure values."""
    for instr in block.instructions[start + 1 : end]:
        if isinstance(instr, Call):
            return True
        if isinstance(instr, Assign) and not isinstance(instr.target, Variable):
            return True
    return False


def propagate_expressions(cfg: ControlFlowGraph, max_complexity: int = 20) -> ControlFlowGraph:
    """Fold single-use definitions into their use site.

    Pure expressions move anywhere (SSA values are location independent);
    expressions that read memory or can trap only move within their block and
    never across a store or call.  Constants and plain variable copies
    propagate into any number of uses, including phi arguments.
    """
    out = cfg.copy()
    budget = out.instruction_count() * 4 + 64
    for _ in range(budget):
        if not _propagate_once(out, max_complexity):
            break
    return out


def _propagate_once(cfg: ControlFlowGraph, max_complexity: int) -> bool:
    plain_uses, phi_uses = _count_uses(cfg)
    defs: dict = {}
    for bid in cfg.block_ids():
        for idx, instr in enumerate(cfg.blocks[bid].instructions):
            if isinstance(instr, Assign) and isinstance(instr.target, Variable):
                defs[instr.target.key] = (bid, idx, instr.value)

    changed = False
    for key in sorted(defs):
        def_bid, def_idx, value = defs[key]
        uses = plain_uses.get(key, 0)
        uses_phi = phi_uses.get(key, 0)
        trivial = isinstance(value, (Const, Variable))
        if uses + uses_phi == 0:
            if is_pure(value):  # dead pure definition
                del cfg.blocks[def_bid].instructions[def_idx]
                return True
            continue
        if not trivial and uses + uses_phi != 1:
            continue
        if uses_phi and not trivial:
            continue
        if trivial:
            if _propagate_trivial(cfg, key, value, def_bid, def_idx):
                return True
            continue
        use_site = _find_single_use(cfg, key)
        if use_site is None:
            continue
        use_bid, use_idx = use_site
        if not is_pure(value):
            if use_bid != def_bid:
                continue
            if _hazard_between(cfg.blocks[def_bid], def_idx, use_idx):
                continue
        instr = cfg.blocks[use_bid].instructions[use_idx]
        exprs = tuple(_replace_var(e, key, value) for e in instr.expressions())
        folded = instr.with_expressions(exprs)
        if max(e.node_count() for e in folded.expressions()) > max_complexity:
            continue
        cfg.blocks[use_bid].instructions[use_idx] = folded
        del cfg.blocks[def_bid].instructions[def_idx]
        return True
    return changed


def _propagate_trivial(cfg, key, value, def_bid, def_idx) -> bool:
    """Propagate a constant or variable copy into every use, then drop the def."""
    if isinstance(value, Variable) and value.key == key:
        del cfg.blocks[def_bid].instructions[def_idx]
        return True
    changed = False
    for bid in cfg.block_ids():
        block = cfg.blocks[bid]
        for idx, instr in enumerate(block.instructions):
            if bid == def_bid and idx == def_idx:
                continue
            if isinstance(instr, Phi):
                new_args = tuple(
                    (b, value if isinstance(a, Variable) and a.key == key else a)
                    for b, a in instr.args
                )
                if new_args != instr.args:
                    block.instructions[idx] = Phi(instr.target, new_args)
                    changed = True
                continue
            target = instr.defined_var()
            exprs = list(instr.expressions())
            replaced = False
            for i, expr in enumerate(exprs):
                if target is not None and i == 0:
                    continue
                new = _replace_var(expr, key, value)
                if new is not expr:
                    exprs[i] = new
                    replaced = True
            if replaced:
                block.instructions[idx] = instr.with_expressions(tuple(exprs))
                changed = True
    if changed:
        del cfg.blocks[def_bid].instructions[def_idx]
    return changed


def _find_single_use(cfg, key):
    for bid in cfg.block_ids():
        for idx, instr in enumerate(cfg.blocks[bid].instructions):
            if isinstance(instr, Phi):
                continue
            target = instr.defined_var()
            for i, expr in enumerate(instr.expressions()):
                if target is not None and i == 0:
                    continue
                if any(isinstance(n, Variable) and n.key == key for n in expr.walk()):
                    return (bid, idx)
    return None
