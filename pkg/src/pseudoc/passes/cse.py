"""Common-subexpression elimination over the dominator tree."""
from __future__ import annotations

from ..ir.analysis import DominatorTree, compute_dominator_tree
from ..ir.model import (
    Assign,
    ControlFlowGraph,
    Expression,
    Phi,
    Variable,
    is_terminator,
)
from .common import is_pure


def _candidate_subtrees(expr: Expression, min_size: int, out: list):
    if expr.node_count() >= min_size and is_pure(expr):
        if any(isinstance(n, Variable) for n in expr.walk()):
            out.append(expr)
    for c in expr.children():
        _candidate_subtrees(c, min_size, out)


def _replace_subtree(expr: Expression, pattern: Expression, replacement: Expression) -> Expression:
    if expr == pattern:
        return replacement
    children = expr.children()
    if not children:
        return expr
    new_children = tuple(_replace_subtree(c, pattern, replacement) for c in children)
    if all(a is b for a, b in zip(children, new_children)):
        return expr
    return expr.with_children(new_children)


def eliminate_common_subexpressions(
    cfg: ControlFlowGraph,
    domtree: DominatorTree | None = None,
    min_occurrences: int = 2,
    min_size: int = 3,
) -> ControlFlowGraph:
    """Define each repeated pure expression once, at the deepest dominator of
    all its occurrences, and reuse the new variable everywhere."""
    out = cfg.copy()
    taken = {v.name for v in out.variables()}
    counter = 0
    for _ in range(out.instruction_count() + 16):
        domtree = compute_dominator_tree(out)
        occurrences: dict[Expression, list[tuple[str, int]]] = {}
        for bid in out.block_ids():
            for idx, instr in enumerate(out.blocks[bid].instructions):
                if isinstance(instr, Phi):
                    continue
                target = instr.defined_var()
                for i, expr in enumerate(instr.expressions()):
                    if target is not None and i == 0:
                        continue
                    subs: list[Expression] = []
                    _candidate_subtrees(expr, min_size, subs)
                    for sub in subs:
                        occurrences.setdefault(sub, []).append((bid, idx))
        repeated = [
            (e, sites)
            for e, sites in occurrences.items()
            if len(sites) >= min_occurrences
        ]
        if not repeated:
            break
        # biggest first so nested repeats collapse into the outer variable
        repeated.sort(key=lambda item: (-item[0].node_count(), str(item[0])))
        expr, sites = repeated[0]

        blocks = [b for b, _ in sites]
        dom_block = blocks[0]
        for b in blocks[1:]:
            dom_block = domtree.nearest_common_dominator(dom_block, b)
        first_idx = min(idx for b, idx in sites if b == dom_block) if dom_block in blocks else None

        while f"cse_{counter}" in taken:
            counter += 1
        new_var = Variable(f"cse_{counter}", 0, expr.dtype)
        counter += 1
        for bid in out.block_ids():
            block = out.blocks[bid]
            for idx, instr in enumerate(block.instructions):
                if isinstance(instr, Phi):
                    continue
                target = instr.defined_var()
                exprs = list(instr.expressions())
                changed = False
                for i, e in enumerate(exprs):
                    if target is not None and i == 0:
                        continue
                    new = _replace_subtree(e, expr, new_var)
                    if new is not e:
                        exprs[i] = new
                        changed = True
                if changed:
                    block.instructions[idx] = instr.with_expressions(tuple(exprs))
        definition = Assign(new_var, expr)
        dom = out.blocks[dom_block]
        if first_idx is not None:
            dom.instructions.insert(first_idx, definition)
        else:
            pos = len(dom.instructions) - (1 if dom.terminator is not None else 0)
            dom.instructions.insert(pos, definition)
    return out
