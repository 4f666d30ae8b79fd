"""Dead-path and dead-loop elimination driven by the logic engine.

Only unsatisfiable verdicts are trusted: a branch edge goes away when its
condition (conjoined with conditions known to hold on entry) cannot be true.
Conditions that could trap are never analyzed at all, so collapsing a branch
can never delete an observable effect.
"""
from __future__ import annotations

from ..ir.analysis import compute_dominator_tree, natural_loops
from ..ir.model import Branch, Const, ControlFlowGraph, Phi, Variable
from ..logic import LogicContext, is_satisfiable
from .common import can_trap, prune_unreachable, replace_branch_with_jump
from .condbridge import bitvector_term, cond_to_term


def _dominating_context(cfg: ControlFlowGraph, ctx: LogicContext, domtree, block_id: str):
    """Conjunction of branch conditions that provably hold on entry.

    For each dominator-tree ancestor pair (D, C) where C is D's sole branch
    target on this side and C has no other predecessor, entering C implies
    D's condition (or its negation).  SSA single assignment keeps every such
    condition stable below it.
    """
    facts = []
    preds = cfg.pred_map()
    node = block_id
    while True:
        parent = domtree.idom(node)
        if parent is None:
            break
        term = cfg.blocks[parent].terminator
        if isinstance(term, Branch) and not can_trap(term.condition):
            incoming = preds[node]
            if len(incoming) == 1 and incoming[0].src == parent:
                kind = incoming[0].kind
                if kind in ("true", "false"):
                    t = cond_to_term(ctx, term.condition)
                    facts.append(t if kind == "true" else ctx.mk("not", [t]))
        node = parent
    return ctx.mk("and", facts) if facts else ctx.TRUE


def eliminate_dead_paths(cfg: ControlFlowGraph, ctx: LogicContext | None = None) -> ControlFlowGraph:
    """Collapse branches whose taken side is unsatisfiable; delete what dies."""
    out = cfg.copy()
    ctx = ctx or LogicContext()
    for _ in range(len(out.blocks) * 2 + 8):
        changed = False
        domtree = compute_dominator_tree(out)
        for bid in out.block_ids():
            term = out.blocks[bid].terminator
            if not isinstance(term, Branch) or can_trap(term.condition):
                continue
            cond = cond_to_term(ctx, term.condition)
            context = _dominating_context(out, ctx, domtree, bid)
            if is_satisfiable(ctx.mk("and", [context, cond])) == "unsat":
                replace_branch_with_jump(out, bid, "false")
            elif is_satisfiable(ctx.mk("and", [context, ctx.mk("not", [cond])])) == "unsat":
                replace_branch_with_jump(out, bid, "true")
            else:
                continue
            prune_unreachable(out)
            changed = True
            break  # structure changed: recompute dominators and contexts
        if not changed:
            break
    return out


def _first_entry_bindings(cfg: ControlFlowGraph, ctx: LogicContext, loop) -> list:
    """Equalities that hold when the loop header runs for the first time."""
    preds = cfg.pred_map()
    entry_preds = sorted(
        e.src for e in preds[loop.header] if e.src not in loop.body
    )
    bindings = []
    for phi in cfg.blocks[loop.header].phis():
        entry_args = [phi.arg_for(p) for p in entry_preds]
        if not entry_args:
            continue
        first = entry_args[0]
        if isinstance(first, Const) and all(a == first for a in entry_args):
            target = bitvector_term(ctx, phi.target)
            bindings.append(ctx.mk("eq", [target, ctx.const(first.value, first.dtype.width)]))
        elif (
            len(entry_args) == 1
            and isinstance(first, Variable)
        ):
            target = bitvector_term(ctx, phi.target)
            bindings.append(ctx.mk("eq", [target, bitvector_term(ctx, first)]))
    return bindings


def eliminate_dead_loops(cfg: ControlFlowGraph, ctx: LogicContext | None = None) -> ControlFlowGraph:
    """Remove loops whose guard cannot hold on first entry.

    The body of a header-guarded loop is reachable only through the guard; if
    the guard conjoined with the first-iteration phi values is unsatisfiable,
    the body never runs and the header falls through to the exit.
    """
    out = cfg.copy()
    ctx = ctx or LogicContext()
    for _ in range(len(out.blocks) + 8):
        changed = False
        domtree = compute_dominator_tree(out)
        for loop in natural_loops(out, domtree):
            header_term = out.blocks[loop.header].terminator
            if not isinstance(header_term, Branch) or can_trap(header_term.condition):
                continue
            succs = {e.kind: e.dst for e in out.successors(loop.header)}
            if succs.get("true") in loop.body and succs.get("false") not in loop.body:
                body_side = "true"
            elif succs.get("false") in loop.body and succs.get("true") not in loop.body:
                body_side = "false"
            else:
                continue
            guard = cond_to_term(ctx, header_term.condition)
            if body_side == "false":
                guard = ctx.mk("not", [guard])
            bindings = _first_entry_bindings(out, ctx, loop)
            entry_cond = ctx.mk("and", [guard] + bindings)
            if is_satisfiable(entry_cond) == "unsat":
                # never enters the body: keep the fall-through path
                exit_side = "false" if body_side == "true" else "true"
                replace_branch_with_jump(out, loop.header, exit_side)
                prune_unreachable(out)
                changed = True
                break
        if not changed:
            break
    return out
