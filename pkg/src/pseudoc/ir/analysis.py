"""CFG analyses: SSA verification, dominator tree, natural loops, orderings."""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import ControlFlowGraph, IrError, Phi, Variable


@dataclass
class DominatorTree:
    """Immediate-dominator relation; the entry block is the root."""

    root: str
    parent: dict[str, str]  # block -> immediate dominator (root absent)
    children: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.children:
            self.children = {b: [] for b in list(self.parent) + [self.root]}
            for b, p in sorted(self.parent.items()):
                self.children.setdefault(p, []).append(b)

    def dominates(self, a: str, b: str) -> bool:
        """True when a dominates b (reflexive)."""
        node: str | None = b
        while node is not None:
            if node == a:
                return True
            node = self.parent.get(node)
        return False

    def idom(self, block: str) -> str | None:
        return self.parent.get(block)

    def depth(self, block: str) -> int:
        d = 0
        while block in self.parent:
            block = self.parent[block]
            d += 1
        return d

    def nearest_common_dominator(self, a: str, b: str) -> str:
        ancestors = set()
        node: str | None = a
        while node is not None:
            ancestors.add(node)
            node = self.parent.get(node)
        node = b
        while node not in ancestors:
            node = self.parent[node]
        return node


def reverse_postorder(cfg: ControlFlowGraph) -> list[str]:
    """Deterministic reverse postorder from the entry (successors in sorted order)."""
    succs = {b: sorted({e.dst for e in es}) for b, es in cfg.succ_map().items()}
    order: list[str] = []
    seen: set[str] = set()

    def visit(b: str):
        stack = [(b, iter(succs[b]))]
        seen.add(b)
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, iter(succs[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    visit(cfg.entry)
    order.reverse()
    return order


def compute_dominator_tree(cfg: ControlFlowGraph) -> DominatorTree:
    """Cooper/Harvey/Kennedy iterative immediate dominators.

    All blocks must be reachable from the entry; unreachable blocks are an
    error (dead-path elimination is the sanctioned remover of dead blocks).
    """
    rpo = reverse_postorder(cfg)
    if set(rpo) != set(cfg.blocks):
        missing = sorted(set(cfg.blocks) - set(rpo))
        raise IrError(f"unreachable blocks: {', '.join(missing)}")
    index = {b: i for i, b in enumerate(rpo)}
    preds = {b: sorted({e.src for e in es}) for b, es in cfg.pred_map().items()}
    idom: dict[str, str] = {cfg.entry: cfg.entry}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo:
            if b == cfg.entry:
                continue
            candidates = [p for p in preds[b] if p in idom]
            new = candidates[0]
            for p in candidates[1:]:
                new = intersect(new, p)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    parent = {b: d for b, d in idom.items() if b != cfg.entry}
    return DominatorTree(cfg.entry, parent)


def verify_ssa(cfg: ControlFlowGraph) -> list[str]:
    """SSA diagnostics: empty iff every variable has one definition, every use
    is dominated by its definition (or arrives through a phi), and phi arity
    matches the predecessors.  Never raises; structural issues come back as
    diagnostics too.
    """
    diagnostics: list[str] = []
    defs: dict[tuple[str, int | None], tuple[str, int]] = {}
    for p in cfg.params:
        defs[p.key] = ("<params>", -1)
    for bid in cfg.block_ids():
        for i, instr in enumerate(cfg.blocks[bid].instructions):
            target = instr.defined_var()
            if target is None:
                continue
            if target.key in defs:
                diagnostics.append(
                    f"multiple definitions of {target.render()} "
                    f"(in {defs[target.key][0]} and {bid})"
                )
            else:
                defs[target.key] = (bid, i)

    preds = cfg.pred_map()
    for bid in cfg.block_ids():
        pred_ids = sorted(e.src for e in preds[bid])
        for phi in cfg.blocks[bid].phis():
            phi_preds = sorted(b for b, _ in phi.args)
            if phi_preds != pred_ids:
                diagnostics.append(
                    f"{bid}: phi {phi.target.render()} covers {phi_preds}, "
                    f"predecessors are {pred_ids}"
                )

    try:
        domtree = compute_dominator_tree(cfg)
    except IrError as exc:
        return diagnostics + [str(exc)]

    def check_use(var: Variable, bid: str, position: int):
        if var.key not in defs:
            diagnostics.append(f"{bid}: use of undefined variable {var.render()}")
            return
        def_block, def_pos = defs[var.key]
        if def_block == "<params>":
            return
        if def_block == bid:
            if def_pos >= position:
                diagnostics.append(
                    f"{bid}: {var.render()} used before its definition in the same block"
                )
        elif not domtree.dominates(def_block, bid):
            diagnostics.append(
                f"{bid}: use of {var.render()} is not dominated by its definition in {def_block}"
            )

    for bid in cfg.block_ids():
        for i, instr in enumerate(cfg.blocks[bid].instructions):
            if isinstance(instr, Phi):
                # Arguments are read on the incoming edge: the definition must
                # dominate the predecessor's exit, not this block.
                for pred, arg in instr.args:
                    if isinstance(arg, Variable):
                        if arg.key not in defs:
                            diagnostics.append(
                                f"{bid}: phi argument {arg.render()} is undefined"
                            )
                            continue
                        def_block, _ = defs[arg.key]
                        if def_block != "<params>" and not domtree.dominates(def_block, pred):
                            diagnostics.append(
                                f"{bid}: phi argument {arg.render()} from {pred} is not "
                                f"dominated by its definition in {def_block}"
                            )
                continue
            skip_target = instr.defined_var() is not None
            for j, expr in enumerate(instr.expressions()):
                if skip_target and j == 0:
                    continue
                for node in expr.walk():
                    if isinstance(node, Variable):
                        check_use(node, bid, i)
    if cfg.ssa_form:
        for bid in cfg.block_ids():
            for instr in cfg.blocks[bid].instructions:
                v = instr.defined_var()
                vars_used = [
                    n
                    for e in instr.expressions()
                    for n in e.walk()
                    if isinstance(n, Variable)
                ]
                for n in ([v] if v else []) + vars_used:
                    if n.version is None:
                        diagnostics.append(
                            f"{bid}: variable {n.render()} has no version; "
                            "the function is no longer in SSA-form"
                        )
                        return diagnostics
    return diagnostics


@dataclass
class NaturalLoop:
    header: str
    latches: list[str]
    body: set[str]  # includes the header

    def exit_edges(self, cfg: ControlFlowGraph) -> list:
        return [e for e in cfg.edges if e.src in self.body and e.dst not in self.body]


def back_edges(cfg: ControlFlowGraph, domtree: DominatorTree | None = None) -> list[tuple[str, str]]:
    domtree = domtree or compute_dominator_tree(cfg)
    result = []
    for e in cfg.edges:
        if domtree.dominates(e.dst, e.src):
            result.append((e.src, e.dst))
    return sorted(set(result))


def natural_loops(cfg: ControlFlowGraph, domtree: DominatorTree | None = None) -> list[NaturalLoop]:
    """Natural loops of reducible flow, one per header, innermost-first order."""
    domtree = domtree or compute_dominator_tree(cfg)
    preds = {b: sorted({e.src for e in es}) for b, es in cfg.pred_map().items()}
    by_header: dict[str, NaturalLoop] = {}
    for latch, header in back_edges(cfg, domtree):
        loop = by_header.setdefault(header, NaturalLoop(header, [], {header}))
        loop.latches.append(latch)
        stack = [latch]
        while stack:
            b = stack.pop()
            if b in loop.body:
                continue
            loop.body.add(b)
            stack.extend(p for p in preds[b] if p != header)
    loops = sorted(by_header.values(), key=lambda l: (len(l.body), l.header))
    return loops
