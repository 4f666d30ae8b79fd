"""Liveness via backward exploration from uses, and variable interference.

Phi semantics follow the standard SSA convention: the argument a phi reads
for predecessor p is live-out of p (it travels on the edge), not live-in of
the phi's block, and all phi targets of a block are defined simultaneously at
the block's top.  This is what makes interference of SSA-form programs
chordal and keeps parallel phi copies from sharing a name.

Works on SSA and non-SSA CFGs alike; variables are keyed by (name, version).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .ir.model import ControlFlowGraph, Deref, Instruction, Phi, Variable

VarKey = tuple[str, "int | None"]


def instruction_uses(instr: Instruction) -> list[VarKey]:
    """Variables read by an instruction (phi arguments excluded: edge uses)."""
    if isinstance(instr, Phi):
        return []
    used: list[VarKey] = []
    target = instr.defined_var()
    for i, expr in enumerate(instr.expressions()):
        if target is not None and i == 0:
            continue  # the defined variable itself; store targets are reads
        for node in expr.walk():
            if isinstance(node, Variable):
                used.append(node.key)
    return used


@dataclass
class LivenessInfo:
    live_in: dict[str, set[VarKey]]
    live_out: dict[str, set[VarKey]]

    def live_after_sets(self, cfg: ControlFlowGraph, block_id: str) -> list[set[VarKey]]:
        """Per-instruction live-after sets for one block, computed on demand."""
        block = cfg.blocks[block_id]
        n = len(block.instructions)
        after: list[set[VarKey]] = [set() for _ in range(n)]
        current = set(self.live_out[block_id])
        for i in range(n - 1, -1, -1):
            instr = block.instructions[i]
            after[i] = set(current)
            d = instr.defined_var()
            if d is not None:
                current.discard(d.key)
            current.update(instruction_uses(instr))
        return after


def compute_liveness(cfg: ControlFlowGraph) -> LivenessInfo:
    """Backward path exploration from every use to its reaching definitions."""
    preds = {b: sorted({e.src for e in es}) for b, es in cfg.pred_map().items()}
    defs_in_block: dict[str, set[VarKey]] = {}
    for bid, block in cfg.blocks.items():
        defs_in_block[bid] = {
            i.defined_var().key for i in block.instructions if i.defined_var() is not None
        }
    live_in: dict[str, set[VarKey]] = {b: set() for b in cfg.blocks}
    live_out: dict[str, set[VarKey]] = {b: set() for b in cfg.blocks}

    def mark_live_out(start: str, key: VarKey):
        stack = [start]
        while stack:
            b = stack.pop()
            if key in live_out[b]:
                continue
            live_out[b].add(key)
            if key in defs_in_block[b]:
                continue
            live_in[b].add(key)
            stack.extend(preds[b])

    for bid in cfg.block_ids():
        block = cfg.blocks[bid]
        seen_defs: set[VarKey] = set()
        for instr in block.instructions:
            if isinstance(instr, Phi):
                for pred, arg in instr.args:
                    if isinstance(arg, Variable):
                        mark_live_out(pred, arg.key)
                seen_defs.add(instr.target.key)
                continue
            for key in instruction_uses(instr):
                if key not in seen_defs and key not in live_in[bid]:
                    live_in[bid].add(key)
                    for p in preds[bid]:
                        mark_live_out(p, key)
            d = instr.defined_var()
            if d is not None:
                seen_defs.add(d.key)
    return LivenessInfo(live_in, live_out)


@dataclass
class InterferenceGraph:
    nodes: set[VarKey] = field(default_factory=set)
    adjacency: dict[VarKey, set[VarKey]] = field(default_factory=dict)
    dtypes: dict[VarKey, object] = field(default_factory=dict)

    def add_node(self, key: VarKey, dtype=None):
        if key not in self.nodes:
            self.nodes.add(key)
            self.adjacency[key] = set()
        if dtype is not None:
            self.dtypes.setdefault(key, dtype)

    def add_edge(self, a: VarKey, b: VarKey):
        if a == b:
            return
        self.add_node(a)
        self.add_node(b)
        self.adjacency[a].add(b)
        self.adjacency[b].add(a)

    def neighbors(self, key: VarKey) -> set[VarKey]:
        return self.adjacency.get(key, set())

    def edges(self) -> list[tuple[VarKey, VarKey]]:
        out = set()
        for a, nbrs in self.adjacency.items():
            for b in nbrs:
                out.add((a, b) if a <= b else (b, a))
        return sorted(out)

    def degree(self, key: VarKey) -> int:
        return len(self.adjacency.get(key, ()))


def build_interference_graph(cfg: ControlFlowGraph, liveness: LivenessInfo) -> InterferenceGraph:
    """Edge (u, v) iff one is live at a definition point of the other.

    A pure copy u = v where v dies at the copy creates no edge: v is not in
    the live-after set, so u may safely reuse v's name.  All phi targets of a
    block are written at the same point and therefore mutually interfere.
    """
    graph = InterferenceGraph()
    for var in cfg.variables():
        graph.add_node(var.key, var.dtype)
    # parameters are all defined at the entry point: they interfere pairwise
    # and with everything live at function entry
    entry_live = set(liveness.live_in[cfg.entry])
    for p in cfg.params:
        for other in entry_live | {q.key for q in cfg.params}:
            graph.add_edge(p.key, other)
    for bid in cfg.block_ids():
        block = cfg.blocks[bid]
        after = liveness.live_after_sets(cfg, bid)
        phi_targets = [i.target.key for i in block.phis()]
        if phi_targets:
            live_at_group = set(liveness.live_in[bid]) | set(phi_targets)
            for t in phi_targets:
                for other in live_at_group:
                    graph.add_edge(t, other)
        for i, instr in enumerate(block.instructions):
            if isinstance(instr, Phi):
                continue
            d = instr.defined_var()
            if d is None:
                continue
            for other in after[i]:
                graph.add_edge(d.key, other)
    return graph
