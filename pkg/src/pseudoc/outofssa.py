"""Out-of-SSA translation in three phases.

1. remove_circular_dependencies: phi functions of one block that feed each
   other in a cycle cannot be sequentialized; a directed feedback vertex set
   of the per-block dependency graph picks the variables whose phis are
   redirected into fresh copy targets, with `x = copy_x` appended after the
   last phi.  Remaining phis are ordered topologically.
2. lift_phi_functions: each phi becomes one copy per predecessor, appended to
   the predecessor or to a new block splitting a branch edge.  After this the
   function is no longer in SSA form.
3. rename_variables: a greedy coloring of the interference graph in
   lexicographic-BFS order merges non-interfering variables into one name per
   color class; copy-related variables prefer each other's colors so that
   most copies collapse into self-assignments and disappear.

The two orders (lift first or rename first) are both supported; renaming
first colors a chordal graph optimally but may create extra copies later.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .ir.model import (
    Assign,
    Branch,
    ControlFlowGraph,
    Edge,
    IndirectJump,
    IrError,
    Jump,
    Phi,
    Variable,
)
from .liveness import InterferenceGraph, VarKey, build_interference_graph, compute_liveness


@dataclass
class PhiDependencyGraph:
    """Per-block execution-order constraints between phi definitions.

    An edge (u, v) means v is used in the phi defining u: u's phi must run
    before v's redefines it.  Self-references are no constraint.
    """

    block_id: str
    nodes: list[VarKey]
    succ: dict[VarKey, set[VarKey]] = field(default_factory=dict)

    def edges(self) -> list[tuple[VarKey, VarKey]]:
        return sorted((u, v) for u, vs in self.succ.items() for v in vs)

    def is_acyclic(self) -> bool:
        return len(self.topological_order() or ()) == len(self.nodes) if self.nodes else True

    def topological_order(self) -> list[VarKey] | None:
        """Kahn's algorithm; ties broken by original phi position.  None if cyclic."""
        indegree = {n: 0 for n in self.nodes}
        for u in self.nodes:
            for v in self.succ.get(u, ()):
                indegree[v] += 1
        position = {n: i for i, n in enumerate(self.nodes)}
        ready = sorted((n for n in self.nodes if indegree[n] == 0), key=position.get)
        order: list[VarKey] = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for v in sorted(self.succ.get(n, ()), key=position.get):
                indegree[v] -= 1
                if indegree[v] == 0:
                    ready.append(v)
            ready.sort(key=position.get)
        return order if len(order) == len(self.nodes) else None

    def to_dot(self) -> str:
        def fmt(k: VarKey) -> str:
            return k[0] if k[1] is None else f"{k[0]}#{k[1]}"

        lines = [f'digraph "{self.block_id}" {{']
        for n in self.nodes:
            lines.append(f'  "{fmt(n)}";')
        for u, v in self.edges():
            lines.append(f'  "{fmt(u)}" -> "{fmt(v)}";')
        lines.append("}")
        return "\n".join(lines)


def build_phi_dependency_graph(block) -> PhiDependencyGraph:
    phis = block.phis()
    targets = [p.target.key for p in phis]
    target_set = set(targets)
    graph = PhiDependencyGraph(block.id, targets, {t: set() for t in targets})
    for phi in phis:
        u = phi.target.key
        for _, arg in phi.args:
            if isinstance(arg, Variable) and arg.key in target_set and arg.key != u:
                graph.succ[u].add(arg.key)
    return graph


@dataclass
class FvsResult:
    removed: set[VarKey]
    order: list[VarKey]  # topological order of the remaining phi targets


def _has_cycle(nodes: list[VarKey], succ: dict[VarKey, set[VarKey]]) -> bool:
    indegree = {n: 0 for n in nodes}
    for u in nodes:
        for v in succ[u]:
            indegree[v] += 1
    ready = [n for n in nodes if indegree[n] == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for v in succ[n]:
            indegree[v] -= 1
            if indegree[v] == 0:
                ready.append(v)
    return seen != len(nodes)


def compute_directed_fvs(graph: PhiDependencyGraph) -> FvsResult:
    """Approximate directed feedback vertex set.

    Repeatedly removes the node with the largest indegree*outdegree product
    (ties by variable name) until acyclic, then minimalizes by re-insertion.
    Exact on the short cycles phi blocks produce in practice.
    """
    nodes = list(graph.nodes)
    succ = {n: set(graph.succ.get(n, ())) for n in nodes}
    pred: dict[VarKey, set[VarKey]] = {n: set() for n in nodes}
    for u in nodes:
        for v in succ[u]:
            pred[v].add(u)
    removed: list[VarKey] = []
    live = set(nodes)

    def current_succ():
        return {n: {v for v in succ[n] if v in live} for n in live}

    while _has_cycle([n for n in nodes if n in live], current_succ()):
        candidates = sorted(
            live,
            key=lambda n: (
                -(len([p for p in pred[n] if p in live]) * len([s for s in succ[n] if s in live])),
                n,
            ),
        )
        victim = candidates[0]
        live.discard(victim)
        removed.append(victim)

    # minimalize: drop removals that are not actually needed
    essential: set[VarKey] = set(removed)
    for candidate in sorted(removed):
        trial = live | {candidate}
        trial_succ = {n: {v for v in succ[n] if v in trial} for n in trial}
        if not _has_cycle([n for n in nodes if n in trial], trial_succ):
            live = trial
            essential.discard(candidate)

    remaining = PhiDependencyGraph(
        graph.block_id,
        [n for n in graph.nodes if n not in essential],
        {n: {v for v in graph.succ.get(n, ()) if v not in essential} for n in graph.nodes if n not in essential},
    )
    order = remaining.topological_order()
    assert order is not None, "dependency graph still cyclic after FVS removal"
    return FvsResult(essential, order)


def _fresh_copy_name(base: str, used: set[str]) -> str:
    name = f"copy_{base}"
    n = 0
    while name in used:
        n += 1
        name = f"copy_{base}_{n}"
    used.add(name)
    return name


def remove_circular_dependencies(cfg: ControlFlowGraph) -> ControlFlowGraph:
    """Break phi cycles with copies and order phis into an execution order."""
    out = cfg.copy()
    used_names = {v.name for v in out.variables()}
    for bid in out.block_ids():
        block = out.blocks[bid]
        phis = block.phis()
        if not phis:
            continue
        graph = build_phi_dependency_graph(block)
        fvs = compute_directed_fvs(graph)
        rest = [i for i in block.instructions if not isinstance(i, Phi)]
        by_target = {p.target.key: p for p in phis}
        copies: list[Assign] = []
        for key in sorted(fvs.removed):
            phi = by_target[key]
            copy_var = Variable(_fresh_copy_name(phi.target.name, used_names), phi.target.version, phi.target.dtype)
            by_target[key] = Phi(copy_var, phi.args)
            copies.append(Assign(phi.target, copy_var))
        # order: FVS copies' phis first (they are isolated), then topological
        ordered = [by_target[k] for k in sorted(fvs.removed)] + [by_target[k] for k in fvs.order]
        block.instructions = ordered + copies + rest
    return out


def lift_phi_functions(cfg: ControlFlowGraph) -> ControlFlowGraph:
    """Move phi definitions into the predecessors; splits branch edges."""
    out = cfg.copy()
    for bid in out.block_ids():
        block = out.blocks[bid]
        phis = block.phis()
        if not phis:
            continue
        graph = build_phi_dependency_graph(block)
        order = graph.topological_order()
        if order is None:
            raise IrError(f"{bid}: circular phi dependencies; run the removal phase first")
        position = {k: i for i, k in enumerate(order)}
        phis.sort(key=lambda p: position[p.target.key])

        preds = sorted({e.src for e in out.predecessors(bid)})
        for pred_id in preds:
            copies = []
            for phi in phis:
                arg = phi.arg_for(pred_id)
                if isinstance(arg, Variable) and arg.key == phi.target.key:
                    continue  # self-copy
                copies.append(Assign(phi.target, arg))
            _insert_on_edge(out, pred_id, bid, copies)
        block.instructions = [i for i in block.instructions if not isinstance(i, Phi)]
    out.ssa_form = False
    return out


def _insert_on_edge(cfg: ControlFlowGraph, pred_id: str, dst_id: str, copies: list[Assign]):
    pred = cfg.blocks[pred_id]
    term = pred.terminator
    if isinstance(term, Jump):
        pred.instructions[-1:-1] = copies
        return
    if not copies:
        return  # no need to split an edge for nothing
    if not isinstance(term, (Branch, IndirectJump)):
        raise IrError(f"{pred_id}: predecessor of a phi block must end in a jump or branch")
    new_id = cfg.fresh_block_id(f"{pred_id}_{dst_id}")
    from .ir.model import BasicBlock

    cfg.blocks[new_id] = BasicBlock(new_id, list(copies) + [Jump()])
    for i, e in enumerate(cfg.edges):
        if e.src == pred_id and e.dst == dst_id:
            cfg.edges[i] = Edge(pred_id, new_id, e.kind, e.value)
    cfg.edges.append(Edge(new_id, dst_id, "uncond"))
    if isinstance(term, IndirectJump):
        table = tuple((v, new_id if t == dst_id else t) for v, t in term.table)
        pred.instructions[-1] = IndirectJump(term.offset, table)


@dataclass
class ColorAssignment:
    color_of: dict[VarKey, int]
    names: dict[int, str] = field(default_factory=dict)

    def classes(self) -> dict[int, list[VarKey]]:
        out: dict[int, list[VarKey]] = {}
        for key in sorted(self.color_of):
            out.setdefault(self.color_of[key], []).append(key)
        return out

    @property
    def color_count(self) -> int:
        return len(set(self.color_of.values()))


def lex_bfs_order(graph: InterferenceGraph, start: VarKey | None = None) -> list[VarKey]:
    """Lexicographic BFS by partition refinement.

    The start vertex is the highest-degree node (ties by name); within a
    refinement class the smallest name goes first.  On chordal graphs the
    visit order is a reversed perfect elimination ordering, so greedy
    coloring along it is optimal.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        return []
    if start is None:
        start = min(nodes, key=lambda n: (-graph.degree(n), n))
    classes: list[list[VarKey]] = [[start], [n for n in nodes if n != start]]
    order: list[VarKey] = []
    while classes:
        head = classes[0]
        v = head.pop(0)
        order.append(v)
        if not head:
            classes.pop(0)
        nbrs = graph.neighbors(v)
        refined: list[list[VarKey]] = []
        for cls in classes:
            inside = [n for n in cls if n in nbrs]
            outside = [n for n in cls if n not in nbrs]
            if inside:
                refined.append(inside)
            if outside:
                refined.append(outside)
        classes = refined
    return order


def is_perfect_elimination_order(graph: InterferenceGraph, order: list[VarKey]) -> bool:
    """Chordality check: reversed lexBFS order must be a PEO."""
    position = {v: i for i, v in enumerate(order)}
    for v in order:
        earlier = [u for u in graph.neighbors(v) if position[u] < position[v]]
        if not earlier:
            continue
        latest = max(earlier, key=position.get)
        rest = [u for u in earlier if u != latest]
        if any(u not in graph.neighbors(latest) and u != latest for u in rest):
            return False
    return True


def color_interference_graph(
    graph: InterferenceGraph, copy_hints: list[tuple[VarKey, VarKey]] | None = None
) -> ColorAssignment:
    """Greedy coloring in lexBFS order.

    An existing color is always used when possible.  Among the feasible
    existing colors the preference is: a color already held by a copy
    partner, then the color fewest uncolored neighbors could still take,
    then the lowest id.  A color is only feasible for variables of the same
    data type, so one class never mixes widths.
    """
    hints: dict[VarKey, set[VarKey]] = {}
    for a, b in copy_hints or []:
        hints.setdefault(a, set()).add(b)
        hints.setdefault(b, set()).add(a)

    order = lex_bfs_order(graph)
    color_of: dict[VarKey, int] = {}
    color_dtype: dict[int, object] = {}
    for v in order:
        v_type = graph.dtypes.get(v)
        forbidden = {color_of[n] for n in graph.neighbors(v) if n in color_of}
        feasible = [
            c
            for c in sorted(color_dtype)
            if c not in forbidden and _same_type(color_dtype[c], v_type)
        ]
        if not feasible:
            new_color = len(color_dtype)
            color_dtype[new_color] = v_type
            color_of[v] = new_color
            continue
        partner_colors = {
            color_of[p] for p in hints.get(v, ()) if p in color_of and color_of[p] in feasible
        }
        if partner_colors:
            color_of[v] = min(partner_colors)
            continue
        uncolored_nbrs = [n for n in graph.neighbors(v) if n not in color_of]

        def demand(c: int) -> int:
            return sum(
                1
                for n in uncolored_nbrs
                if _same_type(graph.dtypes.get(n), color_dtype[c])
                and c not in {color_of[m] for m in graph.neighbors(n) if m in color_of}
            )

        color_of[v] = min(feasible, key=lambda c: (demand(c), c))
    return ColorAssignment(color_of)


def _same_type(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return a == b


def collect_copy_hints(cfg: ControlFlowGraph) -> list[tuple[VarKey, VarKey]]:
    """Copy-related pairs: direct copies plus phi target/argument relations."""
    pairs: list[tuple[VarKey, VarKey]] = []
    for bid in cfg.block_ids():
        for instr in cfg.blocks[bid].instructions:
            if isinstance(instr, Phi):
                for _, arg in instr.args:
                    if isinstance(arg, Variable):
                        pairs.append((instr.target.key, arg.key))
            elif isinstance(instr, Assign) and instr.is_copy:
                pairs.append((instr.target.key, instr.value.key))
    return pairs


def rename_variables(cfg: ControlFlowGraph, assignment: ColorAssignment) -> ControlFlowGraph:
    """Give every color class one name and drop the self-copies that appear."""
    out = cfg.copy()
    all_vars = {v.key: v for v in out.variables()}
    for key in all_vars:
        if key not in assignment.color_of:
            raise IrError(f"no color for variable {key[0]}")
    # verify adjacent-distinct on the callers' own graph is the callers' job;
    # here we make sure a class carries exactly one data type
    class_type: dict[int, object] = {}
    for key, color in assignment.color_of.items():
        if key not in all_vars:
            continue
        dtype = all_vars[key].dtype
        if color in class_type and class_type[color] != dtype:
            raise IrError(f"color {color} mixes data types")
        class_type[color] = dtype

    param_names = {p.key: p.name for p in out.params}
    names: dict[int, str] = dict(assignment.names)
    counter = 0
    # parameters keep their names; everything else is var_k by first appearance
    for key, color in sorted(assignment.color_of.items()):
        if key in param_names and color not in names:
            names[color] = param_names[key]
    for bid in out.block_ids():
        for instr in out.blocks[bid].instructions:
            for expr in instr.expressions():
                for node in expr.walk():
                    if isinstance(node, Variable) and node.key in assignment.color_of:
                        color = assignment.color_of[node.key]
                        if color not in names:
                            names[color] = f"var_{counter}"
                            counter += 1
    for color in sorted(set(assignment.color_of.values())):
        if color not in names:
            names[color] = f"var_{counter}"
            counter += 1
    assignment.names = names

    def rename(node):
        if isinstance(node, Variable) and node.key in assignment.color_of:
            color = assignment.color_of[node.key]
            return Variable(names[color], None, class_type.get(color, node.dtype))
        children = node.children()
        if not children:
            return node
        return node.with_children(tuple(rename(c) for c in children))

    for bid in out.block_ids():
        block = out.blocks[bid]
        new_instrs = []
        for instr in block.instructions:
            exprs = tuple(rename(e) for e in instr.expressions())
            renamed = instr.with_expressions(exprs)
            if isinstance(renamed, Assign) and renamed.is_copy and renamed.target.key == renamed.value.key:
                continue  # self-copy after merging
            new_instrs.append(renamed)
        block.instructions = new_instrs
    out.params = tuple(
        Variable(names[assignment.color_of[p.key]], None, p.dtype) for p in out.params
    )
    out.ssa_form = False
    return out


def run_out_of_ssa(cfg: ControlFlowGraph, order: str = "lift-first") -> ControlFlowGraph:
    """Full translation; order is 'lift-first' or 'rename-first'."""
    if order not in ("lift-first", "rename-first"):
        raise ValueError(f"unknown out-of-SSA order {order!r}")
    if order == "lift-first":
        stage = lift_phi_functions(remove_circular_dependencies(cfg))
    else:
        stage = cfg
    liveness = compute_liveness(stage)
    graph = build_interference_graph(stage, liveness)
    hints = collect_copy_hints(stage)
    assignment = color_interference_graph(graph, hints)
    renamed = rename_variables(stage, assignment)
    if order == "rename-first":
        renamed = lift_phi_functions(remove_circular_dependencies(renamed))
    return renamed
