"""Graph-based bit-vector logic engine.

Formulas live in a shared per-context graph: every operation, variable and
constant is one hash-consed node, so structurally identical subterms are the
same object and equality of handles is structural equality.  The engine
covers exactly the queries the pipeline needs (simplification, lightweight
equality, satisfiability, implication) and is deliberately incomplete: it is
not an SMT solver.  Unsigned comparisons are first-class and are never split
into bit-slice conjunctions.

Sorts: and/or/not/true/false/eq/ule/sle/interval are boolean nodes;
var/const/atom/add/sub are bit-vectors of a fixed width.  Strict comparisons
are normalized on construction (a <u b becomes not(b <=u a)) and `ne` becomes
not(eq).  `atom` nodes wrap an opaque IR expression used as a leaf.
"""
from __future__ import annotations


import numpy as np

BOOL_KINDS = frozenset({"and", "or", "not", "true", "false", "eq", "ule", "sle", "interval"})
LEAF_KINDS = frozenset({"var", "const", "atom", "true", "false"})

DEFAULT_REWRITE_BUDGET = 10_000
DEFAULT_ENUM_LIMIT = 1 << 32
ENUM_CHUNK = 1 << 16


class LogicError(Exception):
    pass


class Term:
    """One node of the shared logic graph.  Identity is structural identity."""

    __slots__ = ("ctx", "id", "kind", "operands", "payload")

    def __init__(self, ctx, id_, kind, operands, payload):
        self.ctx = ctx
        self.id = id_
        self.kind = kind
        self.operands = operands
        self.payload = payload

    @property
    def is_bool(self) -> bool:
        return self.kind in BOOL_KINDS

    @property
    def width(self) -> int:
        if self.kind in ("var", "atom"):
            return self.payload[1]
        if self.kind == "const":
            return self.payload[1]
        if self.kind in ("add", "sub"):
            return self.operands[0].width
        raise LogicError(f"{self.kind} node has no width")

    @property
    def value(self) -> int:
        assert self.kind == "const"
        return self.payload[0]

    def node_count(self) -> int:
        """Number of distinct graph nodes reachable from this term."""
        seen: set[int] = set()
        stack = [self]
        while stack:
            t = stack.pop()
            if t.id in seen:
                continue
            seen.add(t.id)
            stack.extend(t.operands)
        return len(seen)

    def walk(self):
        seen: set[int] = set()
        stack = [self]
        while stack:
            t = stack.pop()
            if t.id in seen:
                continue
            seen.add(t.id)
            yield t
            stack.extend(t.operands)

    def __repr__(self):
        return f"<{render_term(self)}>"


class LogicContext:
    """Owns the shared graph for one decompiled function.

    Handles from different contexts must not be mixed; every public
    constructor interns, so building the same term twice returns the same
    handle.
    """

    def __init__(self, enum_limit: int = DEFAULT_ENUM_LIMIT, rewrite_budget: int = DEFAULT_REWRITE_BUDGET):
        self._table: dict[tuple, Term] = {}
        self._uses: dict[int, set[int]] = {}
        self._definitions: dict[int, Term] = {}
        self._simplified: dict[int, Term] = {}
        self.enum_limit = enum_limit
        self.rewrite_budget = rewrite_budget
        self.rewrites_fired = 0
        self.TRUE = self._intern("true", (), None)
        self.FALSE = self._intern("false", (), None)

    # -- construction -------------------------------------------------------

    def _intern(self, kind, operands, payload) -> Term:
        key = (kind, tuple(t.id for t in operands), payload)
        found = self._table.get(key)
        if found is not None:
            return found
        term = Term(self, len(self._table), kind, tuple(operands), payload)
        self._table[key] = term
        for op in operands:
            self._uses.setdefault(op.id, set()).add(term.id)
        return term

    def var(self, name: str, width: int) -> Term:
        return self._intern("var", (), (name, width))

    def const(self, value: int, width: int) -> Term:
        return self._intern("const", (), (value & ((1 << width) - 1), width))

    def atom(self, expr, width: int) -> Term:
        """Opaque bit-vector leaf wrapping an IR expression."""
        return self._intern("atom", (), (expr, width))

    def interval(self, subject: Term, lo: int, hi: int, signed: bool) -> Term:
        if signed:
            assert _to_signed(lo, subject.width) <= _to_signed(hi, subject.width)
        else:
            assert lo <= hi
        return self._intern("interval", (subject,), (lo, hi, signed))

    def mk(self, kind: str, operands: list[Term]) -> Term:
        """General constructor with light normalization and trivial folds."""
        for t in operands:
            if t.ctx is not self:
                raise LogicError("handle from a different context")
        if kind in ("and", "or"):
            return self._mk_junction(kind, operands)
        if kind == "not":
            (x,) = operands
            self._check_bool(x)
            if x.kind == "not":
                return x.operands[0]
            if x is self.TRUE:
                return self.FALSE
            if x is self.FALSE:
                return self.TRUE
            return self._intern("not", (x,), None)
        if kind in ("eq", "ne"):
            a, b = operands
            self._check_bv(a, b)
            if (a.kind == "const", a.id) > (b.kind == "const", b.id):
                a, b = b, a
            if a is b:
                result = self.TRUE
            elif a.kind == "const" and b.kind == "const":
                result = self.TRUE if a.value == b.value else self.FALSE
            else:
                result = self._intern("eq", (a, b), None)
            return result if kind == "eq" else self.mk("not", [result])
        if kind in ("ule", "sle"):
            a, b = operands
            self._check_bv(a, b)
            if a.kind == "const" and b.kind == "const":
                av, bv = a.value, b.value
                if kind == "sle":
                    av, bv = _to_signed(av, a.width), _to_signed(bv, b.width)
                return self.TRUE if av <= bv else self.FALSE
            if a is b:
                return self.TRUE
            return self._intern(kind, (a, b), None)
        if kind in ("ult", "slt"):
            a, b = operands
            return self.mk("not", [self.mk("ule" if kind == "ult" else "sle", [b, a])])
        if kind in ("add", "sub"):
            a, b = operands
            self._check_bv(a, b)
            if a.kind == "const" and b.kind == "const":
                v = a.value + b.value if kind == "add" else a.value - b.value
                return self.const(v, a.width)
            if b.kind == "const" and b.value == 0:
                return a
            if kind == "add" and a.kind == "const" and a.value == 0:
                return b
            if kind == "add" and a.id > b.id:
                a, b = b, a
            return self._intern(kind, (a, b), None)
        if kind == "true":
            return self.TRUE
        if kind == "false":
            return self.FALSE
        raise LogicError(f"unknown term kind {kind!r}")

    def _mk_junction(self, kind: str, operands: list[Term]) -> Term:
        absorbing = self.FALSE if kind == "and" else self.TRUE
        neutral = self.TRUE if kind == "and" else self.FALSE
        flat: list[Term] = []
        seen: set[int] = set()
        for t in operands:
            self._check_bool(t)
            if t.kind == kind:
                parts = t.operands
            else:
                parts = (t,)
            for p in parts:
                if p is absorbing:
                    return absorbing
                if p is neutral or p.id in seen:
                    continue
                seen.add(p.id)
                flat.append(p)
        if not flat:
            return neutral
        if len(flat) == 1:
            return flat[0]
        flat.sort(key=lambda t: t.id)
        return self._intern(kind, tuple(flat), None)

    @staticmethod
    def _check_bool(t: Term):
        if not t.is_bool:
            raise LogicError(f"expected a boolean operand, got {t.kind}")

    @staticmethod
    def _check_bv(a: Term, b: Term):
        if a.is_bool or b.is_bool:
            raise LogicError("expected bit-vector operands")
        if a.width != b.width:
            raise LogicError(f"width mismatch: {a.width} vs {b.width}")

    # -- definition edges ----------------------------------------------------

    def define(self, var_term: Term, definition: Term):
        """Record a definition edge from a variable node to its defining term."""
        if var_term.kind != "var":
            raise LogicError("definition edges start at variable nodes")
        self._definitions[var_term.id] = definition

    def definition_of(self, var_term: Term) -> Term | None:
        return self._definitions.get(var_term.id)

    def substitute_definitions(self, t: Term) -> Term:
        """Inline recorded definition edges (one level, applied to fixpoint)."""
        cache: dict[int, Term] = {}

        def sub(x: Term) -> Term:
            if x.id in cache:
                return cache[x.id]
            if x.kind == "var" and x.id in self._definitions:
                result = sub(self._definitions[x.id])
            elif not x.operands:
                result = x
            else:
                ops = [sub(o) for o in x.operands]
                result = self._rebuild(x, ops)
            cache[x.id] = result
            return result

        return sub(t)

    def _rebuild(self, t: Term, ops: list[Term]) -> Term:
        if all(a is b for a, b in zip(ops, t.operands)):
            return t
        if t.kind == "interval":
            lo, hi, signed = t.payload
            return self.interval(ops[0], lo, hi, signed)
        return self.mk(t.kind, ops)

    def uses_of(self, t: Term) -> list[Term]:
        """Parent terms currently referencing t (graph predecessors)."""
        ids = self._uses.get(t.id, set())
        by_id = {term.id: term for term in self._table.values()}
        return [by_id[i] for i in sorted(ids)]


def _to_signed(value: int, width: int) -> int:
    return value - (1 << width) if value >= 1 << (width - 1) else value


# -- simplification ---------------------------------------------------------


def simplify(t: Term) -> Term:
    """Rewrite t to an equivalent, usually smaller term.

    Bottom-up single pass to fixpoint under a rule-application budget.
    Guaranteed rewrites: constant folding, flattening/idempotence/complement
    for and/or, absorption, negation push-down, and merging of equality
    disjunctions and bound comparisons into interval atoms.  Unsigned
    comparisons stay single atoms.
    """
    ctx = t.ctx
    cached = ctx._simplified.get(t.id)
    if cached is not None:
        return cached
    budget = ctx.rewrite_budget
    current = t
    for _ in range(64):  # fixpoint loop; each iteration is one bottom-up pass
        ctx.rewrites_fired = 0
        new = _simplify_pass(current, {})
        if new is current or ctx.rewrites_fired == 0:
            current = new
            break
        current = new
        budget -= ctx.rewrites_fired
        if budget <= 0:
            break
    ctx._simplified[t.id] = current
    ctx._simplified[current.id] = current
    return current


def _simplify_pass(t: Term, cache: dict[int, Term]) -> Term:
    if t.id in cache:
        return cache[t.id]
    ctx = t.ctx
    if t.operands:
        ops = [_simplify_pass(o, cache) for o in t.operands]
        t2 = ctx._rebuild(t, ops)
        if t2 is not t:
            ctx.rewrites_fired += 1
        t = t2
    result = _rewrite_node(t)
    if result is not t:
        ctx.rewrites_fired += 1
    cache[t.id] = result
    return result


def _rewrite_node(t: Term) -> Term:
    ctx = t.ctx
    if t.kind == "not":
        inner = t.operands[0]
        if inner.kind == "and" or inner.kind == "or":
            dual = "or" if inner.kind == "and" else "and"
            return ctx.mk(dual, [ctx.mk("not", [x]) for x in inner.operands])
        if inner.kind == "interval":
            # not(l <= v <= u) on a full one-sided range flips to the other side
            lo, hi, signed = inner.payload
            v = inner.operands[0]
            lo_min, hi_max = _range_bounds(v.width, signed)
            if lo == lo_min and hi != hi_max:
                return _interval(ctx, v, _inc(hi, v.width), hi_max, signed)
            if hi == hi_max and lo != lo_min:
                return _interval(ctx, v, lo_min, _dec(lo, v.width), signed)
        return t
    if t.kind in ("ule", "sle"):
        return _comparison_to_interval(t)
    if t.kind == "interval":
        lo, hi, signed = t.payload
        v = t.operands[0]
        if v.kind == "const":
            val = _to_signed(v.value, v.width) if signed else v.value
            lo_c = _to_signed(lo, v.width) if signed else lo
            hi_c = _to_signed(hi, v.width) if signed else hi
            return ctx.TRUE if lo_c <= val <= hi_c else ctx.FALSE
        lo_min, hi_max = _range_bounds(v.width, signed)
        if lo == lo_min and hi == hi_max:
            return ctx.TRUE
        if lo == hi:
            return ctx.mk("eq", [v, ctx.const(lo, v.width)])
        return t
    if t.kind == "and":
        return _simplify_and(t)
    if t.kind == "or":
        return _simplify_or(t)
    return t


def _range_bounds(width: int, signed: bool) -> tuple[int, int]:
    if signed:
        return (1 << (width - 1), (1 << (width - 1)) - 1)  # min, max as bit patterns
    return (0, (1 << width) - 1)


def _inc(v: int, width: int) -> int:
    return (v + 1) & ((1 << width) - 1)


def _dec(v: int, width: int) -> int:
    return (v - 1) & ((1 << width) - 1)


def _interval(ctx, v, lo, hi, signed) -> Term:
    lo_c = _to_signed(lo, v.width) if signed else lo
    hi_c = _to_signed(hi, v.width) if signed else hi
    if lo_c > hi_c:
        return ctx.FALSE
    if lo_c == hi_c:
        return ctx.mk("eq", [v, ctx.const(lo, v.width)])
    lo_min, hi_max = _range_bounds(v.width, signed)
    if lo == lo_min and hi == hi_max:
        return ctx.TRUE
    return ctx.interval(v, lo & ((1 << v.width) - 1), hi & ((1 << v.width) - 1), signed)


def _comparison_to_interval(t: Term) -> Term:
    """Bound comparisons against constants become interval atoms on leaves."""
    ctx = t.ctx
    a, b = t.operands
    signed = t.kind == "sle"
    lo_min, hi_max = _range_bounds(a.width if a.kind != "const" else b.width, signed)
    if b.kind == "const" and a.kind in ("var", "atom"):
        return _interval(ctx, a, lo_min, b.value, signed)
    if a.kind == "const" and b.kind in ("var", "atom"):
        return _interval(ctx, b, a.value, hi_max, signed)
    return t


def _subject_of(member: Term):
    """(subject, kind-data) for members usable in interval/equality merging."""
    if member.kind == "eq":
        a, b = member.operands
        if b.kind == "const" and a.kind in ("var", "atom"):
            return a, ("eq", b.value)
        if a.kind == "const" and b.kind in ("var", "atom"):
            return b, ("eq", a.value)
    if member.kind == "interval":
        lo, hi, signed = member.payload
        return member.operands[0], ("interval", lo, hi, signed)
    if member.kind == "not":
        inner = member.operands[0]
        if inner.kind == "eq":
            a, b = inner.operands
            if b.kind == "const" and a.kind in ("var", "atom"):
                return a, ("ne", b.value)
            if a.kind == "const" and b.kind in ("var", "atom"):
                return b, ("ne", a.value)
    return None, None


def _simplify_and(t: Term) -> Term:
    ctx = t.ctx
    members = list(t.operands)
    negated = {m.operands[0].id for m in members if m.kind == "not"}
    for m in members:
        if m.kind != "not" and m.id in negated:
            return ctx.FALSE
    # absorption: and(x, or(..., x, ...)) drops the disjunction
    member_ids = {m.id for m in members}
    kept = []
    for m in members:
        if m.kind == "or" and any(o.id in member_ids for o in m.operands):
            continue
        kept.append(m)
    members = kept
    # per-subject intersection of eq/interval/ne constraints
    members, changed = _merge_and_constraints(ctx, members)
    if members is None:
        return ctx.FALSE
    return ctx.mk("and", members)


def _merge_and_constraints(ctx, members):
    by_subject: dict[int, list] = {}
    passthrough = []
    subjects: dict[int, Term] = {}
    for m in members:
        subject, data = _subject_of(m)
        if subject is None:
            passthrough.append(m)
        else:
            by_subject.setdefault(subject.id, []).append(data)
            subjects[subject.id] = subject
    merged = []
    for sid, constraints in sorted(by_subject.items()):
        subject = subjects[sid]
        width = subject.width
        mask = (1 << width) - 1
        if len(constraints) == 1:
            merged.append(_constraint_to_term(ctx, subject, constraints[0]))
            continue
        eq_values = {c[1] for c in constraints if c[0] == "eq"}
        ne_values = {c[1] for c in constraints if c[0] == "ne"}
        intervals = [(c[1], c[2], c[3]) for c in constraints if c[0] == "interval"]
        if eq_values:
            if len(eq_values) > 1:
                return None, True
            v = next(iter(eq_values))
            if v in ne_values:
                return None, True
            for lo, hi, signed in intervals:
                ordv = _to_signed(v, width) if signed else v
                lo_o = _to_signed(lo, width) if signed else lo
                hi_o = _to_signed(hi, width) if signed else hi
                if not lo_o <= ordv <= hi_o:
                    return None, True
            merged.append(ctx.mk("eq", [subject, ctx.const(v, width)]))
            continue
        # intersect intervals within each signedness group independently
        for signed in (False, True):
            group = [(lo, hi) for lo, hi, s in intervals if s == signed]
            if not group:
                continue
            conv = (lambda x: _to_signed(x, width)) if signed else (lambda x: x)
            lo_c = max(conv(lo) for lo, _ in group)
            hi_c = min(conv(hi) for _, hi in group)
            if len(intervals) == len(group):
                # single group: excluded values can shrink the endpoints
                while lo_c <= hi_c and (lo_c & mask) in ne_values:
                    ne_values.discard(lo_c & mask)
                    lo_c += 1
                while hi_c >= lo_c and (hi_c & mask) in ne_values:
                    ne_values.discard(hi_c & mask)
                    hi_c -= 1
            if lo_c > hi_c:
                return None, True
            merged.append(_interval(ctx, subject, lo_c & mask, hi_c & mask, signed))
        for x in sorted(ne_values):
            merged.append(ctx.mk("not", [ctx.mk("eq", [subject, ctx.const(x, width)])]))
    return passthrough + merged, True


def _constraint_to_term(ctx, subject, c):
    if c[0] == "eq":
        return ctx.mk("eq", [subject, ctx.const(c[1], subject.width)])
    if c[0] == "ne":
        return ctx.mk("not", [ctx.mk("eq", [subject, ctx.const(c[1], subject.width)])])
    return _interval(ctx, subject, c[1], c[2], c[3])


def _simplify_or(t: Term) -> Term:
    ctx = t.ctx
    members = list(t.operands)
    negated = {m.operands[0].id for m in members if m.kind == "not"}
    for m in members:
        if m.kind != "not" and m.id in negated:
            return ctx.TRUE
    member_ids = {m.id for m in members}
    kept = []
    for m in members:
        if m.kind == "and" and any(o.id in member_ids for o in m.operands):
            continue
        kept.append(m)
    members = kept
    # union of equality disjunctions / intervals over one subject: values
    # forming a contiguous run collapse to a single interval atom.
    by_subject: dict[int, list] = {}
    subjects: dict[int, Term] = {}
    passthrough = []
    for m in members:
        subject, data = _subject_of(m)
        if subject is None or data[0] == "ne":
            passthrough.append(m)
        else:
            by_subject.setdefault(subject.id, []).append(data)
            subjects[subject.id] = subject
    merged = []
    for sid, constraints in sorted(by_subject.items()):
        subject = subjects[sid]
        if len(constraints) == 1:
            merged.append(_constraint_to_term(ctx, subject, constraints[0]))
            continue
        eqs = [c[1] for c in constraints if c[0] == "eq"]
        intervals = [(c[1], c[2], c[3]) for c in constraints if c[0] == "interval"]
        has_signed = any(s for _, _, s in intervals)
        has_unsigned = any(not s for _, _, s in intervals)
        if has_signed and has_unsigned:
            merged.extend(_constraint_to_term(ctx, subject, c) for c in constraints)
            continue
        signed = has_signed
        merged.extend(_union_runs(ctx, subject, eqs, intervals, signed))
    return ctx.mk("or", passthrough + merged)


def _union_runs(ctx, subject, eqs: list[int], intervals, signed: bool) -> list[Term]:
    """Cover a union of points and ranges by maximal contiguous runs."""
    width = subject.width
    mask = (1 << width) - 1
    conv = (lambda x: _to_signed(x, width)) if signed else (lambda x: x)
    spans = [(conv(v), conv(v)) for v in eqs]
    spans += [(conv(lo), conv(hi)) for lo, hi, _ in intervals]
    spans.sort()
    out = []
    cur_lo, cur_hi = spans[0]
    for lo, hi in spans[1:]:
        if lo <= cur_hi + 1:
            cur_hi = max(cur_hi, hi)
        else:
            out.append((cur_lo, cur_hi))
            cur_lo, cur_hi = lo, hi
    out.append((cur_lo, cur_hi))
    return [_interval(ctx, subject, lo & mask, hi & mask, signed) for lo, hi in out]


# -- queries ------------------------------------------------------------------


def are_equal(t1: Term, t2: Term) -> bool:
    """Lightweight equality: true means equivalent; false is inconclusive.

    Normalization-based: both sides are simplified into the shared graph and
    compared as nodes.  Hash-consing makes this an iterative-refinement
    comparison of the two subgraphs; it is sound but incomplete.
    """
    if t1.ctx is not t2.ctx:
        raise LogicError("terms from different contexts")
    return simplify(t1) is simplify(t2)


def _leaves(t: Term) -> list[Term]:
    out = {x.id: x for x in t.walk() if x.kind in ("var", "atom")}
    return [out[i] for i in sorted(out)]


def eval_term(t: Term, leaf_fn) -> int:
    """Evaluate a term; leaf_fn maps the IR payload of var/atom leaves to bits.

    Boolean results are 0/1.  No short-circuiting: operands are evaluated the
    same way the original IR expression would evaluate them.
    """
    if t.kind == "true":
        return 1
    if t.kind == "false":
        return 0
    if t.kind == "const":
        return t.value
    if t.kind in ("var", "atom"):
        return leaf_fn(t.payload[0]) & ((1 << t.width) - 1)
    if t.kind == "not":
        return 1 - eval_term(t.operands[0], leaf_fn)
    if t.kind == "and":
        results = [eval_term(o, leaf_fn) for o in t.operands]
        return int(all(results))
    if t.kind == "or":
        results = [eval_term(o, leaf_fn) for o in t.operands]
        return int(any(results))
    if t.kind == "eq":
        return int(eval_term(t.operands[0], leaf_fn) == eval_term(t.operands[1], leaf_fn))
    if t.kind == "ule":
        return int(eval_term(t.operands[0], leaf_fn) <= eval_term(t.operands[1], leaf_fn))
    if t.kind == "sle":
        a, b = (eval_term(o, leaf_fn) for o in t.operands)
        w = t.operands[0].width
        return int(_to_signed(a, w) <= _to_signed(b, w))
    if t.kind == "interval":
        lo, hi, signed = t.payload
        v = eval_term(t.operands[0], leaf_fn)
        w = t.operands[0].width
        if signed:
            return int(_to_signed(lo, w) <= _to_signed(v, w) <= _to_signed(hi, w))
        return int(lo <= v <= hi)
    if t.kind in ("add", "sub"):
        a, b = (eval_term(o, leaf_fn) for o in t.operands)
        w = t.width
        return (a + b if t.kind == "add" else a - b) & ((1 << w) - 1)
    raise AssertionError(t.kind)


def _eval_vec(t: Term, arrays: dict[int, np.ndarray], cache: dict[int, np.ndarray]) -> np.ndarray:
    if t.id in cache:
        return cache[t.id]
    if t.kind in ("var", "atom"):
        result = arrays[t.id]
    elif t.kind == "const":
        result = np.uint64(t.value)
    elif t.kind == "true":
        result = np.bool_(True)
    elif t.kind == "false":
        result = np.bool_(False)
    elif t.kind == "not":
        result = ~_eval_vec(t.operands[0], arrays, cache)
    elif t.kind == "and":
        result = _eval_vec(t.operands[0], arrays, cache)
        for o in t.operands[1:]:
            result = result & _eval_vec(o, arrays, cache)
    elif t.kind == "or":
        result = _eval_vec(t.operands[0], arrays, cache)
        for o in t.operands[1:]:
            result = result | _eval_vec(o, arrays, cache)
    elif t.kind == "eq":
        result = _eval_vec(t.operands[0], arrays, cache) == _eval_vec(t.operands[1], arrays, cache)
    elif t.kind in ("ule", "sle"):
        a = _eval_vec(t.operands[0], arrays, cache)
        b = _eval_vec(t.operands[1], arrays, cache)
        if t.kind == "sle":
            w = t.operands[0].width
            a = _vec_signed(a, w)
            b = _vec_signed(b, w)
        result = a <= b
    elif t.kind == "interval":
        lo, hi, signed = t.payload
        v = _eval_vec(t.operands[0], arrays, cache)
        w = t.operands[0].width
        if signed:
            sv = _vec_signed(v, w)
            result = (sv >= _to_signed(lo, w)) & (sv <= _to_signed(hi, w))
        else:
            result = (v >= np.uint64(lo)) & (v <= np.uint64(hi))
    elif t.kind in ("add", "sub"):
        a = _eval_vec(t.operands[0], arrays, cache)
        b = _eval_vec(t.operands[1], arrays, cache)
        raw = a + b if t.kind == "add" else a - b
        result = raw & np.uint64((1 << t.width) - 1)
    else:
        raise AssertionError(t.kind)
    cache[t.id] = result
    return result


def _vec_signed(a: np.ndarray, width: int):
    sign_bit = np.uint64(1 << (width - 1))
    return a.astype(np.int64) - ((a & sign_bit).astype(np.int64) << 1)


def is_satisfiable(t: Term) -> str:
    """'sat' | 'unsat' | 'unknown'.  unsat answers are always trustworthy.

    Exact by exhaustive enumeration while the leaf assignment space fits the
    context's enum limit; beyond that, interval/unit propagation decides the
    easy cases and everything else is reported unknown.
    """
    ctx = t.ctx
    t = simplify(t)
    if t is ctx.TRUE:
        return "sat"
    if t is ctx.FALSE:
        return "unsat"
    leaves = _leaves(t)
    space = 1
    for leaf in leaves:
        space *= 1 << leaf.width
        if space > ctx.enum_limit:
            break
    if space <= ctx.enum_limit:
        return _enumerate_sat(t, leaves, space)
    return _propagate_sat(t)


def _enumerate_sat(t: Term, leaves: list[Term], space: int) -> str:
    strides = []
    acc = 1
    for leaf in leaves:
        strides.append(acc)
        acc *= 1 << leaf.width
    for start in range(0, space, ENUM_CHUNK):
        idx = np.arange(start, min(start + ENUM_CHUNK, space), dtype=np.uint64)
        arrays = {}
        for leaf, stride in zip(leaves, strides):
            size = np.uint64(1 << leaf.width)
            arrays[leaf.id] = (idx // np.uint64(stride)) % size
        result = _eval_vec(t, arrays, {})
        if np.any(result):
            return "sat"
    return "unsat"


def _propagate_sat(t: Term) -> str:
    """Conservative decision for wide terms: a conjunction of independent
    per-leaf constraints is sat iff every leaf keeps at least one value."""
    if t.kind in ("eq", "interval", "not", "ule", "sle"):
        subject, data = _subject_of(t)
        if subject is not None:
            return "sat"  # single satisfiable leaf constraint
        return "unknown"
    if t.kind != "and":
        return "unknown"
    for m in t.operands:
        subject, data = _subject_of(m)
        if subject is None:
            return "unknown"
    # simplify already intersected per-subject constraints; a surviving
    # conjunction of leaf constraints admits a pointwise witness unless a
    # subject ended up with an empty range (folded to false earlier).
    return "sat"


def implies(t1: Term, t2: Term) -> str:
    """'yes' | 'no' | 'unknown' for t1 entails t2."""
    ctx = t1.ctx
    verdict = is_satisfiable(ctx.mk("and", [t1, ctx.mk("not", [t2])]))
    if verdict == "unsat":
        return "yes"
    if verdict == "sat":
        return "no"
    return "unknown"


# -- mk_term convenience -------------------------------------------------------


def mk_term(ctx: LogicContext, kind: str, operands: list[Term]) -> Term:
    return ctx.mk(kind, operands)


# -- rendering -----------------------------------------------------------------


def render_term(t: Term, leaf_render=None) -> str:
    """Pretty infix form; leaf_render overrides var/atom leaf formatting."""

    def leaf(x: Term) -> str:
        if leaf_render is not None:
            return leaf_render(x.payload[0])
        if x.kind == "var":
            return str(x.payload[0])
        return f"<{x.payload[0]}>"

    def render(x: Term, parent_prec: int) -> str:
        prec, text = _render_prec(x, render, leaf)
        return f"({text})" if prec < parent_prec else text

    return render(t, 0)


def _render_prec(t: Term, render, leaf) -> tuple[int, str]:
    if t.kind == "true":
        return 9, "true"
    if t.kind == "false":
        return 9, "false"
    if t.kind == "const":
        return 9, str(t.value)
    if t.kind in ("var", "atom"):
        return 9, leaf(t)
    if t.kind == "and":
        return 2, " && ".join(render(o, 3) for o in t.operands)
    if t.kind == "or":
        return 1, " || ".join(render(o, 2) for o in t.operands)
    if t.kind == "not":
        inner = t.operands[0]
        if inner.kind == "eq":
            return 4, f"{render(inner.operands[0], 5)} != {render(inner.operands[1], 5)}"
        if inner.kind in ("ule", "sle"):
            a, b = inner.operands
            return 4, f"{render(b, 5)} < {render(a, 5)}"
        return 3, f"!{render(inner, 9)}"
    if t.kind == "eq":
        return 4, f"{render(t.operands[0], 5)} == {render(t.operands[1], 5)}"
    if t.kind in ("ule", "sle"):
        return 4, f"{render(t.operands[0], 5)} <= {render(t.operands[1], 5)}"
    if t.kind == "interval":
        lo, hi, signed = t.payload
        v = t.operands[0]
        w = v.width
        lo_r = str(_to_signed(lo, w) if signed else lo)
        hi_r = str(_to_signed(hi, w) if signed else hi)
        lo_min, _ = _range_bounds(w, signed)
        if lo == lo_min:
            return 4, f"{render(v, 5)} <= {hi_r}"
        return 2, f"{lo_r} <= {render(v, 5)} && {render(v, 5)} <= {hi_r}"
    if t.kind in ("add", "sub"):
        op = "+" if t.kind == "add" else "-"
        return 6, f"{render(t.operands[0], 6)} {op} {render(t.operands[1], 7)}"
    raise AssertionError(t.kind)


# -- s-expression debug syntax ---------------------------------------------------


_SEXPR_OPS = {
    "and", "or", "not", "eq", "ne", "ult", "ule", "slt", "sle",
    "ugt", "uge", "sgt", "sge", "add", "sub",
}


def parse_sexpr(ctx: LogicContext, text: str, default_width: int = 32) -> Term:
    """Debug input syntax: `(and (eq a 1) (ule a@8 25))`; `a@8` sets a width."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse() -> Term | int:
        nonlocal pos
        if pos >= len(tokens):
            raise LogicError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise LogicError("unexpected end of expression")
            op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise LogicError("missing ')'")
            pos += 1
            return build(op, args)
        if tok == ")":
            raise LogicError("unexpected ')'")
        if tok in ("true", "false"):
            return ctx.TRUE if tok == "true" else ctx.FALSE
        try:
            return int(tok, 0)
        except ValueError:
            pass
        name, _, width = tok.partition("@")
        return ctx.var(name, int(width) if width else default_width)

    def build(op: str, args: list) -> Term:
        if op not in _SEXPR_OPS:
            raise LogicError(f"unknown operator {op!r}")
        width = None
        for a in args:
            if isinstance(a, Term) and not a.is_bool:
                width = a.width
                break
        terms = []
        for a in args:
            if isinstance(a, int):
                if width is None:
                    width = default_width
                terms.append(ctx.const(a, width))
            else:
                terms.append(a)
        swap = {"ugt": "ult", "uge": "ule", "sgt": "slt", "sge": "sle"}
        if op in swap:
            terms.reverse()
            op = swap[op]
        return ctx.mk(op, terms)

    result = parse()
    if pos != len(tokens):
        raise LogicError(f"trailing input: {' '.join(tokens[pos:])}")
    if isinstance(result, int):
        raise LogicError("a bare integer is not a formula")
    return result
