"""Reduced ordered binary decision diagrams with a mutable variable order.

Plain canonical form (no complemented edges): a boolean function over the
manager's variables has exactly one node as its root, so semantic equality
is root identity.  Nodes live in a shared manager that owns the unique
table, the operation cache, reference counts, and the evaluation order.
Variables are identified by a stable integer id; their position in the
evaluation order can change through reordering (sifting or simulated
annealing) without changing the function any live diagram represents.

Not thread-safe: a manager and all diagrams created from it form one
single-threaded unit.
"""
from __future__ import annotations

import math
import random
import sys
import time
import weakref
from dataclasses import dataclass

from . import UsageError

# operation tags for the cache
_AND = 0
_OR = 1
_XOR = 2
_NOT = 3
_EXISTS = 4
_FORALL = 5
_RESTRICT = 6
_ITE = 7
_AND_EXISTS = 8
_RENAME = 9

_OPS = {"and": _AND, "or": _OR, "xor": _XOR}

_TERMINAL_LEVEL = sys.maxsize


@dataclass
class ReorderReport:
    method: str
    nodes_before: int
    nodes_after: int
    swaps: int
    duration_s: float


class Bdd:
    """Handle to one boolean function.  Keeps its root alive in the manager.

    Two handles from the same manager are semantically equal iff their
    roots are identical.
    """

    __slots__ = ("mgr", "root", "__weakref__")

    def __init__(self, mgr: "BddManager", root: int):
        self.mgr = mgr
        self.root = root
        mgr._incref(root)
        mgr._handles.add(self)

    def __del__(self):
        try:
            self.mgr._decref(self.root)
        except Exception:
            pass  # interpreter teardown

    def __eq__(self, other):
        return (
            isinstance(other, Bdd)
            and other.mgr is self.mgr
            and other.root == self.root
        )

    def __hash__(self):
        return hash((id(self.mgr), self.root))

    def __repr__(self):
        return f"Bdd(root={self.root}, nodes={self.node_count()})"

    # boolean sugar; all operands must share the manager
    def __and__(self, other):
        return self.mgr.apply("and", self, other)

    def __or__(self, other):
        return self.mgr.apply("or", self, other)

    def __xor__(self, other):
        return self.mgr.apply("xor", self, other)

    def __invert__(self):
        return self.mgr.negate(self)

    @property
    def is_false(self) -> bool:
        return self.root == 0

    @property
    def is_true(self) -> bool:
        return self.root == 1

    def node_count(self) -> int:
        return self.mgr.node_count(self)

    def evaluate(self, assignment) -> bool:
        return self.mgr.evaluate(self, assignment)

    def support(self):
        return self.mgr.support(self)

    def sat_iter(self, support):
        return self.mgr.sat_iter(self, support)


class BddManager:
    """Canonical node store with unique table, op cache, and variable order.

    Terminals are node 0 (false) and node 1 (true).  Internal nodes are
    integers >= 2 mapping to ``(var, lo, hi)`` with ``lo != hi`` and
    ``level(var) < level(child var)`` along every edge, so diagrams are
    reduced and ordered by construction.
    """

    def __init__(self, gc_threshold: int = 200_000):
        # node id -> (var, lo, hi); terminals are not stored
        self._node: dict[int, tuple[int, int, int]] = {}
        # (var, lo, hi) -> node id
        self._unique: dict[tuple[int, int, int], int] = {}
        # node id -> reference count (internal parents + external handles)
        self._ref: dict[int, int] = {0: 1, 1: 1}
        self._cache: dict[tuple, int] = {}
        self._order: list[int] = []  # level -> var id
        self._v2l: list[int] = []  # var id -> level
        self._by_var: dict[int, set[int]] = {}  # var id -> node ids
        self._next_id = 2
        self._dead = 0
        self.gc_threshold = gc_threshold
        self._handles: weakref.WeakSet = weakref.WeakSet()
        # interned quantifier sets / rename maps used in cache keys
        self._interned: dict[tuple, int] = {}
        self.stats = {
            "applies": 0,
            "cache_lookups": 0,
            "cache_hits": 0,
            "gc_runs": 0,
            "peak_nodes": 0,
            "reorders": 0,
        }

    # ------------------------------------------------------------------
    # variables and order

    def new_var(self) -> int:
        """Declare a fresh variable at the end of the evaluation order."""
        vid = len(self._v2l)
        self._v2l.append(len(self._order))
        self._order.append(vid)
        self._by_var[vid] = set()
        return vid

    @property
    def n_vars(self) -> int:
        return len(self._v2l)

    @property
    def order(self) -> tuple[int, ...]:
        """Current evaluation order, top level first."""
        return tuple(self._order)

    def level_of(self, var: int) -> int:
        return self._v2l[var]

    # ------------------------------------------------------------------
    # node creation and reference counting

    def _mk(self, var: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (var, lo, hi)
        u = self._unique.get(key)
        if u is not None:
            return u
        u = self._next_id
        self._next_id += 1
        self._node[u] = key
        self._unique[key] = u
        self._ref[u] = 0
        self._ref[lo] += 1
        self._ref[hi] += 1
        self._by_var[var].add(u)
        if len(self._node) > self.stats["peak_nodes"]:
            self.stats["peak_nodes"] = len(self._node)
        return u

    def _incref(self, u: int) -> None:
        self._ref[u] += 1

    def _decref(self, u: int) -> None:
        r = self._ref[u] - 1
        self._ref[u] = r
        if r == 0 and u > 1:
            self._dead += 1

    def _wrap(self, root: int) -> Bdd:
        return Bdd(self, root)

    @property
    def true(self) -> Bdd:
        return self._wrap(1)

    @property
    def false(self) -> Bdd:
        return self._wrap(0)

    def var(self, vid: int) -> Bdd:
        if not 0 <= vid < len(self._v2l):
            raise UsageError(f"unknown variable id {vid}")
        return self._wrap(self._mk(vid, 0, 1))

    def nvar(self, vid: int) -> Bdd:
        """Negated literal."""
        return self._wrap(self._mk(vid, 1, 0))

    def cube(self, bits) -> Bdd:
        """Conjunction of literals, ``bits`` iterable of (var, 0|1).

        Built bottom-up without touching the op cache.
        """
        items = sorted(bits, key=lambda vb: self._v2l[vb[0]], reverse=True)
        root = 1
        for vid, b in items:
            root = self._mk(vid, 0, root) if b else self._mk(vid, root, 0)
        return self._wrap(root)

    # ------------------------------------------------------------------
    # garbage collection

    def collect(self) -> int:
        """Sweep all unreferenced nodes; returns number removed."""
        removed = 0
        stack = [u for u, r in self._ref.items() if r == 0 and u > 1]
        while stack:
            u = stack.pop()
            entry = self._node.pop(u, None)
            if entry is None:
                continue
            del self._unique[entry]
            del self._ref[u]
            self._by_var[entry[0]].discard(u)
            removed += 1
            for child in entry[1:]:
                r = self._ref[child] - 1
                self._ref[child] = r
                if r == 0 and child > 1:
                    stack.append(child)
        if removed:
            self._cache.clear()
        self._dead = 0
        self.stats["gc_runs"] += 1
        return removed

    def _maybe_collect(self) -> None:
        # only called between operations: intermediate results of an
        # in-flight recursion are unreferenced and must not be swept
        if len(self._node) >= self.gc_threshold and self._dead > 0:
            self.collect()
            if len(self._node) > self.gc_threshold * 0.8:
                self.gc_threshold *= 2

    # ------------------------------------------------------------------
    # core operations

    def _check_same_mgr(self, *bdds: Bdd) -> None:
        for b in bdds:
            if b.mgr is not self:
                raise UsageError("operands belong to different managers")

    def apply(self, op: str, a: Bdd, b: Bdd) -> Bdd:
        """Pointwise boolean combination, ``op`` in {and, or, xor}."""
        if op not in _OPS:
            raise UsageError(f"unknown operator {op!r}")
        self._check_same_mgr(a, b)
        self._maybe_collect()
        self.stats["applies"] += 1
        return self._wrap(self._apply(_OPS[op], a.root, b.root))

    def _apply(self, op: int, a: int, b: int) -> int:
        if op == _AND:
            if a == 0 or b == 0:
                return 0
            if a == 1:
                return b
            if b == 1:
                return a
            if a == b:
                return a
        elif op == _OR:
            if a == 1 or b == 1:
                return 1
            if a == 0:
                return b
            if b == 0:
                return a
            if a == b:
                return a
        else:  # xor
            if a == b:
                return 0
            if a == 0:
                return b
            if b == 0:
                return a
            if a == 1:
                return self._neg(b)
            if b == 1:
                return self._neg(a)
        if a > b:
            a, b = b, a
        key = (op, a, b)
        self.stats["cache_lookups"] += 1
        r = self._cache.get(key)
        if r is not None:
            self.stats["cache_hits"] += 1
            return r
        va, la, ha = self._node[a]
        vb, lb, hb = self._node[b]
        lev_a = self._v2l[va]
        lev_b = self._v2l[vb]
        if lev_a <= lev_b:
            top = va
            a0, a1 = la, ha
        else:
            top = vb
            a0, a1 = a, a
        if lev_b <= lev_a:
            b0, b1 = lb, hb
        else:
            b0, b1 = b, b
        r = self._mk(top, self._apply(op, a0, b0), self._apply(op, a1, b1))
        self._cache[key] = r
        return r

    def negate(self, a: Bdd) -> Bdd:
        self._check_same_mgr(a)
        self._maybe_collect()
        return self._wrap(self._neg(a.root))

    def _neg(self, a: int) -> int:
        if a < 2:
            return 1 - a
        key = (_NOT, a)
        r = self._cache.get(key)
        if r is not None:
            return r
        v, lo, hi = self._node[a]
        r = self._mk(v, self._neg(lo), self._neg(hi))
        self._cache[key] = r
        return r

    def ite(self, f: Bdd, g: Bdd, h: Bdd) -> Bdd:
        """If-then-else: f & g | ~f & h."""
        self._check_same_mgr(f, g, h)
        self._maybe_collect()
        return self._wrap(self._ite(f.root, g.root, h.root))

    def _ite(self, f: int, g: int, h: int) -> int:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        if g == 0 and h == 1:
            return self._neg(f)
        key = (_ITE, f, g, h)
        r = self._cache.get(key)
        if r is not None:
            return r
        top = min(
            self._level(f), self._level(g), self._level(h)
        )
        var = self._order[top]
        f0, f1 = self._branch(f, top)
        g0, g1 = self._branch(g, top)
        h0, h1 = self._branch(h, top)
        r = self._mk(var, self._ite(f0, g0, h0), self._ite(f1, g1, h1))
        self._cache[key] = r
        return r

    def _level(self, u: int) -> int:
        if u < 2:
            return _TERMINAL_LEVEL
        return self._v2l[self._node[u][0]]

    def _branch(self, u: int, level: int) -> tuple[int, int]:
        if u < 2:
            return u, u
        v, lo, hi = self._node[u]
        if self._v2l[v] == level:
            return lo, hi
        return u, u

    def cofactor(self, a: Bdd, var: int, val: int) -> Bdd:
        """Fix ``var`` to ``val`` (0 or 1)."""
        self._check_same_mgr(a)
        if val not in (0, 1):
            raise UsageError("val must be 0 or 1")
        self._maybe_collect()
        return self._wrap(self._restrict(a.root, var, val))

    def _restrict(self, u: int, var: int, val: int) -> int:
        if u < 2:
            return u
        target = self._v2l[var]
        lev = self._v2l[self._node[u][0]]
        if lev > target:
            return u
        key = (_RESTRICT, u, var, val)
        r = self._cache.get(key)
        if r is not None:
            return r
        v, lo, hi = self._node[u]
        if v == var:
            r = hi if val else lo
        else:
            r = self._mk(v, self._restrict(lo, var, val), self._restrict(hi, var, val))
        self._cache[key] = r
        return r

    def _intern(self, kind: str, payload: tuple) -> int:
        key = (kind, payload)
        tag = self._interned.get(key)
        if tag is None:
            tag = len(self._interned)
            self._interned[key] = tag
        return tag

    def quantify(self, kind: str, vars, a: Bdd) -> Bdd:
        """Eliminate ``vars`` from ``a``; kind is "exists" or "forall".

        The result is independent of the elimination order inside ``vars``.
        """
        self._check_same_mgr(a)
        if kind not in ("exists", "forall"):
            raise UsageError(f"unknown quantifier kind {kind!r}")
        qvars = frozenset(vars)
        if not qvars:
            return self._wrap(a.root)
        self._maybe_collect()
        op = _EXISTS if kind == "exists" else _FORALL
        tag = self._intern("q", tuple(sorted(qvars)))
        max_lev = max(self._v2l[v] for v in qvars)
        return self._wrap(self._quant(op, a.root, qvars, tag, max_lev))

    def exists(self, vars, a: Bdd) -> Bdd:
        return self.quantify("exists", vars, a)

    def forall(self, vars, a: Bdd) -> Bdd:
        return self.quantify("forall", vars, a)

    def _quant(self, op: int, u: int, qvars, tag: int, max_lev: int) -> int:
        if u < 2:
            return u
        v, lo, hi = self._node[u]
        if self._v2l[v] > max_lev:
            return u  # all quantified variables are above this subgraph
        key = (op, u, tag)
        r = self._cache.get(key)
        if r is not None:
            return r
        l0 = self._quant(op, lo, qvars, tag, max_lev)
        if v in qvars:
            if op == _EXISTS:
                r = 1 if l0 == 1 else self._apply(
                    _OR, l0, self._quant(op, hi, qvars, tag, max_lev))
            else:
                r = 0 if l0 == 0 else self._apply(
                    _AND, l0, self._quant(op, hi, qvars, tag, max_lev))
        else:
            r = self._mk(v, l0, self._quant(op, hi, qvars, tag, max_lev))
        self._cache[key] = r
        return r

    def and_exists(self, a: Bdd, b: Bdd, vars) -> Bdd:
        """Relational product: exists vars. (a & b), without the intermediate."""
        self._check_same_mgr(a, b)
        qvars = frozenset(vars)
        if not qvars:
            return self.apply("and", a, b)
        self._maybe_collect()
        tag = self._intern("q", tuple(sorted(qvars)))
        max_lev = max(self._v2l[v] for v in qvars)
        return self._wrap(self._and_exists(a.root, b.root, qvars, tag, max_lev))

    def _and_exists(self, a: int, b: int, qvars, tag: int, max_lev: int) -> int:
        if a == 0 or b == 0:
            return 0
        if a == 1 and b == 1:
            return 1
        la, lb = self._level(a), self._level(b)
        if la > max_lev and lb > max_lev:
            return self._apply(_AND, a, b)
        if a == 1:
            return self._quant(_EXISTS, b, qvars, tag, max_lev)
        if b == 1:
            return self._quant(_EXISTS, a, qvars, tag, max_lev)
        if a > b:
            a, b = b, a
        key = (_AND_EXISTS, a, b, tag)
        r = self._cache.get(key)
        if r is not None:
            return r
        top = min(self._level(a), self._level(b))
        var = self._order[top]
        a0, a1 = self._branch(a, top)
        b0, b1 = self._branch(b, top)
        r0 = self._and_exists(a0, b0, qvars, tag, max_lev)
        if var in qvars:
            if r0 == 1:
                r = 1
            else:
                r1 = self._and_exists(a1, b1, qvars, tag, max_lev)
                r = self._apply(_OR, r0, r1)
        else:
            r1 = self._and_exists(a1, b1, qvars, tag, max_lev)
            r = self._mk(var, r0, r1)
        self._cache[key] = r
        return r

    def rename(self, a: Bdd, mapping: dict[int, int]) -> Bdd:
        """Substitute variables per ``mapping`` (var id -> var id).

        Target variables must not intersect the support of ``a`` except as
        sources; correctness does not depend on the current order.
        """
        self._check_same_mgr(a)
        if not mapping:
            return self._wrap(a.root)
        self._maybe_collect()
        tag = self._intern("r", tuple(sorted(mapping.items())))
        return self._wrap(self._rename(a.root, mapping, tag))

    def _rename(self, u: int, mapping, tag: int) -> int:
        if u < 2:
            return u
        key = (_RENAME, u, tag)
        r = self._cache.get(key)
        if r is not None:
            return r
        v, lo, hi = self._node[u]
        l0 = self._rename(lo, mapping, tag)
        l1 = self._rename(hi, mapping, tag)
        m = mapping.get(v, v)
        r = self._ite(self._mk(m, 0, 1), l1, l0)
        self._cache[key] = r
        return r

    # ------------------------------------------------------------------
    # inspection

    def node_count(self, a: Bdd) -> int:
        """Nodes reachable from the root, terminals included."""
        self._check_same_mgr(a)
        seen = set()
        stack = [a.root]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if u > 1:
                _, lo, hi = self._node[u]
                stack.append(lo)
                stack.append(hi)
        return len(seen)

    def total_nodes(self) -> int:
        """Live internal nodes allocated in the manager (terminals excluded)."""
        return len(self._node)

    def support(self, a: Bdd) -> frozenset[int]:
        self._check_same_mgr(a)
        seen = set()
        vars_ = set()
        stack = [a.root]
        while stack:
            u = stack.pop()
            if u < 2 or u in seen:
                continue
            seen.add(u)
            v, lo, hi = self._node[u]
            vars_.add(v)
            stack.append(lo)
            stack.append(hi)
        return frozenset(vars_)

    def evaluate(self, a: Bdd, assignment) -> bool:
        """Evaluate under a full assignment (dict var id -> 0/1)."""
        self._check_same_mgr(a)
        u = a.root
        while u > 1:
            v, lo, hi = self._node[u]
            try:
                u = hi if assignment[v] else lo
            except KeyError:
                raise UsageError(f"assignment misses variable {v}") from None
        return u == 1

    def sat_iter(self, a: Bdd, support):
        """Yield satisfying assignments of ``a`` restricted to ``support``.

        ``support`` is an ordered list of var ids covering every variable
        ``a`` depends on; each yielded item is a tuple of bits aligned with
        it.  Constant false yields nothing; constant true yields every
        assignment of ``support``.
        """
        self._check_same_mgr(a)
        support = list(support)
        sup_set = set(support)
        if len(sup_set) != len(support):
            raise UsageError("support contains duplicates")
        missing = self.support(a) - sup_set
        if missing:
            raise UsageError(f"support misses dependent variables {sorted(missing)}")
        by_level = sorted(support, key=lambda v: self._v2l[v])
        pos = {v: i for i, v in enumerate(support)}
        n = len(support)

        def rec(u: int, idx: int, bits: list):
            if u == 0:
                return
            if idx == n:
                yield tuple(bits)
                return
            v = by_level[idx]
            if u > 1 and self._node[u][0] == v:
                _, lo, hi = self._node[u]
                for val, child in ((0, lo), (1, hi)):
                    bits[pos[v]] = val
                    yield from rec(child, idx + 1, bits)
            else:
                for val in (0, 1):
                    bits[pos[v]] = val
                    yield from rec(u, idx + 1, bits)

        yield from rec(a.root, 0, [0] * n)

    def sat_count(self, a: Bdd, support) -> int:
        return sum(1 for _ in self.sat_iter(a, support))

    # ------------------------------------------------------------------
    # reordering

    def _swap_levels(self, lvl: int) -> None:
        """Swap the variables at levels lvl and lvl+1 in place.

        Every live node keeps its identity and its function; only nodes at
        ``lvl`` that depend on the variable below are restructured.
        """
        x = self._order[lvl]
        y = self._order[lvl + 1]
        # order update first so _mk-created children sit below y
        self._order[lvl], self._order[lvl + 1] = y, x
        self._v2l[x], self._v2l[y] = lvl + 1, lvl
        nodes = self._node
        for u in list(self._by_var[x]):
            entry = nodes.get(u)
            if entry is None or entry[0] != x:
                continue
            _, f0, f1 = entry
            e0 = nodes.get(f0)
            e1 = nodes.get(f1)
            dep0 = e0 is not None and e0[0] == y
            dep1 = e1 is not None and e1[0] == y
            if not dep0 and not dep1:
                continue  # independent of y: nothing changes structurally
            f00, f01 = (e0[1], e0[2]) if dep0 else (f0, f0)
            f10, f11 = (e1[1], e1[2]) if dep1 else (f1, f1)
            new_lo = self._mk(x, f00, f10)
            new_hi = self._mk(x, f01, f11)
            # rewrite u in place as a y-node
            del self._unique[entry]
            self._by_var[x].discard(u)
            new_entry = (y, new_lo, new_hi)
            assert new_entry not in self._unique, "canonicity violated in swap"
            nodes[u] = new_entry
            self._unique[new_entry] = u
            self._by_var[y].add(u)
            self._ref[new_lo] += 1
            self._ref[new_hi] += 1
            # release old children, sweeping immediately if they die
            for child in (f0, f1):
                r = self._ref[child] - 1
                self._ref[child] = r
                if r == 0 and child > 1:
                    self._delete_cascade(child)

    def _delete_cascade(self, u: int) -> None:
        stack = [u]
        while stack:
            w = stack.pop()
            entry = self._node.pop(w, None)
            if entry is None:
                continue
            del self._unique[entry]
            del self._ref[w]
            self._by_var[entry[0]].discard(w)
            for child in entry[1:]:
                r = self._ref[child] - 1
                self._ref[child] = r
                if r == 0 and child > 1:
                    stack.append(child)

    def reorder(
        self,
        method: str = "sift",
        max_growth: float = 1.5,
        anneal_moves: int | None = None,
        initial_temp: float = 1.0,
        cooling: float = 0.995,
        seed: int = 0,
        verify_samples: int = 0,
    ) -> ReorderReport:
        """Mutate the variable order to reduce live node count.

        ``sift`` is single-variable sifting: each variable in turn is moved
        through all levels and parked where the live node count was lowest,
        never accepting a final position worse than its start.  ``anneal``
        performs simulated annealing over adjacent-level swaps with
        geometric cooling.  The op cache is cleared (node identities keep
        their functions, but cached entries may reference swept nodes).
        """
        if method not in ("sift", "anneal"):
            raise UsageError(f"unknown reorder method {method!r}")
        t0 = time.perf_counter()
        self.collect()
        self._cache.clear()
        before = len(self._node)
        swaps = 0
        n = len(self._order)
        rng = random.Random(seed)
        samples = None
        if verify_samples:
            samples = self._snapshot_samples(verify_samples, rng)
        if n >= 2:
            if method == "sift":
                swaps = self._sift(max_growth)
            else:
                if anneal_moves is None:
                    anneal_moves = 20 * n * n
                swaps = self._anneal(anneal_moves, initial_temp, cooling, rng)
        self.collect()
        self._cache.clear()
        after = len(self._node)
        if samples is not None:
            self._check_samples(samples)
        self.stats["reorders"] += 1
        return ReorderReport(method, before, after, swaps, time.perf_counter() - t0)

    def _sift(self, max_growth: float) -> int:
        swaps = 0
        n = len(self._order)
        # heaviest variables first
        todo = sorted(
            range(len(self._v2l)), key=lambda v: -len(self._by_var[v]))
        for var in todo:
            start = len(self._node)
            limit = int(max_growth * start) + 2
            best = start
            best_lvl = self._v2l[var]
            lvl = best_lvl
            # sweep to the nearer end first, then across to the other end
            down_first = (n - 1 - lvl) <= lvl
            for direction in (1, -1) if down_first else (-1, 1):
                while 0 <= lvl + direction <= n - 1:
                    self._swap_levels(lvl if direction == 1 else lvl - 1)
                    swaps += 1
                    lvl += direction
                    cur = len(self._node)
                    if cur < best:
                        best = cur
                        best_lvl = lvl
                    if cur > limit:
                        break
            # park at the best recorded level (never worse than start)
            while lvl != best_lvl:
                step = 1 if best_lvl > lvl else -1
                self._swap_levels(lvl if step == 1 else lvl - 1)
                swaps += 1
                lvl += step
            assert len(self._node) <= start, "sifting accepted a worse order"
        return swaps

    def _anneal(self, moves: int, temp: float, cooling: float, rng) -> int:
        swaps = 0
        n = len(self._order)
        cur = len(self._node)
        for _ in range(moves):
            lvl = rng.randrange(n - 1)
            self._swap_levels(lvl)
            swaps += 1
            new = len(self._node)
            delta = new - cur
            if delta <= 0 or rng.random() < math.exp(-delta / max(temp, 1e-9)):
                cur = new
            else:
                self._swap_levels(lvl)  # revert
                swaps += 1
            temp *= cooling
        return swaps

    def _snapshot_samples(self, k: int, rng) -> list:
        out = []
        nv = len(self._v2l)
        for h in list(self._handles):
            assigns = []
            for _ in range(k):
                a = {v: rng.randint(0, 1) for v in range(nv)}
                assigns.append((a, self.evaluate(h, a)))
            out.append((h, assigns))
        return out

    def _check_samples(self, samples) -> None:
        for h, assigns in samples:
            for a, expect in assigns:
                if self.evaluate(h, a) != expect:
                    raise AssertionError("reordering changed a live function")

    # ------------------------------------------------------------------
    # consistency check used by the test-suite

    def check_invariants(self) -> None:
        """Raise if reducedness, ordering, or canonicity is violated."""
        for u, (v, lo, hi) in self._node.items():
            if lo == hi:
                raise AssertionError(f"node {u} not reduced")
            for child in (lo, hi):
                if child > 1 and self._v2l[self._node[child][0]] <= self._v2l[v]:
                    raise AssertionError(f"node {u} violates the order")
            if self._unique.get((v, lo, hi)) != u:
                raise AssertionError(f"node {u} missing from unique table")
        if len(self._unique) != len(self._node):
            raise AssertionError("unique table and node store disagree")
