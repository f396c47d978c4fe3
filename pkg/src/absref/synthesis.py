"""Fixed-point engine and winning-set computation.

The winning set of the specification "always A, eventually always B,
and visit every goal infinitely often" is the three-level nested fixed
point

    mu V2. nu V1. /\\_i  mu V0.  pre(V2) | (B & G_i & pre(V1)) | (B & pre(V0))

evaluated over either backend with ``pre = pre_{exists,forall}`` (other
quantifier pairs are exposed for analysis).  Safety is enforced by
restricting the system to the A-labeled states first; for a universal
successor quantifier a ``(q, u)`` pair is dropped entirely when any of
its successors leaves A, so that every action the fixed point can pick
is surely safe.

Iterate sequences at every level are recorded (least fixed points grow,
greatest fixed points shrink, convergence within ``|Q|`` steps, all
asserted in-process); refinement planning and controller extraction
read them back.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import UsageError
from .bdd import Bdd
from .fts import EA, Fts, Quant, SymRep, restrict_to_safe, sym_pre


@dataclass
class Spec:
    """Proposition names for safety (A), persistence (B), and recurrence
    goals; ``None`` means the whole state set."""

    safety: str | None = None
    persistence: str | None = None
    goals: list[str] = field(default_factory=list)

    def resolve(self, fts: Fts):
        def _get(name):
            if name is None:
                return set(fts.states)
            return fts.label_set(name)

        return _get(self.safety), _get(self.persistence), [
            fts.label_set(g) for g in self.goals
        ]


@dataclass
class WinningSet:
    states: frozenset[int]
    backend: str
    bdd: Bdd | None = None


@dataclass
class PassTrace:
    """One outer iteration: the nu iterate list and, for the converged nu
    iteration, the inner mu iterate list per goal."""

    v1: list[frozenset]
    inners: list[list[frozenset]]


@dataclass
class FixedPointTrace:
    outer: list[frozenset]
    passes: list[PassTrace]
    spec: Spec = None
    quant: Quant = EA
    strict_u: bool = False
    backend: str = "list"
    a_states: frozenset = frozenset()
    b_states: frozenset = frozenset()
    goal_sets: list[frozenset] = field(default_factory=list)

    @property
    def win(self) -> frozenset:
        return self.outer[-1]


# ----------------------------------------------------------------------
# generic fixed-point iteration (used directly on explicit state sets;
# the win loop below inlines the same scheme for both backends)


def lfp(map_fn, universe_size: int):
    """Least fixed point from the empty set; returns (set, iterate list)."""
    return _iterate(map_fn, frozenset(), universe_size,
                    lambda a, b: a <= b, decreasing=False)


def gfp(map_fn, universe):
    """Greatest fixed point from ``universe``; returns (set, iterate list)."""
    universe = frozenset(universe)
    return _iterate(map_fn, universe, len(universe),
                    lambda a, b: a <= b, decreasing=True)


def _iterate(map_fn, start, bound, subset, decreasing):
    iterates = [start]
    cur = start
    for _ in range(bound + 1):
        nxt = map_fn(cur)
        if decreasing:
            assert subset(nxt, cur), "greatest fixed point iterates increased"
        else:
            assert subset(cur, nxt), "least fixed point iterates decreased"
        if nxt == cur:
            return cur, iterates
        iterates.append(nxt)
        cur = nxt
    raise AssertionError("fixed point did not converge within the state bound")


# ----------------------------------------------------------------------
# quant-aware safety restriction (explicit side lives in fts.restrict_to_safe)


class _SafeSymView:
    """Symbolic counterpart of :func:`restrict_to_safe`, sharing the
    manager of the underlying representation."""

    def __init__(self, sym: SymRep, a_states: set[int], quant: Quant,
                 strict_u: bool):
        self.sym = sym
        self.strict_u = strict_u
        self.quant = quant
        mgr = sym.mgr
        b_a_from = sym.set_bdd(sorted(a_states & sym.fts.states))
        b_a_to = sym.rename_from_to(b_a_from)
        if quant.succ == "forall":
            bad = mgr.and_exists(sym.b_t, ~b_a_to, sym.to_group.vars)
            self.b_t = sym.b_t & b_a_from & ~bad
        else:
            self.b_t = sym.b_t & b_a_from & b_a_to
        self.b_q = sym.b_q & b_a_from
        self.enabled = mgr.exists(sym.to_group.vars, self.b_t)

    def pre(self, b_v: Bdd) -> Bdd:
        """Predecessors of a set given over the from-group."""
        sym = self.sym
        b_x = sym.rename_from_to(b_v)
        return sym_pre(sym.mgr, self.b_t, self.b_q, sym.b_u, self.enabled,
                       sym.action_group.vars, sym.to_group.vars, b_x,
                       self.quant, self.strict_u)


# ----------------------------------------------------------------------


def win(fts: Fts, spec: Spec, quant: Quant = EA, backend="list",
        record: bool = True, strict_u: bool = False):
    """Winning set and fixed-point trace for ``spec`` on ``fts``.

    ``backend`` is ``"list"`` or a :class:`SymRep` attached to ``fts``.
    An empty goal list reduces to persistence via the dummy goal B.
    With ``record=False`` the trace carries only the final sets.
    """
    a_states, b_states, goal_sets = spec.resolve(fts)
    if isinstance(backend, SymRep):
        return _win_sym(fts, spec, quant, backend, record, strict_u,
                        a_states, b_states, goal_sets)
    if backend != "list":
        raise UsageError("backend must be 'list' or a SymRep")
    return _win_list(fts, spec, quant, record, strict_u,
                     a_states, b_states, goal_sets)


def _win_list(fts, spec, quant, record, strict_u, a_states, b_states,
              goal_sets):
    sub = restrict_to_safe(fts, a_states, quant)
    universe = frozenset(sub.states)
    b = frozenset(b_states) & universe
    goals = [frozenset(g) & universe for g in goal_sets] or [b]
    n = len(universe) + 1

    def pre(x):
        return frozenset(sub.pre(x, quant, strict_u))

    outer = [frozenset()]
    passes = []
    v2 = frozenset()
    for _ in range(n + 1):
        pre_v2 = pre(v2)
        v1 = universe
        v1_list = [v1]
        converged_inners = None
        for _ in range(n + 1):
            pre_v1 = pre(v1)
            inners = []
            w = None
            for g in goals:
                base = pre_v2 | (b & g & pre_v1)
                v0, v0_list = lfp(lambda v: base | (b & pre(v)), n)
                inners.append(list(v0_list))
                w = v0 if w is None else (w & v0)
            assert w <= v1, "greatest fixed point iterates increased"
            if w == v1:
                converged_inners = inners
                break
            v1 = w
            v1_list.append(v1)
        else:
            raise AssertionError("nu pass did not converge within the state bound")
        v2_next = v1
        passes.append(PassTrace(
            v1_list if record else [v1_list[-1]],
            converged_inners if record else [[i[-1]] for i in converged_inners]))
        assert v2 <= v2_next, "least fixed point iterates decreased"
        if v2_next == v2:
            break
        v2 = v2_next
        outer.append(v2)
    else:
        raise AssertionError("outer fixed point did not converge")
    if not record:
        outer = [outer[0], outer[-1]] if len(outer) > 1 else outer
    trace = FixedPointTrace(
        outer=outer, passes=passes, spec=spec, quant=quant,
        strict_u=strict_u, backend="list", a_states=frozenset(a_states),
        b_states=b, goal_sets=goals)
    return WinningSet(states=v2, backend="list"), trace


def _win_sym(fts, spec, quant, sym, record, strict_u, a_states, b_states,
             goal_sets):
    view = _SafeSymView(sym, a_states, quant, strict_u)
    mgr = sym.mgr
    universe = view.b_q
    restricted_states = sym.to_states(universe)
    b = sym.set_bdd(sorted(set(b_states) & restricted_states))
    goals = [sym.set_bdd(sorted(set(g) & restricted_states)) for g in goal_sets]
    if not goals:
        goals = [b]
    n = len(restricted_states) + 1

    def to_set(v):
        return frozenset(sym.to_states(v))

    def subset(x, y):
        return (x & ~y).is_false

    outer_v = [mgr.false]
    outer = [frozenset()]
    passes = []
    v2 = mgr.false
    for _ in range(n + 1):
        pre_v2 = view.pre(v2)
        v1 = universe
        v1_list = [v1]
        converged_inners = None
        for _ in range(n + 1):
            pre_v1 = view.pre(v1)
            inners = []
            w = None
            for g in goals:
                base = pre_v2 | (b & g & pre_v1)
                v0 = mgr.false
                v0_list = [v0]
                for _ in range(n + 1):
                    nxt = base | (b & view.pre(v0))
                    assert subset(v0, nxt), "least fixed point iterates decreased"
                    if nxt == v0:
                        break
                    v0_list.append(nxt)
                    v0 = nxt
                else:
                    raise AssertionError("inner mu did not converge")
                inners.append(v0_list)
                w = v0 if w is None else (w & v0)
            assert subset(w, v1), "greatest fixed point iterates increased"
            if w == v1:
                converged_inners = inners
                break
            v1 = w
            v1_list.append(v1)
        else:
            raise AssertionError("nu pass did not converge within the state bound")
        v2_next = v1
        if record:
            passes.append(PassTrace(
                [to_set(x) for x in v1_list],
                [[to_set(x) for x in run] for run in converged_inners]))
        else:
            passes.append(PassTrace(
                [to_set(v1_list[-1])],
                [[to_set(run[-1])] for run in converged_inners]))
        assert subset(v2, v2_next), "least fixed point iterates decreased"
        if v2_next == v2:
            break
        v2 = v2_next
        outer_v.append(v2)
        if record:
            outer.append(to_set(v2))
    else:
        raise AssertionError("outer fixed point did not converge")
    win_states = to_set(v2)
    if not record:
        outer = [frozenset(), win_states] if win_states else [frozenset()]
    elif outer[-1] != win_states:
        outer.append(win_states)
    trace = FixedPointTrace(
        outer=outer, passes=passes, spec=spec, quant=quant,
        strict_u=strict_u, backend=sym.name, a_states=frozenset(a_states),
        b_states=frozenset(sym.to_states(b)),
        goal_sets=[frozenset(sym.to_states(g)) for g in goals])
    return WinningSet(states=win_states, backend=sym.name, bdd=v2), trace


def timed_win(fts, spec, quant=EA, backend="list", record=False,
              strict_u=False):
    """Wall-clock the win call itself; returns (WinningSet, trace, seconds)."""
    t0 = time.perf_counter()
    ws, trace = win(fts, spec, quant, backend, record, strict_u)
    return ws, trace, time.perf_counter() - t0
