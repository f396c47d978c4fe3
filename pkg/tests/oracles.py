"""Independent oracles for the test-suite.

Everything here recomputes expected results from first principles with
deliberately different machinery than the library: exhaustive truth
tables for boolean operations, direct quantifier evaluation for
predecessor sets, an explicit product-game solver (worklist attractors
over (state, goal-phase) nodes) for winning sets, full strategy
enumeration on tiny instances, and an SCC-based lasso check for
closed-loop plays.
"""
from __future__ import annotations

import itertools
import random

import networkx as nx

from absref.fts import Fts, Quant
from absref.synthesis import Spec

# ----------------------------------------------------------------------
# boolean truth tables


def bdd_to_table(mgr, bdd, zs):
    return {
        bits: bdd.evaluate(dict(zip(zs, bits)))
        for bits in itertools.product((0, 1), repeat=len(zs))
    }


def random_table(rng, n):
    return {
        bits: rng.randint(0, 1)
        for bits in itertools.product((0, 1), repeat=n)
    }


def table_to_bdd(mgr, zs, table):
    out = mgr.false
    for bits, val in table.items():
        if val:
            out = out | mgr.cube(zip(zs, bits))
    return out


# ----------------------------------------------------------------------
# predecessor operator straight from the quantifier definition


def pre_definition(fts: Fts, x: set, quant: Quant, strict_u: bool = False) -> set:
    xs = set(x)
    result = set()
    for q in fts.states:
        if strict_u:
            actions = sorted(fts.actions)
        else:
            actions = [u for u in sorted(fts.actions) if fts.succ(q, u)]
        per_action = []
        for u in actions:
            succ = fts.succ(q, u)
            if quant.succ == "forall":
                ok = all(t in xs for t in succ)
                if not strict_u:
                    ok = ok and bool(succ)
            else:
                ok = any(t in xs for t in succ)
            per_action.append(ok)
        if quant.act == "forall":
            good = all(per_action)
        else:
            good = any(per_action)
        if good:
            result.add(q)
    return result


# ----------------------------------------------------------------------
# explicit product-game solver
#
# Product nodes are (state, phase).  The controller picks an enabled
# action, the adversary the successor; entering a state of the current
# goal inside B advances the phase (an "advance edge").  A play wins iff
# it never leaves A, is infinite, eventually stays in B, and takes
# advance edges infinitely often.


def _product_moves(fts: Fts, a, b, goals):
    k = len(goals)
    moves = {}
    for q in fts.states:
        for i in range(k):
            opts = []
            for u in sorted(fts.actions):
                succ = fts.succ(q, u)
                if not succ:
                    continue
                dests = []
                for t in sorted(succ):
                    adv = t in b and t in goals[i]
                    dests.append(((t, (i + 1) % k if adv else i), adv))
                opts.append((u, dests))
            moves[(q, i)] = opts
    return moves


def game_winning_set(fts: Fts, spec: Spec) -> frozenset:
    a, b, goals = spec.resolve(fts)
    goals = [set(g) for g in goals] or [set(b)]
    k = len(goals)
    moves = _product_moves(fts, set(a), set(b), goals)
    nodes = set(moves)
    safe = {n for n in nodes if n[0] in a}
    safe_b = {n for n in safe if n[0] in b}

    def can_split(n, into_adv, into_stay):
        for _u, dests in moves[n]:
            if all((d in into_adv) if adv else (d in into_stay)
                   for d, adv in dests):
                return True
        return False

    # recurrence core: stay in A (and B), take advance edges forever
    y = set(safe_b)
    while True:
        x: set = set()
        while True:
            x2 = {n for n in safe_b if can_split(n, y, x)}
            if x2 == x:
                break
            x = x2
        if x == y:
            break
        y = x

    def can_move_into(n, target):
        for _u, dests in moves[n]:
            if all(d in target for d, _adv in dests):
                return True
        return False

    # attract to the core through A
    w = set(y)
    while True:
        w2 = w | {n for n in safe if can_move_into(n, w)}
        if w2 == w:
            break
        w = w2
    return frozenset(q for (q, i) in w if i == 0)


# ----------------------------------------------------------------------
# exhaustive strategy enumeration (tiny instances only)


def _check_play_graph(edges, starts, a, b, goals):
    """All infinite plays from ``starts`` in the nondeterministic graph
    satisfy the specification: never leave A, no dead ends, every cycle
    inside B, every cycle meeting every goal."""
    g = nx.DiGraph()
    g.add_nodes_from(edges)
    for n, dests in edges.items():
        for d in dests:
            g.add_edge(n, d)
    reach = set()
    stack = [s for s in starts]
    while stack:
        n = stack.pop()
        if n in reach:
            continue
        reach.add(n)
        stack.extend(edges.get(n, ()))
    for (q, _i) in reach:
        if q not in a:
            return False
    for n in reach:
        if not edges.get(n):
            return False  # dead end: play cannot continue
    sub = g.subgraph(reach)
    # states on cycles must be inside B
    for scc in nx.strongly_connected_components(sub):
        on_cycle = len(scc) > 1 or any(
            sub.has_edge(n, n) for n in scc)
        if on_cycle and any(q not in b for (q, _i) in scc):
            return False
    # no cycle may avoid a goal
    for goal in goals:
        avoid = [n for n in reach if n[0] not in goal]
        if not nx.is_directed_acyclic_graph(sub.subgraph(avoid)):
            return False
    return True


def strategy_enum_winning(fts: Fts, spec: Spec, limit: int = 300_000) -> frozenset:
    """Model-check every memoryless-per-phase strategy on the goal-cycling
    product; feasible only for very small instances."""
    a, b, goals = spec.resolve(fts)
    goals = [set(g) for g in goals] or [set(b)]
    moves = _product_moves(fts, set(a), set(b), goals)
    keys = sorted(moves)
    choice_lists = []
    for n in keys:
        opts = moves[n]
        choice_lists.append(opts if opts else [None])
    total = 1
    for c in choice_lists:
        total *= len(c)
    if total > limit:
        raise ValueError(f"too many strategies to enumerate ({total})")
    winning = set()
    k = len(goals)
    for combo in itertools.product(*choice_lists):
        edges = {}
        for n, pick in zip(keys, combo):
            edges[n] = [] if pick is None else [d for d, _adv in pick[1]]
        for q in fts.states:
            if q in winning:
                continue
            if _check_play_graph(edges, [(q, 0)], a, b, goals):
                winning.add(q)
    return frozenset(winning)


def check_controller_lasso(ctrl, fts: Fts, a, b, goals) -> bool:
    """Every controller-compatible play from the winning set satisfies
    the specification (exhaustive on the finite product)."""
    k = ctrl.n_phases
    edges = {}
    for (q, i), acts in ctrl.actions.items():
        dests = set()
        for u in acts:
            for t in fts.succ(q, u):
                adv = t in b and t in goals[i]
                dests.add((t, (i + 1) % k if adv else i))
        edges[(q, i)] = sorted(dests)
    starts = [(q, 0) for q in ctrl.win]
    # nodes reachable but without stored actions are dead ends and fail
    return _check_play_graph(edges, starts, a, b, goals)


# ----------------------------------------------------------------------
# random instances


def random_fts(rng: random.Random, max_states=32, max_actions=4,
               density=0.15, labels=()) -> Fts:
    n = rng.randint(2, max_states)
    m = rng.randint(1, max_actions)
    fts = Fts(states=range(n), actions=range(m))
    triples = []
    for q in range(n):
        for u in range(m):
            deg = rng.randint(0, max(1, int(density * n)))
            for t in rng.sample(range(n), min(deg, n)):
                triples.append((q, u, t))
    fts.add_transitions(triples)
    for prop in labels:
        members = {q for q in range(n) if rng.random() < 0.5}
        fts.labels.setdefault(prop, set()).update(members)
    return fts
