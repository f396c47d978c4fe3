"""Finite transition systems with two interchangeable backends.

The explicit backend stores transitions as flat coordinate-format arrays
(one ``(q, u, q')`` triple per row) with a per-``(q, u)`` successor index
built lazily; predecessor sweeps run over the grouped arrays through the
kernels in :mod:`absref._kernels`.  The symbolic backend mirrors the same
transition set as a BDD over interleaved from/to state variables plus
action variables, and both backends expose the controllable-predecessor
operator ``pre``.

Quantifier semantics: by default the action quantifier ranges over the
actions enabled at a state (at least one outgoing transition) and, for a
universal successor quantifier, a ``(q, u)`` pair only counts when its
successor set is nonempty.  ``strict_u=True`` switches to quantification
over the full action set, in which a missing action satisfies a
universal successor quantifier vacuously.
"""
from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np

from . import UsageError
from ._kernels import pre_groups
from .bdd import Bdd, BddManager
from .encoding import (
    LogEncoding,
    Role,
    StateVars,
    VarGroup,
    balanced_or,
    bdd_to_states,
    set_to_bdd,
    state_to_bdd,
)


class Quant(NamedTuple):
    """Quantifier pair of the predecessor operator: actions, then successors."""

    act: str
    succ: str


EE = Quant("exists", "exists")
EA = Quant("exists", "forall")
AE = Quant("forall", "exists")
AA = Quant("forall", "forall")
ALL_QUANTS = (EE, EA, AE, AA)


def _check_quant(quant: Quant) -> None:
    if quant.act not in ("exists", "forall") or quant.succ not in ("exists", "forall"):
        raise UsageError(f"bad quantifier pair {quant}")


class Fts:
    """States, finite actions, labeled transitions, proposition labeling."""

    def __init__(self, states=(), actions=(), transitions=(), labels=None,
                 sink: int | None = None):
        self.states: set[int] = set()
        self.actions: set[int] = set()
        self.labels: dict[str, set[int]] = {}
        self.sink = sink
        self._syms: list[SymRep] = []
        # coordinate arrays; rows with alive=False are tombstones
        self._qs = np.empty(0, dtype=np.int64)
        self._us = np.empty(0, dtype=np.int64)
        self._qps = np.empty(0, dtype=np.int64)
        self._alive = np.empty(0, dtype=bool)
        self._pending: list[tuple[int, int, int]] = []
        self._index = None  # built by _consolidate
        for q in states:
            self.add_state(q)
        for u in actions:
            self.add_action(u)
        for t in transitions:
            self.add_transition(*t)
        for prop, qs in (labels or {}).items():
            self.labels.setdefault(prop, set())
            for q in qs:
                self.add_label(q, prop)

    # ------------------------------------------------------------------
    # construction and edits

    def add_state(self, q: int) -> None:
        if q in self.states:
            raise UsageError(f"state {q} already exists")
        self.states.add(q)
        for sym in self._syms:
            sym.on_add_state(q)

    def add_action(self, u: int) -> None:
        if u in self.actions:
            raise UsageError(f"action {u} already exists")
        if self._syms:
            raise UsageError("cannot add actions once a symbolic view is attached")
        self.actions.add(u)

    def add_transition(self, q: int, u: int, qp: int) -> None:
        self.add_transitions([(q, u, qp)])

    def add_transitions(self, triples: Iterable[tuple[int, int, int]]) -> None:
        batch = []
        for q, u, qp in triples:
            if q not in self.states or qp not in self.states:
                raise UsageError(f"transition ({q},{u},{qp}) references a dead state")
            if u not in self.actions:
                raise UsageError(f"unknown action {u}")
            batch.append((q, u, qp))
        if not batch:
            return
        self._pending.extend(batch)
        self._index = None
        for sym in self._syms:
            sym.on_add_transitions(batch)

    def remove_transition(self, q: int, u: int, qp: int) -> None:
        self._pending = [t for t in self._pending if t != (q, u, qp)]
        mask = (self._qs == q) & (self._us == u) & (self._qps == qp)
        self._alive &= ~mask
        self._index = None
        for sym in self._syms:
            sym.on_remove_transition(q, u, qp)

    def remove_state(self, q: int) -> None:
        """Remove ``q``, its labels, and every incident transition."""
        if q not in self.states:
            raise UsageError(f"state {q} does not exist")
        for sym in self._syms:
            sym.on_remove_state(q)
        self.states.discard(q)
        for members in self.labels.values():
            members.discard(q)
        self._pending = [t for t in self._pending if q not in (t[0], t[2])]
        self._alive &= ~((self._qs == q) | (self._qps == q))
        self._index = None

    def split_state(self, parent: int, child1: int, child2: int):
        """Replace ``parent`` by two fresh children, keeping attached
        symbolic views and their encodings consistent.

        Returns the incoming transitions ``(p, u, parent)`` from other
        states, which the caller re-targets after recomputing geometry.
        The parent's own outgoing transitions are dropped.
        """
        incoming = [
            (p, u, t) for (p, u, t) in self.iter_transitions()
            if t == parent and p != parent
        ]
        for sym in self._syms:
            sym.on_remove_state(parent)
        self.states.discard(parent)
        parent_props = [p for p, members in self.labels.items() if parent in members]
        for members in self.labels.values():
            members.discard(parent)
        self._pending = [t for t in self._pending if parent not in (t[0], t[2])]
        self._alive &= ~((self._qs == parent) | (self._qps == parent))
        self._index = None
        for sym in self._syms:
            sym.split_encoding(parent, child1, child2)
        self.states.add(child1)
        self.states.add(child2)
        for sym in self._syms:
            sym.on_add_state(child1)
            sym.on_add_state(child2)
        return incoming, parent_props

    def add_label(self, q: int, prop: str) -> None:
        if q not in self.states:
            raise UsageError(f"state {q} does not exist")
        self.labels.setdefault(prop, set()).add(q)

    def label_set(self, prop: str) -> set[int]:
        if prop not in self.labels:
            raise UsageError(f"unknown proposition {prop!r}")
        return set(self.labels[prop])

    # ------------------------------------------------------------------
    # views

    def _consolidate(self) -> None:
        if self._index is not None:
            return
        if self._pending:
            add = np.array(self._pending, dtype=np.int64).reshape(-1, 3)
            qs = np.concatenate([self._qs[self._alive], add[:, 0]])
            us = np.concatenate([self._us[self._alive], add[:, 1]])
            qps = np.concatenate([self._qps[self._alive], add[:, 2]])
            self._pending = []
        else:
            qs = self._qs[self._alive]
            us = self._us[self._alive]
            qps = self._qps[self._alive]
        order = np.lexsort((qps, us, qs))
        qs, us, qps = qs[order], us[order], qps[order]
        if len(qs):
            dup = np.zeros(len(qs), dtype=bool)
            dup[1:] = (qs[1:] == qs[:-1]) & (us[1:] == us[:-1]) & (qps[1:] == qps[:-1])
            if dup.any():
                keep = ~dup
                qs, us, qps = qs[keep], us[keep], qps[keep]
        self._qs, self._us, self._qps = qs, us, qps
        self._alive = np.ones(len(qs), dtype=bool)
        self._index = _GroupIndex(qs, us, qps)

    def iter_transitions(self):
        self._consolidate()
        return zip(self._qs.tolist(), self._us.tolist(), self._qps.tolist())

    @property
    def n_transitions(self) -> int:
        self._consolidate()
        return len(self._qs)

    def succ(self, q: int, u: int) -> frozenset[int]:
        self._consolidate()
        return self._index.succ(q, u)

    def enabled_actions(self, q: int) -> list[int]:
        self._consolidate()
        return self._index.enabled(q)

    def group_index(self) -> "_GroupIndex":
        self._consolidate()
        return self._index

    # ------------------------------------------------------------------
    # predecessor operator, explicit backend

    def pre(self, x: Iterable[int], quant: Quant, strict_u: bool = False) -> set[int]:
        """Backwards controlled reachability over the transition list."""
        _check_quant(quant)
        xs = set(x)
        if not xs <= self.states:
            raise UsageError("target set contains unknown states")
        self._consolidate()
        return self._index.pre(
            xs, self.states, quant, strict_u, len(self.actions))

    # ------------------------------------------------------------------
    # symbolic views

    def attach_sym(self, sym: "SymRep") -> None:
        self._syms.append(sym)

    # ------------------------------------------------------------------
    # text serialization: "states", "actions", "label P q...", "sink N"
    # header lines, then one `q u q'` line per transition

    def dumps(self) -> str:
        self._consolidate()
        lines = [
            "states " + " ".join(map(str, sorted(self.states))),
            "actions " + " ".join(map(str, sorted(self.actions))),
        ]
        if self.sink is not None:
            lines.append(f"sink {self.sink}")
        for prop in sorted(self.labels):
            members = " ".join(map(str, sorted(self.labels[prop])))
            lines.append(f"label {prop} {members}".rstrip())
        for q, u, qp in self.iter_transitions():
            lines.append(f"{q} {u} {qp}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Fts":
        fts = cls()
        triples = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "states":
                for tok in parts[1:]:
                    fts.add_state(int(tok))
            elif parts[0] == "actions":
                for tok in parts[1:]:
                    fts.add_action(int(tok))
            elif parts[0] == "sink":
                fts.sink = int(parts[1])
            elif parts[0] == "label":
                for tok in parts[2:]:
                    fts.add_label(int(tok), parts[1])
            elif len(parts) == 3:
                triples.append(tuple(int(t) for t in parts))
            else:
                raise UsageError(f"cannot parse fts line: {raw!r}")
        fts.add_transitions(triples)
        return fts

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Fts":
        with open(path) as fh:
            return cls.loads(fh.read())


class _GroupIndex:
    """Per-(q, u) successor index over sorted coordinate arrays."""

    def __init__(self, qs, us, qps):
        self.qs, self.us, self.qps = qs, us, qps
        if len(qs):
            boundary = np.flatnonzero(
                np.r_[True, (qs[1:] != qs[:-1]) | (us[1:] != us[:-1])])
            self.gstart = np.r_[boundary, len(qs)].astype(np.int64)
            self.gq = qs[boundary]
            self.gu = us[boundary]
        else:
            self.gstart = np.zeros(1, dtype=np.int64)
            self.gq = np.empty(0, dtype=np.int64)
            self.gu = np.empty(0, dtype=np.int64)
        self._groups: dict[tuple[int, int], tuple[int, int]] | None = None

    def _group_map(self):
        if self._groups is None:
            self._groups = {
                (int(q), int(u)): (int(self.gstart[g]), int(self.gstart[g + 1]))
                for g, (q, u) in enumerate(zip(self.gq, self.gu))
            }
        return self._groups

    def succ(self, q: int, u: int) -> frozenset[int]:
        rng = self._group_map().get((q, u))
        if rng is None:
            return frozenset()
        return frozenset(self.qps[rng[0]:rng[1]].tolist())

    def enabled(self, q: int) -> list[int]:
        return sorted(u for (p, u) in self._group_map() if p == q)

    def pre(self, xs: set[int], states: set[int], quant: Quant,
            strict_u: bool, n_actions: int) -> set[int]:
        size = 0
        if states:
            size = max(states) + 1
        if len(self.qps):
            size = max(size, int(self.qps.max()) + 1, int(self.qs.max()) + 1)
        x = np.zeros(size, dtype=bool)
        if xs:
            x[np.fromiter(xs, dtype=np.int64)] = True
        out = np.zeros(size, dtype=bool)
        act_forall = quant.act == "forall"
        succ_forall = quant.succ == "forall"
        # states without any group keep their init value
        if act_forall:
            init = not (strict_u and not succ_forall and n_actions > 0)
        else:
            init = strict_u and succ_forall and n_actions > 0
        if init and states:
            out[np.fromiter(states, dtype=np.int64)] = True
        pre_groups(self.gq, self.gstart, self.qps, x, out,
                   act_forall, succ_forall, strict_u, n_actions)
        return {int(q) for q in np.flatnonzero(out) if q in states}


class ListView:
    """Read-only restriction of an explicit transition system.

    Shares the grouped-array machinery of :class:`Fts` for predecessor
    sweeps and successor queries without copying into a full ``Fts``.
    """

    def __init__(self, states: set[int], n_actions: int, qs, us, qps):
        self.states = set(states)
        self.n_actions = n_actions
        self._index = _GroupIndex(qs, us, qps)

    def pre(self, x: Iterable[int], quant: Quant, strict_u: bool = False) -> set[int]:
        _check_quant(quant)
        return self._index.pre(set(x), self.states, quant, strict_u,
                               self.n_actions)

    def succ(self, q: int, u: int) -> frozenset[int]:
        return self._index.succ(q, u)

    def groups_of(self, q: int) -> list[tuple[int, frozenset[int]]]:
        gm = self._index._group_map()
        return [
            (u, self.succ(p, u)) for (p, u) in sorted(gm) if p == q
        ]

    def iter_transitions(self):
        return zip(self._index.qs.tolist(), self._index.us.tolist(),
                   self._index.qps.tolist())


def restrict_to_safe(fts: Fts, a_states: set[int], quant: Quant) -> ListView:
    """Quant-aware subsystem of the A-labeled states.

    For a universal successor quantifier an action group with any
    successor outside A disappears entirely (playing it could violate
    safety); otherwise only the offending transitions drop.
    """
    idx = fts.group_index()
    keep_states = a_states & fts.states
    qs, us, qps = idx.qs, idx.us, idx.qps
    if len(qs) == 0:
        return ListView(keep_states, len(fts.actions), qs, us, qps)
    size = int(max(qs.max(), qps.max())) + 1
    a_mask = np.zeros(size, dtype=bool)
    live = [q for q in keep_states if q < size]
    if live:
        a_mask[np.fromiter(live, dtype=np.int64)] = True
    if quant.succ == "forall":
        ok_to = a_mask[qps].astype(np.int64)
        sizes = np.diff(idx.gstart)
        grp_all = np.add.reduceat(ok_to, idx.gstart[:-1]) == sizes
        grp_keep = grp_all & a_mask[idx.gq]
        row_keep = np.repeat(grp_keep, sizes)
    else:
        row_keep = a_mask[qs] & a_mask[qps]
    return ListView(keep_states, len(fts.actions),
                    qs[row_keep], us[row_keep], qps[row_keep])


def pre_reference(fts: Fts, x: Iterable[int], quant: Quant,
                  strict_u: bool = False) -> tuple[set[int], int]:
    """Readable single-pass reference for ``Fts.pre``.

    Returns the predecessor set and the number of transition rows
    touched; with the successor index built, the sweep visits each triple
    once.  Used by the complexity smoke test and as a cross-check.
    """
    _check_quant(quant)
    xs = set(x)
    idx = fts.group_index()
    visits = 0
    per_state: dict[int, list[bool]] = {}
    gm = idx._group_map()
    for (q, u), (s, e) in gm.items():
        good = True if quant.succ == "forall" else False
        for r in range(s, e):
            visits += 1
            hit = int(idx.qps[r]) in xs
            if quant.succ == "forall" and not hit:
                good = False
                break
            if quant.succ == "exists" and hit:
                good = True
                break
        per_state.setdefault(q, []).append(good)
    result = set()
    for q in fts.states:
        goods = per_state.get(q, [])
        if quant.act == "forall":
            ok = all(goods)
            if strict_u and quant.succ == "exists" and len(goods) < len(fts.actions):
                ok = False
        else:
            ok = any(goods)
            if strict_u and quant.succ == "forall" and len(goods) < len(fts.actions):
                ok = True
        if ok:
            result.add(q)
    return result, visits


class SymRep:
    """Symbolic mirror of an :class:`Fts` under a chosen state encoding.

    Holds the transition relation ``b_t`` over (from, action, to)
    variables and the domain characteristic functions ``b_q`` (over the
    from group) and ``b_u``.  Stays consistent with the explicit backend
    through the edit notifications sent by the owning ``Fts``.
    """

    def __init__(self, fts: Fts, enc, mgr: BddManager | None = None,
                 name: str = "log"):
        self.fts = fts
        self.enc = enc
        self.name = name
        self.mgr = mgr if mgr is not None else BddManager()
        self.sv = StateVars(self.mgr, enc)
        actions = sorted(fts.actions)
        self.action_enc = LogEncoding(actions)
        self.action_group = VarGroup(
            Role.ACTION, [self.mgr.new_var() for _ in range(self.action_enc.width)])
        self.b_u = set_to_bdd(self.mgr, actions, self.action_enc, self.action_group)
        self.b_q = set_to_bdd(self.mgr, sorted(fts.states), enc, self.from_group)
        self.b_t = self._build_relation()
        self._enabled: Bdd | None = None
        fts.attach_sym(self)

    # ------------------------------------------------------------------

    @property
    def from_group(self) -> VarGroup:
        return self.sv.from_group

    @property
    def to_group(self) -> VarGroup:
        return self.sv.to_group

    def _build_relation(self) -> Bdd:
        by_group: dict[tuple[int, int], list[int]] = {}
        for q, u, qp in self.fts.iter_transitions():
            by_group.setdefault((q, u), []).append(qp)
        return balanced_or(self.mgr, [
            self._group_bdd(q, u, qps) for (q, u), qps in sorted(by_group.items())
        ])

    def _group_bdd(self, q: int, u: int, qps) -> Bdd:
        succ = set_to_bdd(self.mgr, qps, self.enc, self.to_group)
        return self.cube_from(q) & self.cube_action(u) & succ

    def cube_from(self, q: int) -> Bdd:
        return state_to_bdd(self.mgr, self.enc.encode(q), self.from_group)

    def cube_to(self, q: int) -> Bdd:
        return state_to_bdd(self.mgr, self.enc.encode(q), self.to_group)

    def cube_action(self, u: int) -> Bdd:
        return state_to_bdd(
            self.mgr, self.action_enc.encode(u), self.action_group)

    def set_bdd(self, states, group: str = "from") -> Bdd:
        grp = self.from_group if group == "from" else self.to_group
        return set_to_bdd(self.mgr, sorted(states), self.enc, grp)

    def to_states(self, b: Bdd, group: str = "from") -> set[int]:
        grp = self.from_group if group == "from" else self.to_group
        return bdd_to_states(self.mgr, b, self.enc, grp)

    def rename_from_to(self, b: Bdd) -> Bdd:
        return self.mgr.rename(b, self.sv.rename_map())

    def rename_to_from(self, b: Bdd) -> Bdd:
        return self.mgr.rename(b, self.sv.rename_map(reverse=True))

    def enabled_bdd(self) -> Bdd:
        """Characteristic function over (from, action) of enabled pairs."""
        if self._enabled is None:
            self._enabled = self.mgr.exists(self.to_group.vars, self.b_t)
        return self._enabled

    # ------------------------------------------------------------------
    # predecessor operator, symbolic backend

    def pre(self, b_x: Bdd, quant: Quant, strict_u: bool = False) -> Bdd:
        """Predecessors of the set ``b_x`` given over the to-group."""
        _check_quant(quant)
        extra = self.mgr.support(b_x) - set(self.to_group.vars)
        if extra:
            raise UsageError("pre target must be supported on the to-group")
        return sym_pre(
            self.mgr, self.b_t, self.b_q, self.b_u, self.enabled_bdd(),
            self.action_group.vars, self.to_group.vars, b_x, quant, strict_u)

    def pre_sets(self, x: Iterable[int], quant: Quant,
                 strict_u: bool = False) -> set[int]:
        """Set-in, set-out convenience wrapper around :meth:`pre`."""
        return self.to_states(self.pre(self.set_bdd(sorted(x), "to"), quant, strict_u))

    # ------------------------------------------------------------------
    # edit notifications from the owning Fts

    def on_add_state(self, q: int) -> None:
        if q not in self.enc:
            self.enc.add(q)
        self._sync_width()
        self.b_q = self.b_q | self.cube_from(q)

    def on_remove_state(self, q: int) -> None:
        gone = self.cube_from(q) | self.cube_to(q)
        self.b_t = self.b_t & ~gone
        self.b_q = self.b_q & ~self.cube_from(q)
        self._enabled = None

    def on_add_transitions(self, batch) -> None:
        self._sync_width()
        by_group: dict[tuple[int, int], list[int]] = {}
        for q, u, qp in batch:
            by_group.setdefault((q, u), []).append(qp)
        delta = balanced_or(self.mgr, [
            self._group_bdd(q, u, qps) for (q, u), qps in sorted(by_group.items())
        ])
        self.b_t = self.b_t | delta
        self._enabled = None

    def on_remove_transition(self, q: int, u: int, qp: int) -> None:
        minterm = self.cube_from(q) & self.cube_action(u) & self.cube_to(qp)
        self.b_t = self.b_t & ~minterm
        self._enabled = None

    def split_encoding(self, parent: int, child1: int, child2: int) -> None:
        """Apply the encoding's split rule; call after the parent's cubes
        have been removed from the relation."""
        self.enc.split(parent, child1, child2)
        self._sync_width()

    def _sync_width(self) -> None:
        for zf, zt in self.sv.sync():
            # every pre-existing state is zero-padded on the fresh bit
            nf = self.mgr.nvar(zf)
            nt = self.mgr.nvar(zt)
            self.b_t = self.b_t & nf & nt
            self.b_q = self.b_q & nf
            self._enabled = None

    # ------------------------------------------------------------------

    def transition_set(self) -> set[tuple[int, int, int]]:
        """Enumerate the relation back to triples (test oracle support)."""
        out = set()
        sup = (
            list(self.from_group.vars)
            + list(self.action_group.vars)
            + list(self.to_group.vars)
        )
        nf = len(self.from_group.vars)
        na = len(self.action_group.vars)
        for bits in self.mgr.sat_iter(self.b_t, sup):
            fb = bits[:nf]
            ab = bits[nf:nf + na]
            tb = bits[nf + na:]
            out.add((
                self.enc.decode(fb),
                self.action_enc.decode(ab),
                self.enc.decode(tb),
            ))
        return out


def sym_pre(mgr: BddManager, b_t: Bdd, b_q: Bdd, b_u: Bdd, enabled: Bdd,
            act_vars, to_vars, b_x: Bdd, quant: Quant,
            strict_u: bool = False) -> Bdd:
    """BDD predecessor via quantifier elimination.

    Negations are guarded by the domain functions so that assignments
    outside the encoded state/action sets never enter the result: the
    universal-successor case conjoins the enabledness relation (unless
    ``strict_u``), the existential action case conjoins ``b_u``, and the
    universal action case complements within ``b_u``.
    """
    _check_quant(quant)
    if quant.succ == "exists":
        core = mgr.and_exists(b_t, b_x, to_vars)  # over (from, action)
    else:
        bad = mgr.and_exists(b_t, ~b_x, to_vars)  # some successor escapes x
        core = ~bad
        if not strict_u:
            core = enabled & core
    if quant.act == "exists":
        res = mgr.exists(act_vars, b_u & core)
    else:
        if strict_u:
            res = ~mgr.exists(act_vars, b_u & ~core)
        else:
            res = ~mgr.exists(act_vars, b_u & enabled & ~core)
    return b_q & res
