"""Fixed-point-guided refinement of the abstraction.

Regions to refine come from the recorded iterate sequences: around a
greatest fixed point the band ``V1 \\ Vinf`` that the contracting
iterates shed, around a least fixed point the band
``pre_ee(Vinf) \\ Vinf`` just outside the converged set; for the nested
winning-set computation the plan is the union over the constituent
fixed points.  Chosen cells are bisected along their longest axis and
the transition system is patched incrementally: only the children's
geometry is recomputed, and transitions that targeted the parent are
re-aimed using the cached reach boxes of their sources.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import UsageError
from .abstraction import AbstractModel, label_cells
from .fts import EA, EE, Quant, SymRep
from .synthesis import FixedPointTrace, Spec, timed_win


@dataclass
class RefinePlan:
    """Cells to split, largest volume first, with per-cell provenance."""

    cells: list[int]
    provenance: dict[int, set[str]]


@dataclass
class SplitEvent:
    parent: int
    child1: int
    child2: int
    axis: int
    incoming: list[tuple[int, int, int]]


@dataclass
class Budget:
    max_iters: int | None = None
    wall_clock_s: float | None = None


REPORT_COLUMNS = [
    "iter", "n_states", "n_transitions", "synth_time_ms", "win_volume",
    "bdd_nodes", "nodes_per_var", "encoding", "backend",
]


@dataclass
class RunReport:
    rows: list[dict] = field(default_factory=list)
    reason: str = ""
    win: frozenset = frozenset()
    trace: FixedPointTrace | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()


def plan_from_trace(model: AbstractModel, trace: FixedPointTrace,
                    n_split: int = 1, min_width: float = 0.0) -> RefinePlan:
    """Refinement plan from a completed winning-set trace.

    The sink never enters the plan, nor do cells whose longest axis is
    already at ``min_width``; of the rest the ``n_split`` largest by
    volume are kept.
    """
    fts = model.fts
    regions: dict[str, frozenset] = {}
    win = trace.outer[-1]
    regions["outer-mu"] = frozenset(fts.pre(win, EE)) - win
    final = trace.passes[-1]
    if len(final.v1) > 1:
        regions["nu"] = final.v1[1] - final.v1[-1]
    for i, v0_list in enumerate(final.inners):
        v0_inf = v0_list[-1]
        regions[f"inner-mu-g{i}"] = frozenset(fts.pre(v0_inf, EE)) - v0_inf
    provenance: dict[int, set[str]] = {}
    cells = model.partition.cells
    for tag, region in regions.items():
        for q in region:
            if q not in cells:
                continue  # the sink and any non-cell state are not refinable
            cell = cells[q]
            if min_width > 0 and float(np.max(cell.upper - cell.lower)) <= min_width:
                continue
            provenance.setdefault(q, set()).add(tag)
    ordered = sorted(
        provenance, key=lambda q: (-cells[q].volume(), q))[:max(n_split, 0)]
    return RefinePlan(ordered, {q: provenance[q] for q in ordered})


def split_cell(model: AbstractModel, q: int) -> SplitEvent:
    """Bisect cell ``q``; updates the partition, encodings, attached
    symbolic views, and labels, and drops the parent's transitions.

    Transition recomputation for the children is done separately by
    :func:`update_fts` with the returned event.
    """
    if q == model.sink:
        raise UsageError("the out sink cannot be split")
    c1, c2, axis = model.partition.split(q)
    incoming, _ = model.fts.split_state(q, c1, c2)
    owned = {id(s.enc) for s in model.fts._syms}
    for enc in getattr(model, "encodings", {}).values():
        if id(enc) not in owned:
            enc.split(q, c1, c2)
    for uid in model.modes:
        model.reach_boxes.pop((q, uid), None)
    boxes = {p: b for p, b in model.prop_boxes.items()}
    for prop, members in label_cells_for(model, (c1, c2), boxes).items():
        for c in members:
            model.fts.add_label(c, prop)
    return SplitEvent(q, c1, c2, axis, incoming)


def label_cells_for(model: AbstractModel, cell_ids, prop_boxes):
    labels: dict[str, set[int]] = {p: set() for p in prop_boxes}
    for c in cell_ids:
        cell = model.partition.cells[c]
        for prop, (b_lo, b_up) in prop_boxes.items():
            if np.all(cell.lower >= b_lo) and np.all(cell.upper <= b_up):
                labels[prop].add(c)
    return labels


def update_fts(model: AbstractModel, events: list[SplitEvent]) -> None:
    """Patch the transition system after splits.

    Recomputes reach geometry only for the new children; every
    transition that targeted a parent is re-aimed at the children its
    cached reach box intersects.  The result equals a full rebuild.
    """
    from .abstraction import reach

    dl, du = model._dist_args()
    for ev in events:
        batch = []
        for child in (ev.child1, ev.child2):
            cell = model.partition.cells[child]
            for uid in sorted(model.modes):
                r_lo, r_up = reach(cell.lower, cell.upper, model.modes[uid], dl, du)
                model.reach_boxes[(child, uid)] = (r_lo, r_up)
                for t in model.targets_of_box(r_lo, r_up):
                    batch.append((child, uid, t))
                if model._out_of_domain(r_lo, r_up):
                    batch.append((child, uid, model.sink))
        children = {ev.child1, ev.child2}
        for (p, u, _old) in ev.incoming:
            r_lo, r_up = model.reach_boxes[(p, u)]
            for t in model.targets_of_box(r_lo, r_up):
                if t in children:
                    batch.append((p, u, t))
        model.fts.add_transitions(sorted(set(batch)))


def apply_splits(model: AbstractModel, cells) -> list[SplitEvent]:
    """Split each cell in turn, patching transitions after every split so
    later captures of incoming edges see a consistent system."""
    events = []
    for q in cells:
        ev = split_cell(model, q)
        update_fts(model, [ev])
        events.append(ev)
    return events


def refine_loop(model: AbstractModel, spec: Spec, budget: Budget,
                backend="list", quant: Quant = EA, n_split: int = 1,
                min_width: float = 0.0, target_box=None,
                strict_u: bool = False) -> RunReport:
    """Alternate synthesis and refinement until the budget runs out, the
    plan empties, or the target box is covered by the winning set.

    One report row per iteration; synthesis time covers the win call
    only.
    """
    report = RunReport()
    sym = backend if isinstance(backend, SymRep) else None
    t_start = time.perf_counter()
    it = 0
    while True:
        ws, trace, dt = timed_win(
            model.fts, spec, quant, backend, record=True, strict_u=strict_u)
        report.win = ws.states
        report.trace = trace
        vol = sum(
            model.partition.cells[q].volume()
            for q in ws.states if q in model.partition.cells)
        report.rows.append({
            "iter": it,
            "n_states": len(model.fts.states),
            "n_transitions": model.fts.n_transitions,
            "synth_time_ms": round(dt * 1e3, 3),
            "win_volume": round(vol, 9),
            "bdd_nodes": sym.mgr.total_nodes() if sym else 0,
            "nodes_per_var": (
                round(sym.mgr.total_nodes() / max(sym.mgr.n_vars, 1), 3)
                if sym else 0.0),
            "encoding": sym.name if sym else "-",
            "backend": "bdd" if sym else "list",
        })
        if target_box is not None and _covered(model, ws.states, target_box):
            report.reason = "target covered"
            break
        if budget.max_iters is not None and it >= budget.max_iters:
            report.reason = "budget exhausted"
            break
        if (budget.wall_clock_s is not None
                and time.perf_counter() - t_start >= budget.wall_clock_s):
            report.reason = "budget exhausted"
            break
        plan = plan_from_trace(model, trace, n_split, min_width)
        if not plan.cells:
            report.reason = "fixed point stable"
            break
        apply_splits(model, plan.cells)
        it += 1
    return report


def _covered(model: AbstractModel, win, target_box) -> bool:
    t_lo, t_up = (np.asarray(b, dtype=float) for b in target_box)
    for q, cell in model.partition.cells.items():
        overlap = np.minimum(cell.upper, t_up) - np.maximum(cell.lower, t_lo)
        if np.all(overlap > 0) and q not in win:
            return False
    return True
