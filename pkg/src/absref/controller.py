"""Strategy extraction from fixed-point traces and closed-loop simulation.

The controller keeps one memory cell: the index of the goal currently
pursued, advancing cyclically whenever the play enters a state of the
current goal inside the persistence region.  Per (state, phase) it
stores every action validated by the predecessor computations that
first brought the state into the winning iterates: actions that jump
into the previous outer iterate, actions that re-enter the converged
recurrence region at a goal state, and actions that descend the inner
reachability ranks.  Following any stored action the pair
(outer rank, inner rank) decreases lexicographically until the phase
target is hit, which is what makes the closed loop live.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import UsageError
from .abstraction import AbstractModel
from .fts import Fts, restrict_to_safe
from .synthesis import FixedPointTrace, Spec


@dataclass
class Controller:
    n_phases: int
    win: frozenset
    b_states: frozenset
    goal_sets: list[frozenset]
    actions: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    rank: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)

    def action(self, q: int, phase: int) -> int:
        """First stored action (ascending action id) for (q, phase)."""
        try:
            return self.actions[(q, phase)][0]
        except KeyError:
            raise UsageError(f"no action stored for state {q} phase {phase}") from None

    def advance(self, phase: int, entered: int) -> int:
        """Phase update on entering a state (self-loops count as entering)."""
        if entered in self.b_states and entered in self.goal_sets[phase]:
            return (phase + 1) % self.n_phases
        return phase

    # ------------------------------------------------------------------
    # stable text format: map lines sorted by (state, phase)

    def dumps(self) -> str:
        lines = [
            "absref-controller v1",
            f"phases {self.n_phases}",
            "win " + " ".join(map(str, sorted(self.win))),
            "b " + " ".join(map(str, sorted(self.b_states))),
        ]
        for i, g in enumerate(self.goal_sets):
            lines.append(f"goal {i} " + " ".join(map(str, sorted(g))))
        for (q, phase) in sorted(self.actions):
            outer, inner = self.rank[(q, phase)]
            acts = " ".join(map(str, self.actions[(q, phase)]))
            lines.append(f"map {q} {phase} {outer} {inner} {acts}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Controller":
        lines = [l for l in text.splitlines() if l.strip()]
        if not lines or lines[0] != "absref-controller v1":
            raise UsageError("not a controller file")
        n_phases = 1
        win: frozenset = frozenset()
        b: frozenset = frozenset()
        goals: dict[int, frozenset] = {}
        actions = {}
        rank = {}
        for line in lines[1:]:
            parts = line.split()
            if parts[0] == "phases":
                n_phases = int(parts[1])
            elif parts[0] == "win":
                win = frozenset(map(int, parts[1:]))
            elif parts[0] == "b":
                b = frozenset(map(int, parts[1:]))
            elif parts[0] == "goal":
                goals[int(parts[1])] = frozenset(map(int, parts[2:]))
            elif parts[0] == "map":
                q, phase, outer, inner = map(int, parts[1:5])
                actions[(q, phase)] = tuple(map(int, parts[5:]))
                rank[(q, phase)] = (outer, inner)
            else:
                raise UsageError(f"cannot parse controller line {line!r}")
        ctrl = cls(n_phases, win, b, [goals[i] for i in sorted(goals)])
        ctrl.actions = actions
        ctrl.rank = rank
        return ctrl

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Controller":
        with open(path) as fh:
            return cls.loads(fh.read())


def extract(trace: FixedPointTrace, fts: Fts) -> Controller:
    """Build the strategy from a recorded trace.

    For each outer pass and goal, states newly entering the inner
    iterates get the actions whose full successor set lands in the
    matching predecessor target of that pass; a state keeps the
    annotation of the first outer pass that reached it, so stored
    actions always make lexicographic rank progress.
    """
    if not trace.win:
        raise UsageError("cannot extract a controller from an empty winning set")
    if trace.strict_u:
        raise UsageError("extraction requires enabled-action pre semantics")
    if len(trace.outer) != len(trace.passes):
        raise UsageError("extraction needs a trace recorded with record=True")
    view = restrict_to_safe(fts, set(trace.a_states), trace.quant)
    b = trace.b_states
    goals = trace.goal_sets
    ctrl = Controller(
        n_phases=len(goals), win=trace.win, b_states=b, goal_sets=goals)
    for k, pass_ in enumerate(trace.passes):
        v2_prev = trace.outer[k]
        v1_inf = pass_.v1[-1]
        for i, v0_list in enumerate(pass_.inners):
            for k2 in range(1, len(v0_list)):
                fresh = v0_list[k2] - v0_list[k2 - 1]
                for q in fresh:
                    if (q, i) in ctrl.actions:
                        continue
                    prev = v0_list[k2 - 1]
                    acts = []
                    for u, succ in view.groups_of(q):
                        if not succ:
                            continue
                        if (succ <= v2_prev
                                or (q in b and q in goals[i] and succ <= v1_inf)
                                or (q in b and succ <= prev)):
                            acts.append(u)
                    if not acts:
                        raise AssertionError(
                            f"state {q} entered the iterates with no valid action")
                    ctrl.actions[(q, i)] = tuple(sorted(acts))
                    ctrl.rank[(q, i)] = (k + 1, k2)
    for q in trace.win:
        for i in range(len(goals)):
            if (q, i) not in ctrl.actions:
                raise AssertionError(
                    f"winning state {q} lacks an action in phase {i}")
    return ctrl


@dataclass
class ClosedLoopReport:
    trajectory: list
    cells: list[int]
    actions: list[int]
    phases: list[int]
    goal_visits: list[int]
    safety_violation: bool = False
    violation_step: int | None = None
    confinement_step: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "trajectory": [list(map(float, x)) for x in self.trajectory],
            "cells": self.cells,
            "actions": self.actions,
            "phases": self.phases,
            "goal_visits": self.goal_visits,
            "safety_violation": self.safety_violation,
            "violation_step": self.violation_step,
            "confinement_step": self.confinement_step,
        }


def simulate(controller: Controller, model: AbstractModel, spec: Spec,
             x0, horizon: int, seed: int = 0) -> ClosedLoopReport:
    """Run the closed loop on the concrete dynamics.

    Deterministic given the seed: disturbances are sampled uniformly
    from the disturbance box.  The starting point must lie in a winning
    cell.  Leaving the domain is recorded as a safety violation and
    stops the run.  The confinement step is the first index after which
    the trajectory stays inside the persistence box.
    """
    x = np.asarray(x0, dtype=float)
    part = model.partition
    cell = part.locate(x)
    if cell is None or cell not in controller.win:
        raise UsageError("initial state is not inside a winning cell")
    rng = np.random.default_rng(seed)
    b_box = None
    if spec.persistence is not None:
        b_box = model.prop_boxes[spec.persistence]
    report = ClosedLoopReport(
        trajectory=[x.copy()], cells=[cell], actions=[], phases=[0],
        goal_visits=[0] * controller.n_phases)
    phase = 0
    for _ in range(horizon):
        u = controller.action(cell, phase)
        d = None
        if model.dist_lower.size:
            d = rng.uniform(model.dist_lower, model.dist_upper)
        x = model.modes[u].step(x, d)
        report.actions.append(u)
        report.trajectory.append(x.copy())
        if (np.any(x < part.domain_lower) or np.any(x > part.domain_upper)):
            report.safety_violation = True
            report.violation_step = len(report.actions)
            break
        cell = part.locate(x)
        if cell in controller.b_states and cell in controller.goal_sets[phase]:
            report.goal_visits[phase] += 1
            phase = controller.advance(phase, cell)
        report.cells.append(cell)
        report.phases.append(phase)
    if b_box is not None and not report.safety_violation:
        b_lo, b_up = b_box
        inside = [
            bool(np.all(x >= b_lo) and np.all(x <= b_up))
            for x in report.trajectory
        ]
        conf = None
        for idx in range(len(inside) - 1, -1, -1):
            if not inside[idx]:
                break
            conf = idx
        report.confinement_step = conf
    return report
