"""Rectangular abstraction of discrete-time affine dynamics.

A nonuniform box partition of the state domain is abstracted into a
finite transition system: there is a transition ``(q, u, q')`` exactly
when the interval image of cell ``q`` under mode ``u`` meets the closure
of cell ``q'``, and a transition to a distinguished ``out`` sink when
the image leaves the domain.  For affine maps over boxes the interval
image is the exact bounding box, so the abstraction is a tight
over-approximation, which is the sound direction for synthesis with
uncontrolled successor nondeterminism.

The thermal benchmark family (rooms and cooling slabs exchanging heat
through a resistor network, with on/off water flow per slab) is built
here as forward-Euler discretized affine modes.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import ConfigError, UsageError
from ._kernels import box_targets, locate_points
from .fts import Fts


@dataclass
class Cell:
    lower: np.ndarray
    upper: np.ndarray
    depth: int = 0

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def contains(self, x) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


class Partition:
    """Nonuniform box partition: disjoint interiors, exact cover of the domain."""

    def __init__(self, domain_lower, domain_upper, grid):
        self.domain_lower = np.asarray(domain_lower, dtype=float)
        self.domain_upper = np.asarray(domain_upper, dtype=float)
        if self.domain_lower.shape != self.domain_upper.shape:
            raise ConfigError("domain bounds have mismatched dimensions")
        if not np.all(self.domain_lower < self.domain_upper):
            raise ConfigError("domain must have positive extent on every axis")
        grid = [int(g) for g in grid]
        if len(grid) != len(self.domain_lower) or any(g < 1 for g in grid):
            raise ConfigError("grid must give a positive cell count per axis")
        self.cells: dict[int, Cell] = {}
        widths = (self.domain_upper - self.domain_lower) / np.asarray(grid)
        for idx in itertools.product(*(range(g) for g in grid)):
            lo = self.domain_lower + widths * np.asarray(idx)
            up = lo + widths
            self.cells[len(self.cells)] = Cell(lo, up, 0)
        self.next_id = len(self.cells)
        self._arrays = None

    @property
    def dim(self) -> int:
        return len(self.domain_lower)

    def __len__(self) -> int:
        return len(self.cells)

    def arrays(self):
        """(ids, lowers, uppers) snapshot in stable insertion order."""
        if self._arrays is None:
            ids = np.fromiter(self.cells.keys(), dtype=np.int64, count=len(self.cells))
            lowers = np.stack([c.lower for c in self.cells.values()])
            uppers = np.stack([c.upper for c in self.cells.values()])
            self._arrays = (ids, lowers, uppers)
        return self._arrays

    def split(self, q: int) -> tuple[int, int, int]:
        """Bisect cell ``q`` along its longest axis (ties: lowest index).

        Returns the two child ids and the split axis; children get depth
        ``depth(q) + 1`` and fresh ids.
        """
        try:
            cell = self.cells[q]
        except KeyError:
            raise UsageError(f"cell {q} does not exist") from None
        widths = cell.upper - cell.lower
        axis = int(np.argmax(widths))  # argmax takes the first maximum
        mid = (cell.lower[axis] + cell.upper[axis]) / 2.0
        lo1, up1 = cell.lower.copy(), cell.upper.copy()
        lo2, up2 = cell.lower.copy(), cell.upper.copy()
        up1[axis] = mid
        lo2[axis] = mid
        c1 = self.next_id
        c2 = self.next_id + 1
        self.next_id += 2
        del self.cells[q]
        self.cells[c1] = Cell(lo1, up1, cell.depth + 1)
        self.cells[c2] = Cell(lo2, up2, cell.depth + 1)
        self._arrays = None
        return c1, c2, axis

    def locate(self, x) -> int | None:
        """Id of the first cell containing ``x`` (boundaries are shared)."""
        pts = np.asarray(x, dtype=float).reshape(1, -1)
        ids, lowers, uppers = self.arrays()
        out = np.empty(1, dtype=np.int64)
        locate_points(pts, lowers, uppers, out)
        if out[0] < 0:
            return None
        return int(ids[out[0]])

    def locate_many(self, xs) -> np.ndarray:
        """Cell ids for an array of points; -1 where outside the domain."""
        pts = np.asarray(xs, dtype=float)
        ids, lowers, uppers = self.arrays()
        out = np.empty(len(pts), dtype=np.int64)
        locate_points(pts, lowers, uppers, out)
        res = np.where(out >= 0, ids[np.clip(out, 0, None)], -1)
        return res

    def to_json(self) -> str:
        return json.dumps({
            "domain_lower": self.domain_lower.tolist(),
            "domain_upper": self.domain_upper.tolist(),
            "next_id": self.next_id,
            "cells": {
                str(q): {
                    "lower": c.lower.tolist(),
                    "upper": c.upper.tolist(),
                    "depth": c.depth,
                }
                for q, c in self.cells.items()
            },
        })

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        part = cls.__new__(cls)
        part.domain_lower = np.asarray(data["domain_lower"], dtype=float)
        part.domain_upper = np.asarray(data["domain_upper"], dtype=float)
        part.next_id = data["next_id"]
        part.cells = {
            int(q): Cell(np.asarray(c["lower"]), np.asarray(c["upper"]), c["depth"])
            for q, c in data["cells"].items()
        }
        part._arrays = None
        return part


@dataclass
class AffineMode:
    """One control mode: x+ = A x + K + E d with d in a box."""

    uid: int
    A: np.ndarray
    K: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.K))
                and np.all(np.isfinite(self.E))):
            raise ConfigError("mode matrices must be finite")

    def step(self, x, d=None) -> np.ndarray:
        out = self.A @ x + self.K
        if d is not None and self.E.size:
            out = out + self.E @ d
        return out


def reach(cell_lower, cell_upper, mode: AffineMode, dist_lower=None,
          dist_upper=None):
    """Componentwise-tight interval image of a box under an affine mode.

    Splitting each matrix row into positive and negative parts gives the
    exact bounding box of ``{A x + K + E d}`` over the cell and the
    disturbance box.
    """
    cl = np.asarray(cell_lower, dtype=float)
    cu = np.asarray(cell_upper, dtype=float)
    ap = np.clip(mode.A, 0.0, None)
    an = np.clip(mode.A, None, 0.0)
    lo = ap @ cl + an @ cu + mode.K
    up = ap @ cu + an @ cl + mode.K
    if dist_lower is not None and mode.E.size:
        dl = np.asarray(dist_lower, dtype=float)
        du = np.asarray(dist_upper, dtype=float)
        ep = np.clip(mode.E, 0.0, None)
        en = np.clip(mode.E, None, 0.0)
        lo = lo + ep @ dl + en @ du
        up = up + ep @ du + en @ dl
    return lo, up


def reach_all(lowers, uppers, mode: AffineMode, dist_lower=None,
              dist_upper=None):
    """Vectorized :func:`reach` over stacked cell bounds."""
    ap = np.clip(mode.A, 0.0, None)
    an = np.clip(mode.A, None, 0.0)
    r_lo = lowers @ ap.T + uppers @ an.T + mode.K
    r_up = uppers @ ap.T + lowers @ an.T + mode.K
    if dist_lower is not None and mode.E.size:
        dl = np.asarray(dist_lower, dtype=float)
        du = np.asarray(dist_upper, dtype=float)
        ep = np.clip(mode.E, 0.0, None)
        en = np.clip(mode.E, None, 0.0)
        r_lo = r_lo + ep @ dl + en @ du
        r_up = r_up + ep @ du + en @ dl
    return r_lo, r_up


def label_cells(partition: Partition, prop_boxes: dict) -> dict[str, set[int]]:
    """A cell carries a proposition iff it is contained in the
    proposition's box (labels under-approximate, the sound direction)."""
    labels: dict[str, set[int]] = {p: set() for p in prop_boxes}
    for q, cell in partition.cells.items():
        for prop, (b_lo, b_up) in prop_boxes.items():
            if np.all(cell.lower >= b_lo) and np.all(cell.upper <= b_up):
                labels[prop].add(q)
    return labels


class AbstractModel:
    """Partition + modes + disturbance + the abstraction they induce.

    Keeps the per-(cell, mode) reach boxes cached so that refinement can
    re-target predecessor transitions without recomputing their geometry.
    """

    def __init__(self, partition: Partition, modes, dist_lower=None,
                 dist_upper=None, prop_boxes=None):
        self.partition = partition
        self.modes = {m.uid: m for m in modes}
        if dist_lower is None:
            dist_lower = np.empty(0)
            dist_upper = np.empty(0)
        self.dist_lower = np.asarray(dist_lower, dtype=float)
        self.dist_upper = np.asarray(dist_upper, dtype=float)
        self.prop_boxes = {
            p: (np.asarray(lo, dtype=float), np.asarray(up, dtype=float))
            for p, (lo, up) in (prop_boxes or {}).items()
        }
        self.sink = max(partition.cells, default=-1) + 1
        if partition.next_id <= self.sink:
            partition.next_id = self.sink + 1
        self.reach_boxes: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        self.fts = self._build_fts(self.reach_boxes)
        self.encodings: dict[str, object] = {}

    def init_encodings(self) -> None:
        """Create the log and split state encodings over the current states
        (cells in id order, then the sink); call before any refinement so
        both witness every split."""
        from .encoding import LogEncoding, SplitEncoding

        order = sorted(self.fts.states)
        self.encodings = {
            "log": LogEncoding(order),
            "split": SplitEncoding(order),
        }

    # ------------------------------------------------------------------

    def _dist_args(self):
        if self.dist_lower.size:
            return self.dist_lower, self.dist_upper
        return None, None

    def _out_of_domain(self, r_lo, r_up) -> bool:
        return bool(
            np.any(r_lo < self.partition.domain_lower)
            or np.any(r_up > self.partition.domain_upper))

    def targets_of_box(self, r_lo, r_up) -> list[int]:
        ids, lowers, uppers = self.partition.arrays()
        mask = np.empty(len(ids), dtype=bool)
        box_targets(r_lo, r_up, lowers, uppers, mask)
        return [int(i) for i in ids[mask]]

    def _build_fts(self, reach_cache: dict) -> Fts:
        part = self.partition
        fts = Fts(
            states=sorted(part.cells) + [self.sink],
            actions=sorted(self.modes),
            sink=self.sink,
        )
        dl, du = self._dist_args()
        ids, lowers, uppers = part.arrays()
        batch = []
        for uid in sorted(self.modes):
            mode = self.modes[uid]
            r_lo, r_up = reach_all(lowers, uppers, mode, dl, du)
            for row, q in enumerate(ids):
                q = int(q)
                reach_cache[(q, uid)] = (r_lo[row], r_up[row])
                for t in self.targets_of_box(r_lo[row], r_up[row]):
                    batch.append((q, uid, t))
                if self._out_of_domain(r_lo[row], r_up[row]):
                    batch.append((q, uid, self.sink))
            batch.append((self.sink, uid, self.sink))
        fts.add_transitions(sorted(batch))
        for prop, members in label_cells(part, self.prop_boxes).items():
            for q in members:
                fts.add_label(q, prop)
        return fts

    def rebuild_fts(self) -> Fts:
        """Fresh from-scratch abstraction (oracle for incremental updates)."""
        return self._build_fts({})

    # ------------------------------------------------------------------

    def sample_step(self, q: int, uid: int, rng: np.random.Generator):
        """One concrete step from a random point of cell ``q`` under mode
        ``uid`` with a disturbance sampled from the box."""
        cell = self.partition.cells[q]
        x = rng.uniform(cell.lower, cell.upper)
        d = None
        if self.dist_lower.size:
            d = rng.uniform(self.dist_lower, self.dist_upper)
        return x, d, self.modes[uid].step(x, d)


# ----------------------------------------------------------------------
# thermal benchmark family


@dataclass
class Zone:
    name: str
    kind: str  # "room" or "slab"
    c: float
    k: float = 0.0
    water_r: float | None = None
    type_tag: str = ""


@dataclass
class ThermalConfig:
    """RC network of rooms and slabs with switched water flow per slab.

    ``links`` couple two zones, or a zone with a fixed-temperature node
    ("outside"); each slab additionally couples to the supply water node
    through ``water_r`` whenever its flow is on.  ``tau`` is the forward
    Euler step.
    """

    zones: list[Zone]
    links: list[tuple[str, str, float]]
    fixed: dict[str, float]
    tau: float
    disturbance_gain: np.ndarray | None = None
    names: list[str] = field(init=False)

    def __post_init__(self):
        self.names = [z.name for z in self.zones]
        if len(set(self.names)) != len(self.names):
            raise ConfigError("duplicate zone names")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        for a, b, r in self.links:
            if r <= 0:
                raise ConfigError(f"link {a}-{b} must have positive resistance")
            for end in (a, b):
                if end not in self.names and end not in self.fixed:
                    raise ConfigError(f"link references unknown node {end!r}")
        for z in self.zones:
            if z.kind not in ("room", "slab"):
                raise ConfigError(f"zone {z.name}: unknown kind {z.kind!r}")
            if z.c <= 0:
                raise ConfigError(f"zone {z.name}: capacitance must be positive")
            if z.kind == "slab":
                if z.water_r is None or z.water_r <= 0:
                    raise ConfigError(f"slab {z.name} needs a positive water_r")
                if "water" not in self.fixed:
                    raise ConfigError("slab zones need a fixed water temperature")

    @property
    def slabs(self) -> list[Zone]:
        return [z for z in self.zones if z.kind == "slab"]


def thermal_modes(cfg: ThermalConfig) -> list[AffineMode]:
    """One affine mode per on/off combination of the slabs.

    Continuous dynamics ``c_i dT_i/dt = sum_j (T_j - T_i)/R_ij + k_i``
    (heat flows from warm to cold) discretized by forward Euler with
    step ``tau``; fixed-temperature nodes contribute to the constant
    term.  A step so large that a self-coupling coefficient turns
    negative is rejected.
    """
    n = len(cfg.zones)
    index = {z.name: i for i, z in enumerate(cfg.zones)}
    slab_ids = [index[z.name] for z in cfg.slabs]
    base_a = np.zeros((n, n))
    base_k = np.zeros(n)
    for a, b, r in cfg.links:
        for me, other in ((a, b), (b, a)):
            if me in index:
                i = index[me]
                if other in index:
                    base_a[i, index[other]] += 1.0 / r
                    base_a[i, i] -= 1.0 / r
                else:
                    base_k[i] += cfg.fixed[other] / r
                    base_a[i, i] -= 1.0 / r
    modes = []
    water = cfg.fixed.get("water", 0.0)
    for bits in range(2 ** len(slab_ids)):
        a = base_a.copy()
        k = base_k.copy()
        for pos, i in enumerate(slab_ids):
            if bits >> pos & 1:
                wr = cfg.zones[i].water_r
                a[i, i] -= 1.0 / wr
                k[i] += water / wr
        for i, z in enumerate(cfg.zones):
            k[i] += z.k
        scale = cfg.tau / np.array([z.c for z in cfg.zones])
        A = np.eye(n) + scale[:, None] * a
        K = scale * k
        if np.any(np.diag(A) < 0):
            raise ConfigError(
                "tau too large: a self-coupling coefficient became negative")
        E = np.empty((n, 0))
        if cfg.disturbance_gain is not None:
            E = scale[:, None] * cfg.disturbance_gain
        modes.append(AffineMode(bits, A, K, E))
    return modes


def fixed_couplings(cfg: ThermalConfig, uid: int) -> np.ndarray:
    """Per-zone Euler coefficient of the fixed-temperature couplings in
    mode ``uid``; each row of the mode's A plus this equals one."""
    n = len(cfg.zones)
    index = {z.name: i for i, z in enumerate(cfg.zones)}
    cond = np.zeros(n)
    for a, b, r in cfg.links:
        for me, other in ((a, b), (b, a)):
            if me in index and other not in index:
                cond[index[me]] += 1.0 / r
    for pos, z in enumerate(cfg.slabs):
        if uid >> pos & 1:
            cond[index[z.name]] += 1.0 / z.water_r
    scale = cfg.tau / np.array([z.c for z in cfg.zones])
    return scale * cond
