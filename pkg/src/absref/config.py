"""JSON system configuration: dynamics, domain, grid, propositions, spec.

Two dynamics types are supported.  ``thermal`` describes an RC network
of rooms and cooling slabs (the control input switches water flow per
slab); ``affine`` lists the mode matrices directly.  See
``configs/README.md`` for the documented schema and the shipped layout
files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import ConfigError
from .abstraction import (
    AbstractModel,
    AffineMode,
    Partition,
    ThermalConfig,
    Zone,
    thermal_modes,
)
from .synthesis import Spec


@dataclass
class SystemConfig:
    name: str
    domain_lower: np.ndarray
    domain_upper: np.ndarray
    grid: list[int]
    modes: list[AffineMode]
    prop_boxes: dict[str, tuple[np.ndarray, np.ndarray]]
    spec: Spec
    dist_lower: np.ndarray
    dist_upper: np.ndarray
    target_box: tuple[np.ndarray, np.ndarray] | None = None
    thermal: ThermalConfig | None = None
    n_split: int = 1
    min_width: float = 0.0
    raw: dict = field(default_factory=dict)


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return data[key]


def _box(data, dim: int | None, where: str):
    lo = np.asarray(_require(data, "lower", where), dtype=float)
    up = np.asarray(_require(data, "upper", where), dtype=float)
    if lo.shape != up.shape or lo.ndim != 1:
        raise ConfigError(f"{where}: lower/upper must be equal-length vectors")
    if dim is not None and len(lo) != dim:
        raise ConfigError(f"{where}: expected dimension {dim}, got {len(lo)}")
    if np.any(lo > up):
        raise ConfigError(f"{where}: lower bound exceeds upper bound")
    return lo, up


def parse_config(data: dict, name: str = "<config>") -> SystemConfig:
    dom_lo, dom_up = _box(_require(data, "domain", name), None, f"{name}.domain")
    dim = len(dom_lo)
    grid = _require(data, "grid", name)
    if len(grid) != dim:
        raise ConfigError(f"{name}.grid: expected {dim} entries")
    dyn = _require(data, "dynamics", name)
    dist_lo = np.empty(0)
    dist_up = np.empty(0)
    if "disturbance" in data and data["disturbance"]:
        dist_lo, dist_up = _box(data["disturbance"], None, f"{name}.disturbance")
    thermal = None
    dtype = _require(dyn, "type", f"{name}.dynamics")
    if dtype == "thermal":
        thermal = _parse_thermal(dyn, data, dim, dist_lo, name)
        modes = thermal_modes(thermal)
    elif dtype == "affine":
        modes = _parse_affine(dyn, dim, len(dist_lo), name)
    else:
        raise ConfigError(f"{name}.dynamics.type: unknown type {dtype!r}")
    prop_boxes = {}
    for prop, box in data.get("propositions", {}).items():
        lo, up = _box(box, dim, f"{name}.propositions.{prop}")
        if np.any(lo < dom_lo) or np.any(up > dom_up):
            raise ConfigError(
                f"{name}.propositions.{prop}: box must lie inside the domain")
        prop_boxes[prop] = (lo, up)
    spec_data = data.get("spec", {})
    spec = Spec(
        safety=spec_data.get("safety"),
        persistence=spec_data.get("persistence"),
        goals=list(spec_data.get("recurrence", [])),
    )
    for prop in [spec.safety, spec.persistence, *spec.goals]:
        if prop is not None and prop not in prop_boxes:
            raise ConfigError(f"{name}.spec references unknown proposition {prop!r}")
    target = None
    if data.get("target"):
        target = _box(data["target"], dim, f"{name}.target")
    refine_opts = data.get("refine", {})
    return SystemConfig(
        name=data.get("name", name),
        domain_lower=dom_lo,
        domain_upper=dom_up,
        grid=[int(g) for g in grid],
        modes=modes,
        prop_boxes=prop_boxes,
        spec=spec,
        dist_lower=dist_lo,
        dist_upper=dist_up,
        target_box=target,
        thermal=thermal,
        n_split=int(refine_opts.get("n_split", 1)),
        min_width=float(refine_opts.get("min_width", 0.0)),
        raw=data,
    )


def _parse_thermal(dyn, data, dim, dist_lo, name):
    zones = []
    for zd in _require(dyn, "zones", f"{name}.dynamics"):
        zones.append(Zone(
            name=_require(zd, "name", f"{name}.zones"),
            kind=_require(zd, "kind", f"{name}.zones"),
            c=float(_require(zd, "c", f"{name}.zones")),
            k=float(zd.get("k", 0.0)),
            water_r=zd.get("water_r"),
            type_tag=zd.get("type", ""),
        ))
    if len(zones) != dim:
        raise ConfigError(
            f"{name}: {len(zones)} zones but domain has dimension {dim}")
    links = [
        (l["a"], l["b"], float(l["r"]))
        for l in _require(dyn, "links", f"{name}.dynamics")
    ]
    gain = None
    if len(dist_lo):
        gain = np.asarray(
            _require(dyn, "disturbance_gain", f"{name}.dynamics"), dtype=float)
        if gain.shape != (dim, len(dist_lo)):
            raise ConfigError(
                f"{name}.dynamics.disturbance_gain: expected shape "
                f"({dim}, {len(dist_lo)})")
    tau = float(_require(data, "tau", name))
    return ThermalConfig(
        zones=zones,
        links=[(a, b, r) for a, b, r in links],
        fixed={k: float(v) for k, v in _require(dyn, "fixed", f"{name}.dynamics").items()},
        tau=tau,
        disturbance_gain=gain,
    )


def _parse_affine(dyn, dim, n_dist, name):
    modes = []
    for i, md in enumerate(_require(dyn, "modes", f"{name}.dynamics")):
        A = np.asarray(_require(md, "A", f"{name}.modes[{i}]"), dtype=float)
        K = np.asarray(_require(md, "K", f"{name}.modes[{i}]"), dtype=float)
        if A.shape != (dim, dim) or K.shape != (dim,):
            raise ConfigError(f"{name}.modes[{i}]: A must be {dim}x{dim}, K length {dim}")
        E = np.asarray(md.get("E", np.empty((dim, 0))), dtype=float)
        if E.size and E.shape != (dim, n_dist):
            raise ConfigError(
                f"{name}.modes[{i}]: E must be {dim}x{n_dist} to match the "
                "disturbance box")
        modes.append(AffineMode(md.get("id", i), A, K, E))
    if not modes:
        raise ConfigError(f"{name}.dynamics.modes: need at least one mode")
    return modes


def load_config(path) -> SystemConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data, name=str(path))


def build_model(cfg: SystemConfig) -> AbstractModel:
    """Initial uniform-grid abstraction for a configuration."""
    part = Partition(cfg.domain_lower, cfg.domain_upper, cfg.grid)
    dist = (cfg.dist_lower, cfg.dist_upper) if cfg.dist_lower.size else (None, None)
    model = AbstractModel(
        part, cfg.modes, dist[0], dist[1], prop_boxes=cfg.prop_boxes)
    model.init_encodings()
    return model
