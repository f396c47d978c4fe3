"""Hot numeric kernels: predecessor sweeps over transition arrays and
box geometry scans.

Each kernel has a numba ``@njit`` implementation and a pure-numpy
fallback.  The fallback is selected when the environment variable
``ABSREF_NO_NUMBA`` is set to a non-empty value, or when numba is not
importable.  ``benchmarks/kernel_bench.py`` compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = not os.environ.get("ABSREF_NO_NUMBA")
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

__all__ = [
    "NUMBA_ENABLED",
    "pre_groups",
    "box_targets",
    "locate_points",
    "pre_groups_numpy",
    "box_targets_numpy",
    "locate_points_numpy",
]


# ----------------------------------------------------------------------
# predecessor sweep over (q, u) groups
#
# Transitions are grouped by (q, u): rows gstart[g]:gstart[g+1] of qp
# hold the successors of group g, gq/gu its state and action.  Groups
# with the same state are contiguous.  Aggregation semantics:
#   succ_forall: a group is good iff all successors are in X, else iff any.
#   act_forall: a state is good iff all its groups are good, else iff any.
# strict_u additionally ranges the action quantifier over the full action
# set: a state missing actions vacuously wins under (exists, forall) and
# loses under (forall, exists).  init_val seeds states with no groups.


def _pre_groups_impl(gq, gstart, qp, x, out, act_forall, succ_forall,
                     strict_u, n_actions):
    n_groups = gq.shape[0]
    g = 0
    while g < n_groups:
        q = gq[g]
        ok = act_forall
        cnt = 0
        while g < n_groups and gq[g] == q:
            s = gstart[g]
            e = gstart[g + 1]
            if succ_forall:
                grp_ok = True
                for r in range(s, e):
                    if not x[qp[r]]:
                        grp_ok = False
                        break
            else:
                grp_ok = False
                for r in range(s, e):
                    if x[qp[r]]:
                        grp_ok = True
                        break
            if act_forall:
                ok = ok and grp_ok
            else:
                ok = ok or grp_ok
            cnt += 1
            g += 1
        if strict_u and cnt < n_actions:
            if act_forall and not succ_forall:
                ok = False
            elif (not act_forall) and succ_forall:
                ok = True
        out[q] = ok
    return out


def pre_groups_numpy(gq, gstart, qp, x, out, act_forall, succ_forall,
                     strict_u, n_actions):
    """Vectorized fallback; same contract as the jitted kernel."""
    n_groups = gq.shape[0]
    if n_groups == 0:
        return out
    hits = x[qp].astype(np.int64)
    sums = np.add.reduceat(hits, gstart[:-1])
    sizes = np.diff(gstart)
    grp_ok = (sums == sizes) if succ_forall else (sums > 0)
    state_start = np.flatnonzero(np.r_[True, gq[1:] != gq[:-1]])
    q_ids = gq[state_start]
    cnts = np.diff(np.r_[state_start, n_groups])
    flat = grp_ok.astype(np.int8)
    if act_forall:
        ok = np.minimum.reduceat(flat, state_start) > 0
    else:
        ok = np.maximum.reduceat(flat, state_start) > 0
    if strict_u:
        missing = cnts < n_actions
        if act_forall and not succ_forall:
            ok = ok & ~missing
        elif (not act_forall) and succ_forall:
            ok = ok | missing
    out[q_ids] = ok
    return out


# ----------------------------------------------------------------------
# closed-box intersection of one reach box against all cells


def _box_targets_impl(r_lo, r_up, lowers, uppers, out):
    n, d = lowers.shape
    for i in range(n):
        hit = True
        for j in range(d):
            if lowers[i, j] > r_up[j] or uppers[i, j] < r_lo[j]:
                hit = False
                break
        out[i] = hit
    return out


def box_targets_numpy(r_lo, r_up, lowers, uppers, out):
    np.logical_and.reduce((lowers <= r_up) & (uppers >= r_lo), axis=1, out=out)
    return out


# ----------------------------------------------------------------------
# point location: index of the first cell containing each point


def _locate_points_impl(points, lowers, uppers, out):
    m, d = points.shape
    n = lowers.shape[0]
    for p in range(m):
        out[p] = -1
        for i in range(n):
            inside = True
            for j in range(d):
                if points[p, j] < lowers[i, j] or points[p, j] > uppers[i, j]:
                    inside = False
                    break
            if inside:
                out[p] = i
                break
    return out


def locate_points_numpy(points, lowers, uppers, out):
    m = points.shape[0]
    # chunked to bound the m x n containment matrix
    chunk = max(1, 2_000_000 // max(len(lowers), 1))
    for s in range(0, m, chunk):
        pts = points[s:s + chunk]
        inside = np.logical_and.reduce(
            (pts[:, None, :] >= lowers[None, :, :])
            & (pts[:, None, :] <= uppers[None, :, :]),
            axis=2,
        )
        any_hit = inside.any(axis=1)
        first = inside.argmax(axis=1)
        out[s:s + chunk] = np.where(any_hit, first, -1)
    return out


if NUMBA_ENABLED:
    pre_groups = njit(cache=True)(_pre_groups_impl)
    box_targets = njit(cache=True)(_box_targets_impl)
    locate_points = njit(cache=True)(_locate_points_impl)
else:  # pragma: no cover - exercised via ABSREF_NO_NUMBA test env
    pre_groups = pre_groups_numpy
    box_targets = box_targets_numpy
    locate_points = locate_points_numpy
