"""Compiled inner loop of the chain on a periodic ``W x W`` grid.

Cells are indexed ``(q & mask) << log | (r & mask)`` with ``W = 1 << log``.
``grid`` holds colors (0 empty, 1 or 2), ``slot`` maps a cell to its particle
slot (-1 if empty) and ``pos`` maps slots to cells.  ``counters`` holds the
running edge count, heterogeneous edge count, accepted translations and
accepted swaps.  The random stream is consumed exactly like the reference
implementation in :mod:`sops.dynamics`: particle slot, direction, then
``q`` (redrawn while it equals 0).
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _cell(q, r, log, mask):
    return ((q & mask) << log) | (r & mask)


@numba.njit(cache=True)
def _local(grid, q, r, d, color, ring, near_l, near_lp, log, mask):
    """Occupancy mask of the joint neighborhood and the four counts
    (e, e_i at l; e', e_i' at l', excluding l)."""
    occ = 0
    e = 0
    ei = 0
    e2 = 0
    ei2 = 0
    for k in range(8):
        col = grid[_cell(q + ring[d, k, 0], r + ring[d, k, 1], log, mask)]
        if col != 0:
            occ |= 1 << k
            same = col == color
            if near_l[d, k]:
                e += 1
                if same:
                    ei += 1
            if near_lp[d, k]:
                e2 += 1
                if same:
                    ei2 += 1
    return occ, e, ei, e2, ei2


@numba.njit(cache=True)
def _recount(grid, pos, log, mask, offsets):
    """Edges, heterogeneous edges and full triangles, from scratch."""
    e = 0
    h = 0
    t = 0
    for k in range(pos.shape[0]):
        idx = pos[k]
        q = idx >> log
        r = idx & mask
        col = grid[idx]
        for d in range(3):
            other = grid[_cell(q + offsets[d, 0], r + offsets[d, 1], log, mask)]
            if other != 0:
                e += 1
                if other != col:
                    h += 1
        if grid[_cell(q, r + 1, log, mask)] != 0:
            if grid[_cell(q + 1, r, log, mask)] != 0:
                t += 1
            if grid[_cell(q - 1, r + 1, log, mask)] != 0:
                t += 1
    return e, h, t


@numba.njit(cache=True)
def _connected(grid, slot, pos, log, mask, offsets):
    n = pos.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    stack[0] = 0
    seen[0] = True
    top = 1
    count = 1
    while top > 0:
        top -= 1
        idx = pos[stack[top]]
        q = idx >> log
        r = idx & mask
        for d in range(6):
            j = slot[_cell(q + offsets[d, 0], r + offsets[d, 1], log, mask)]
            if j >= 0 and not seen[j]:
                seen[j] = True
                stack[top] = j
                top += 1
                count += 1
    return count == n


@numba.njit(cache=True)
def _flag(audit, it, kind):
    if audit[0] == 0:
        audit[1] = it
        audit[2] = kind
    audit[0] += 1


@numba.njit(cache=True)
def run_steps(grid, slot, pos, log, counters, offsets, ring, near_l, near_lp,
              allowed, lam_pow, gam_pow, rng, steps, checked, audit):
    n = pos.shape[0]
    mask = (1 << log) - 1
    for it in range(steps):
        k = rng.integers(0, n)
        d = rng.integers(0, 6)
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        idx = pos[k]
        q = idx >> log
        r = idx & mask
        ci = grid[idx]
        q2 = q + offsets[d, 0]
        r2 = r + offsets[d, 1]
        idx2 = _cell(q2, r2, log, mask)
        cj = grid[idx2]
        if cj == 0:
            occ, e, ei, e2, ei2 = _local(grid, q, r, d, ci, ring, near_l, near_lp, log, mask)
            if e == 5 or not allowed[d, occ]:
                continue
            if u < lam_pow[e2 - e + 6] * gam_pow[ei2 - ei + 12]:
                grid[idx2] = ci
                grid[idx] = 0
                slot[idx2] = k
                slot[idx] = -1
                pos[k] = idx2
                counters[0] += e2 - e
                # heterogeneous change = (e' - e_i') - (e - e_i)
                counters[1] += (e2 - ei2) - (e - ei)
                counters[2] += 1
                if checked:
                    audit[3] += 1
                    if not _connected(grid, slot, pos, log, mask, offsets):
                        _flag(audit, it, 1)
                    ee, hh, tt = _recount(grid, pos, log, mask, offsets)
                    if ee - n - tt + 1 != 0:
                        _flag(audit, it, 2)
                    if ee != counters[0] or hh != counters[1]:
                        _flag(audit, it, 5)
                    back = (d + 3) % 6
                    occ_b, eb, _a, _b, _c = _local(grid, q2, r2, back, ci, ring, near_l,
                                                   near_lp, log, mask)
                    if eb == 5 or not allowed[back, occ_b]:
                        _flag(audit, it, 4)
        else:
            ni_lp = 0  # |N_i(l') - P|
            nj_lp = 0  # |N_j(l')|
            ni_l = 0  # |N_i(l)|
            nj_l = 0  # |N_j(l) - Q|
            for dd in range(6):
                a = _cell(q2 + offsets[dd, 0], r2 + offsets[dd, 1], log, mask)
                col = grid[a]
                if col == cj:
                    nj_lp += 1
                if col == ci and a != idx:
                    ni_lp += 1
                b = _cell(q + offsets[dd, 0], r + offsets[dd, 1], log, mask)
                col = grid[b]
                if col == ci:
                    ni_l += 1
                if col == cj and b != idx2:
                    nj_l += 1
            expo = ni_lp - ni_l + nj_l - nj_lp
            if u < gam_pow[expo + 12]:
                counters[3] += 1
                if ci != cj:
                    grid[idx] = cj
                    grid[idx2] = ci
                    # homogeneous edges change by expo; total edges are fixed
                    counters[1] -= expo
                if checked:
                    audit[4] += 1
                    if grid[idx] == 0 or grid[idx2] == 0 or slot[idx] != k or slot[idx2] < 0 \
                            or pos[k] != idx or pos[slot[idx2]] != idx2:
                        _flag(audit, it, 3)
                    ee, hh, tt = _recount(grid, pos, log, mask, offsets)
                    if ee != counters[0] or hh != counters[1]:
                        _flag(audit, it, 5)


@numba.njit(cache=True)
def unwrap(pos, slot, log):
    """Planar coordinates of each slot, breadth-first from slot 0."""
    n = pos.shape[0]
    mask = (1 << log) - 1
    offsets = np.array([[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]])
    out = np.zeros((n, 2), dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    out[0, 0] = pos[0] >> log
    out[0, 1] = pos[0] & mask
    seen[0] = True
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        k = queue[head]
        head += 1
        for d in range(6):
            q = out[k, 0] + offsets[d, 0]
            r = out[k, 1] + offsets[d, 1]
            j = slot[((q & mask) << log) | (r & mask)]
            if j >= 0 and not seen[j]:
                seen[j] = True
                out[j, 0] = q
                out[j, 1] = r
                queue[tail] = j
                tail += 1
    return out
