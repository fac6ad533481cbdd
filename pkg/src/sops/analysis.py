"""Compression and separation measurements.

* Minimum-perimeter reference shapes: a regular hexagon of side ``l`` plus a
  partial outer layer filled one side at a time.
* Compression ratio ``p / p_min`` against that reference.
* Heterogeneous contours on the dual lattice (crossing vs isolated), faces,
  and ``(beta, delta)``-separation: a set ``R`` of particles with at most
  ``beta * sqrt(n)`` configuration edges leaving it, C1 density at least
  ``1 - delta`` inside and at most ``delta`` outside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .configuration import (
    Color,
    Configuration,
    ConfigurationError,
    boundary_walk,
    edge_stats,
    exterior_sites,
    hex_boundary_contour,
    require_simple,
    trace_dual_paths,
)
from .lattice import NEIGHBOR_OFFSETS, DualEdge, DualVertex, Edge, Site, neighbors

# -- minimum-perimeter reference ---------------------------------------------


def hexagonal_number(l: int) -> int:
    """Particles in a regular hexagon of side ``l``: ``3l^2 + 3l + 1``."""
    return 3 * l * l + 3 * l + 1


def _side_and_extra(n: int) -> tuple[int, int]:
    """``(l, k)`` with ``n = 3l^2 + 3l + 1 + k`` and ``0 <= k < 6l + 6``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    l = 0
    while hexagonal_number(l + 1) <= n:
        l += 1
    return l, n - hexagonal_number(l)


def spiral_sites(n: int) -> list[Site]:
    """Sites of the reference shape, in the order they are added.

    The first ``3l^2+3l+1`` sites form the hexagon of side ``l``.  The next
    layer (radius ``l+1``) is filled side by side, starting just after a
    corner, so the first side receives ``l`` sites and later sides ``l+1``.
    Every prefix of the list is the reference shape for its length.
    """
    out = [Site(0, 0)]
    radius = 1
    while len(out) < n:
        ring = []
        s = Site(radius * NEIGHBOR_OFFSETS[4][0], radius * NEIGHBOR_OFFSETS[4][1])
        for d in range(6):
            for _ in range(radius):
                ring.append(s)
                s = Site(s.q + NEIGHBOR_OFFSETS[d][0], s.r + NEIGHBOR_OFFSETS[d][1])
        out.extend(ring[1:] + ring[:1])
        radius += 1
    return out[:n]


def min_perimeter_config(n: int) -> Configuration:
    """The reference compact shape on ``n`` particles (all colored C1)."""
    return Configuration.uniform(spiral_sites(n))


def reference_perimeters(n_max: int) -> np.ndarray:
    """Measured perimeters of the reference shapes for ``n = 0..n_max``.

    Built incrementally: each added site contributes its occupied-neighbor
    count to ``e`` and ``p = 3n - 3 - e`` (the shapes are hole-free).
    Entry 0 is unused and set to 0.
    """
    out = np.zeros(n_max + 1, dtype=np.int64)
    occ: set[Site] = set()
    e = 0
    for n, s in enumerate(spiral_sites(n_max), start=1):
        e += sum(1 for t in neighbors(s) if t in occ)
        occ.add(s)
        out[n] = 3 * n - 3 - e
    return out


def p_min_upper(n: int) -> int:
    """Perimeter of the reference shape on ``n`` particles (measured)."""
    return int(reference_perimeters(n)[n])


def p_min_case_table(n: int) -> int:
    """The case-table perimeter of the reference shape.

    ``6l`` for a full hexagon; otherwise ``6l + i`` where the partial layer
    has started its ``i``-th side: ``(i-1)l + (i-2) < k <= il + (i-1)``.
    """
    l, k = _side_and_extra(n)
    if k == 0:
        return 6 * l
    for i in range(1, 7):
        if (i - 1) * l + (i - 2) < k <= i * l + (i - 1):
            return 6 * l + i
    raise AssertionError("k out of range")  # pragma: no cover


@dataclass(frozen=True)
class CompressionReport:
    p: int
    pmin: int
    alpha_achieved: float


def compression_report(c: Configuration) -> CompressionReport:
    """Perimeter and its ratio to the reference minimum perimeter."""
    p = boundary_walk(c).length
    pmin = p_min_upper(c.n)
    alpha = 1.0 if pmin == 0 else p / pmin
    return CompressionReport(p, pmin, alpha)


# -- contours and faces -------------------------------------------------------


@dataclass
class ContourSet:
    """Boundary contour plus heterogeneous contours, each an ordered list of
    dual edges."""

    boundary: list[DualEdge]
    crossing: list[list[DualEdge]]
    isolated: list[list[DualEdge]]

    @property
    def crossing_length(self) -> int:
        return sum(len(x) for x in self.crossing)

    @property
    def isolated_length(self) -> int:
        return sum(len(x) for x in self.isolated)


def heterogeneous_dual_edges(c: Configuration) -> list[DualEdge]:
    return [DualEdge(e) for e in c.edges() if c[e.u] != c[e.v]]


def extract_contours(c: Configuration) -> ContourSet:
    """Split the heterogeneous dual edges into crossing and isolated contours.

    Open paths end at faces that have an empty corner, i.e. on the boundary
    contour; closed cycles are isolated contours.
    """
    boundary = hex_boundary_contour(c)
    on_boundary = {v for d in boundary for v in d.ends}
    crossing, isolated = [], []
    for path, closed in trace_dual_paths(heterogeneous_dual_edges(c)):
        if closed:
            isolated.append(path)
        else:
            first, last = _path_ends(path)
            if first not in on_boundary or last not in on_boundary:
                raise ConfigurationError("open contour does not end on the boundary")
            crossing.append(path)
    return ContourSet(boundary, crossing, isolated)


def _path_ends(path: list[DualEdge]) -> tuple[DualVertex, DualVertex]:
    if len(path) == 1:
        return path[0].ends
    a0, a1 = path[0].ends
    start = a0 if a0 not in path[1].ends else a1
    b0, b1 = path[-1].ends
    end = b0 if b0 not in path[-2].ends else b1
    return start, end


def contour_vertices(cycle: list[DualEdge]) -> list[DualVertex]:
    """Vertices of a closed contour in traversal order."""
    if len(cycle) < 2:
        raise ValueError("a closed contour needs at least two edges")
    a0, a1 = cycle[0].ends
    v = a1 if a1 in cycle[1].ends else a0
    v = cycle[0].other(v)
    out = []
    for d in cycle:
        out.append(v)
        v = d.other(v)
    return out


def encloses(cycle: list[DualEdge], s: tuple[int, int]) -> bool:
    """Whether site ``s`` lies inside the closed dual contour.

    Even-odd ray casting in axial coordinates (an affine image of the plane),
    with sites scaled by 3 so face centers are integral; no site lies on a
    contour, so the test is exact.
    """
    x, y = 3 * s[0], 3 * s[1]
    pts = [v.scaled_center() for v in contour_vertices(cycle)]
    inside = False
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        if (y1 > y) != (y2 > y):
            # x-coordinate of the crossing compared without division
            lhs = (x - x1) * (y2 - y1)
            rhs = (x2 - x1) * (y - y1)
            if (lhs < rhs) == (y2 > y1):
                inside = not inside
    return inside


@dataclass
class Face:
    """A monochromatic cluster and the particles it encloses.

    ``particles`` are the cluster's own particles (clusters partition the
    configuration); ``interior`` are other particles it surrounds.  ``outer``
    is true when the cluster touches the exterior.
    """

    particles: frozenset[Site]
    color: Color
    outer: bool
    interior: frozenset[Site] = frozenset()
    parent: int | None = None


def _clusters(c: Configuration) -> list[list[Site]]:
    occ = c.occupied
    seen: set[Site] = set()
    out = []
    for s in c.sites():
        if s in seen:
            continue
        col = occ[s]
        comp, stack = [s], [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for t in neighbors(x):
                if t not in seen and occ.get(t) == col:
                    seen.add(t)
                    comp.append(t)
                    stack.append(t)
        out.append(sorted(comp))
    return out


def _enclosed(members: set[Site], candidates: Iterable[Site]) -> list[Site]:
    """Sites of ``candidates`` cut off from infinity by ``members``."""
    free = exterior_sites(members)
    qs = [s.q for s in members]
    rs = [s.r for s in members]
    q0, q1, r0, r1 = min(qs), max(qs), min(rs), max(rs)
    return [
        s for s in candidates
        if s not in members and q0 <= s.q <= q1 and r0 <= s.r <= r1 and s not in free
    ]


def faces(c: Configuration) -> list[Face]:
    """Faces ordered by their smallest site, with nesting recorded in
    ``parent`` (index of the directly enclosing face)."""
    require_simple(c)
    occ = set(c.occupied)
    outside = exterior_sites(occ)
    out: list[Face] = []
    for comp in _clusters(c):
        members = set(comp)
        touches = any(t in outside for s in comp for t in neighbors(s))
        # particles not reachable from the exterior without crossing the cluster
        interior = frozenset(_enclosed(members, occ))
        out.append(Face(frozenset(members), c[comp[0]], touches, interior))
    for i, f in enumerate(out):
        if f.outer:
            continue
        owners = [j for j, g in enumerate(out) if j != i and f.particles <= g.interior]
        # the direct parent is the enclosing face with the smallest interior
        f.parent = min(owners, key=lambda j: len(out[j].interior))
    return out


# -- separation ---------------------------------------------------------------


def _exact(x: float | int | Fraction) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass
class SeparationWitness:
    R: frozenset[Site]
    bd_int_size: int
    density_R: float
    density_out: float
    passed: bool = False
    beta: float | None = None
    delta: float | None = None

    def to_dict(self) -> dict:
        return {
            "R": [[s.q, s.r] for s in sorted(self.R)],
            "bd_int": self.bd_int_size,
            "density_R": self.density_R,
            "density_out": self.density_out,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _validate(beta, delta) -> tuple[Fraction, Fraction]:
    b, d = _exact(beta), _exact(delta)
    if not (0 < d < Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2)")
    if not b > 0:
        raise ValueError("beta must be positive")
    return b, d


def _passes(n: int, bd: int, size_r: int, c1_r: int, c1_total: int,
            beta: Fraction, delta: Fraction) -> bool:
    size_out = n - size_r
    c1_out = c1_total - c1_r
    return (
        bd * bd <= beta * beta * n
        and (size_r == 0 or c1_r >= (1 - delta) * size_r)
        and (size_out == 0 or c1_out <= delta * size_out)
    )


def separation_check(c: Configuration, R: Iterable[tuple[int, int]], beta: float,
                     delta: float) -> tuple[bool, SeparationWitness]:
    """Evaluate the three separation conditions for ``R`` exactly.

    An empty ``R`` reports ``density_R = 1`` and an ``R`` covering every
    particle reports ``density_out = 0``: the corresponding density
    condition is vacuous.
    """
    b, d = _validate(beta, delta)
    R = frozenset(Site(*s) for s in R)
    if not R <= set(c.occupied):
        raise ValueError("R must be a subset of the occupied sites")
    occ = c.occupied
    bd = sum(1 for e in c.edges() if (e.u in R) != (e.v in R))
    c1_total = c.count(Color.C1)
    c1_r = sum(1 for s in R if occ[s] == Color.C1)
    n, size_r = c.n, len(R)
    ok = _passes(n, bd, size_r, c1_r, c1_total, b, d)
    dens_r = c1_r / size_r if size_r else 1.0
    dens_out = (c1_total - c1_r) / (n - size_r) if n > size_r else 0.0
    return ok, SeparationWitness(R, bd, dens_r, dens_out, ok, float(beta), float(delta))


class _SubsetScorer:
    """Vectorized evaluation of many candidate memberships at once.

    Candidates are unions of ``units`` (disjoint particle groups); each row of
    a boolean matrix selects units.
    """

    def __init__(self, c: Configuration, units: Sequence[Sequence[Site]]):
        self.c = c
        self.units = [list(u) for u in units]
        where = {s: i for i, u in enumerate(self.units) for s in u}
        occ = c.occupied
        self.size = np.array([len(u) for u in self.units], dtype=np.int64)
        self.c1 = np.array([sum(occ[s] == Color.C1 for s in u) for u in self.units], dtype=np.int64)
        pairs: dict[tuple[int, int], int] = {}
        for e in c.edges():
            a, b = where[e.u], where[e.v]
            if a != b:
                key = (min(a, b), max(a, b))
                pairs[key] = pairs.get(key, 0) + 1
        self.pa = np.array([k[0] for k in pairs], dtype=np.int64)
        self.pb = np.array([k[1] for k in pairs], dtype=np.int64)
        self.pw = np.array(list(pairs.values()), dtype=np.int64)
        self.n = c.n
        self.c1_total = int(self.c1.sum())

    def evaluate(self, member: np.ndarray, beta: Fraction, delta: Fraction):
        """Return (pass mask, bd, size_R, c1_R) for boolean rows ``member``."""
        m = member.astype(np.int64)
        size_r = m @ self.size
        c1_r = m @ self.c1
        if self.pw.size:
            cut = member[:, self.pa] != member[:, self.pb]
            bd = cut.astype(np.int64) @ self.pw
        else:
            bd = np.zeros(member.shape[0], dtype=np.int64)
        size_out = self.n - size_r
        c1_out = self.c1_total - c1_r
        bn, bdn = beta.numerator, beta.denominator
        dn, dd = delta.numerator, delta.denominator
        ok = (bd * bd * bdn * bdn <= bn * bn * self.n)
        ok &= (size_r == 0) | (c1_r * dd >= (dd - dn) * size_r)
        ok &= (size_out == 0) | (c1_out * dd <= dn * size_out)
        return ok, bd, size_r, c1_r

    def best(self, member: np.ndarray, beta: Fraction, delta: Fraction) -> np.ndarray | None:
        """The passing row with the highest inside density, then smallest
        boundary, then smallest index."""
        ok, bd, size_r, c1_r = self.evaluate(member, beta, delta)
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            return None
        # density_R as an exact rational comparison: sort by c1_r/size_r desc
        dens = np.where(size_r[idx] > 0, c1_r[idx] / np.maximum(size_r[idx], 1), 1.0)
        order = np.lexsort((idx, bd[idx], -dens))
        return member[idx[order[0]]]

    def witness(self, row: np.ndarray, beta, delta) -> SeparationWitness:
        R = [s for i, u in enumerate(self.units) if row[i] for s in u]
        ok, w = separation_check(self.c, R, beta, delta)
        if not ok:  # pragma: no cover - the scorer and the checker must agree
            raise AssertionError("vectorized scorer disagrees with separation_check")
        return w


EXACT_SEARCH_LIMIT = 22


def separation_search_exact(c: Configuration, beta: float, delta: float,
                            chunk_bits: int = 16) -> SeparationWitness | None:
    """Decide separation by scanning all ``2^n`` subsets (``n <= 22``).

    Returns the passing subset with the highest C1 density inside, ties
    broken by smaller boundary; ``None`` when no subset passes.
    """
    if c.n > EXACT_SEARCH_LIMIT:
        raise ValueError(
            f"exhaustive search is limited to n <= {EXACT_SEARCH_LIMIT}; "
            "use separation_search_heuristic for larger configurations"
        )
    b, d = _validate(beta, delta)
    sites = c.sites()
    scorer = _SubsetScorer(c, [[s] for s in sites])
    n = c.n
    bits = np.arange(n, dtype=np.int64)
    best_row, best_key = None, None
    chunk = 1 << min(chunk_bits, n)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, start + chunk, dtype=np.int64)
        member = (masks[:, None] >> bits[None, :]) & 1 == 1
        row = scorer.best(member, b, d)
        if row is None:
            continue
        ok, w = separation_check(c, [s for s, m in zip(sites, row) if m], beta, delta)
        key = (-w.density_R, w.bd_int_size)
        if best_key is None or key < best_key:
            best_row, best_key = w, key
    return best_row


HEURISTIC_EXHAUSTIVE_UNITS = 16


def contour_parity_set(c: Configuration, bridged: Iterable[int] | None = None) -> frozenset[Site]:
    """Face-parity choice of ``R``.

    A particle in an outer face of color ``c_i`` enclosed by ``b`` of the
    selected isolated contours goes in ``R`` iff ``i + b`` is odd.  Isolated
    contours are indexed as in :func:`extract_contours`; by default all are
    selected.
    """
    cs = extract_contours(c)
    chosen = range(len(cs.isolated)) if bridged is None else bridged
    loops = [cs.isolated[j] for j in chosen]
    region = _outer_regions(c, cs)
    R = set()
    for s in c.occupied:
        i = int(region[s])
        b = sum(1 for loop in loops if encloses(loop, s))
        if (i + b) % 2 == 1:
            R.add(s)
    return frozenset(R)


def _outer_regions(c: Configuration, cs: ContourSet) -> dict[Site, Color]:
    """Color of the outer face (cut by crossing contours only) of each particle."""
    cut = {d.primal for path in cs.crossing for d in path}
    occ = c.occupied
    outside = exterior_sites(occ)
    color: dict[Site, Color] = {}
    for s in c.sites():
        if s in color:
            continue
        comp, stack = [s], [s]
        seen = {s}
        while stack:
            x = stack.pop()
            for t in neighbors(x):
                if t in occ and t not in seen and Edge(x, t) not in cut:
                    seen.add(t)
                    comp.append(t)
                    stack.append(t)
        rim = [x for x in comp if any(t in outside for t in neighbors(x))]
        face_color = occ[min(rim)] if rim else occ[s]
        for x in comp:
            color[x] = face_color
    return color


def separation_search_heuristic(c: Configuration, beta: float, delta: float,
                                max_rounds: int = 200) -> SeparationWitness | None:
    """Search for a separation witness among unions of faces.

    Candidates assign each face (monochromatic cluster) wholly in or out of
    ``R``.  With at most 16 faces every assignment is scored; otherwise a
    greedy descent starts from the face-parity set and toggles single faces
    or whole nested subtrees.  Every returned witness has been confirmed by
    :func:`separation_check`; ``None`` means no candidate passed, not that
    the configuration is unseparated.
    """
    b, d = _validate(beta, delta)
    require_simple(c)
    fs = faces(c)
    units = [sorted(f.particles) for f in fs]
    scorer = _SubsetScorer(c, units)
    m = len(units)
    start = np.array([f.color == Color.C1 for f in fs])
    if m <= HEURISTIC_EXHAUSTIVE_UNITS:
        masks = np.arange(1 << m, dtype=np.int64)
        member = (masks[:, None] >> np.arange(m)[None, :]) & 1 == 1
        row = scorer.best(member, b, d)
        return None if row is None else scorer.witness(row, beta, delta)

    # subtree toggles: a face together with every face nested inside it
    subtree = []
    for i, f in enumerate(fs):
        inside = {s for s in f.interior}
        subtree.append([j for j, g in enumerate(fs) if j == i or g.particles <= inside])

    sqrt_n = math.sqrt(c.n)

    def penalty(rows: np.ndarray) -> np.ndarray:
        _, bd, size_r, c1_r = scorer.evaluate(rows, b, d)
        size_out = c.n - size_r
        c1_out = scorer.c1_total - c1_r
        dens_r = np.where(size_r > 0, c1_r / np.maximum(size_r, 1), 1.0)
        dens_out = np.where(size_out > 0, c1_out / np.maximum(size_out, 1), 0.0)
        return (np.maximum(0.0, bd / sqrt_n - float(b))
                + 10 * np.maximum(0.0, (1 - float(d)) - dens_r)
                + 10 * np.maximum(0.0, dens_out - float(d))
                - 1e-3 * dens_r)

    seeds = [start, np.zeros(m, dtype=bool), np.ones(m, dtype=bool)]
    found: list[np.ndarray] = []
    for cur in seeds:
        cur = cur.copy()
        score = penalty(cur[None, :])[0]
        for _ in range(max_rounds):
            moves = []
            for i in range(m):
                single = cur.copy()
                single[i] = ~single[i]
                moves.append(single)
                if len(subtree[i]) > 1:
                    sub = cur.copy()
                    sub[subtree[i]] = not cur[i]
                    moves.append(sub)
            cand = np.array(moves)
            scores = penalty(cand)
            k = int(np.argmin(scores))
            if scores[k] >= score - 1e-12:
                break
            cur, score = cand[k], scores[k]
        found.append(cur)
    row = scorer.best(np.array(found), b, d)
    return None if row is None else scorer.witness(row, beta, delta)


@dataclass
class SeparationSummary:
    """Convenience bundle used by reports."""

    compression: CompressionReport
    witness: SeparationWitness | None
    h: int
    e: int
    extra: dict = field(default_factory=dict)


def summarize(c: Configuration, beta: float, delta: float) -> SeparationSummary:
    st = edge_stats(c)
    return SeparationSummary(compression_report(c), separation_search_heuristic(c, beta, delta),
                             st.h, st.e)
