"""Particle configurations: occupied sites with two colors.

A :class:`Configuration` maps sites to colors.  The functions here compute
the structural quantities the dynamics and analysis rely on: connectivity,
holes, the boundary walk and its length ``p``, the edge counts ``e``, ``a``
and ``h``, and the boundary contour on the dual hexagonal lattice.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Mapping

import numpy as np

from .lattice import (
    NEIGHBOR_OFFSETS,
    DualEdge,
    DualVertex,
    Edge,
    Site,
    canonical_translate,
    neighbors,
)


class Color(IntEnum):
    C1 = 1
    C2 = 2

    def other(self) -> "Color":
        return Color.C2 if self is Color.C1 else Color.C1


class ConfigurationError(ValueError):
    """Raised when a configuration does not meet an operation's precondition."""


class Configuration:
    """A finite set of occupied sites, each carrying a :class:`Color`.

    Instances are treated as values: the mutating helpers used by the
    reference dynamics return new objects.
    """

    __slots__ = ("_occ",)

    def __init__(self, occupied: Mapping[tuple[int, int], Color | int]):
        occ = {Site(*s): Color(c) for s, c in occupied.items()}
        if not occ:
            raise ConfigurationError("a configuration needs at least one particle")
        self._occ: dict[Site, Color] = occ

    # -- container protocol -------------------------------------------------
    @property
    def occupied(self) -> dict[Site, Color]:
        return self._occ

    @property
    def n(self) -> int:
        return len(self._occ)

    def __len__(self) -> int:
        return len(self._occ)

    def __contains__(self, s: object) -> bool:
        return s in self._occ

    def __iter__(self) -> Iterator[Site]:
        return iter(self._occ)

    def __getitem__(self, s: tuple[int, int]) -> Color:
        return self._occ[Site(*s)]

    def get(self, s: tuple[int, int]) -> Color | None:
        return self._occ.get(Site(*s))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Configuration) and self._occ == other._occ

    def __hash__(self) -> int:
        return hash(frozenset(self._occ.items()))

    def __repr__(self) -> str:
        return f"Configuration(n={self.n}, c1={self.count(Color.C1)})"

    def sites(self) -> list[Site]:
        return sorted(self._occ)

    def count(self, color: Color) -> int:
        return sum(1 for c in self._occ.values() if c == color)

    def with_colors(self, colors: Mapping[tuple[int, int], Color]) -> "Configuration":
        occ = dict(self._occ)
        occ.update({Site(*s): Color(c) for s, c in colors.items()})
        return Configuration(occ)

    def moved(self, src: tuple[int, int], dst: tuple[int, int]) -> "Configuration":
        """Copy with the particle at ``src`` relocated to empty ``dst``."""
        occ = dict(self._occ)
        occ[Site(*dst)] = occ.pop(Site(*src))
        return Configuration(occ)

    def swapped(self, a: tuple[int, int], b: tuple[int, int]) -> "Configuration":
        """Copy with the particles at ``a`` and ``b`` exchanged."""
        occ = dict(self._occ)
        a, b = Site(*a), Site(*b)
        occ[a], occ[b] = occ[b], occ[a]
        return Configuration(occ)

    def canonical(self) -> "Configuration":
        """Translate so the lexicographically smallest site is the origin."""
        q0, r0 = min(self._occ)
        return Configuration({Site(q - q0, r - r0): c for (q, r), c in self._occ.items()})

    def key(self) -> tuple[tuple[int, int, int], ...]:
        """Hashable translation-invariant identity (sorted canonical triples)."""
        q0, r0 = min(self._occ)
        return tuple(sorted((q - q0, r - r0, int(c)) for (q, r), c in self._occ.items()))

    def edges(self) -> list[Edge]:
        """All configuration edges (both endpoints occupied), sorted."""
        out = []
        for s in self._occ:
            for dq, dr in NEIGHBOR_OFFSETS[:3]:
                t = Site(s.q + dq, s.r + dr)
                if t in self._occ:
                    out.append(Edge(s, t))
        return sorted(out)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "particles": [
                {"q": s.q, "r": s.r, "color": self._occ[s].name} for s in self.sites()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Mapping) -> "Configuration":
        parts = data["particles"]
        occ = {(int(p["q"]), int(p["r"])): Color[p["color"]] for p in parts}
        if len(occ) != len(parts):
            raise ConfigurationError("duplicate sites in snapshot")
        if "n" in data and int(data["n"]) != len(occ):
            raise ConfigurationError("snapshot 'n' does not match particle list")
        return cls(occ)

    @classmethod
    def from_json(cls, text: str) -> "Configuration":
        return cls.from_dict(json.loads(text))

    @classmethod
    def uniform(cls, sites: Iterable[tuple[int, int]], color: Color = Color.C1) -> "Configuration":
        return cls({s: color for s in sites})


# -- connectivity and holes ---------------------------------------------------


def _components(sites: set[Site]) -> list[set[Site]]:
    seen: set[Site] = set()
    comps = []
    for start in sorted(sites):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            s = queue.popleft()
            for t in neighbors(s):
                if t in sites and t not in comp:
                    comp.add(t)
                    queue.append(t)
        seen |= comp
        comps.append(comp)
    return comps


def is_connected(c: Configuration) -> bool:
    """True iff the occupied sites form one adjacency component."""
    return len(_components(set(c.occupied))) == 1


def _bbox(sites: Iterable[Site], pad: int) -> tuple[int, int, int, int]:
    qs = [s.q for s in sites]
    rs = [s.r for s in sites]
    return min(qs) - pad, max(qs) + pad, min(rs) - pad, max(rs) + pad


def exterior_sites(sites: Iterable[tuple[int, int]]) -> set[Site]:
    """Unoccupied sites of the padded bounding box reachable from outside it."""
    occ = {Site(*s) for s in sites}
    q0, q1, r0, r1 = _bbox(occ, 1)
    start = Site(q0, r0)
    reached = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in neighbors(s):
            if q0 <= t.q <= q1 and r0 <= t.r <= r1 and t not in occ and t not in reached:
                reached.add(t)
                queue.append(t)
    return reached


def holes(c: Configuration) -> list[set[Site]]:
    """Finite components of unoccupied sites, sorted by smallest site."""
    occ = set(c.occupied)
    outside = exterior_sites(occ)
    q0, q1, r0, r1 = _bbox(occ, 1)
    empty_inside = {
        Site(q, r)
        for q in range(q0, q1 + 1)
        for r in range(r0, r1 + 1)
        if Site(q, r) not in occ and Site(q, r) not in outside
    }
    return _components(empty_inside)


def is_hole_free(c: Configuration) -> bool:
    return not holes(c)


def require_simple(c: Configuration) -> None:
    """Raise unless ``c`` is connected and hole-free."""
    if not is_connected(c):
        raise ConfigurationError("configuration is not connected")
    if holes(c):
        raise ConfigurationError("configuration has holes")


# -- boundary walk and edges -------------------------------------------------


@dataclass(frozen=True)
class BoundaryWalk:
    """Closed walk around a configuration; ``length`` counts repeats."""

    sites: tuple[Site, ...]
    edges: tuple[Edge, ...]

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def distinct_edges(self) -> int:
        return len(set(self.edges))


def boundary_walk(c: Configuration) -> BoundaryWalk:
    """Trace the outer boundary walk, keeping the exterior on one side.

    Starts at the lexicographically smallest site, whose western neighbor is
    necessarily empty.  At each site the next step is the first occupied
    neighbor found by sweeping counterclockwise from the arrival direction,
    so edges traversed in both directions (cut edges) count twice.
    """
    require_simple(c)
    occ = c.occupied
    start = min(occ)
    back = 3  # direction pointing west, into the exterior

    def step(s: Site, back_dir: int) -> tuple[Site, int] | None:
        for k in range(1, 7):
            d = (back_dir + k) % 6
            dq, dr = NEIGHBOR_OFFSETS[d]
            t = Site(s.q + dq, s.r + dr)
            if t in occ:
                return t, d
        return None

    first = step(start, back)
    if first is None:
        return BoundaryWalk((start,), ())
    walk_sites = [start]
    walk_edges: list[Edge] = []
    s, (t, d) = start, first
    while True:
        walk_edges.append(Edge(s, t))
        walk_sites.append(t)
        s, back = t, (d + 3) % 6
        nxt = step(s, back)
        assert nxt is not None
        if s == start and nxt == first:
            break
        t, d = nxt
    return BoundaryWalk(tuple(walk_sites[:-1]), tuple(walk_edges))


def perimeter(c: Configuration) -> int:
    """Length ``p`` of the boundary walk."""
    return boundary_walk(c).length


@dataclass(frozen=True)
class EdgeStats:
    e: int
    a: int
    h: int


def edge_stats(c: Configuration) -> EdgeStats:
    """Counts of all, homogeneous and heterogeneous configuration edges."""
    occ = c.occupied
    e = h = 0
    for s, col in occ.items():
        for dq, dr in NEIGHBOR_OFFSETS[:3]:
            other = occ.get(Site(s.q + dq, s.r + dr))
            if other is not None:
                e += 1
                h += other != col
    return EdgeStats(e=e, a=e - h, h=h)


def triangle_count(sites: Iterable[tuple[int, int]]) -> int:
    """Number of triangular faces with all three corners occupied.

    Every face is anchored at one corner ``(q, r)``: upward faces are
    ``(q,r),(q+1,r),(q,r+1)`` and downward faces ``(q,r),(q,r+1),(q-1,r+1)``.
    """
    occ = {Site(*s) for s in sites}
    t = 0
    for q, r in occ:
        above = Site(q, r + 1) in occ
        if above and Site(q + 1, r) in occ:
            t += 1
        if above and Site(q - 1, r + 1) in occ:
            t += 1
    return t


def hole_count_euler(c: Configuration) -> int:
    """Hole count of a connected configuration from its Euler characteristic.

    The occupied sites, edges and full triangles form a planar complex whose
    bounded complementary regions are exactly the holes, so
    ``1 - holes = n - e + t``.
    """
    return edge_stats(c).e - c.n - triangle_count(c.occupied) + 1


# -- dual-lattice contours -----------------------------------------------------


def trace_dual_paths(edges: Iterable[DualEdge]) -> list[tuple[list[DualEdge], bool]]:
    """Split a set of dual edges of max degree 2 into paths and cycles.

    Returns ``(edges_in_order, closed)`` pairs.  Paths are traced from their
    smallest endpoint and cycles from their smallest vertex, so the output is
    deterministic.
    """
    edge_set = set(edges)
    incident: dict[DualVertex, list[DualEdge]] = {}
    for d in edge_set:
        for v in d.ends:
            incident.setdefault(v, []).append(d)
    for v, lst in incident.items():
        if len(lst) > 2:
            raise ConfigurationError(f"dual vertex {v} has degree {len(lst)}")
        lst.sort()

    used: set[DualEdge] = set()
    out: list[tuple[list[DualEdge], bool]] = []

    def follow(v: DualVertex, d: DualEdge) -> list[DualEdge]:
        path = []
        while d not in used:
            used.add(d)
            path.append(d)
            v = d.other(v)
            nxt = [x for x in incident[v] if x not in used]
            if not nxt:
                break
            d = nxt[0]
        return path

    ends = sorted(v for v, lst in incident.items() if len(lst) == 1)
    for v in ends:
        d = incident[v][0]
        if d not in used:
            out.append((follow(v, d), False))
    for v in sorted(incident):
        for d in incident[v]:
            if d not in used:
                out.append((follow(v, d), True))
    return out


def boundary_dual_edges(c: Configuration) -> list[DualEdge]:
    """Dual edges crossing occupied-to-unoccupied lattice edges."""
    occ = c.occupied
    out = []
    for s in occ:
        for t in neighbors(s):
            if t not in occ:
                out.append(DualEdge(Edge(s, t)))
    return sorted(out)


def hex_boundary_contour(c: Configuration) -> list[DualEdge]:
    """The closed dual-lattice contour surrounding all particles, in order."""
    require_simple(c)
    paths = trace_dual_paths(boundary_dual_edges(c))
    if len(paths) != 1 or not paths[0][1]:
        raise ConfigurationError("boundary contour is not a single cycle")
    return paths[0][0]


# -- generators ---------------------------------------------------------------


def occupied_arcs(occ: Mapping | set, s: tuple[int, int]) -> int:
    """Number of maximal runs of occupied sites in the 6-ring around ``s``."""
    ring = [t in occ for t in neighbors(s)]
    if all(ring):
        return 1
    return sum(1 for i in range(6) if ring[i] and not ring[i - 1])


def line_sites(n: int) -> list[Site]:
    return [Site(i, 0) for i in range(n)]


def hexagon_sites(n: int) -> list[Site]:
    """``n`` sites filled in rings around the origin (a compact blob)."""
    out = [Site(0, 0)]
    radius = 1
    while len(out) < n:
        s = Site(radius * NEIGHBOR_OFFSETS[4][0], radius * NEIGHBOR_OFFSETS[4][1])
        for side in range(6):
            d = (side + 0) % 6
            for _ in range(radius):
                out.append(s)
                s = Site(s.q + NEIGHBOR_OFFSETS[d][0], s.r + NEIGHBOR_OFFSETS[d][1])
        radius += 1
    return out[:n]


def random_blob_sites(n: int, rng: np.random.Generator, hole_free: bool = True) -> list[Site]:
    """Grow a connected site set by random additions adjacent to it.

    With ``hole_free`` each candidate that would close a loop around empty
    space (its occupied neighbors form two or more arcs) is skipped.
    """
    occ: set[Site] = {Site(0, 0)}
    order = [Site(0, 0)]
    frontier: set[Site] = set(neighbors(Site(0, 0)))
    # arc counts only change for frontier sites next to the newest particle
    arcs: dict[Site, int] = {t: 1 for t in frontier}
    while len(order) < n:
        cands = sorted(frontier)
        if hole_free:
            cands = [s for s in cands if arcs[s] == 1]
        s = cands[int(rng.integers(len(cands)))]
        occ.add(s)
        order.append(s)
        frontier.discard(s)
        del arcs[s]
        for t in neighbors(s):
            if t not in occ:
                frontier.add(t)
                arcs[t] = occupied_arcs(occ, t)
    return order


def color_sites(
    sites: list[Site], n1: int, layout: str, rng: np.random.Generator | None = None
) -> Configuration:
    """Assign ``n1`` sites color C1 and the rest C2 by the given layout.

    ``blocked`` colors the first ``n1`` sites in list order; ``alternating``
    interleaves colors while C1 particles remain; ``random`` draws a uniform
    subset of size ``n1``.
    """
    n = len(sites)
    if not 0 <= n1 <= n:
        raise ValueError("n1 must be between 0 and the number of sites")
    if layout == "blocked":
        chosen = set(range(n1))
    elif layout == "alternating":
        chosen, k = set(), 0
        for i in range(n):
            if k < n1 and (i % 2 == 0 or n - i <= n1 - k):
                chosen.add(i)
                k += 1
    elif layout == "random":
        if rng is None:
            raise ValueError("random layout needs an rng")
        chosen = set(int(i) for i in rng.choice(n, size=n1, replace=False))
    else:
        raise ValueError(f"unknown color layout {layout!r}")
    return Configuration({s: Color.C1 if i in chosen else Color.C2 for i, s in enumerate(sites)})


def canonical_shape(c: Configuration) -> frozenset[Site]:
    return canonical_translate(c.occupied)
