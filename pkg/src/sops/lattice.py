"""Triangular-lattice geometry and its dual hexagonal lattice.

Sites use integer axial coordinates ``(q, r)``.  In the plane a site sits at
``(q + r/2, r*sqrt(3)/2)``, so the six unit neighbor offsets, listed starting
east and turning counterclockwise, are::

    (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)

Every triangular face of the lattice is a vertex of the dual hexagonal
lattice; it is identified by the sorted triple of its corner sites.  Every
lattice edge is crossed by exactly one dual edge, whose endpoints are the two
faces flanking it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple


class Site(NamedTuple):
    """A node of the triangular lattice in axial coordinates."""

    q: int
    r: int


#: Neighbor offsets, east first, counterclockwise.
NEIGHBOR_OFFSETS: tuple[tuple[int, int], ...] = (
    (1, 0),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (0, -1),
    (1, -1),
)

_OFFSET_INDEX = {off: i for i, off in enumerate(NEIGHBOR_OFFSETS)}


def neighbors(s: tuple[int, int]) -> list[Site]:
    """The six neighbors of ``s`` in the fixed offset order."""
    q, r = s
    return [Site(q + dq, r + dr) for dq, dr in NEIGHBOR_OFFSETS]


def neighbor(s: tuple[int, int], direction: int) -> Site:
    """The neighbor of ``s`` in direction ``direction`` (0..5)."""
    dq, dr = NEIGHBOR_OFFSETS[direction]
    return Site(s[0] + dq, s[1] + dr)


def direction_between(a: tuple[int, int], b: tuple[int, int]) -> int:
    """Index of the offset taking ``a`` to ``b``; raises if not adjacent."""
    try:
        return _OFFSET_INDEX[(b[0] - a[0], b[1] - a[1])]
    except KeyError:
        raise ValueError(f"{a} and {b} are not adjacent") from None


def are_adjacent(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return (b[0] - a[0], b[1] - a[1]) in _OFFSET_INDEX


def common_neighbors(a: tuple[int, int], b: tuple[int, int]) -> list[Site]:
    """Sites adjacent to both ``a`` and ``b``."""
    nb = set(neighbors(b))
    return [s for s in neighbors(a) if s in nb]


def to_cartesian(s: tuple[int, int]) -> tuple[float, float]:
    """Planar position of a site (unit edge length)."""
    q, r = s
    return (q + 0.5 * r, r * 0.8660254037844386)


@dataclass(frozen=True, order=True)
class Edge:
    """An unordered pair of adjacent sites, stored in lexicographic order."""

    u: Site
    v: Site

    def __post_init__(self) -> None:
        if not are_adjacent(self.u, self.v):
            raise ValueError(f"{self.u} and {self.v} are not adjacent")
        if self.v < self.u:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)

    @classmethod
    def of(cls, a: tuple[int, int], b: tuple[int, int]) -> "Edge":
        return cls(Site(*a), Site(*b))

    @property
    def endpoints(self) -> tuple[Site, Site]:
        return (self.u, self.v)


@dataclass(frozen=True, order=True)
class DualVertex:
    """A triangular face, identified by its sorted corner sites."""

    face: tuple[Site, Site, Site]

    @classmethod
    def of(cls, a: tuple[int, int], b: tuple[int, int], c: tuple[int, int]) -> "DualVertex":
        corners = tuple(sorted((Site(*a), Site(*b), Site(*c))))
        x, y, z = corners
        if not (are_adjacent(x, y) and are_adjacent(y, z) and are_adjacent(x, z)):
            raise ValueError(f"{corners} is not a triangular face")
        return cls(corners)  # type: ignore[arg-type]

    def edges(self) -> list[Edge]:
        """The three primal edges bounding this face."""
        a, b, c = self.face
        return [Edge(a, b), Edge(a, c), Edge(b, c)]

    def incident(self) -> list["DualEdge"]:
        """The three dual edges meeting at this vertex."""
        return [dual_of(e) for e in self.edges()]

    def scaled_center(self) -> tuple[int, int]:
        """Three times the face centroid, in axial coordinates (exact)."""
        return (sum(s.q for s in self.face), sum(s.r for s in self.face))


@dataclass(frozen=True, order=True)
class DualEdge:
    """The hexagonal-lattice edge crossing a given triangular-lattice edge."""

    primal: Edge

    @cached_property
    def ends(self) -> tuple[DualVertex, DualVertex]:
        """The two faces flanking the primal edge, in sorted order."""
        u, v = self.primal.u, self.primal.v
        x, y = common_neighbors(u, v)
        # corners are mutually adjacent by construction
        f1 = DualVertex(tuple(sorted((u, v, x))))  # type: ignore[arg-type]
        f2 = DualVertex(tuple(sorted((u, v, y))))  # type: ignore[arg-type]
        return (f1, f2) if f1 <= f2 else (f2, f1)

    def other(self, end: DualVertex) -> DualVertex:
        a, b = self.ends
        if end == a:
            return b
        if end == b:
            return a
        raise ValueError(f"{end} is not an end of {self}")


def dual_of(e: Edge) -> DualEdge:
    return DualEdge(e)


def primal_of(d: DualEdge) -> Edge:
    return d.primal


def dual_edge_between(a: DualVertex, b: DualVertex) -> DualEdge:
    """The dual edge joining two adjacent faces (they share a primal edge)."""
    shared = set(a.face) & set(b.face)
    if len(shared) != 2 or a == b:
        raise ValueError(f"{a} and {b} are not adjacent faces")
    u, v = sorted(shared)
    return DualEdge(Edge(u, v))


def faces_around(s: tuple[int, int]) -> list[DualVertex]:
    """The six triangular faces having ``s`` as a corner, counterclockwise."""
    nb = neighbors(s)
    return [DualVertex.of(s, nb[i], nb[(i + 1) % 6]) for i in range(6)]


def canonical_translate(sites: Iterable[tuple[int, int]]) -> frozenset[Site]:
    """Translate so the lexicographically smallest site becomes ``(0, 0)``."""
    pts = [Site(*s) for s in sites]
    if not pts:
        raise ValueError("cannot canonicalize an empty site set")
    q0, r0 = min(pts)
    return frozenset(Site(q - q0, r - r0) for q, r in pts)
