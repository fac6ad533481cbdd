"""Independent reference computations used to freeze expected values.

Nothing here imports the package's enumeration code: cycles come from
networkx path search on an explicitly built hexagonal graph, even edge sets
from brute-force growth plus networkx degree/connectivity checks, and shape
counts from a plain set-based polyhex grower.  Run this file to regenerate
``oracle_values.json``; the tests compare the package against that file.
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import networkx as nx

OFFSETS = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
VALUES_PATH = Path(__file__).with_name("oracle_values.json")

# Fixed polyhexes (translation classes) with n cells, holes included; the only
# holed shape up to n = 6 is the 6-ring.  Source: the standard polyhex table.
FIXED_POLYHEXES = {1: 1, 2: 3, 3: 11, 4: 44, 5: 186, 6: 814}
HOLED_POLYHEXES = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0, 6: 1}


def nbrs(s):
    return [(s[0] + dq, s[1] + dr) for dq, dr in OFFSETS]


def hex_dist(a, b):
    dq, dr = a[0] - b[0], a[1] - b[1]
    return max(abs(dq), abs(dr), abs(dq + dr))


def triangular_graph(radius: int) -> nx.Graph:
    g = nx.Graph()
    sites = [(q, r) for q in range(-radius, radius + 1) for r in range(-radius, radius + 1)
             if hex_dist((q, r), (0, 0)) <= radius]
    ss = set(sites)
    for s in sites:
        for t in nbrs(s):
            if t in ss:
                g.add_edge(s, t)
    return g


def hexagonal_graph(radius: int) -> nx.Graph:
    """Faces of the triangular lattice (as corner frozensets) joined when they
    share two corners."""
    tri = triangular_graph(radius)
    faces = set()
    for a in tri:
        for b, c in itertools.combinations(tri[a], 2):
            if tri.has_edge(b, c):
                faces.add(frozenset((a, b, c)))
    g = nx.Graph()
    by_edge: dict[frozenset, list] = {}
    for f in faces:
        for pair in itertools.combinations(f, 2):
            by_edge.setdefault(frozenset(pair), []).append(f)
    for fs in by_edge.values():
        if len(fs) == 2:
            g.add_edge(*fs)
    return g


def loops_through_edge(k: int) -> int:
    """Simple cycles of length ``k`` in the hexagonal lattice through the dual
    of the edge (0,0)-(1,0)."""
    if k % 2:
        return 0
    g = hexagonal_graph(k // 2 + 3)
    a = frozenset({(0, 0), (1, 0), (0, 1)})
    b = frozenset({(0, 0), (1, 0), (1, -1)})
    g.remove_edge(a, b)
    return sum(1 for p in nx.all_simple_paths(g, a, b, cutoff=k - 1) if len(p) == k)


def even_connected_through_edge(k: int) -> int:
    """Connected edge sets of size ``k`` containing (0,0)-(1,0) whose vertices
    all have even degree, by exhaustive connected growth."""
    tri = triangular_graph(k + 1)
    norm = lambda u, v: (u, v) if u < v else (v, u)  # noqa: E731
    start = frozenset({norm((0, 0), (1, 0))})
    layer = {start}
    for _ in range(k - 1):
        nxt = set()
        for es in layer:
            touched = {x for e in es for x in e}
            for x in touched:
                for y in tri[x]:
                    e = norm(x, y)
                    if e not in es:
                        nxt.add(es | {e})
        layer = nxt
    count = 0
    for es in layer:
        h = nx.Graph(list(es))
        if all(d % 2 == 0 for _, d in h.degree()) and nx.is_connected(h):
            count += 1
    return count


def polyhexes(n: int) -> set[frozenset]:
    """All connected n-site sets up to translation (holes included)."""
    def canon(cells):
        q0 = min(cells)
        return frozenset((q - q0[0], r - q0[1]) for q, r in cells)

    shapes = {frozenset({(0, 0)})}
    for _ in range(n - 1):
        shapes = {canon(s | {t}) for s in shapes for x in s for t in nbrs(x) if t not in s}
    return shapes


def has_hole(cells) -> bool:
    qs = [c[0] for c in cells]
    rs = [c[1] for c in cells]
    box = {(q, r) for q in range(min(qs) - 1, max(qs) + 2) for r in range(min(rs) - 1, max(rs) + 2)}
    empty = box - set(cells)
    seen = {(min(qs) - 1, min(rs) - 1)}
    stack = list(seen)
    while stack:
        s = stack.pop()
        for t in nbrs(s):
            if t in empty and t not in seen:
                seen.add(t)
                stack.append(t)
    return len(seen) != len(empty)


def shapes_by_perimeter(n: int) -> dict[int, int]:
    """Hole-free shapes counted by ``3n - 3 - e`` (walk length of the boundary)."""
    out: dict[int, int] = {}
    for s in polyhexes(n):
        if has_hole(s):
            continue
        e = sum(1 for x in s for t in nbrs(x) if t in s) // 2
        p = 3 * n - 3 - e
        out[p] = out.get(p, 0) + 1
    return dict(sorted(out.items()))


def pmin_checkpoints(max_side: int) -> dict[int, int]:
    """Perimeter ``6 l`` of the hexagon with ``3l^2 + 3l + 1`` sites, from its
    side length alone."""
    return {3 * l * l + 3 * l + 1: 6 * l for l in range(1, max_side + 1)}


def fixed_values() -> dict:
    return {
        "loops": {str(k): loops_through_edge(k) for k in range(6, 17)},
        "even_sets": {str(k): even_connected_through_edge(k) for k in range(3, 8)},
        "shapes_by_perimeter": {str(n): {str(p): v for p, v in shapes_by_perimeter(n).items()}
                                for n in range(1, 8)},
        "pmin_hexagons": {str(n): p for n, p in pmin_checkpoints(57).items()},
        "sqrt_bound_note": "p <= 2*sqrt(3)*sqrt(n) checked directly",
        "fixed_polyhexes": {str(k): v for k, v in FIXED_POLYHEXES.items()},
        "holed_polyhexes": {str(k): v for k, v in HOLED_POLYHEXES.items()},
        "two_sqrt3": 2 * math.sqrt(3),
    }


if __name__ == "__main__":
    VALUES_PATH.write_text(json.dumps(fixed_values(), indent=2) + "\n")
    print(VALUES_PATH.read_text())
