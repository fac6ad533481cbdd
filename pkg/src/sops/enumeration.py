"""Brute-force oracles: exact counts and exact tiny-system chains.

* Loops through a fixed edge: simple cycles of the dual hexagonal lattice
  through the dual of that edge, each confirmed to be a minimal edge cut of a
  surrounding patch of the triangular lattice.
* Connected even edge sets through a fixed edge of the triangular lattice.
* Configurations (shapes up to translation) counted by perimeter.
* The full transition matrix of the chain for a handful of particles.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .configuration import Color, Configuration, boundary_walk, edge_stats
from .dynamics import apply_move, proposal
from .lattice import (
    NEIGHBOR_OFFSETS,
    DualEdge,
    DualVertex,
    Edge,
    Site,
    neighbors,
)

LOOP_CAP = 16
EVEN_SET_CAP = 12
TINY_CHAIN_CAP = 5
SHAPE_CAP = 10

SHAPE_CONVENTION = "translation classes; rotations and reflections are distinct"


@dataclass(frozen=True)
class OracleCount:
    kind: str
    k: int
    count: int
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "k": self.k, "count": self.count}
        out.update(self.meta)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


DEFAULT_EDGE = Edge(Site(0, 0), Site(1, 0))


# -- loops in the dual lattice ------------------------------------------------


@lru_cache(maxsize=None)
def dual_neighbors(v: DualVertex) -> tuple[DualVertex, ...]:
    return tuple(sorted(DualEdge(e).other(v) for e in v.edges()))


def _center(v: DualVertex) -> tuple[float, float]:
    q3, r3 = v.scaled_center()
    return ((q3 + 0.5 * r3) / 3.0, (r3 * math.sqrt(3) / 2) / 3.0)


def dual_cycles_through(e: Edge, k: int) -> list[list[DualVertex]]:
    """Simple cycles of length ``k`` in the hexagonal lattice containing the
    dual of ``e``; each is listed once as a vertex sequence starting with the
    dual edge's ends in sorted order."""
    u, v = DualEdge(e).ends
    cu = _center(u)
    # distance between adjacent face centers is 1/sqrt(3)
    step_len = 1 / math.sqrt(3)
    out: list[list[DualVertex]] = []
    path = [u, v]
    on_path = {u, v}

    def dfs(w: DualVertex) -> None:
        remaining = k - (len(path) - 1)  # edges still to place, incl. closing one
        for z in dual_neighbors(w):
            if z == u:
                if remaining == 1 and len(path) > 2:
                    out.append(list(path))
                continue
            if z in on_path or remaining <= 1:
                continue
            cz = _center(z)
            if math.hypot(cz[0] - cu[0], cz[1] - cu[1]) > (remaining - 1) * step_len + 1e-9:
                continue
            path.append(z)
            on_path.add(z)
            dfs(z)
            path.pop()
            on_path.remove(z)

    dfs(v)
    return out


def cycle_primal_edges(cycle: list[DualVertex]) -> list[Edge]:
    edges = []
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        shared = sorted(set(a.face) & set(b.face))
        edges.append(Edge(*shared))
    return edges


def hex_ball(center: Site, radius: int) -> set[Site]:
    out = set()
    for dq in range(-radius, radius + 1):
        for dr in range(max(-radius, -dq - radius), min(radius, -dq + radius) + 1):
            out.add(Site(center.q + dq, center.r + dr))
    return out


def is_minimal_cut(patch: set[Site], cut: Iterable[Edge]) -> bool:
    """Whether removing ``cut`` splits the connected ``patch`` into exactly two
    components with every cut edge joining the two (a bond)."""
    cut = set(cut)
    if not all(e.u in patch and e.v in patch for e in cut):
        return False
    comp: dict[Site, int] = {}
    label = 0
    for s in sorted(patch):
        if s in comp:
            continue
        comp[s] = label
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in neighbors(x):
                if y in patch and y not in comp and Edge(x, y) not in cut:
                    comp[y] = label
                    queue.append(y)
        label += 1
    return label == 2 and all(comp[e.u] != comp[e.v] for e in cut)


def enumerate_loops_through_edge(k: int, e: Edge = DEFAULT_EDGE, cap: int = LOOP_CAP
                                 ) -> list[frozenset[Edge]]:
    """Minimal cut sets of size ``k`` containing ``e`` whose duals are simple
    cycles; each is verified as a bond of a patch that contains it."""
    if k > cap:
        raise ValueError(f"k={k} exceeds the loop enumeration cap {cap}")
    if k % 2 or k < 6:
        return []
    patch = hex_ball(e.u, k // 2 + 2)
    loops = []
    for cyc in dual_cycles_through(e, k):
        cut = cycle_primal_edges(cyc)
        if len(set(cut)) != k or not is_minimal_cut(patch, cut):
            raise AssertionError(f"dual cycle {cyc} is not a minimal cut")
        loops.append(frozenset(cut))
    if len(set(loops)) != len(loops):
        raise AssertionError("duplicate loops enumerated")
    return loops


def count_loops_through_edge(k: int, e: Edge = DEFAULT_EDGE, cap: int = LOOP_CAP) -> OracleCount:
    """Number of loops (minimal cuts dual to simple hexagonal cycles) of size
    ``k`` through ``e``.  Odd ``k`` gives 0: the hexagonal lattice is
    bipartite."""
    return OracleCount("loops_through_edge", k, len(enumerate_loops_through_edge(k, e, cap)))


# -- connected even edge sets ------------------------------------------------


def is_even_edge_set(edges: Iterable[Edge]) -> bool:
    deg: dict[Site, int] = {}
    for x in edges:
        deg[x.u] = deg.get(x.u, 0) + 1
        deg[x.v] = deg.get(x.v, 0) + 1
    return all(d % 2 == 0 for d in deg.values())


def is_connected_edge_set(edges: Iterable[Edge]) -> bool:
    edges = list(edges)
    if not edges:
        return False
    adj: dict[Site, list[Site]] = {}
    for x in edges:
        adj.setdefault(x.u, []).append(x.v)
        adj.setdefault(x.v, []).append(x.u)
    start = edges[0].u
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return len(seen) == len(adj)


def _hex_distance(a: Site, b: Site) -> int:
    dq, dr = b.q - a.q, b.r - a.r
    return max(abs(dq), abs(dr), abs(dq + dr))


def enumerate_even_connected_through_edge(k: int, e: Edge = DEFAULT_EDGE,
                                          cap: int = EVEN_SET_CAP) -> list[frozenset[Edge]]:
    """Connected edge sets of size ``k`` containing ``e`` in which every
    vertex has even degree.

    Such a set has an Eulerian circuit, which can be started along ``e``
    from ``e.u``; so the sets are exactly the edge sets of closed trails of
    length ``k`` that begin with ``e.u -> e.v``.  Trails are pruned when the
    remaining length cannot return to ``e.u``.
    """
    if k > cap:
        raise ValueError(f"k={k} exceeds the even-set enumeration cap {cap}")
    if k < 3:
        return []
    home = e.u
    found: set[frozenset[Edge]] = set()
    used: list[Edge] = [e]
    used_set = {e}

    def dfs(at: Site) -> None:
        left = k - len(used)
        if left == 0:
            if at == home:
                found.add(frozenset(used_set))
            return
        for nxt in neighbors(at):
            if _hex_distance(nxt, home) > left - 1:
                continue
            x = Edge(at, nxt)
            if x in used_set:
                continue
            used.append(x)
            used_set.add(x)
            dfs(nxt)
            used.pop()
            used_set.remove(x)

    dfs(e.v)
    return sorted(found, key=lambda s: sorted(s))


def count_even_connected_through_edge(k: int, e: Edge = DEFAULT_EDGE,
                                      cap: int = EVEN_SET_CAP) -> OracleCount:
    return OracleCount("even_connected_through_edge", k,
                       len(enumerate_even_connected_through_edge(k, e, cap)))


# -- shapes by perimeter -------------------------------------------------------


def _after_origin(s: Site) -> bool:
    return s.r > 0 or (s.r == 0 and s.q >= 0)


def enumerate_shapes(n: int) -> Iterable[tuple[frozenset[Site], int, int]]:
    """Connected site sets of size ``n`` up to translation (Redelmeier's
    method), yielded as ``(sites, edges, full_triangles)``.

    Each fixed shape is generated exactly once, anchored at its
    lexicographically smallest site in ``(r, q)`` order.
    """
    if n < 1:
        return
    origin = Site(0, 0)
    cells: list[Site] = [origin]
    member = {origin}

    def gain(s: Site) -> tuple[int, int]:
        ring = [t in member for t in neighbors(s)]
        return sum(ring), sum(1 for i in range(6) if ring[i] and ring[(i + 1) % 6])

    def rec(untried: list[Site], seen: set[Site], e: int, t: int):
        if len(cells) == n:
            yield frozenset(cells), e, t
            return
        untried = list(untried)
        while untried:
            s = untried.pop()
            de, dt = gain(s)
            new = [x for x in neighbors(s) if _after_origin(x) and x not in seen]
            cells.append(s)
            member.add(s)
            yield from rec(untried + new, seen | set(new), e + de, t + dt)
            cells.pop()
            member.remove(s)

    first = [x for x in neighbors(origin) if _after_origin(x)]
    yield from rec(first, {origin, *first}, 0, 0)


def count_configs_with_perimeter(n: int, cap: int = SHAPE_CAP) -> dict[int, int]:
    """Connected hole-free shapes of ``n`` particles by perimeter ``p``.

    Holes are detected with the Euler relation ``holes = e - n - t + 1``;
    the perimeter of a hole-free shape is ``3n - 3 - e``.
    """
    if n > cap:
        raise ValueError(f"n={n} exceeds the shape enumeration cap {cap}")
    out: dict[int, int] = {}
    for _, e, t in enumerate_shapes(n):
        if e - n - t + 1 == 0:
            p = 3 * n - 3 - e
            out[p] = out.get(p, 0) + 1
    return dict(sorted(out.items()))


# -- tiny chains ----------------------------------------------------------------


@dataclass
class TinyChainModel:
    """Exact transition structure of the chain on all states of a tiny system.

    ``kernel`` maps state index pairs to transition probabilities (exact
    ``Fraction`` values when the parameters are rational).  ``pi_closed_form``
    is proportional to ``(lam*gamma)**(-p) * gamma**(-h)``.
    """

    n1: int
    n2: int
    lam: Fraction | float
    gamma: Fraction | float
    states: list[Configuration]
    kernel: dict[tuple[int, int], Fraction | float]
    weights: list[Fraction | float]
    perimeters: list[int]
    hetero: list[int]

    @property
    def size(self) -> int:
        return len(self.states)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.size, self.size))
        for (i, j), v in self.kernel.items():
            m[i, j] = float(v)
        return m

    @property
    def pi_closed_form(self) -> np.ndarray:
        w = np.array([float(x) for x in self.weights])
        return w / w.sum()

    def stationary_vector(self) -> np.ndarray:
        """Left null vector of ``M - I`` normalized to sum 1 (least squares)."""
        m = self.matrix()
        a = np.vstack([(m - np.eye(self.size)).T, np.ones(self.size)])
        b = np.zeros(self.size + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return pi

    def row_sums(self) -> list:
        sums = [0] * self.size
        for (i, _), v in self.kernel.items():
            sums[i] += v
        return sums

    def detailed_balance_error(self):
        """Max of ``|w(s) M(s,t) - w(t) M(t,s)| / Z`` over pairs (exact when
        rational)."""
        z = sum(self.weights)
        worst = 0
        for (i, j), v in self.kernel.items():
            back = self.kernel.get((j, i), 0)
            diff = abs(self.weights[i] * v - self.weights[j] * back) / z
            worst = max(worst, diff)
        return worst

    def is_irreducible(self) -> bool:
        adj: dict[int, list[int]] = {}
        radj: dict[int, list[int]] = {}
        for (i, j), v in self.kernel.items():
            if v > 0 and i != j:
                adj.setdefault(i, []).append(j)
                radj.setdefault(j, []).append(i)

        def reach(graph) -> int:
            seen = {0}
            stack = [0]
            while stack:
                x = stack.pop()
                for y in graph.get(x, []):
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            return len(seen)

        return reach(adj) == self.size and reach(radj) == self.size


def tiny_states(n1: int, n2: int) -> list[Configuration]:
    """All connected hole-free colored configurations up to translation,
    sorted by their canonical key."""
    n = n1 + n2
    out = []
    for shape, e, t in enumerate_shapes(n):
        if e - n - t + 1 != 0:
            continue
        sites = sorted(shape)
        for chosen in itertools.combinations(range(n), n1):
            cs = set(chosen)
            out.append(Configuration({s: Color.C1 if i in cs else Color.C2
                                      for i, s in enumerate(sites)}).canonical())
    out.sort(key=lambda c: c.key())
    return out


def enumerate_tiny_chain(n1: int, n2: int, lam, gamma) -> TinyChainModel:
    """Build the exact kernel from the reference move rule.

    Every state contributes ``1/n * 1/6 * min(1, threshold)`` for each
    (particle, direction) proposal; the rest of the row is the self-loop.
    Rational ``lam``/``gamma`` (ints or Fractions) give exact arithmetic.
    """
    n = n1 + n2
    if n > TINY_CHAIN_CAP or n1 < 0 or n2 < 0 or n < 1:
        raise ValueError(f"tiny chains need 1 <= n1 + n2 <= {TINY_CHAIN_CAP}")
    exact = all(isinstance(x, (int, Fraction)) for x in (lam, gamma))
    if exact:
        lam, gamma = Fraction(lam), Fraction(gamma)
    one = Fraction(1) if exact else 1.0
    states = tiny_states(n1, n2)
    index = {c.key(): i for i, c in enumerate(states)}
    kernel: dict[tuple[int, int], Fraction | float] = {}
    base = one / (6 * n)
    for i, c in enumerate(states):
        stay = one
        for s in c.sites():
            for d in range(6):
                m = proposal(c, s, d, lam, gamma)
                if m.threshold is None:
                    continue
                p = base * min(one, m.threshold)
                j = index.get(apply_move(c, m).key())
                if j is None:
                    raise AssertionError("a move left the enumerated state space")
                if j == i:
                    continue
                kernel[(i, j)] = kernel.get((i, j), 0) + p
                stay -= p
        kernel[(i, i)] = stay
    perims = [boundary_walk(c).length for c in states]
    hets = [edge_stats(c).h for c in states]
    weights = [(lam * gamma) ** (-p) * gamma ** (-h) for p, h in zip(perims, hets)]
    return TinyChainModel(n1, n2, lam, gamma, states, kernel, weights, perims, hets)
