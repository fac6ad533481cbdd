import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sops.configuration import (
    Color,
    Configuration,
    ConfigurationError,
    boundary_dual_edges,
    boundary_walk,
    color_sites,
    edge_stats,
    exterior_sites,
    hex_boundary_contour,
    hexagon_sites,
    hole_count_euler,
    holes,
    is_connected,
    is_hole_free,
    line_sites,
    occupied_arcs,
    perimeter,
    random_blob_sites,
    trace_dual_paths,
    triangle_count,
)
from sops.lattice import Site, neighbors

HEXAGON7 = [(0, 0)] + neighbors((0, 0))
TRIANGLE = [(0, 0), (1, 0), (0, 1)]


def blob(n, seed, n1=None, layout="random"):
    rng = np.random.default_rng(seed)
    sites = random_blob_sites(n, rng)
    return color_sites(sites, n // 2 if n1 is None else n1, layout, rng)


# -- value type ----------------------------------------------------------------


def test_empty_configuration_rejected():
    with pytest.raises(ConfigurationError):
        Configuration({})


def test_json_round_trip_and_schema():
    c = blob(30, 1)
    d = json.loads(c.to_json())
    assert d["n"] == 30 and set(d["particles"][0]) == {"q", "r", "color"}
    assert {p["color"] for p in d["particles"]} == {"C1", "C2"}
    assert Configuration.from_json(c.to_json()) == c


def test_from_dict_rejects_duplicates_and_wrong_n():
    dup = {"n": 2, "particles": [{"q": 0, "r": 0, "color": "C1"}] * 2}
    with pytest.raises(ConfigurationError):
        Configuration.from_dict(dup)
    bad = {"n": 3, "particles": [{"q": 0, "r": 0, "color": "C1"}]}
    with pytest.raises(ConfigurationError):
        Configuration.from_dict(bad)


def test_moves_return_new_values():
    c = Configuration({(0, 0): 1, (1, 0): 2})
    assert c.swapped((0, 0), (1, 0))[(0, 0)] == Color.C2
    assert (0, 0) in c and c[(0, 0)] == Color.C1
    m = c.moved((1, 0), (0, 1))
    assert set(m.sites()) == {(0, 0), (0, 1)}


def test_canonical_key_is_translation_invariant():
    c = blob(20, 3)
    shifted = Configuration({Site(s.q + 3, s.r - 7): col for s, col in c.occupied.items()})
    assert shifted.key() == c.key()
    assert shifted.canonical() == c.canonical()


def test_color_layouts():
    sites = line_sites(7)
    assert [int(x) for x in color_sites(sites, 3, "blocked").occupied.values()] == [1, 1, 1, 2, 2, 2, 2]
    alt = color_sites(sites, 3, "alternating")
    assert [int(alt[s]) for s in sites] == [1, 2, 1, 2, 1, 2, 2]
    rnd = color_sites(sites, 3, "random", np.random.default_rng(0))
    assert rnd.count(Color.C1) == 3
    with pytest.raises(ValueError):
        color_sites(sites, 8, "blocked")
    with pytest.raises(ValueError):
        color_sites(sites, 3, "random")


# -- connectivity and holes ---------------------------------------------------


def test_connectivity_examples():
    assert is_connected(Configuration.uniform([(0, 0)]))
    assert not is_connected(Configuration.uniform([(0, 0), (2, 0)]))


def test_grown_blobs_are_connected_and_hole_free():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        c = Configuration.uniform(random_blob_sites(n, rng))
        assert is_connected(c)
        assert is_hole_free(c)


def test_ring_has_one_hole_and_hexagon_none():
    ring = Configuration.uniform(neighbors((0, 0)))
    hs = holes(ring)
    assert hs == [{(0, 0)}]
    assert hole_count_euler(ring) == 1
    assert holes(Configuration.uniform(HEXAGON7)) == []


def test_large_blob_with_interior_site_removed_has_one_hole():
    rng = np.random.default_rng(11)
    sites = random_blob_sites(500, rng)
    occ = set(sites)
    inner = next(s for s in sites if all(t in occ and all(u in occ for u in neighbors(t))
                                         for t in neighbors(s)))
    c = Configuration.uniform(occ - {inner})
    assert holes(c) == [{inner}]
    assert hole_count_euler(c) == 1


def test_unconstrained_growth_can_make_holes():
    rng = np.random.default_rng(0)
    seen_hole = False
    for _ in range(300):
        c = Configuration.uniform(random_blob_sites(40, rng, hole_free=False))
        assert is_connected(c)
        assert hole_count_euler(c) == len(holes(c))
        seen_hole |= not is_hole_free(c)
    assert seen_hole


def test_exterior_excludes_holes():
    ring = neighbors((0, 0))
    assert (0, 0) not in exterior_sites(ring)
    assert (2, 0) in exterior_sites(ring)  # the padded bounding box is searched


def test_occupied_arcs():
    assert occupied_arcs(set(), (0, 0)) == 0
    assert occupied_arcs({(1, 0), (0, 1)}, (0, 0)) == 1
    assert occupied_arcs({(1, 0), (-1, 0)}, (0, 0)) == 2
    assert occupied_arcs(set(neighbors((0, 0))), (0, 0)) == 1


# -- boundary walk, edge counts, dual contour --------------------------------


@pytest.mark.parametrize("sites,length", [
    ([(0, 0)], 0),
    ([(0, 0), (1, 0)], 2),
    (TRIANGLE, 3),
    (HEXAGON7, 6),
    (line_sites(5), 8),
])
def test_boundary_walk_lengths(sites, length):
    assert boundary_walk(Configuration.uniform(sites)).length == length


def test_walk_counts_cut_edges_twice():
    c = Configuration.uniform(TRIANGLE + [(2, 0)])  # (2,0) hangs off by one edge
    w = boundary_walk(c)
    assert w.length == 5 and w.distinct_edges == 4


def test_boundary_walk_rejects_holes_and_disconnection():
    with pytest.raises(ConfigurationError):
        boundary_walk(Configuration.uniform(neighbors((0, 0))))
    with pytest.raises(ConfigurationError):
        boundary_walk(Configuration.uniform([(0, 0), (3, 0)]))


def test_edge_stats_examples():
    s = edge_stats(Configuration({(0, 0): 1, (1, 0): 1}))
    assert (s.e, s.a, s.h) == (1, 1, 0)
    s = edge_stats(Configuration({(0, 0): 1, (1, 0): 2}))
    assert (s.e, s.a, s.h) == (1, 0, 1)
    hexc = Configuration({s: (Color.C2 if s == (0, 0) else Color.C1) for s in HEXAGON7})
    s = edge_stats(hexc)
    assert (s.e, s.h, s.a) == (12, 6, 6)


@pytest.mark.parametrize("sites,length", [([(0, 0)], 6), (TRIANGLE, 12), (HEXAGON7, 18)])
def test_hex_boundary_contour_lengths(sites, length):
    contour = hex_boundary_contour(Configuration.uniform(sites))
    assert len(contour) == length
    # consecutive dual edges share a face: the contour is a closed walk
    for a, b in zip(contour, contour[1:] + contour[:1]):
        assert set(a.ends) & set(b.ends)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 120), st.integers(0, 2**32 - 1))
def test_perimeter_identities(n, seed):
    c = blob(n, seed)
    p = perimeter(c)
    e = edge_stats(c).e
    assert e == 3 * n - p - 3
    assert len(hex_boundary_contour(c)) == 2 * p + 6
    assert len(boundary_dual_edges(c)) == 2 * p + 6
    assert triangle_count(c.occupied) == e - n + 1  # Euler, hole-free


def test_trace_dual_paths_splits_disjoint_cycles():
    # a ring's outer and inner boundaries are two disjoint dual cycles
    ring = Configuration.uniform(neighbors((0, 0)))
    paths = trace_dual_paths(boundary_dual_edges(ring))
    assert all(closed for _, closed in paths)
    assert sorted(len(p) for p, _ in paths) == [6, 18]


def test_trace_dual_paths_open_path():
    c = Configuration({(0, 0): 1, (1, 0): 2})
    from sops.analysis import heterogeneous_dual_edges
    paths = trace_dual_paths(heterogeneous_dual_edges(c))
    assert len(paths) == 1 and paths[0][1] is False and len(paths[0][0]) == 1


def test_hexagon_sites_fill_rings():
    assert set(hexagon_sites(7)) == set(HEXAGON7)
    assert len(set(hexagon_sites(50))) == 50
    assert is_hole_free(Configuration.uniform(hexagon_sites(50)))
