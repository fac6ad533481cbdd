import itertools

import networkx as nx
import numpy as np
import pytest

from sops.configuration import (
    Color,
    Configuration,
    ConfigurationError,
    color_sites,
    edge_stats,
    holes,
    is_connected,
    line_sites,
    perimeter,
    random_blob_sites,
)
from sops.dynamics import (
    RNG_ALGORITHM,
    InitialRecipe,
    ReferenceChain,
    SimParams,
    TorusState,
    advance,
    geometric_schedule,
    joint_neighborhood,
    kernel_tables,
    make_rngs,
    property1,
    property2,
    proposal,
    run,
    step,
)
from sops.lattice import Site, are_adjacent, neighbor, neighbors

ORIGIN = Site(0, 0)


# -- local properties, against an independent reachability oracle ------------


def _oracle(occupied: set, l: Site, lp: Site) -> tuple[bool, bool]:
    g = nx.Graph()
    g.add_nodes_from(occupied)
    g.add_edges_from((a, b) for a, b in itertools.combinations(occupied, 2) if are_adjacent(a, b))
    shared = {s for s in occupied if are_adjacent(s, l) and are_adjacent(s, lp)}
    p1 = len(shared) in (1, 2) and all(len(set(comp) & shared) == 1
                                       for comp in nx.connected_components(g))
    around_l = {s for s in occupied if are_adjacent(s, l)}
    around_lp = {s for s in occupied if are_adjacent(s, lp)}
    p2 = (not shared and bool(around_l) and bool(around_lp)
          and nx.is_connected(g.subgraph(around_l)) and nx.is_connected(g.subgraph(around_lp)))
    return p1, p2


@pytest.mark.parametrize("d", range(6))
def test_property_tables_match_reachability_oracle(d):
    lp = neighbor(ORIGIN, d)
    joint = joint_neighborhood(ORIGIN, lp)
    assert len(joint) == 8 and ORIGIN not in joint and lp not in joint
    allowed = kernel_tables()["allowed"]
    for mask in range(256):
        occ = {s for k, s in enumerate(joint) if mask >> k & 1}
        c = Configuration.uniform(occ | {ORIGIN})
        p1, p2 = _oracle(occ, ORIGIN, lp)
        assert property1(c, ORIGIN, lp) == p1
        assert property2(c, ORIGIN, lp) == p2
        assert bool(allowed[d, mask]) == (p1 or p2)
        assert not (p1 and p2)


def test_property_examples():
    lp = Site(0, 1)
    # one particle adjacent to both locations and nothing else
    c = Configuration.uniform([ORIGIN, (1, 0)])
    assert property1(c, ORIGIN, lp) and not property2(c, ORIGIN, lp)
    # no shared neighbor: property 1 fails
    c = Configuration.uniform([ORIGIN, (0, -1), (0, 2)])
    assert not property1(c, ORIGIN, lp)
    assert property2(c, ORIGIN, lp)
    # both shared sites occupied, each in its own component: each particle
    # reaches exactly one shared particle, so the move is allowed
    c = Configuration.uniform([ORIGIN, (1, 0), (-1, 1)])
    assert property1(c, ORIGIN, lp)
    # property 2 needs a neighbor of l' other than l
    c = Configuration.uniform([ORIGIN, (0, -1)])
    assert not property2(c, ORIGIN, lp)
    # property 2 fails whenever a shared neighbor exists
    c = Configuration.uniform([ORIGIN, (1, 0), (0, -1)])
    assert not property2(c, ORIGIN, lp)


def test_property_preconditions():
    c = Configuration.uniform([ORIGIN, (1, 0)])
    with pytest.raises(ConfigurationError):
        property1(c, ORIGIN, (1, 0))  # target occupied
    with pytest.raises(ConfigurationError):
        property1(c, (5, 5), (5, 6))  # source empty
    with pytest.raises(ConfigurationError):
        property2(c, ORIGIN, (2, 0))  # not adjacent


# -- proposals -----------------------------------------------------------------


def test_translation_with_unchanged_counts_has_threshold_one():
    c = Configuration.uniform([ORIGIN, (1, 0)])
    m = proposal(c, ORIGIN, 1, 4.0, 4.0)
    assert m.kind == "translate" and m.exponents == (0, 0) and m.threshold == 1


def test_swap_with_unchanged_neighborhoods_has_threshold_one():
    c = Configuration({ORIGIN: Color.C1, (1, 0): Color.C2})
    m = proposal(c, ORIGIN, 0, 4.0, 4.0)
    assert m.kind == "swap" and m.exponents == (0, 0) and m.threshold == 1


def test_five_neighbor_particle_never_translates():
    ring = neighbors(ORIGIN)
    c = Configuration.uniform([ORIGIN] + ring[:5])
    m = proposal(c, ORIGIN, 5, 100.0, 100.0)
    assert m.threshold is None


def test_translation_exponents_and_exact_threshold():
    from fractions import Fraction
    # C2 particle at (2,0) moves to (1,1): one neighbor before, two after
    # ((1,0) and the C2 particle at (0,1)), so exponents are (1, 1)
    c = Configuration({(0, 0): 1, (1, 0): 1, (0, 1): 2, (2, 0): 2})
    m = proposal(c, (2, 0), 2, Fraction(4), Fraction(1, 2))
    assert m.kind == "translate" and m.target == (1, 1)
    assert m.exponents == (1, 1)
    assert m.threshold == Fraction(2)


def test_disconnecting_translation_is_blocked():
    c = Configuration({(0, 0): 1, (1, 0): 1, (2, 0): 2})
    assert proposal(c, (2, 0), 0, 4.0, 4.0).threshold is None


# -- reference chain vs compiled kernel ---------------------------------------


@pytest.mark.parametrize("seed,lam,gamma", [(0, 4.0, 4.0), (1, 1.5, 1.0), (2, 0.7, 0.5), (3, 4.0, 2.0)])
def test_kernel_follows_reference_draw_for_draw(seed, lam, gamma):
    rng = np.random.default_rng(seed)
    c = color_sites(random_blob_sites(15, rng), 7, "random", rng)
    p = SimParams(lam=lam, gamma=gamma)
    ref = ReferenceChain(c, p, np.random.Generator(np.random.PCG64(100 + seed)))
    state = TorusState(c)
    krng = np.random.Generator(np.random.PCG64(100 + seed))
    acc_t = acc_s = 0
    for _ in range(3000):
        out = ref.step()
        acc_t += out.accepted and out.kind == "translate"
        acc_s += out.accepted and out.kind == "swap"
        chk = advance(state, lam, gamma, 1, krng, checked=True)
        assert chk.violations == 0
        assert state.to_configuration() == ref.config.canonical()
    st = edge_stats(ref.config)
    assert list(state.counters) == [st.e, st.h, acc_t, acc_s]


def test_reference_step_requires_connected():
    c = Configuration.uniform([ORIGIN, (3, 0)])
    with pytest.raises(ConfigurationError):
        step(c, SimParams(2.0, 2.0), np.random.default_rng(0))


# -- runs ------------------------------------------------------------------------


def test_zero_iterations_returns_initial():
    p = SimParams(4, 4, seed=5, iterations=0, initial=InitialRecipe("line", 5, 5))
    res = run(p)
    assert res.final == res.initial.canonical()
    assert [r.row() for r in res.records] == [(0, 18, 9, 1, 0, 0)]


def test_same_seed_same_series_and_different_seed_differs():
    p = SimParams(4, 4, seed=9, iterations=50_000, record_every=5_000,
                  initial=InitialRecipe("random_blob", 20, 20, "random"))
    a, b = run(p), run(p)
    assert np.array_equal(a.metrics_array(), b.metrics_array())
    assert a.final == b.final
    c = run(SimParams(4, 4, seed=10, iterations=50_000, record_every=5_000,
                      initial=InitialRecipe("random_blob", 20, 20, "random")))
    assert not np.array_equal(a.metrics_array(), c.metrics_array())


def test_records_are_consistent_with_snapshots():
    seen = []

    def observer(rec):
        c = rec.snapshot()
        st = edge_stats(c)
        seen.append((rec.perimeter == perimeter(c), rec.edges == st.e, rec.hetero_edges == st.h))

    p = SimParams(4, 2, seed=3, iterations=30_000, record_every=7_000,
                  initial=InitialRecipe("line", 10, 10, "alternating"))
    res = run(p, observers=[observer])
    assert [r.iteration for r in res.records] == [0, 7000, 14000, 21000, 28000, 30000]
    assert seen and all(all(x) for x in seen)
    acc = res.metrics_array()[:, 4:]
    assert np.all(np.diff(acc, axis=0) >= 0)  # cumulative counters


def test_snapshot_callback_and_schedule():
    marks = geometric_schedule(1_000_000, 50_000, 4)
    assert marks == [0, 50_000, 200_000, 800_000, 1_000_000]
    got = []
    run(SimParams(4, 4, seed=1, iterations=1_000_000, record_every=500_000,
                  initial=InitialRecipe("line", 6, 6)),
        snapshot_at=marks, on_snapshot=lambda i, c: got.append((i, is_connected(c), not holes(c))))
    assert [g[0] for g in got] == marks and all(g[1] and g[2] for g in got)


def test_compression_from_a_line():
    p = SimParams(4, 4, seed=1, iterations=2_000_000, record_every=2_000_000,
                  initial=InitialRecipe("line", 25, 25))
    res = run(p)
    assert perimeter(res.initial) == 98
    assert perimeter(res.final) < 40


def test_run_rejects_disconnected_initial():
    with pytest.raises(ConfigurationError):
        run(SimParams(2, 2), initial=Configuration.uniform([ORIGIN, (2, 0)]))


@pytest.mark.parametrize("kwargs", [
    dict(lam=0, gamma=1), dict(lam=1, gamma=-1), dict(lam=1, gamma=1, iterations=-1),
    dict(lam=1, gamma=1, record_every=0), dict(lam=1, gamma=1, seed=-1),
])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        SimParams(**kwargs)


def test_recipe_validation_and_metadata():
    with pytest.raises(ValueError):
        InitialRecipe("spiral")
    with pytest.raises(ValueError):
        InitialRecipe("line", 0, 0)
    assert SimParams(2, 3).to_dict()["lambda"] == 2
    assert RNG_ALGORITHM == "numpy.random.PCG64"
    a, b = make_rngs(0)
    assert a.random() != b.random()


def test_line_recipe_is_deterministic():
    rng = np.random.default_rng(0)
    c = InitialRecipe("line", 3, 2, "blocked").build(rng)
    assert c == color_sites(line_sites(5), 3, "blocked")


def test_checked_mode_flags_an_injected_corruption():
    # a kernel state whose edge counter is wrong must be reported
    c = Configuration.uniform(line_sites(6))
    state = TorusState(c)
    state.counters[0] += 1
    chk = advance(state, 4.0, 4.0, 20_000, np.random.default_rng(0), checked=True)
    assert chk.violations > 0 and chk.kind == 5
