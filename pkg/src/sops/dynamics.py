"""The separation/integration Markov chain on particle configurations.

One iteration picks a particle ``P`` (color ``c_i``, site ``l``) uniformly,
a neighboring site ``l'`` uniformly and ``q`` uniformly in ``(0, 1)``:

* ``l'`` empty: ``P`` moves there iff it has ``e != 5`` neighbors, the pair
  satisfies one of the two local connectivity properties, and
  ``q < lam**(e' - e) * gamma**(e_i' - e_i)``.  Counts at ``l'`` exclude
  ``P`` itself.
* ``l'`` holds ``Q`` (color ``c_j``): ``P`` and ``Q`` swap iff
  ``q < gamma**(|N_i(l') - P| - |N_i(l)| + |N_j(l) - Q| - |N_j(l')|)``.

This module holds the readable reference implementation (:func:`step`,
:class:`ReferenceChain`) and the driver :func:`run`, which executes the same
chain with a compiled kernel on a torus grid.  Both consume the random
stream identically, so for equal seeds they produce equal trajectories.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Literal

import numpy as np

from . import _kernel
from .configuration import (
    Color,
    Configuration,
    ConfigurationError,
    color_sites,
    edge_stats,
    hexagon_sites,
    is_connected,
    line_sites,
    random_blob_sites,
)
from .lattice import NEIGHBOR_OFFSETS, Site, are_adjacent, neighbor, neighbors

RNG_ALGORITHM = "numpy.random.PCG64"

Number = float | Fraction


# -- local properties ---------------------------------------------------------


def _check_pair(c: Configuration, l: Site, lp: Site) -> None:
    if l not in c:
        raise ConfigurationError(f"{l} is not occupied")
    if lp in c:
        raise ConfigurationError(f"{lp} is occupied")
    if not are_adjacent(l, lp):
        raise ConfigurationError(f"{l} and {lp} are not adjacent")


def joint_neighborhood(l: Site, lp: Site) -> list[Site]:
    """The eight sites adjacent to ``l`` or ``l'``, excluding both."""
    out = [s for s in neighbors(l) if s != lp]
    out += [s for s in neighbors(lp) if s != l and s not in out]
    return out


def _groups(sites: set[Site]) -> list[set[Site]]:
    """Adjacency components of ``sites`` (paths may only use ``sites``)."""
    left = set(sites)
    out = []
    while left:
        seed = left.pop()
        comp, stack = {seed}, [seed]
        while stack:
            s = stack.pop()
            for t in neighbors(s):
                if t in left:
                    left.remove(t)
                    comp.add(t)
                    stack.append(t)
        out.append(comp)
    return out


def property1(c: Configuration, l: tuple[int, int], lp: tuple[int, int]) -> bool:
    """``|S|`` is 1 or 2 and every particle of ``N(l u l')`` reaches exactly
    one particle of ``S`` by a path inside ``N(l u l')``."""
    l, lp = Site(*l), Site(*lp)
    _check_pair(c, l, lp)
    joint = {s for s in joint_neighborhood(l, lp) if s in c}
    shared = {s for s in joint if are_adjacent(s, l) and are_adjacent(s, lp)}
    if len(shared) not in (1, 2):
        return False
    return all(len(g & shared) == 1 for g in _groups(joint))


def property2(c: Configuration, l: tuple[int, int], lp: tuple[int, int]) -> bool:
    """``S`` is empty and both ``N(l) - l'`` and ``N(l') - l`` are nonempty
    and connected."""
    l, lp = Site(*l), Site(*lp)
    _check_pair(c, l, lp)
    around_l = {s for s in neighbors(l) if s in c and s != lp}
    around_lp = {s for s in neighbors(lp) if s in c and s != l}
    if around_l & around_lp:
        return False
    return (
        bool(around_l)
        and bool(around_lp)
        and len(_groups(around_l)) == 1
        and len(_groups(around_lp)) == 1
    )


# -- move thresholds ----------------------------------------------------------


@dataclass(frozen=True)
class Move:
    """What the proposal ``(particle at l, direction)`` would do.

    ``threshold`` is the value ``q`` must stay strictly below for the move to
    happen; ``None`` means the move is blocked regardless of ``q``.
    """

    kind: Literal["translate", "swap"]
    source: Site
    target: Site
    threshold: Number | None
    exponents: tuple[int, int]  # (lambda exponent, gamma exponent)


def _count(c: Configuration, sites: Iterable[Site], color: Color | None = None,
           exclude: Site | None = None) -> int:
    k = 0
    for s in sites:
        if s == exclude:
            continue
        col = c.get(s)
        if col is not None and (color is None or col == color):
            k += 1
    return k


def proposal(c: Configuration, l: tuple[int, int], direction: int,
             lam: Number, gamma: Number) -> Move:
    """Evaluate the move of the particle at ``l`` towards ``direction``."""
    l = Site(*l)
    lp = neighbor(l, direction)
    ci = c[l]
    if lp not in c:
        nl, nlp = neighbors(l), neighbors(lp)
        e = _count(c, nl)
        ei = _count(c, nl, ci)
        e2 = _count(c, nlp, exclude=l)
        ei2 = _count(c, nlp, ci, exclude=l)
        exps = (e2 - e, ei2 - ei)
        if e == 5 or not (property1(c, l, lp) or property2(c, l, lp)):
            return Move("translate", l, lp, None, exps)
        return Move("translate", l, lp, lam ** exps[0] * gamma ** exps[1], exps)
    cj = c[lp]
    nl, nlp = neighbors(l), neighbors(lp)
    expo = (
        _count(c, nlp, ci, exclude=l)
        - _count(c, nl, ci)
        + _count(c, nl, cj, exclude=lp)
        - _count(c, nlp, cj)
    )
    return Move("swap", l, lp, gamma ** expo, (0, expo))


def apply_move(c: Configuration, m: Move) -> Configuration:
    if m.kind == "translate":
        return c.moved(m.source, m.target)
    return c.swapped(m.source, m.target)


@dataclass(frozen=True)
class StepOutcome:
    kind: Literal["translate", "swap"]
    accepted: bool
    source: Site
    target: Site
    q: float


def draw_uniform_open(rng: np.random.Generator) -> float:
    """Uniform draw from the open interval (0, 1)."""
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def step(c: Configuration, params: "SimParams", rng: np.random.Generator,
         order: list[Site] | None = None) -> tuple[Configuration, StepOutcome]:
    """One iteration of the chain (reference implementation).

    The particle is ``order[k]`` for ``k`` uniform; ``order`` defaults to the
    sorted site list.  Random draws are consumed as: particle index,
    direction, then ``q``.
    """
    if not is_connected(c):
        raise ConfigurationError("step requires a connected configuration")
    order = c.sites() if order is None else order
    k = int(rng.integers(0, c.n))
    d = int(rng.integers(0, 6))
    q = draw_uniform_open(rng)
    m = proposal(c, order[k], d, params.lam, params.gamma)
    ok = m.threshold is not None and q < m.threshold
    out = StepOutcome(m.kind, ok, m.source, m.target, q)
    return (apply_move(c, m) if ok else c), out


class ReferenceChain:
    """Pure-Python chain that keeps particle slots in a fixed order.

    Translations overwrite the moving particle's slot; swaps exchange
    colors and leave slots alone.  This is the same bookkeeping as the
    compiled kernel, so the two agree draw for draw.
    """

    def __init__(self, c: Configuration, params: "SimParams", rng: np.random.Generator,
                 order: list[Site] | None = None):
        self.config = c
        self.params = params
        self.rng = rng
        self.order = list(c.sites() if order is None else order)

    def step(self) -> StepOutcome:
        c, out = step(self.config, self.params, self.rng, self.order)
        if out.accepted and out.kind == "translate":
            self.order[self.order.index(out.source)] = out.target
        self.config = c
        return out


# -- parameters and initial configurations ------------------------------------


@dataclass(frozen=True)
class InitialRecipe:
    """How to build the starting configuration."""

    kind: Literal["line", "hexagon", "random_blob"] = "line"
    n1: int = 50
    n2: int = 50
    color_layout: Literal["alternating", "blocked", "random"] = "blocked"

    def __post_init__(self) -> None:
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise ValueError("need n1, n2 >= 0 and n1 + n2 >= 1")
        if self.kind not in ("line", "hexagon", "random_blob"):
            raise ValueError(f"unknown initial kind {self.kind!r}")
        if self.color_layout not in ("alternating", "blocked", "random"):
            raise ValueError(f"unknown color layout {self.color_layout!r}")

    def build(self, rng: np.random.Generator) -> Configuration:
        n = self.n1 + self.n2
        if self.kind == "line":
            sites = line_sites(n)
        elif self.kind == "hexagon":
            sites = hexagon_sites(n)
        else:
            sites = random_blob_sites(n, rng)
        return color_sites(sites, self.n1, self.color_layout, rng)


@dataclass(frozen=True)
class SimParams:
    """Chain parameters.  ``lam`` is the compression bias λ."""

    lam: float
    gamma: float
    seed: int = 0
    iterations: int = 0
    record_every: int = 1000
    initial: InitialRecipe = field(default_factory=InitialRecipe)

    def __post_init__(self) -> None:
        if not (self.lam > 0 and self.gamma > 0):
            raise ValueError("lambda and gamma must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def make_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for the initial configuration and the chain."""
    init_ss, chain_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(init_ss)), np.random.Generator(np.random.PCG64(chain_ss))


# -- compiled execution -------------------------------------------------------


@dataclass
class Record:
    """Metrics at one recorded iteration; ``snapshot()`` builds the state."""

    iteration: int
    perimeter: int
    edges: int
    hetero_edges: int
    accept_translate: int
    accept_swap: int
    _state: "TorusState | None" = field(default=None, repr=False)

    def snapshot(self) -> Configuration:
        if self._state is None:
            raise RuntimeError("snapshot is only available inside an observer call")
        return self._state.to_configuration()

    def row(self) -> tuple[int, int, int, int, int, int]:
        return (self.iteration, self.perimeter, self.edges, self.hetero_edges,
                self.accept_translate, self.accept_swap)


METRIC_COLUMNS = ("iteration", "perimeter", "edges", "hetero_edges",
                  "accept_translate", "accept_swap")


class TorusState:
    """A configuration embedded in a periodic ``W x W`` grid for the kernel.

    ``W`` exceeds the configuration's possible extent, so a connected
    configuration never touches its own periodic image.
    """

    def __init__(self, c: Configuration, order: list[Site] | None = None):
        order = c.sites() if order is None else order
        self.n = c.n
        log = max(3, math.ceil(math.log2(self.n + 6)))
        self.log = log
        self.width = 1 << log
        mask = self.width - 1
        self.grid = np.zeros(self.width * self.width, dtype=np.int8)
        self.slot = np.full(self.width * self.width, -1, dtype=np.int32)
        self.pos = np.zeros(self.n, dtype=np.int64)
        q0, r0 = min(c.occupied)
        for k, s in enumerate(order):
            idx = (((s.q - q0) & mask) << log) | ((s.r - r0) & mask)
            self.pos[k] = idx
            self.slot[idx] = k
            self.grid[idx] = int(c[s])
        st = edge_stats(c)
        # counters: edges, heterogeneous edges, accepted translations, accepted swaps
        self.counters = np.array([st.e, st.h, 0, 0], dtype=np.int64)

    def to_configuration(self) -> Configuration:
        coords = _kernel.unwrap(self.pos, self.slot, self.log)
        occ = {}
        for k in range(self.n):
            occ[(int(coords[k, 0]), int(coords[k, 1]))] = Color(int(self.grid[self.pos[k]]))
        return Configuration(occ).canonical()

    def order(self) -> list[Site]:
        """Slot order of the unwrapped, canonical configuration."""
        coords = _kernel.unwrap(self.pos, self.slot, self.log)
        q0, r0 = min((int(a), int(b)) for a, b in coords)
        return [Site(int(a) - q0, int(b) - r0) for a, b in coords]


_TABLES: dict[str, np.ndarray] | None = None


def kernel_tables() -> dict[str, np.ndarray]:
    """Lookup tables for the compiled kernel, derived from the reference
    property checks so both implementations share one definition."""
    global _TABLES
    if _TABLES is None:
        ring = np.zeros((6, 8, 2), dtype=np.int64)
        near_l = np.zeros((6, 8), dtype=np.bool_)
        near_lp = np.zeros((6, 8), dtype=np.bool_)
        allowed = np.zeros((6, 256), dtype=np.bool_)
        origin = Site(0, 0)
        for d in range(6):
            lp = neighbor(origin, d)
            joint = joint_neighborhood(origin, lp)
            for k, s in enumerate(joint):
                ring[d, k] = s
                near_l[d, k] = are_adjacent(s, origin)
                near_lp[d, k] = are_adjacent(s, lp)
            for mask in range(256):
                occ = {origin: Color.C1}
                occ.update({s: Color.C1 for k, s in enumerate(joint) if mask >> k & 1})
                c = Configuration(occ)
                allowed[d, mask] = property1(c, origin, lp) or property2(c, origin, lp)
        _TABLES = {
            "offsets": np.array(NEIGHBOR_OFFSETS, dtype=np.int64),
            "ring": ring,
            "near_l": near_l,
            "near_lp": near_lp,
            "allowed": allowed,
        }
    return _TABLES


def _powers(base: float, lo: int, hi: int) -> np.ndarray:
    return np.array([float(base) ** k for k in range(lo, hi + 1)], dtype=np.float64)


@dataclass
class KernelCheck:
    """Outcome of invariant auditing in checked mode."""

    violations: int
    first_violation: int  # iteration index, -1 if none
    kind: int  # code of the first violated invariant, 0 if none
    translations_checked: int
    swaps_checked: int


VIOLATION_KINDS = {
    0: "none",
    1: "disconnected",
    2: "hole created",
    3: "swap changed occupancy",
    4: "reverse translation impossible",
    5: "edge bookkeeping mismatch",
}


def advance(state: TorusState, lam: float, gamma: float, steps: int,
            rng: np.random.Generator, checked: bool = False) -> KernelCheck:
    """Run ``steps`` iterations in place on ``state``."""
    t = kernel_tables()
    audit = np.zeros(5, dtype=np.int64)
    audit[1] = -1
    _kernel.run_steps(
        state.grid, state.slot, state.pos, state.log, state.counters,
        t["offsets"], t["ring"], t["near_l"], t["near_lp"], t["allowed"],
        _powers(lam, -6, 6), _powers(gamma, -12, 12),
        rng, steps, checked, audit,
    )
    return KernelCheck(int(audit[0]), int(audit[1]), int(audit[2]), int(audit[3]), int(audit[4]))


@dataclass
class RunResult:
    params: SimParams
    initial: Configuration
    final: Configuration
    records: list[Record]
    check: KernelCheck | None = None

    def metrics_array(self) -> np.ndarray:
        return np.array([r.row() for r in self.records], dtype=np.int64).reshape(-1, 6)


Observer = Callable[[Record], None]


def run(params: SimParams, observers: Iterable[Observer] = (), *,
        initial: Configuration | None = None, checked: bool = False,
        snapshot_at: Iterable[int] = (), on_snapshot: Callable[[int, Configuration], None] | None = None
        ) -> RunResult:
    """Execute the chain for ``params.iterations`` steps.

    Metrics are recorded at iteration 0 and every ``record_every`` steps
    (and at the final iteration).  Observers receive each :class:`Record`;
    ``record.snapshot()`` materializes the configuration on demand.
    ``on_snapshot`` is called at each iteration listed in ``snapshot_at``.
    """
    init_rng, chain_rng = make_rngs(params.seed)
    c0 = params.initial.build(init_rng) if initial is None else initial
    if not is_connected(c0):
        raise ConfigurationError("initial configuration must be connected")
    state = TorusState(c0)
    observers = list(observers)
    marks = sorted({int(i) for i in snapshot_at if 0 <= int(i) <= params.iterations})
    stops = set(range(0, params.iterations + 1, params.record_every))
    stops.add(params.iterations)
    stops.update(marks)
    mark_set = set(marks)
    records: list[Record] = []
    total = KernelCheck(0, -1, 0, 0, 0)
    done = 0
    for target in sorted(stops):
        if target > done:
            chk = advance(state, params.lam, params.gamma, target - done, chain_rng, checked)
            if chk.violations and total.first_violation < 0:
                total.first_violation = done + chk.first_violation
                total.kind = chk.kind
            total.violations += chk.violations
            total.translations_checked += chk.translations_checked
            total.swaps_checked += chk.swaps_checked
            done = target
        if target % params.record_every == 0 or target == params.iterations:
            e, h, at, asw = (int(x) for x in state.counters)
            rec = Record(target, 3 * state.n - 3 - e, e, h, at, asw, state)
            for obs in observers:
                obs(rec)
            rec._state = None
            records.append(rec)
        if target in mark_set and on_snapshot is not None:
            on_snapshot(target, state.to_configuration())
    return RunResult(params, c0, state.to_configuration(), records, total if checked else None)


def geometric_schedule(total: int, first: int = 50_000, factor: float = 4.0) -> list[int]:
    """Iterations 0, first, first*factor, ... up to and including ``total``."""
    out = [0]
    k = float(first)
    while k < total:
        out.append(int(round(k)))
        k *= factor
    if total not in out:
        out.append(total)
    return out
