"""Command-line entry point: ``sops run | phase-grid | oracle | check-bounds | analyze``.

Exit status is 0 on success, 1 on invalid parameters or inputs, 2 on
input/output failures.  Every command that writes files also writes a
metadata JSON with everything needed to reproduce them.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import click
import numba
import numpy as np

from sops import __version__, bounds, enumeration
from sops.analysis import (compression_report, separation_search_exact,
                           separation_search_heuristic, EXACT_SEARCH_LIMIT)
from sops.configuration import Configuration, ConfigurationError, edge_stats
from sops.dynamics import (METRIC_COLUMNS, RNG_ALGORITHM, InitialRecipe, SimParams,
                           geometric_schedule, run)
from sops.render import render_svg

PHASES = ("compressed-separated", "compressed-integrated",
          "expanded-separated", "expanded-integrated")

DEFAULT_ALPHA_CUTOFF = 2.0
DEFAULT_WITNESS_BETA = 6.0
DEFAULT_WITNESS_DELTA = 0.2


class Count(click.ParamType):
    """Non-negative integer that also accepts scientific notation (``5e7``)."""

    name = "count"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            x = float(value)
        except ValueError:
            self.fail(f"{value!r} is not a number", param, ctx)
        if not x.is_integer() or x < 0:
            self.fail(f"{value!r} is not a non-negative integer", param, ctx)
        return int(x)


COUNT = Count()


class IOFailure(click.ClickException):
    exit_code = 2


class DomainFailure(click.ClickException):
    exit_code = 1


def metadata(command: str, **extra) -> dict:
    """Provenance block shared by all commands."""
    return {
        "command": command,
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        **extra,
    }


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=False))


# -- run ------------------------------------------------------------------------


@dataclass(frozen=True)
class RunSpec:
    """Chain parameters plus where and how often to write outputs."""

    params: SimParams
    out_dir: Path
    snapshot_every: int | None = None  # linear cadence; None selects the geometric one
    geometric_first: int = 50_000
    geometric_factor: float = 4.0
    svg_every: int = 0  # draw every k-th snapshot; 0 disables
    checked: bool = False

    def __post_init__(self) -> None:
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ValueError("snapshot cadence must be at least 1")
        if self.svg_every < 0:
            raise ValueError("svg cadence must be non-negative")
        if self.geometric_first < 1 or self.geometric_factor <= 1:
            raise ValueError("geometric cadence needs first >= 1 and factor > 1")

    def snapshot_iterations(self) -> list[int]:
        total = self.params.iterations
        if self.snapshot_every is None:
            return geometric_schedule(total, self.geometric_first, self.geometric_factor)
        marks = list(range(0, total + 1, self.snapshot_every))
        if marks[-1] != total:
            marks.append(total)
        return marks


def metrics_csv(rows: Sequence[Sequence[int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def execute_run(spec: RunSpec) -> dict:
    """Run the chain and write ``metrics.csv``, ``snapshots.jsonl``,
    ``metadata.json`` and optional SVGs into ``spec.out_dir``."""
    out = spec.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create {out}: {exc.strerror or exc}") from exc
    snaps: list[tuple[int, Configuration]] = []
    marks = spec.snapshot_iterations()
    res = run(spec.params, checked=spec.checked, snapshot_at=marks,
              on_snapshot=lambda i, c: snaps.append((i, c)))
    _write_text(out / "metrics.csv", metrics_csv([r.row() for r in res.records]))
    lines = [json.dumps({"iteration": i, **c.to_dict()}, separators=(",", ":")) for i, c in snaps]
    _write_text(out / "snapshots.jsonl", "\n".join(lines) + "\n")
    svgs = []
    if spec.svg_every:
        for j, (i, c) in enumerate(snaps):
            if j % spec.svg_every == 0 or j == len(snaps) - 1:
                name = f"snapshot_{i:012d}.svg"
                _write_text(out / name, render_svg(c, title=f"iteration {i}"))
                svgs.append(name)
    final = res.final
    st = edge_stats(final)
    cr = compression_report(final)
    summary = {
        "final": {"perimeter": cr.p, "pmin": cr.pmin, "alpha_achieved": cr.alpha_achieved,
                  "edges": st.e, "hetero_edges": st.h},
        "snapshots": [i for i, _ in snaps],
        "svg": svgs,
    }
    if res.check is not None:
        summary["check"] = asdict(res.check)
    meta = metadata("run", seed=spec.params.seed, params=spec.params.to_dict(),
                    outputs={"snapshot_every": spec.snapshot_every,
                             "geometric_first": spec.geometric_first,
                             "geometric_factor": spec.geometric_factor,
                             "svg_every": spec.svg_every, "checked": spec.checked},
                    summary=summary)
    _write_text(out / "metadata.json", json.dumps(meta, indent=2) + "\n")
    return meta


def _params(n1, n2, lam, gamma, iters, seed, record_every, initial, layout) -> SimParams:
    return SimParams(lam=lam, gamma=gamma, seed=seed, iterations=iters, record_every=record_every,
                     initial=InitialRecipe(kind=initial, n1=n1, n2=n2, color_layout=layout))


_INITIAL = click.Choice(["line", "hexagon", "random_blob"])
_LAYOUT = click.Choice(["blocked", "alternating", "random"])


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="sops")
def cli() -> None:
    """Simulate and analyze two-color particle systems on the triangular lattice."""


@cli.command("run")
@click.option("--n1", type=int, default=50, show_default=True, help="Particles of color 1.")
@click.option("--n2", type=int, default=50, show_default=True, help="Particles of color 2.")
@click.option("--lambda", "lam", type=float, required=True, help="Compression bias.")
@click.option("--gamma", type=float, required=True, help="Homogeneity bias.")
@click.option("--iters", type=COUNT, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--record-every", type=COUNT, default=1000, show_default=True,
              help="Metrics row cadence in iterations.")
@click.option("--initial", type=_INITIAL, default="line", show_default=True)
@click.option("--layout", type=_LAYOUT, default="blocked", show_default=True,
              help="How colors are laid onto the initial shape.")
@click.option("--snapshot-every", type=COUNT, default=None,
              help="Linear snapshot cadence; omit for 0, 5e4, 2e5, ... (x4).")
@click.option("--geometric-first", type=COUNT, default=50_000, show_default=True)
@click.option("--geometric-factor", type=float, default=4.0, show_default=True)
@click.option("--svg-every", type=int, default=0, show_default=True,
              help="Render every k-th snapshot (and the last) as SVG; 0 disables.")
@click.option("--checked", is_flag=True, help="Audit invariants after every accepted move.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("run_out"),
              show_default=True)
def cmd_run(n1, n2, lam, gamma, iters, seed, record_every, initial, layout, snapshot_every,
            geometric_first, geometric_factor, svg_every, checked, out_dir) -> None:
    """Run the chain and write metrics, snapshots and metadata."""
    spec = RunSpec(_params(n1, n2, lam, gamma, iters, seed, record_every, initial, layout),
                   out_dir, snapshot_every, geometric_first, geometric_factor, svg_every, checked)
    meta = execute_run(spec)
    _emit(meta["summary"]["final"])


# -- phase grid --------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentMatrix:
    """A grid of (lambda, gamma) cells sharing size, seed and budget."""

    lambdas: tuple[float, ...]
    gammas: tuple[float, ...]
    n1: int = 50
    n2: int = 50
    seed: int = 1
    iterations: int = 10_000_000
    initial: str = "line"
    layout: str = "blocked"
    alpha_cutoff: float = DEFAULT_ALPHA_CUTOFF
    beta: float = DEFAULT_WITNESS_BETA
    delta: float = DEFAULT_WITNESS_DELTA
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.lambdas or not self.gammas:
            raise ValueError("the grid must contain at least one cell")
        if self.alpha_cutoff < 1:
            raise ValueError("alpha cutoff must be at least 1")

    def cells(self) -> list[tuple[float, float]]:
        return [(l, g) for l in self.lambdas for g in self.gammas]


def classify(alpha_achieved: float, separated: bool, alpha_cutoff: float) -> str:
    """Name of the phase for an end state."""
    comp = "compressed" if alpha_achieved <= alpha_cutoff else "expanded"
    sep = "separated" if separated else "integrated"
    return f"{comp}-{sep}"


def analyze_configuration(c: Configuration, beta: float, delta: float,
                          exact: bool = False) -> dict:
    """Compression report and best separation witness found for ``c``."""
    cr = compression_report(c)
    st = edge_stats(c)
    if exact:
        w = separation_search_exact(c, beta, delta)
        method = "exact"
    else:
        w = separation_search_heuristic(c, beta, delta)
        method = "heuristic"
    return {
        "n": c.n,
        "compression": asdict(cr),
        "edges": st.e,
        "hetero_edges": st.h,
        "separation": {"beta": beta, "delta": delta, "method": method,
                       "witness_found": w is not None,
                       "witness": None if w is None else w.to_dict()},
    }


def _phase_cell(args: tuple[ExperimentMatrix, float, float]) -> dict:
    m, lam, gamma = args
    res = run(_params(m.n1, m.n2, lam, gamma, m.iterations, m.seed, max(1, m.iterations),
                      m.initial, m.layout))
    rep = analyze_configuration(res.final, m.beta, m.delta)
    return {
        "lambda": lam, "gamma": gamma,
        "alpha_achieved": rep["compression"]["alpha_achieved"],
        "hetero_fraction": rep["hetero_edges"] / max(1, rep["edges"]),
        "witness_found": rep["separation"]["witness_found"],
        "phase": classify(rep["compression"]["alpha_achieved"],
                          rep["separation"]["witness_found"], m.alpha_cutoff),
        "final": res.final.to_dict(),
    }


def execute_phase_grid(m: ExperimentMatrix, workers: int = 1) -> list[dict]:
    """Run every cell (in parallel when ``workers > 1``) and classify it."""
    jobs = [(m, l, g) for l, g in m.cells()]
    if workers <= 1 or len(jobs) == 1:
        return [_phase_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_phase_cell, jobs))


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise click.BadParameter("empty list")
    return vals


@cli.command("phase-grid")
@click.option("--lambdas", default="4,1.5", show_default=True)
@click.option("--gammas", default="0.58,1,2,4,5.2", show_default=True)
@click.option("--n1", type=int, default=50, show_default=True)
@click.option("--n2", type=int, default=50, show_default=True)
@click.option("--iters", type=COUNT, default=10_000_000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--initial", type=_INITIAL, default="line", show_default=True)
@click.option("--layout", type=_LAYOUT, default="blocked", show_default=True)
@click.option("--alpha-cutoff", type=float, default=DEFAULT_ALPHA_CUTOFF, show_default=True,
              help="End states with perimeter at most this multiple of the minimum count as compressed.")
@click.option("--beta", type=float, default=DEFAULT_WITNESS_BETA, show_default=True)
@click.option("--delta", type=float, default=DEFAULT_WITNESS_DELTA, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("phase_out"),
              show_default=True)
@click.option("--svg/--no-svg", default=True, show_default=True)
def cmd_phase_grid(lambdas, gammas, n1, n2, iters, seed, initial, layout, alpha_cutoff,
                   beta, delta, workers, out_dir, svg) -> None:
    """Run a grid of (lambda, gamma) cells and classify each end state."""
    m = ExperimentMatrix(_floats(lambdas), _floats(gammas), n1, n2, seed, iters, initial,
                         layout, alpha_cutoff, beta, delta)
    cells = execute_phase_grid(m, workers)
    rows = []
    for cell in cells:
        final = cell.pop("final")
        rows.append(cell)
        if svg:
            c = Configuration.from_dict(final)
            name = f"cell_l{cell['lambda']:g}_g{cell['gamma']:g}.svg"
            _write_text(out_dir / name, render_svg(c, title=f"{cell['phase']}"))
        _write_text(out_dir / f"cell_l{cell['lambda']:g}_g{cell['gamma']:g}.json",
                    json.dumps(final) + "\n")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _write_text(out_dir / "summary.csv", buf.getvalue())
    meta = metadata("phase-grid", seed=seed,
                    matrix={k: v for k, v in asdict(m).items() if k != "extra"},
                    note="lambda rows and classification cutoffs are artifact choices")
    _write_text(out_dir / "metadata.json", json.dumps(meta, indent=2) + "\n")
    for r in rows:
        click.echo(f"lambda={r['lambda']:<6g} gamma={r['gamma']:<6g} alpha={r['alpha_achieved']:.3f} "
                   f"h/e={r['hetero_fraction']:.3f} witness={'yes' if r['witness_found'] else 'no '} "
                   f"{r['phase']}")


# -- oracle ---------------------------------------------------------------------------


def parse_range(text: str) -> list[int]:
    """``"6..14"`` → 6..14 inclusive; ``"6,8"`` → [6, 8]; ``"7"`` → [7]."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected a range like 6..14, got {text!r}") from exc


@cli.group("oracle")
def cmd_oracle() -> None:
    """Exact enumeration oracles."""


@cmd_oracle.command("loops")
@click.option("--k", "krange", default="6..14", show_default=True)
def oracle_loops(krange) -> None:
    """Minimal cut loops of each length through a fixed lattice edge."""
    _emit([enumeration.count_loops_through_edge(k).to_dict() for k in parse_range(krange)])


@cmd_oracle.command("even-sets")
@click.option("--k", "krange", default="3..5", show_default=True)
def oracle_even(krange) -> None:
    """Connected even edge sets of each size containing a fixed edge."""
    _emit([enumeration.count_even_connected_through_edge(k).to_dict() for k in parse_range(krange)])


@cmd_oracle.command("shapes")
@click.option("--n", "nrange", default="1..6", show_default=True)
def oracle_shapes(nrange) -> None:
    """Hole-free connected shapes of n sites, counted by perimeter."""
    out = []
    for n in parse_range(nrange):
        counts = enumeration.count_configs_with_perimeter(n)
        out.append({"n": n, "convention": enumeration.SHAPE_CONVENTION,
                    "by_perimeter": {str(p): v for p, v in sorted(counts.items())}})
    _emit(out)


@cmd_oracle.command("tiny-chain")
@click.option("--n1", type=int, required=True)
@click.option("--n2", type=int, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--gamma", type=float, required=True)
def oracle_tiny(n1, n2, lam, gamma) -> None:
    """Full transition matrix checks for a tiny system."""
    model = enumeration.enumerate_tiny_chain(n1, n2, lam, gamma)
    pi = np.asarray(model.stationary_vector(), dtype=float)
    closed = np.asarray(model.pi_closed_form, dtype=float)
    _emit({"n1": n1, "n2": n2, "lambda": lam, "gamma": gamma, "states": len(model.states),
           "irreducible": model.is_irreducible(),
           "detailed_balance_error": float(model.detailed_balance_error()),
           "max_row_sum_error": float(max(abs(float(s) - 1) for s in model.row_sums())),
           "stationary_linf_error": float(np.max(np.abs(pi - closed)))})


# -- bounds -----------------------------------------------------------------------------


def _counts(extra: str | None, base: dict[int, int]) -> dict[int, int]:
    out = dict(base)
    if extra:
        try:
            for item in extra.split(","):
                k, v = item.split(":")
                out[int(k)] = int(v)
        except ValueError as exc:
            raise click.BadParameter(f"expected k:count pairs, got {extra!r}") from exc
    return out


@cli.group("check-bounds")
def cmd_check_bounds() -> None:
    """Numerical checks of convergence conditions and thresholds."""


@cmd_check_bounds.command("kp-loop")
@click.option("--gamma", type=float, required=True)
@click.option("--c", "c", type=float, default=float(bounds.LOOP_C), show_default=True)
@click.option("--five-terms", is_flag=True, help="Exact terms through k=14 only.")
@click.option("--extra-counts", default=None, help="More exact loop counts, e.g. 18:0.")
def bounds_loop(gamma, c, five_terms, extra_counts) -> None:
    """Loop-polymer convergence at (gamma, c)."""
    base = bounds.PROOF_LOOP_COUNTS if five_terms else bounds.LOOP_COUNTS
    r = bounds.kp_loop_check(gamma, c, _counts(extra_counts, base))
    _emit({**r.to_dict(), "pass": r.passed})


@cmd_check_bounds.command("kp-ht")
@click.option("--z", type=float, default=None)
@click.option("--gamma", type=float, default=None, help="Use z = (gamma-1)/(gamma+1).")
@click.option("--a", "a", type=float, default=float(bounds.HT_A), show_default=True)
def bounds_ht(z, gamma, a) -> None:
    """High-temperature convergence at (z, a)."""
    if (z is None) == (gamma is None):
        raise DomainFailure("give exactly one of --z and --gamma")
    zz = z if z is not None else bounds.z_of_gamma(gamma)
    r = bounds.kp_ht_check(zz, a)
    _emit({**r.to_dict(), "pass": r.passed})


@cmd_check_bounds.command("alpha")
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--regime", type=click.Choice(["large_gamma", "near_one"]), default="large_gamma",
              show_default=True)
def bounds_alpha(lam, gamma, regime) -> None:
    """Compression threshold on alpha for (lambda, gamma)."""
    a = bounds.compression_alpha_threshold(lam, gamma, regime)
    _emit({"lambda": lam, "gamma": gamma, "regime": regime, "applies": a is not None,
           "alpha_min": a, "perimeter_factor": None if a is None else 2 * 3 ** 0.5 * a})


@cmd_check_bounds.command("separation")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, default=None)
@click.option("--delta", type=float, required=True)
@click.option("--gamma", type=float, required=True)
def bounds_separation(alpha, beta, delta, gamma) -> None:
    """Separation inequality, and the beta where it starts to hold."""
    out = {"alpha": alpha, "delta": delta, "gamma": gamma,
           "beta_threshold": bounds.separation_beta_threshold(alpha, delta, gamma),
           "min_delta": bounds.min_separation_delta(gamma)}
    if beta is not None:
        out["beta"] = beta
        out["pass"] = bounds.separation_condition(alpha, beta, delta, gamma)
    _emit(out)


@cmd_check_bounds.command("integration")
@click.option("--gamma", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
def bounds_integration(gamma, delta) -> None:
    """Feasible epsilon window for gamma near 1."""
    w = bounds.integration_condition(gamma, delta)
    _emit({"gamma": gamma, "delta": delta, "pass": w is not None,
           "window": None if w is None else w.to_dict()})


# -- analyze ----------------------------------------------------------------------------


def load_snapshot(path: Path, iteration: int | None = None) -> Configuration:
    """A configuration JSON file, or one line of a snapshot JSONL file
    (the last one unless ``iteration`` is given)."""
    text = _read_text(path).strip()
    if not text:
        raise DomainFailure(f"{path} is empty")
    try:
        docs = [json.loads(text)]
    except json.JSONDecodeError:
        try:
            docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        except json.JSONDecodeError as exc:
            raise DomainFailure(f"{path} is not valid JSON or JSON lines: {exc}") from exc
    if iteration is not None:
        docs = [d for d in docs if d.get("iteration") == iteration]
        if not docs:
            raise DomainFailure(f"no snapshot at iteration {iteration} in {path}")
    return Configuration.from_dict(docs[-1])


@cli.command("analyze")
@click.argument("snapshot", type=click.Path(path_type=Path))
@click.option("--beta", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--iteration", type=int, default=None, help="Pick this snapshot from a JSONL file.")
@click.option("--exact/--heuristic", default=None,
              help=f"Exhaustive search (n <= {EXACT_SEARCH_LIMIT}) or face-based search; "
                   "default picks exact when possible.")
@click.option("--svg", "svg_path", type=click.Path(path_type=Path), default=None)
def cmd_analyze(snapshot, beta, delta, iteration, exact, svg_path) -> None:
    """Compression report and separation witness for a saved configuration."""
    c = load_snapshot(snapshot, iteration)
    if exact is None:
        exact = c.n <= EXACT_SEARCH_LIMIT
    rep = analyze_configuration(c, beta, delta, exact)
    if svg_path is not None:
        _write_text(svg_path, render_svg(c))
    _emit({"source": str(snapshot), **rep})


def main(argv: Sequence[str] | None = None) -> None:
    """Console entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="sops", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2 if isinstance(exc, IOFailure) else 1)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except (ConfigurationError, ValueError) as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":  # pragma: no cover
    main()
