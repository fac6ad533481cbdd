"""Compression and separation in two-color self-organizing particle systems
on the triangular lattice: lattice geometry, configurations, the Markov
chain, analysis of simulated states, exact enumeration oracles and numerical
bound checks."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.0.0"
