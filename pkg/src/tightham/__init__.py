"""Executable absorption-method pipeline for tight Hamiltonian cycles in 3-graphs."""

from .hypergraph import Graph, Hypergraph3, TightPath, Verdict, validate_tight

__all__ = ["Graph", "Hypergraph3", "TightPath", "Verdict", "validate_tight"]
__version__ = "0.1.0"
