"""Quantum adiabatic evolution for the maximum-clique problem on random graphs."""

__version__ = "0.1.0"

from .errors import (
    AdiaCliqueError,
    IntegrationError,
    ResourceCapError,
    SamplingCapError,
)
from .graph import Graph, classify, generate_random_graph, is_clique, sample_until
from .subspace import WeightKBasis, build_basis
from .hamiltonian import SubspaceHamiltonian
from .evolve import EvolutionConfig, EvolutionResult, evolve, initial_state, reference_evolve

__all__ = [
    "__version__",
    "AdiaCliqueError",
    "IntegrationError",
    "ResourceCapError",
    "SamplingCapError",
    "Graph",
    "classify",
    "generate_random_graph",
    "is_clique",
    "sample_until",
    "WeightKBasis",
    "build_basis",
    "SubspaceHamiltonian",
    "EvolutionConfig",
    "EvolutionResult",
    "evolve",
    "initial_state",
    "reference_evolve",
]
