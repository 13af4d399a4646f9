"""Self-similar actions of k-graphs, their Toeplitz and Cuntz-Pimsner algebras, and KMS states."""
from .automaton import Automaton, AutomatonError
from .document import ActionDocument, DocumentError, load_fixture, parse, serialize
from .groupoid import GElem, Groupoid, NotFiniteState
from .kgraph import KGraph, KGraphError, Path
from .kms import KMS1State, NoKMS1State, ToeplitzState, TraceSpec, c_g, c_rel, f_counts
from .periodicity import PerData, Periodicity, PeriodicityWitness
from .spectral import SpectralData, compute_spectral
from .staralg import AlgElement, StarAlgebra

__version__ = "0.1.0"

__all__ = [
    "ActionDocument", "AlgElement", "Automaton", "AutomatonError", "DocumentError", "GElem", "Groupoid",
    "KGraph", "KGraphError", "KMS1State", "NoKMS1State", "NotFiniteState", "Path", "PerData", "Periodicity",
    "PeriodicityWitness", "SpectralData", "StarAlgebra", "ToeplitzState", "TraceSpec", "c_g", "c_rel",
    "compute_spectral", "f_counts", "load_fixture", "parse", "serialize",
]
