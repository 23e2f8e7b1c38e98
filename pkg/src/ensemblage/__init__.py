"""Geometric coherence and quantumness of quantum ensembles.

The functions ``coherence.coherence`` and ``quantumness.quantumness`` live in
their submodules; they are not re-exported here so the module names stay
importable.
"""

from .catalog import CATALOG, NamedEnsemble
from .coherence import coherence_affinity, coherence_fidelity
from .ensemble import Ensemble, ensemble_coherence, ensemble_distance, ensemble_measure
from .errors import EnsemblageError, NoConvergence
from .measures import MeasureKind, affinity, distance, fidelity, measure
from .quantumness import OptimizerConfig, grid_oracle_qubit
from .states import DensityMatrix, KrausChannel, PureState, Unitary

__all__ = [
    "CATALOG", "NamedEnsemble",
    "coherence_affinity", "coherence_fidelity",
    "Ensemble", "ensemble_coherence", "ensemble_distance", "ensemble_measure",
    "EnsemblageError", "NoConvergence",
    "MeasureKind", "affinity", "distance", "fidelity", "measure",
    "OptimizerConfig", "grid_oracle_qubit",
    "DensityMatrix", "KrausChannel", "PureState", "Unitary",
]
