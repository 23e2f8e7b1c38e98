"""The four qubit ensembles from quantum key distribution, with their reference quantumness values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble
from .states import PureState, density_from_pure, ket

REFERENCE_Q = (0.293, 0.5)  # (affinity, fidelity), the same for every entry


@dataclass(frozen=True)
class NamedEnsemble:
    name: str
    ensemble: Ensemble
    kets: tuple
    paper_values: tuple = REFERENCE_Q

    @property
    def paper_affinity(self) -> float:
        return self.paper_values[0]

    @property
    def paper_fidelity(self) -> float:
        return self.paper_values[1]


def psi(theta: float) -> PureState:
    """sin(theta)|0> + cos(theta)|1>."""
    return PureState(np.array([np.sin(theta), np.cos(theta)], dtype=complex))


def _named(name: str, kets, probs=None) -> NamedEnsemble:
    probs = probs or [1.0 / len(kets)] * len(kets)
    ens = Ensemble(tuple(probs), tuple(density_from_pure(k) for k in kets))
    return NamedEnsemble(name, ens, tuple(kets))


def b92() -> NamedEnsemble:
    return _named("b92", [ket(1, 0), psi(np.pi / 4)])


def bb84() -> NamedEnsemble:
    return _named("bb84", [ket(1, 0), ket(0, 1), psi(np.pi / 4), psi(3 * np.pi / 4)])


def trine() -> NamedEnsemble:
    r3 = np.sqrt(3.0)
    return _named("trine", [ket(1, 0), ket(0.5, r3 / 2), ket(0.5, -r3 / 2)])


def six_state() -> NamedEnsemble:
    s = 1 / np.sqrt(2)
    kets = [
        ket(s, s), ket(s, -s),          # sigma_x
        ket(s, 1j * s), ket(s, -1j * s),  # sigma_y
        ket(1, 0), ket(0, 1),           # sigma_z
    ]
    return _named("six_state", kets)


CATALOG = {"b92": b92, "bb84": bb84, "trine": trine, "six_state": six_state}


def get(name: str) -> NamedEnsemble:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown catalog ensemble {name!r}; choose from {sorted(CATALOG)}") from None
