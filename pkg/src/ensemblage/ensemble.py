"""Ensembles of states, coupling-based ensemble measures and ensemble coherence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .coherence import coherence
from .errors import BadDecomposition, BadPartition, BadWeights, DimMismatch
from .measures import MeasureKind, distance, measure
from .states import DensityMatrix, SeedLike, Unitary, apply_kraus, apply_unitary, dephase, make_rng
from .transport import Coupling, transportation_maximize, transportation_solve

PROB_TOL = 1e-10
DROP_BELOW = 1e-14


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Finite list of (probability, state) pairs on one Hilbert space."""

    probabilities: tuple
    states: tuple

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float).ravel()
        states = tuple(self.states)
        if probs.size != len(states) or not states:
            raise BadWeights("need one probability per state and at least one member")
        if np.any(probs < -PROB_TOL):
            raise BadWeights(f"negative probability in {probs}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise BadWeights(f"probabilities sum to {probs.sum()!r}")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimMismatch(f"member dimensions differ: {sorted(dims)}")
        keep = probs >= DROP_BELOW
        probs = probs[keep] / probs[keep].sum()
        object.__setattr__(self, "probabilities", tuple(float(x) for x in probs))
        object.__setattr__(self, "states", tuple(s for s, k in zip(states, keep) if k))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, DensityMatrix]]) -> "Ensemble":
        pairs = list(pairs)
        return cls(tuple(p for p, _ in pairs), tuple(s for _, s in pairs))

    @classmethod
    def singleton(cls, rho: DensityMatrix) -> "Ensemble":
        return cls((1.0,), (rho,))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.probabilities, self.states))

    @property
    def p(self) -> np.ndarray:
        return np.array(self.probabilities)

    def average_state(self) -> DensityMatrix:
        return DensityMatrix(sum(p * s.matrix for p, s in self))

    def map_states(self, fn) -> "Ensemble":
        return Ensemble(self.probabilities, tuple(fn(s) for s in self.states))

    def conjugate(self, u: Unitary) -> "Ensemble":
        return self.map_states(lambda s: apply_unitary(s, u))

    def apply_channel(self, ch) -> "Ensemble":
        return self.map_states(lambda s: apply_kraus(s, ch))

    def with_probabilities(self, probs) -> "Ensemble":
        return Ensemble(tuple(probs), self.states)


def _check_same_dim(e: Ensemble, f: Ensemble) -> None:
    if e.dim != f.dim:
        raise DimMismatch(f"ensembles live in dimensions {e.dim} and {f.dim}")


def pairwise(kind, e: Ensemble, f: Ensemble) -> np.ndarray:
    """Matrix of X(rho_i, sigma_j)."""
    _check_same_dim(e, f)
    return np.array([[measure(kind, r, s) for s in f.states] for r in e.states])


def ensemble_measure(kind, e: Ensemble, f: Ensemble) -> tuple[float, Coupling]:
    """inf over couplings c of sum_ij c_ij X(rho_i, sigma_j).

    The infimum of a similarity pairs members as badly as possible; see
    :func:`ensemble_measure_sup` for the best matching.
    """
    coupling, value = transportation_solve(pairwise(kind, e, f), e.p, f.p)
    return value, coupling


def ensemble_measure_sup(kind, e: Ensemble, f: Ensemble) -> tuple[float, Coupling]:
    """sup over couplings of sum_ij c_ij X(rho_i, sigma_j)."""
    coupling, value = transportation_maximize(pairwise(kind, e, f), e.p, f.p)
    return value, coupling


def transport_distance(kind, e: Ensemble, f: Ensemble) -> tuple[float, Coupling]:
    """inf over couplings of sum_ij c_ij d_X(rho_i, sigma_j), with its coupling."""
    _check_same_dim(e, f)
    cost = np.array([[distance(kind, r, s) for s in f.states] for r in e.states])
    coupling, value = transportation_solve(cost, e.p, f.p)
    return value, coupling


def ensemble_distance(kind, e: Ensemble, f: Ensemble) -> float:
    """Optimal-transport distance between ensembles with member cost 1 - X.

    Equals 1 - sup_c sum c_ij X; both routes are computed and must agree.
    """
    value, _ = transport_distance(kind, e, f)
    sup, _ = ensemble_measure_sup(kind, e, f)
    if abs(value - (1.0 - sup)) > 1e-9:
        raise ArithmeticError(f"transport routes disagree: {value!r} vs {1.0 - sup!r}")
    return max(value, 0.0)


def ensemble_distance_inf(kind, e: Ensemble, f: Ensemble) -> float:
    """1 - ensemble_measure(kind, e, f), i.e. one minus the infimum over couplings."""
    return 1.0 - ensemble_measure(kind, e, f)[0]


def member_coherences(kind, e: Ensemble, basis: Unitary) -> np.ndarray:
    return np.array([coherence(kind, s, basis).value for s in e.states])


def ensemble_coherence(kind, e: Ensemble, basis: Unitary) -> float:
    """Probability-weighted average of member coherences."""
    if e.dim != basis.dim:
        raise DimMismatch(f"ensemble dimension {e.dim} vs basis dimension {basis.dim}")
    return float(e.p @ member_coherences(kind, e, basis))


def nearest_incoherent_ensemble(kind, e: Ensemble, basis: Unitary) -> Ensemble:
    """{(p_i, delta_i)} with delta_i the closest incoherent state to rho_i."""
    return e.map_states(lambda s: coherence(kind, s, basis).optimizer.state())


def dephased_ensemble(e: Ensemble, basis: Unitary) -> Ensemble:
    return e.map_states(lambda s: dephase(s, basis))


def random_incoherent_ensemble(dim: int, size: int, basis: Unitary, seed: SeedLike) -> Ensemble:
    from .states import diagonal_state

    rng = make_rng(seed)
    probs = rng.dirichlet(np.ones(size))
    states = tuple(diagonal_state(rng.dirichlet(np.full(dim, 0.5)), basis) for _ in range(size))
    return Ensemble(tuple(probs), states)


@dataclass(frozen=True)
class DefinitionalReport:
    value: float
    nearest: float
    dephased: float
    random_best: float


def definitional_report(kind, e: Ensemble, basis: Unitary, trials: int, seed: SeedLike) -> DefinitionalReport:
    """Upper-bound the infimum of the transport distance to incoherent ensembles.

    Candidates: the ensemble of nearest incoherent states, the ensemble of
    dephased members, and ``trials`` random incoherent ensembles of at most
    2|I| members.
    """
    if e.dim != basis.dim:
        raise DimMismatch(f"ensemble dimension {e.dim} vs basis dimension {basis.dim}")
    kind = MeasureKind.parse(kind)
    nearest = transport_distance(kind, e, nearest_incoherent_ensemble(kind, e, basis))[0]
    dephased = transport_distance(kind, e, dephased_ensemble(e, basis))[0]
    rng = make_rng(seed)
    random_best = np.inf
    for _ in range(trials):
        size = int(rng.integers(1, 2 * len(e) + 1))
        cand = random_incoherent_ensemble(e.dim, size, basis, rng)
        random_best = min(random_best, transport_distance(kind, e, cand)[0])
    value = min(nearest, dephased, random_best)
    return DefinitionalReport(float(value), float(nearest), float(dephased), float(random_best))


def ensemble_coherence_definitional(kind, e: Ensemble, basis: Unitary, trials: int = 20,
                                    seed: SeedLike = 0) -> float:
    return definitional_report(kind, e, basis, trials, seed).value


def union(parts: Sequence[tuple[float, Ensemble]]) -> Ensemble:
    """Probabilistic union: members of part mu get probability lambda_mu * p_mu_i."""
    weights = np.array([w for w, _ in parts], dtype=float)
    if weights.size == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > PROB_TOL:
        raise BadWeights(f"union weights {weights} are not a distribution")
    dims = {part.dim for _, part in parts}
    if len(dims) != 1:
        raise DimMismatch(f"union of ensembles in dimensions {sorted(dims)}")
    probs, states = [], []
    for w, part in parts:
        for p, s in part:
            probs.append(w * p)
            states.append(s)
    return Ensemble(tuple(probs), tuple(states))


def fine_grain(e: Ensemble, decomposition: Sequence[Sequence[tuple[float, DensityMatrix]]]) -> Ensemble:
    """Replace each member rho_i by its decomposition sum_mu lambda_imu rho_imu."""
    if len(decomposition) != len(e):
        raise BadDecomposition("need one decomposition per member")
    probs, states = [], []
    for (p, rho), parts in zip(e, decomposition):
        lam = np.array([w for w, _ in parts], dtype=float)
        if lam.size == 0 or np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
            raise BadDecomposition(f"decomposition weights {lam} are not a distribution")
        recombined = sum(w * s.matrix for w, s in parts)
        if np.max(np.abs(recombined - rho.matrix)) > 1e-9:
            raise BadDecomposition("decomposition does not recombine to the member state")
        for w, s in parts:
            probs.append(p * w)
            states.append(s)
    return Ensemble(tuple(probs), tuple(states))


def coarse_grain(e: Ensemble, partition: Sequence[Sequence[int]]) -> Ensemble:
    """Merge the members of each block into their probability-weighted average."""
    seen = sorted(i for block in partition for i in block)
    if seen != list(range(len(e))) or any(len(block) == 0 for block in partition):
        raise BadPartition(f"{partition} is not a partition of {len(e)} indices")
    probs, states = [], []
    for block in partition:
        pb = sum(e.probabilities[i] for i in block)
        if pb < DROP_BELOW:
            continue
        avg = sum(e.probabilities[i] * e.states[i].matrix for i in block) / pb
        probs.append(pb)
        states.append(DensityMatrix(avg))
    return Ensemble(tuple(probs), tuple(states))
