"""Closeness of two states: root fidelity, affinity and the distance 1 - X."""

from __future__ import annotations

import enum

import numpy as np

from . import linalg
from .errors import DimMismatch
from .states import DensityMatrix, KrausChannel

RANGE_SLACK = 1e-6


class MeasureKind(str, enum.Enum):
    FIDELITY = "fidelity"
    AFFINITY = "affinity"

    @classmethod
    def parse(cls, name) -> "MeasureKind":
        if isinstance(name, cls):
            return name
        return cls(str(name).lower())


def _clamp(x: float) -> float:
    if not -RANGE_SLACK <= x <= 1 + RANGE_SLACK:
        raise ArithmeticError(f"closeness value {x!r} outside [0, 1]")
    return min(max(x, 0.0), 1.0)


def _same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise DimMismatch(f"dimension {rho.dim} does not match {sigma.dim}")


def _fidelity_op(a: np.ndarray, b: np.ndarray) -> float:
    """Tr[(sqrt(b) a sqrt(b))^(1/2)] for PSD operators of any trace."""
    sb = linalg.sqrt_psd(b)
    return linalg.trace_sqrt_psd(sb @ a @ sb)


def _affinity_op(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.trace(linalg.sqrt_psd(a) @ linalg.sqrt_psd(b)).real)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root fidelity Tr[(sqrt(sigma) rho sqrt(sigma))^(1/2)].

    For pure states this is |<psi|phi>|, not its square.
    """
    _same_dim(rho, sigma)
    s = sigma.sqrt
    return _clamp(linalg.trace_sqrt_psd(s @ rho.matrix @ s))


def fidelity_symmetric(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """The same quantity sandwiched the other way, Tr[(sqrt(rho) sigma sqrt(rho))^(1/2)]."""
    return fidelity(sigma, rho)


def affinity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _same_dim(rho, sigma)
    return _clamp(float(np.trace(rho.sqrt @ sigma.sqrt).real))


def measure(kind, rho: DensityMatrix, sigma: DensityMatrix) -> float:
    kind = MeasureKind.parse(kind)
    if kind is MeasureKind.FIDELITY:
        return fidelity(rho, sigma)
    return affinity(rho, sigma)


def distance(kind, rho: DensityMatrix, sigma: DensityMatrix) -> float:
    return 1.0 - measure(kind, rho, sigma)


def measure_unnormalized(kind, a: np.ndarray, b: np.ndarray) -> float:
    """X evaluated by the same trace formula on PSD operators without renormalizing.

    Only used by the projective-additivity and superselection checks.
    """
    kind = MeasureKind.parse(kind)
    if kind is MeasureKind.FIDELITY:
        return _fidelity_op(a, b)
    return _affinity_op(a, b)


def projective_additivity_gap(kind, rho: DensityMatrix, sigma: DensityMatrix, basis: np.ndarray) -> float:
    """|X(sum_i P_i rho P_i, sum_i P_i sigma P_i) - sum_i X(P_i rho P_i, P_i sigma P_i)| for
    rank-one projectors P_i onto the columns of ``basis``."""
    _same_dim(rho, sigma)
    projs = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(basis.shape[1])]
    blocks_r = [p @ rho.matrix @ p for p in projs]
    blocks_s = [p @ sigma.matrix @ p for p in projs]
    whole = measure(kind, DensityMatrix(sum(blocks_r)), DensityMatrix(sum(blocks_s)))
    parts = sum(measure_unnormalized(kind, a, b) for a, b in zip(blocks_r, blocks_s))
    return abs(whole - parts)


def superselection_excess(kind, rho: DensityMatrix, sigma: DensityMatrix, ch: KrausChannel) -> float:
    """sum_i X(K_i rho K_i^dagger, K_i sigma K_i^dagger) - X(rho, sigma); should be >= 0."""
    _same_dim(rho, sigma)
    total = 0.0
    for k in ch.operators:
        total += measure_unnormalized(kind, k @ rho.matrix @ k.conj().T, k @ sigma.matrix @ k.conj().T)
    return total - measure(kind, rho, sigma)
