"""Quantum states, unitaries and channels.

Constructors repair tiny numerical defects (hermiticity noise, eigenvalues just
below zero, trace off by rounding) and refuse anything larger.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import linalg
from .errors import BadRank, DimMismatch, InvalidState, NotPSD

STATE_TOL = 1e-10
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
KRAUS_TOL = 1e-9
BRANCH_CUTOFF = 1e-12

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Normalize a seed into a Generator (a Generator passes through untouched)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent child streams of ``seed``; child k never depends on n."""
    return np.random.SeedSequence(seed).spawn(n)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    spectral: linalg.SpectralDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if linalg.hermiticity_defect(m) > STATE_TOL:
            raise InvalidState(f"not Hermitian (defect {linalg.hermiticity_defect(m):.3g})")
        spec = linalg.hermitian_eig(m, tol=STATE_TOL)
        lam = spec.eigenvalues
        if lam[0] < -STATE_TOL:
            raise NotPSD(f"eigenvalue {lam[0]:.3g} is negative")
        tr = float(np.sum(lam))
        if abs(tr - 1.0) > STATE_TOL:
            raise InvalidState(f"trace {tr!r} is not 1")
        lam = np.where(lam <= linalg.SNAP_REL * lam[-1], 0.0, lam)
        lam = lam / lam.sum()
        spec = linalg.SpectralDecomposition(lam, spec.eigenvectors)
        m = 0.5 * (m + m.conj().T)
        m = m / np.trace(m).real
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "spectral", spec)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def sqrt(self) -> np.ndarray:
        s = linalg.psd_function(self.spectral, np.sqrt)
        s.setflags(write=False)
        return s

    @property
    def purity(self) -> float:
        return float(np.sum(self.spectral.eigenvalues ** 2))

    def is_pure(self, tol: float = 1e-12) -> bool:
        return self.spectral.eigenvalues[-1] >= 1.0 - tol

    @property
    def top_vector(self) -> np.ndarray:
        return self.spectral.eigenvectors[:, -1]

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, eigenvalues={np.round(self.spectral.eigenvalues, 6)})"


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"ket norm {norm!r} is not 1")
        a = a / norm
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(a / np.linalg.norm(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class Unitary:
    """A unitary matrix. As a basis, its columns are the reference kets."""

    matrix: np.ndarray

    def __post_init__(self):
        u = linalg.as_matrix(self.matrix)
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > UNITARY_TOL:
            raise InvalidState(f"not unitary (defect {err:.3g})")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Unitary":
        return cls(np.eye(dim, dtype=complex))

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = [linalg.as_matrix(k) for k in self.operators]
        if not ops:
            raise InvalidState("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise DimMismatch("Kraus operators must share one square shape")
        total = sum(k.conj().T @ k for k in ops)
        err = np.max(np.abs(total - np.eye(d)))
        if err > KRAUS_TOL:
            raise InvalidState(f"sum K^dagger K deviates from identity by {err:.3g}")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "operators", tuple(ops))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ket(*amplitudes) -> PureState:
    return PureState.normalized(amplitudes)


def density_from_pure(psi: PureState) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix(np.outer(a, a.conj()))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim) / dim)


def diagonal_state(weights: Sequence[float], basis: Unitary | None = None) -> DensityMatrix:
    w = np.asarray(weights, dtype=float)
    m = np.diag(w).astype(complex)
    if basis is not None:
        m = basis.matrix @ m @ basis.matrix.conj().T
    return DensityMatrix(m)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimMismatch(f"dimension {a} does not match {b}")


def dephase(rho: DensityMatrix, basis: Unitary) -> DensityMatrix:
    """Post-measurement state of a von Neumann measurement in ``basis``."""
    _check_dims(rho.dim, basis.dim)
    u = basis.matrix
    diag = np.real(np.einsum("ki,kl,li->i", u.conj(), rho.matrix, u))
    return DensityMatrix((u * diag) @ u.conj().T)


def apply_unitary(rho: DensityMatrix, u: Unitary) -> DensityMatrix:
    _check_dims(rho.dim, u.dim)
    return DensityMatrix(u.matrix @ rho.matrix @ u.matrix.conj().T)


def apply_kraus(rho: DensityMatrix, ch: KrausChannel) -> DensityMatrix:
    _check_dims(rho.dim, ch.dim)
    out = sum(k @ rho.matrix @ k.conj().T for k in ch.operators)
    return DensityMatrix(out)


def kraus_branches(rho: DensityMatrix, ch: KrausChannel) -> list[tuple[float, DensityMatrix]]:
    """Selective outcomes (p_i, K_i rho K_i^dagger / p_i), dropping p_i <= 1e-12."""
    _check_dims(rho.dim, ch.dim)
    out = []
    for k in ch.operators:
        m = k @ rho.matrix @ k.conj().T
        p = float(np.trace(m).real)
        if p > BRANCH_CUTOFF:
            out.append((p, DensityMatrix(m / p)))
    return out


def computational_projectors(dim: int) -> KrausChannel:
    ops = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1.0
        ops.append(p)
    return KrausChannel(tuple(ops))


def dephasing_channel(basis: Unitary) -> KrausChannel:
    u = basis.matrix
    return KrausChannel(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(basis.dim)))


def depolarizing_qubit(p: float) -> KrausChannel:
    ops = [np.sqrt(1 - 3 * p / 4) * PAULI_I] + [np.sqrt(p / 4) * s for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    return KrausChannel(tuple(ops))


def haar_unitary(dim: int, seed: SeedLike) -> Unitary:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase-fixed R."""
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = make_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Unitary(q)


def random_density(dim: int, rank: int | None, seed: SeedLike) -> DensityMatrix:
    """G G^dagger / Tr(G G^dagger) for a dim x rank complex Gaussian G."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise BadRank(f"rank {rank} outside [1, {dim}]")
    rng = make_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_pure(dim: int, seed: SeedLike) -> PureState:
    rng = make_rng(seed)
    return PureState.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_kraus(dim: int, n_ops: int, seed: SeedLike) -> KrausChannel:
    """Random channel from a Haar isometry dim -> n_ops*dim cut into blocks."""
    rng = make_rng(seed)
    big = haar_unitary(dim * n_ops, rng).matrix[:, :dim]
    return KrausChannel(tuple(big[i * dim:(i + 1) * dim] for i in range(n_ops)))


def random_incoherent_channel(dim: int, n_ops: int, seed: SeedLike) -> KrausChannel:
    """Channel whose Kraus operators each map basis kets to multiples of basis kets.

    Each operator is D_k P_k with P_k a random permutation and D_k diagonal;
    the diagonals are normalized so that sum_k K_k^dagger K_k = 1.
    """
    rng = make_rng(seed)
    perms = [rng.permutation(dim) for _ in range(n_ops)]
    amps = rng.standard_normal((n_ops, dim)) + 1j * rng.standard_normal((n_ops, dim))
    # K_k = sum_j amps[k, j] |perm_k(j)><j| ; column j of all K_k stacked must have unit norm
    amps = amps / np.linalg.norm(amps, axis=0, keepdims=True)
    ops = []
    for k in range(n_ops):
        m = np.zeros((dim, dim), dtype=complex)
        m[perms[k], np.arange(dim)] = amps[k]
        ops.append(m)
    return KrausChannel(tuple(ops))


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.matrix, b.matrix))


def commute(a: DensityMatrix, b: DensityMatrix, tol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(a.matrix @ b.matrix - b.matrix @ a.matrix)) <= tol)
