"""Small dense complex linear algebra.

Everything here works on plain ``numpy`` complex arrays of shape (d, d) with
d at most a few dozen. The Hermitian eigensolver is a cyclic two-sided Jacobi
iteration, which converges unconditionally and gives reproducible output.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, NoConvergence, NotHermitian, NotPSD

HERMITIAN_TOL = 1e-10
CLIP = 1e-10
SNAP_REL = 1e-14  # eigenvalues below this fraction of the largest are roundoff
PHASE_EPS = 1e-12
MAX_SWEEPS = 100


class SpectralDecomposition(NamedTuple):
    """Eigenvalues in ascending order and the matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] in place with a unitary acting on the (p, q) plane."""
    apq = a[p, q]
    mag = abs(apq)
    app, aqq = a[p, p].real, a[q, q].real
    phase = apq / mag
    theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
    c, s = np.cos(theta), np.sin(theta)
    # columns: (c, -s e^{-ia}) and (s, c e^{-ia})
    j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ j
    a[idx, :] = j.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ j


def normalize_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > PHASE_EPS)
        if nz.size:
            lead = col[nz[0]]
            out[:, k] = col * (abs(lead) / lead)
    return out


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Raises NotHermitian when ``max |m - m^dagger| > tol`` and NoConvergence if the
    off-diagonal mass is still above ``tol * dim`` after MAX_SWEEPS sweeps.
    """
    m = as_matrix(m)
    if hermiticity_defect(m) > tol:
        raise NotHermitian(f"hermiticity defect {hermiticity_defect(m):.3g} > {tol:.3g}")
    n = m.shape[0]
    a = 0.5 * (m + m.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.sqrt(np.sum(np.abs(a) ** 2))))
    target = 1e-15 * scale

    for _ in range(MAX_SWEEPS):
        if _offdiag_norm(a) <= target:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-300 and abs(a[p, q]) > 1e-18 * scale:
                    _rotate(a, v, p, q)
                    rotated = True
        if not rotated:
            break
    off = _offdiag_norm(a)
    if off > tol * n:
        raise NoConvergence(f"Jacobi off-diagonal mass {off:.3g} after {MAX_SWEEPS} sweeps")

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], normalize_phases(v[:, order]))


def _clean(lam: np.ndarray) -> np.ndarray:
    """Clamp negatives to 0 and drop roundoff-sized eigenvalues.

    sqrt amplifies a stray 1e-17 into 3e-9, so this matters for rank-deficient input.
    """
    top = max(float(lam[-1]), 0.0) if lam.size else 0.0
    return np.where(lam <= SNAP_REL * top, 0.0, lam)


def psd_function(spec: SpectralDecomposition, f, clip: float = CLIP) -> np.ndarray:
    lam = spec.eigenvalues
    if lam.size and lam[0] < -clip:
        raise NotPSD(f"eigenvalue {lam[0]:.3g} below -{clip:.1g}")
    vals = f(_clean(lam))
    v = spec.eigenvectors
    return (v * vals) @ v.conj().T


def sqrt_psd(m, clip: float = CLIP) -> np.ndarray:
    """Principal square root of a PSD matrix; eigenvalues in [-clip, 0) count as 0."""
    return psd_function(hermitian_eig(m), np.sqrt, clip)


def trace(m) -> complex:
    return complex(np.trace(as_matrix(m)))


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def trace_sqrt_psd(m, clip: float = CLIP) -> float:
    """Tr sqrt(m) for PSD m, i.e. the sum of square roots of its eigenvalues."""
    lam = hermitian_eig(m).eigenvalues
    if lam.size and lam[0] < -clip * max(1.0, abs(lam[-1])):
        raise NotPSD(f"eigenvalue {lam[0]:.3g} below -{clip:.1g}")
    return float(np.sum(np.sqrt(_clean(lam))))
