"""Coherence of a single state with respect to a reference basis.

The coherence is ``1 - max_delta X(rho, delta)`` where delta ranges over states
diagonal in the basis. A basis is a :class:`Unitary` whose columns are the
reference kets, so coherence in a rotated basis needs no special handling.

Affinity has an exact maximizer for every state. Fidelity has one for pure
states and for qubits. Otherwise the concave map ``delta -> F(rho, delta)`` is
maximized over the probability simplex. The default route runs an extrapolated
polar fixed point from the dephased weights; when that does not settle, it
falls back to projected-gradient ascent polished by the same fixed point, which
is also available on its own as ``method="ascent"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NoConvergence, UnsupportedDim
from .measures import MeasureKind, measure
from .states import DensityMatrix, Unitary, diagonal_state

SNAP = 1e-14
ASCENT_TOL = 1e-10
ASCENT_MAX_ITER = 20000
PG_MAX_ITER = 200
FD_STEP = 1e-7
REACTIVATE = 1e-3
FP_TOL = 1e-13
FP_MAX_ITER = 100
FACE_REL = 1e-3


@dataclass(frozen=True, eq=False)
class IncoherentState:
    weights: np.ndarray
    basis: Unitary

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights {w} are not a probability vector")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def state(self) -> DensityMatrix:
        return diagonal_state(self.weights, self.basis)


@dataclass(frozen=True)
class CoherenceResult:
    value: float
    optimizer: IncoherentState


def _snap(w: np.ndarray) -> np.ndarray:
    w = np.where(w < SNAP, 0.0, w)
    return w / w.sum()


def rotated(rho: DensityMatrix, basis: Unitary) -> np.ndarray:
    """Matrix of rho expressed in ``basis``: U^dagger rho U."""
    if rho.dim != basis.dim:
        raise DimMismatch(f"state dimension {rho.dim} vs basis dimension {basis.dim}")
    u = basis.matrix
    return u.conj().T @ rho.matrix @ u


def _result(value: float, weights: np.ndarray, basis: Unitary) -> CoherenceResult:
    return CoherenceResult(min(max(value, 0.0), 1.0), IncoherentState(_snap(weights), basis))


def coherence_affinity(rho: DensityMatrix, basis: Unitary) -> CoherenceResult:
    """Exact: with a_i = <b_i|sqrt(rho)|b_i>, Tr sqrt(rho) sqrt(delta) = sum_i a_i sqrt(delta_i)
    is maximized by delta_i proportional to a_i**2 (Cauchy-Schwarz)."""
    if rho.dim != basis.dim:
        raise DimMismatch(f"state dimension {rho.dim} vs basis dimension {basis.dim}")
    u = basis.matrix
    a = np.real(np.einsum("ki,kl,li->i", u.conj(), rho.sqrt, u))
    a = np.clip(a, 0.0, None)
    norm2 = float(np.sum(a * a))
    return _result(1.0 - np.sqrt(norm2), a * a / norm2, basis)


def _qubit_fidelity_max(r: np.ndarray) -> tuple[float, np.ndarray]:
    """max over t of F(rho, diag(t, 1-t)) for a 2x2 state matrix r.

    F^2 = a t + b (1-t) + 2 sqrt(t (1-t) det r) with a, b the diagonal; writing
    t = cos^2 phi turns this into a sinusoid in 2 phi.
    """
    a, b = r[0, 0].real, r[1, 1].real
    det = max(a * b - abs(r[0, 1]) ** 2, 0.0)
    half_gap = 0.5 * (a - b)
    two_phi = np.arctan2(np.sqrt(det), half_gap)
    t = np.cos(0.5 * two_phi) ** 2
    f2 = 0.5 * (a + b) + np.hypot(half_gap, np.sqrt(det))
    return float(np.sqrt(min(f2, 1.0))), np.array([t, 1.0 - t])


def _fidelity_to_diagonals(r: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """F(r, diag(delta)) for each row of ``deltas`` (negative entries read as 0)."""
    s = np.sqrt(np.clip(deltas, 0.0, None))
    m = s[:, :, None] * r[None, :, :] * s[:, None, :]
    lam = np.linalg.eigvalsh(m)
    return np.sum(np.sqrt(np.clip(lam, 0.0, None)), axis=-1)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _ascend(r: np.ndarray, start: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, bool]:
    d = start.size
    x = project_simplex(start)
    fx = float(_fidelity_to_diagonals(r, x[None])[0])
    eye = np.eye(d) * FD_STEP
    step = 0.1
    for _ in range(max_iter):
        probes = np.concatenate([x + eye, x - eye])
        vals = _fidelity_to_diagonals(r, probes)
        grad = (vals[:d] - vals[d:]) / (2 * FD_STEP)
        while True:
            y = project_simplex(x + step * grad)
            fy = float(_fidelity_to_diagonals(r, y[None])[0])
            if fy > fx:
                break
            step *= 0.5
            if step < 1e-16:
                return fx, x, True
        gain = fy - fx
        x, fx = y, fy
        step = min(step * 2.0, 10.0)
        if gain < tol:
            return fx, x, True
    return fx, x, False


def _polish(r: np.ndarray, start: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, bool]:
    """Monotone fixed point on s = sqrt(delta).

    F(r, delta) = max_W Re Tr(W sqrt(r) diag(s)); alternately take W as the
    polar factor for the current s, then s as the normalized positive part of
    the diagonal of W sqrt(r). Neither step can lower F, and unlike the
    gradient step it behaves well when the optimum sits on a face of the
    simplex.
    """
    lam, v = np.linalg.eigh(r)
    sr = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T
    s = np.sqrt(np.clip(start, 0.0, None))
    s = s / np.linalg.norm(s)
    f = -np.inf
    for _ in range(max_iter):
        u, sv, vh = np.linalg.svd(sr * s[None, :])
        f_new = float(sv.sum())
        g = np.clip(np.real(np.einsum("ij,ji->i", vh.conj().T @ u.conj().T, sr)), 0.0, None)
        if f_new - f < tol:
            return max(f, f_new), s * s, True
        f = f_new
        s = g / np.linalg.norm(g)
    return f, s * s, False


def _reactivate(r: np.ndarray, run: tuple, max_iter: int) -> tuple[float, np.ndarray, bool]:
    """Retry coordinates the search left at zero.

    The fixed point is multiplicative in s, so a weight that hit zero during the
    gradient phase stays there. Seed each such coordinate with a small weight
    and polish again, keeping any improvement, until nothing improves.
    """
    f, w, ok = run
    improved = True
    while improved:
        improved = False
        for i in np.flatnonzero(w < SNAP):
            trial = w.copy()
            trial[i] = REACTIVATE
            trial /= trial.sum()
            f2, w2, ok2 = _polish(r, trial, 1e-15, max_iter)
            if ok2 and f2 > f + 1e-15:
                f, w, ok, improved = f2, w2, True, True
                break
    return f, w, ok


def _polar_map(sr: np.ndarray, s: np.ndarray) -> tuple[float, np.ndarray]:
    """One step of the polar fixed point: F at s and the next unit vector."""
    u, sv, vh = np.linalg.svd(sr * s[None, :])
    g = np.clip(np.real(np.einsum("ij,ji->i", vh.conj().T @ u.conj().T, sr)), 0.0, None)
    return float(sv.sum()), g / np.linalg.norm(g)


def _extrapolated(r: np.ndarray, start: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, bool]:
    """Polar fixed point with squared extrapolation (SQUAREM) and a monotone safeguard.

    Stops once a plain step moves s by less than ``tol``, which unlike a small
    change in F does certify convergence of a linearly converging map.
    """
    lam, v = np.linalg.eigh(r)
    sr = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T
    s = np.sqrt(np.clip(start, 0.0, None))
    s = s / np.linalg.norm(s)
    for _ in range(max_iter):
        _, s1 = _polar_map(sr, s)
        f1, s2 = _polar_map(sr, s1)
        r1 = s1 - s
        v2 = (s2 - s1) - r1
        n1, nv = np.linalg.norm(r1), np.linalg.norm(v2)
        if n1 < tol:
            return float(np.linalg.svd(sr * s2[None, :], compute_uv=False).sum()), s2 * s2, True
        alpha = min(-n1 / nv, -1.0) if nv > 0 else -1.0
        while True:
            sp = np.clip(s - 2 * alpha * r1 + alpha * alpha * v2, 0.0, None)
            if sp.sum() > 0:
                fp, sn = _polar_map(sr, sp / np.linalg.norm(sp))
                if fp >= f1 - 1e-15:
                    break
            alpha = 0.5 * (alpha - 1.0)
            if alpha > -1.01:
                sn = s2
                break
        s = sn
    return float(np.linalg.svd(sr * s[None, :], compute_uv=False).sum()), s * s, False


def fidelity_fixed_point(r: np.ndarray, max_iter: int = FP_MAX_ITER) -> tuple[float, np.ndarray, bool]:
    """Fast simplex maximizer; the flag is False when the result is not certified.

    A run that hits the budget is usually creeping towards a face of the
    simplex, so every coordinate that has become small is dropped in turn and
    the face is solved recursively.
    """
    d = r.shape[0]
    if d == 2:
        f, w = _qubit_fidelity_max(r)
        return f, w, True
    f, w, ok = _extrapolated(r, np.clip(np.diag(r).real, 0.0, None), FP_TOL, max_iter)
    if ok:
        return f, w, True
    for i in np.flatnonzero(w < FACE_REL * w.max()):
        keep = np.delete(np.arange(d), i)
        fi, wi, _ = fidelity_fixed_point(r[np.ix_(keep, keep)], max_iter)
        if fi > f:
            f, w = fi, np.insert(wi, i, 0.0)
    return f, w, False


def fidelity_simplex_max(r: np.ndarray, tol: float = ASCENT_TOL,
                         max_iter: int = ASCENT_MAX_ITER) -> tuple[float, np.ndarray]:
    """Maximize F(r, diag(delta)) over the simplex from two starts.

    Starts are the dephased weights (the diagonal of r) and the uniform vector.
    Each start runs projected-gradient ascent and is then polished by the
    polar fixed point, with zeroed coordinates retried. The best start wins; equal values go to the
    lexicographically smaller weight vector.
    """
    d = r.shape[0]
    starts = [np.clip(np.diag(r).real, 0.0, None), np.full(d, 1.0 / d)]
    runs = []
    for s0 in starts:
        _, w, _ = _ascend(r, s0, tol, PG_MAX_ITER)
        runs.append(_reactivate(r, _polish(r, w, 1e-15, max_iter), max_iter))
    if not any(ok for _, _, ok in runs):
        best = max(runs, key=lambda t: t[0])
        raise NoConvergence("simplex ascent exhausted its budget", best=best[:2])
    runs = [run for run in runs if run[2]]
    best_val = max(v for v, _, _ in runs)
    ties = [w for v, w, _ in runs if v >= best_val - 1e-15]
    w = min(ties, key=lambda w: tuple(w))
    return min(best_val, 1.0), w


def coherence_fidelity(rho: DensityMatrix, basis: Unitary, method: str = "auto") -> CoherenceResult:
    """Fidelity-based coherence.

    ``method`` is "auto" (closed forms where they exist, the extrapolated fixed
    point otherwise) or "ascent" to force the projected-gradient search, which
    is how the other routes are cross-checked.
    """
    r = rotated(rho, basis)
    d = rho.dim
    if method == "auto" and rho.is_pure():
        overlaps = np.abs(basis.matrix.conj().T @ rho.top_vector)
        k = int(np.argmax(overlaps))
        w = np.zeros(d)
        w[k] = 1.0
        return _result(1.0 - float(overlaps[k]), w, basis)
    if method == "auto" and d == 2:
        f, w = _qubit_fidelity_max(r)
        return _result(1.0 - f, w, basis)
    if method not in ("auto", "ascent"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        f, w, ok = fidelity_fixed_point(r)
        if not ok:
            f2, w2 = fidelity_simplex_max(r)
            if f2 > f:
                f, w = f2, w2
        return _result(1.0 - f, w, basis)
    f, w = fidelity_simplex_max(r)
    return _result(1.0 - f, w, basis)


def coherence(kind, rho: DensityMatrix, basis: Unitary) -> CoherenceResult:
    kind = MeasureKind.parse(kind)
    if kind is MeasureKind.FIDELITY:
        return coherence_fidelity(rho, basis)
    return coherence_affinity(rho, basis)


def dephased_gap(kind, rho: DensityMatrix, basis: Unitary) -> float:
    """max_delta X(rho, delta) - X(rho, dephased rho); zero when the dephased state is optimal."""
    from .states import dephase

    best = 1.0 - coherence(kind, rho, basis).value
    return best - measure(kind, rho, dephase(rho, basis))


def oracle_coherence_grid(kind, rho: DensityMatrix, basis: Unitary, steps: int = 10_000) -> float:
    """Brute force over delta = (t, 1-t), t on a uniform grid, for a qubit.

    Uses LAPACK eigensolvers and the generic trace formulas, so it shares no
    code with the closed forms it referees.
    """
    kind = MeasureKind.parse(kind)
    if rho.dim != 2:
        raise UnsupportedDim("the coherence grid oracle is qubit-only")
    r = basis.matrix.conj().T @ np.asarray(rho.matrix) @ basis.matrix
    t = np.linspace(0.0, 1.0, steps + 1)
    deltas = np.stack([t, 1.0 - t], axis=1)
    if kind is MeasureKind.AFFINITY:
        lam, v = np.linalg.eigh(r)
        sr = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T
        vals = np.sqrt(deltas) @ np.real(np.diag(sr))
    else:
        vals = _fidelity_to_diagonals(r, deltas)
    return float(1.0 - np.max(vals))
