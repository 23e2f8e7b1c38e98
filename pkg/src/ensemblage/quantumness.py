"""Quantumness of an ensemble: the smallest average coherence over all bases.

A basis is parametrized by d(d-1)/2 complex Givens rotations applied in the
plane order (0,1), (0,2), ..., (d-2,d-1). Diagonal phases are left out since
multiplying basis kets by phases does not change the projectors.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .coherence import coherence, coherence_fidelity
from .errors import DimMismatch, NoConvergence, UnsupportedDim
from .ensemble import Ensemble
from .measures import MeasureKind
from .states import (DensityMatrix, SeedLike, Unitary, apply_unitary, dephasing_channel, haar_unitary,
                     make_rng, spawn_seeds)

ORACLE_TOL = 2e-3


def planes(dim: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(dim - 1) for q in range(p + 1, dim)]


def givens(dim: int, p: int, q: int, theta: float, phi: float) -> np.ndarray:
    g = np.eye(dim, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    g[p, p] = g[q, q] = c
    g[p, q] = -np.exp(-1j * phi) * s
    g[q, p] = np.exp(1j * phi) * s
    return g


@dataclass(frozen=True, eq=False)
class UnitaryParams:
    """Rotation angles (theta, phi), one pair per plane, as a (K, 2) array."""

    dim: int
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float).reshape(-1, 2)
        if a.shape[0] != self.dim * (self.dim - 1) // 2:
            raise DimMismatch(f"{a.shape[0]} angle pairs for dimension {self.dim}")
        object.__setattr__(self, "angles", a)

    @property
    def flat(self) -> np.ndarray:
        return self.angles.ravel()

    def matrix(self) -> np.ndarray:
        return compose(self.dim, self.flat)

    def unitary(self) -> Unitary:
        return Unitary(self.matrix())

    @classmethod
    def from_unitary(cls, u: Unitary) -> "UnitaryParams":
        """Angles whose composition equals ``u`` up to right-multiplied phases.

        Left-multiplying by the inverse rotations in plane order zeroes the
        entries below the diagonal column by column; theta lands in [0, pi/2]
        and phi in [0, 2 pi).
        """
        w = np.array(u.matrix, dtype=complex)
        d = u.dim
        out = []
        for p, q in planes(d):
            x, y = w[p, p], w[q, p]
            if abs(y) < 1e-15:
                theta, phi = 0.0, 0.0
            else:
                theta = float(np.arctan2(abs(y), abs(x)))
                phi = float(np.mod(np.angle(y) - (np.angle(x) if abs(x) > 1e-15 else 0.0), 2 * np.pi))
            out.append((theta, phi))
            g = givens(d, p, q, theta, phi)
            w = g.conj().T @ w
        return cls(d, np.array(out).reshape(-1, 2))


def compose(dim: int, flat: np.ndarray) -> np.ndarray:
    u = np.eye(dim, dtype=complex)
    for k, (p, q) in enumerate(planes(dim)):
        u = u @ givens(dim, p, q, flat[2 * k], flat[2 * k + 1])
    return u


def qubit_bases(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stack of 2x2 bases [[c, -e^{-i phi} s], [e^{i phi} s, c]] for paired arrays."""
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.conj(e) * s
    out[..., 1, 0] = e * s
    out[..., 1, 1] = c
    return out


def _diag_batch(m: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Re diag(U^dagger m U) for each U in the stack, unrolled over the d^2 entries of m."""
    d = m.shape[0]
    uc = us.conj()
    out = np.zeros(us.shape[:-2] + (d,))
    for k in range(d):
        for l in range(d):
            if m[k, l] != 0:
                out += np.real(m[k, l] * uc[..., k, :] * us[..., l, :])
    return out


def _member_coherence_batch(kind: MeasureKind, rho: DensityMatrix, us: np.ndarray) -> np.ndarray:
    """Coherence of rho in each basis of the stack ``us`` (shape (G, d, d))."""
    if kind is MeasureKind.AFFINITY:
        a = _diag_batch(rho.sqrt, us)
        a = np.clip(a, 0.0, None)
        return 1.0 - np.sqrt(np.sum(a * a, axis=-1))
    if rho.is_pure():
        amps = np.abs(np.einsum("gki,k->gi", us.conj(), rho.top_vector))
        return 1.0 - amps.max(axis=-1)
    if rho.dim == 2:
        off = np.sum(us[:, :, 0].conj() * (us[:, :, 1] @ rho.matrix.T), axis=-1)
        disc = np.sqrt(np.clip(1.0 - 4.0 * np.abs(off) ** 2, 0.0, None))
        return 1.0 - np.sqrt(0.5 * (1.0 + disc))
    return np.array([coherence_fidelity(rho, Unitary(u)).value for u in us])


def average_coherence_batch(kind, e: Ensemble, us: np.ndarray) -> np.ndarray:
    kind = MeasureKind.parse(kind)
    us = np.asarray(us, dtype=complex)
    if us.shape[-1] != e.dim:
        raise DimMismatch(f"bases of dimension {us.shape[-1]} for an ensemble of dimension {e.dim}")
    total = np.zeros(us.shape[0])
    for p, rho in e:
        total += p * _member_coherence_batch(kind, rho, us)
    return np.clip(total, 0.0, 1.0)


def basis_average_coherence(kind, e: Ensemble, u: Unitary) -> float:
    """sum_i p_i C_X(rho_i) with coherence taken in the basis given by the columns of u."""
    if e.dim != u.dim:
        raise DimMismatch(f"ensemble dimension {e.dim} vs basis dimension {u.dim}")
    return float(sum(p * coherence(kind, rho, u).value for p, rho in e))


def threads() -> int:
    env = os.environ.get("ENSEMBLAGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 24
    seed: int = 0
    simplex_scale: float = 0.3
    tol: float = 1e-10
    max_iter: int = 4000


@dataclass(frozen=True)
class QuantumnessResult:
    value: float
    basis: Unitary
    params: UnitaryParams
    trace: tuple = field(default_factory=tuple)  # (start label, converged value, converged?)
    converged: bool = True


def _objective(kind: MeasureKind, e: Ensemble):
    d = e.dim

    def f(x):
        return float(average_coherence_batch(kind, e, compose(d, x)[None])[0])

    return f


def _run_start(f, x0: np.ndarray, cfg: OptimizerConfig):
    n = x0.size
    simplex = np.vstack([x0] + [x0 + cfg.simplex_scale * np.eye(n)[k] for k in range(n)])
    res = minimize(f, x0, method="Nelder-Mead",
                   options=dict(initial_simplex=simplex, xatol=np.inf, fatol=cfg.tol,
                                maxiter=cfg.max_iter, maxfev=4 * cfg.max_iter))
    return float(res.fun), np.asarray(res.x), res.status == 0


def quantumness(kind, e: Ensemble, cfg: OptimizerConfig | None = None) -> QuantumnessResult:
    """min over bases of the average member coherence, by multi-start Nelder-Mead.

    Starts: ``cfg.restarts`` Haar-random bases drawn from child streams of
    ``cfg.seed``, plus the eigenbasis of the average state. The result does
    not depend on the thread count.
    """
    cfg = cfg or OptimizerConfig()
    kind = MeasureKind.parse(kind)
    d = e.dim
    if d == 1:
        one = UnitaryParams(1, np.zeros((0, 2)))
        return QuantumnessResult(0.0, Unitary.identity(1), one, (("eig", 0.0, True),))
    starts = [("eig", UnitaryParams.from_unitary(Unitary(e.average_state().spectral.eigenvectors)).flat)]
    for k, ss in enumerate(spawn_seeds(cfg.seed, cfg.restarts)):
        starts.append((str(k), UnitaryParams.from_unitary(haar_unitary(d, np.random.default_rng(ss))).flat))
    f = _objective(kind, e)
    workers = min(threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(lambda s: _run_start(f, s[1], cfg), starts))
    else:
        runs = [_run_start(f, x0, cfg) for _, x0 in starts]
    trace = tuple((label, val, ok) for (label, _), (val, _, ok) in zip(starts, runs))
    best_val = min(val for val, _, _ in runs)
    ties = [x for val, x, _ in runs if val <= best_val]
    x = min(ties, key=lambda v: tuple(v))
    # fold the unconstrained search angles back into theta in [0, pi/2], phi in [0, 2 pi)
    params = UnitaryParams.from_unitary(Unitary(compose(d, x)))
    basis = Unitary(params.matrix())
    value = float(f(params.flat))
    result = QuantumnessResult(value, basis, params, trace, any(ok for _, _, ok in runs))
    if not result.converged:
        raise NoConvergence("every Nelder-Mead restart exhausted its budget", best=result)
    return result


@dataclass(frozen=True)
class GridResult:
    value: float
    theta: float
    phi: float


def _qubit_values(kind: MeasureKind, e: Ensemble, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Average coherence in the qubit bases (theta, phi), in real arithmetic.

    A qubit basis is fixed by its first ket b = (cos t, e^{i phi} sin t), and
    for any operator M, <b|M|b> = c^2 M00 + s^2 M11 + 2 c s Re(e^{i phi} M01).
    """
    c, s = np.cos(theta), np.sin(theta)
    cc, ss, cs = c * c, s * s, 2.0 * c * s
    cp, sp = np.cos(phi), np.sin(phi)

    def first(m):
        return cc * m[0, 0].real + ss * m[1, 1].real + cs * (cp * m[0, 1].real - sp * m[0, 1].imag)

    total = np.zeros(np.broadcast(theta, phi).shape)
    for p, rho in e:
        if kind is MeasureKind.AFFINITY:
            sq = rho.sqrt
            a0 = np.clip(first(sq), 0.0, None)
            a1 = np.clip(np.trace(sq).real - a0, 0.0, None)
            total += p * (1.0 - np.sqrt(a0 * a0 + a1 * a1))
        else:
            # |rho'_01|^2 = x (1 - x) - det rho in the rotated basis
            x = first(rho.matrix)
            det = float(np.prod(rho.spectral.eigenvalues))
            disc = np.sqrt(np.clip(1.0 - 4.0 * (x * (1.0 - x) - det), 0.0, None))
            total += p * (1.0 - np.sqrt(0.5 * (1.0 + disc)))
    return np.clip(total, 0.0, 1.0)


@lru_cache(maxsize=8)
def _grid(steps: int) -> tuple[np.ndarray, np.ndarray]:
    thetas = np.linspace(0.0, np.pi / 2, steps)
    phis = np.arange(steps) * (2 * np.pi / steps)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    tt.setflags(write=False)
    pp.setflags(write=False)
    return tt, pp


def grid_oracle_detail(kind, e: Ensemble, steps: int = 400) -> GridResult:
    if e.dim != 2:
        raise UnsupportedDim("the basis grid oracle is qubit-only")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    kind = MeasureKind.parse(kind)
    tt, pp = _grid(steps)
    vals = _qubit_values(kind, e, tt, pp)
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    t0, p0, best = tt[i, j], pp[i, j], float(vals[i, j])
    # refine one cell either side at ten times the resolution
    dt, dp = np.pi / 2 / (steps - 1), 2 * np.pi / steps
    fine_t = np.clip(t0 + np.linspace(-dt, dt, 21), 0.0, np.pi / 2)
    fine_p = p0 + np.linspace(-dp, dp, 21)
    ft, fp = np.meshgrid(fine_t, fine_p, indexing="ij")
    fvals = _qubit_values(kind, e, ft, fp)
    k = int(np.argmin(fvals))
    if fvals.ravel()[k] < best:
        return GridResult(float(fvals.ravel()[k]), float(ft.ravel()[k]), float(np.mod(fp.ravel()[k], 2 * np.pi)))
    return GridResult(best, float(t0), float(p0))


def grid_oracle_qubit(kind, e: Ensemble, steps: int = 400) -> float:
    """Exhaustive minimization over qubit bases on a steps x steps angle grid."""
    return grid_oracle_detail(kind, e, steps).value


def quantumness_value(kind, e: Ensemble, steps: int = 400, cfg: OptimizerConfig | None = None) -> float:
    """Grid oracle for qubits, the optimizer otherwise."""
    if e.dim == 2:
        return grid_oracle_qubit(kind, e, steps)
    return quantumness(kind, e, cfg).value


def random_classical_ensemble(dim: int, size: int, seed: SeedLike) -> Ensemble:
    """Commuting ensemble: random diagonal states rotated by one shared Haar unitary."""
    rng = make_rng(seed)
    u = haar_unitary(dim, rng).matrix
    probs = rng.dirichlet(np.ones(size))
    states = []
    for _ in range(size):
        w = rng.dirichlet(np.ones(dim))
        states.append(DensityMatrix((u * w) @ u.conj().T))
    return Ensemble(tuple(probs), tuple(states))


@dataclass(frozen=True)
class CPOReport:
    op: str
    trials: int
    max_violation: float
    violations: tuple
    passed: bool


def cpo_monotonicity_check(kind, e: Ensemble, op: str, trials: int = 10, seed: SeedLike = 0,
                           steps: int = 400, cfg: OptimizerConfig | None = None,
                           tol: float = ORACLE_TOL) -> CPOReport:
    """Check Q(M(E)) <= Q(E) + tol for commutativity-preserving maps M.

    ``op`` is "unitary" (random Haar conjugation), "dephasing" (full dephasing
    in a random basis) or "identity".
    """
    if op not in ("unitary", "dephasing", "identity"):
        raise ValueError(f"unsupported operation {op!r}")
    rng = make_rng(seed)
    q0 = quantumness_value(kind, e, steps, cfg)
    worst = -np.inf
    bad = []
    for t in range(trials):
        u = haar_unitary(e.dim, rng)
        if op == "unitary":
            mapped = e.conjugate(u)
        elif op == "dephasing":
            mapped = e.apply_channel(dephasing_channel(u))
        else:
            mapped = e
        q1 = quantumness_value(kind, mapped, steps, cfg)
        excess = q1 - q0
        worst = max(worst, excess)
        if excess > tol:
            bad.append((t, q0, q1))
    return CPOReport(op, trials, float(worst), tuple(bad), not bad)
