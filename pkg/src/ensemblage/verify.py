"""Randomized property suites for measures, coherence, ensembles and quantumness.

Every property draws trial t from the stream ``default_rng([seed, tag, t])``
so any reported violation can be replayed from (seed, trial) alone.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import coherence as coh
from . import ensemble as ens
from . import measures as ms
from . import quantumness as qn
from .states import (DensityMatrix, Unitary, apply_kraus, apply_unitary, dephase, diagonal_state,
                     haar_unitary, kraus_branches, random_density, random_incoherent_channel, random_kraus,
                     tensor)
from .transport import certificate_error, enumerate_vertices, transportation_solve

KINDS = (ms.MeasureKind.FIDELITY, ms.MeasureKind.AFFINITY)


@dataclass
class PropertyResult:
    property_id: str
    trials: int
    max_violation: float
    tolerance: float
    report_only: bool = False
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.report_only or self.max_violation <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "property": self.property_id,
            "trials": self.trials,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "report_only": self.report_only,
            "pass": self.passed,
            "worst": self.worst,
        }


def _rng(seed: int, tag: str, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(tag.encode()), trial])


def run_property(prop_id: str, trials: int, seed: int, tol: float,
                 trial_fn: Callable[[np.random.Generator], tuple[float, dict]],
                 report_only: bool = False) -> PropertyResult:
    """Run ``trial_fn`` per trial; it returns (violation, description of inputs).

    A violation is how far the property fails (<= 0 means it holds).
    """
    worst, info = -np.inf, {}
    for t in range(trials):
        v, desc = trial_fn(_rng(seed, prop_id, t))
        if v > worst:
            worst, info = float(v), {"seed": seed, "trial": t, **desc}
    return PropertyResult(prop_id, trials, worst, tol, report_only, info)


def _rand_state(rng, dim, rank=None):
    rank = rank or int(rng.integers(1, dim + 1))
    return random_density(dim, rank, rng)


def _rand_dim(rng, dims):
    return int(rng.choice(list(dims)))


# ---- state-pair measures -------------------------------------------------

def measure_suite(trials: int = 200, seed: int = 0, dims: Iterable[int] = (2, 3, 4)) -> list[PropertyResult]:
    dims = tuple(dims)
    out = []
    for kind in KINDS:
        k = kind.value

        def x1(rng, kind=kind):
            d = _rand_dim(rng, dims)
            a, b = _rand_state(rng, d), _rand_state(rng, d)
            xab, xba, xaa = ms.measure(kind, a, b), ms.measure(kind, b, a), ms.measure(kind, a, a)
            v = max(xab - 1.0, -xab, abs(xab - xba), 1.0 - xaa)
            return v, {"dim": d}

        def x2(rng, kind=kind):
            d = _rand_dim(rng, dims)
            a, b, u = _rand_state(rng, d), _rand_state(rng, d), haar_unitary(d, rng)
            v = abs(ms.measure(kind, a, b) - ms.measure(kind, apply_unitary(a, u), apply_unitary(b, u)))
            return v, {"dim": d}

        def x3(rng, kind=kind):
            r1, r2, s1, s2 = (_rand_state(rng, 2) for _ in range(4))
            lhs = ms.measure(kind, tensor(r1, r2), tensor(s1, s2))
            return abs(lhs - ms.measure(kind, r1, s1) * ms.measure(kind, r2, s2)), {"dim": "2x2"}

        def x4(rng, kind=kind):
            d = _rand_dim(rng, dims)
            a, b = _rand_state(rng, d), _rand_state(rng, d)
            ch = random_kraus(d, int(rng.integers(1, 4)), rng)
            return ms.measure(kind, a, b) - ms.measure(kind, apply_kraus(a, ch), apply_kraus(b, ch)), {"dim": d}

        def x5(rng, kind=kind):
            d = _rand_dim(rng, dims)
            a, b, u = _rand_state(rng, d), _rand_state(rng, d), haar_unitary(d, rng)
            return ms.projective_additivity_gap(kind, a, b, u.matrix), {"dim": d}

        def x6(rng, kind=kind):
            d = _rand_dim(rng, dims)
            a, b = _rand_state(rng, d), _rand_state(rng, d)
            ch = random_kraus(d, 2, rng)
            return -ms.superselection_excess(kind, a, b, ch), {"dim": d}

        out += [
            run_property(f"X1/{k}", trials, seed, 1e-9, x1),
            run_property(f"X2/{k}", trials, seed, 1e-8, x2),
            run_property(f"X3/{k}", trials, seed, 1e-8, x3),
            run_property(f"X4/{k}", trials, seed, 1e-8, x4),
            run_property(f"X5/{k}", trials, seed, 1e-8, x5),
            run_property(f"X6/{k}", trials, seed, 1e-8, x6),
        ]

    def sym(rng):
        d = _rand_dim(rng, dims)
        a, b = _rand_state(rng, d), _rand_state(rng, d)
        return abs(ms.fidelity(a, b) - ms.fidelity_symmetric(a, b)), {"dim": d}

    out.append(run_property("fidelity-sandwich-forms", trials, seed, 1e-9, sym))
    return out


# ---- single-state coherence ---------------------------------------------

def coherence_suite(trials: int = 200, seed: int = 0, dims: Iterable[int] = (2, 3),
                    oracle_trials: int = 500, oracle_steps: int = 10_000) -> list[PropertyResult]:
    dims = tuple(dims)
    out = []
    for kind in KINDS:
        k = kind.value

        def c1(rng, kind=kind):
            d = _rand_dim(rng, dims)
            basis = haar_unitary(d, rng)
            if rng.uniform() < 0.5:
                rho = diagonal_state(rng.dirichlet(np.ones(d)), basis)
            else:
                rho = _rand_state(rng, d)
            c = coh.coherence(kind, rho, basis).value
            incoherent = np.max(np.abs(dephase(rho, basis).matrix - rho.matrix)) <= 1e-9
            if incoherent:
                return c - 1e-8, {"dim": d, "incoherent": True}
            return (1.0 if c <= 1e-8 else -1.0), {"dim": d, "incoherent": False}

        def c2(rng, kind=kind):
            d = _rand_dim(rng, dims)
            rho = _rand_state(rng, d)
            ch = random_incoherent_channel(d, int(rng.integers(1, 4)), rng)
            eye = Unitary.identity(d)
            v = coh.coherence(kind, apply_kraus(rho, ch), eye).value - coh.coherence(kind, rho, eye).value
            return v, {"dim": d}

        def c3(rng, kind=kind):
            d = _rand_dim(rng, dims)
            rho = _rand_state(rng, d)
            ch = random_incoherent_channel(d, int(rng.integers(2, 4)), rng)
            eye = Unitary.identity(d)
            avg = sum(p * coh.coherence(kind, r, eye).value for p, r in kraus_branches(rho, ch))
            return avg - coh.coherence(kind, rho, eye).value, {"dim": d}

        def c4(rng, kind=kind):
            d = _rand_dim(rng, dims)
            n = int(rng.integers(2, 4))
            ps = rng.dirichlet(np.ones(n))
            rhos = [_rand_state(rng, d) for _ in range(n)]
            eye = Unitary.identity(d)
            mix = DensityMatrix(sum(p * r.matrix for p, r in zip(ps, rhos)))
            v = coh.coherence(kind, mix, eye).value - sum(p * coh.coherence(kind, r, eye).value
                                                          for p, r in zip(ps, rhos))
            return v, {"dim": d}

        def oracle(rng, kind=kind):
            rho = _rand_state(rng, 2)
            basis = haar_unitary(2, rng)
            exact = coh.coherence(kind, rho, basis).value
            return abs(exact - coh.oracle_coherence_grid(kind, rho, basis, oracle_steps)), {"dim": 2}

        out += [
            run_property(f"C1/{k}", trials, seed, 0.0, c1),
            run_property(f"C2/{k}", trials, seed, 1e-8, c2),
            run_property(f"C3/{k}", trials, seed, 1e-8, c3),
            run_property(f"C4/{k}", trials, seed, 1e-8, c4, report_only=kind is ms.MeasureKind.AFFINITY),
            run_property(f"closed-form-vs-grid/{k}", oracle_trials, seed, 2e-3, oracle),
        ]

    def rewrite(rng):
        d = _rand_dim(rng, dims)
        rho, basis = _rand_state(rng, d), haar_unitary(d, rng)
        r = basis.matrix.conj().T @ rho.matrix @ basis.matrix
        lam, v = np.linalg.eigh(r)
        # roundoff eigenvalues of a rank-deficient state would otherwise contribute ~1e-8 to sqrt
        lam = np.where(lam <= 1e-14 * lam[-1], 0.0, lam)
        a = np.real(np.diag((v * np.sqrt(lam)) @ v.conj().T))
        w = a * a / np.sum(a * a)
        res = coh.coherence_affinity(rho, basis)
        gap = abs(res.value - (1.0 - ms.affinity(rho, res.optimizer.state())))
        return max(np.max(np.abs(res.optimizer.weights - w)) - 1e-8, gap - 1e-8), {"dim": d}

    def dephased(rng):
        d = _rand_dim(rng, dims)
        rho, basis = _rand_state(rng, d), haar_unitary(d, rng)
        return coh.dephased_gap(ms.MeasureKind.FIDELITY, rho, basis), {"dim": d}

    out.append(run_property("affinity-optimizer-rewrite", trials, seed, 0.0, rewrite))
    out.append(run_property("fidelity-dephased-gap", trials, seed, 0.0, dephased, report_only=True))
    return out


# ---- ensembles -----------------------------------------------------------

def random_ensemble(rng, dim: int, size: int | None = None, pure: bool = False) -> ens.Ensemble:
    size = size or int(rng.integers(2, 5))
    probs = rng.dirichlet(np.ones(size))
    states = tuple(_rand_state(rng, dim, 1 if pure else None) for _ in range(size))
    return ens.Ensemble(tuple(probs), states)


def discretized_transport_min(cost: np.ndarray, p: np.ndarray, q: np.ndarray, grid: int) -> float:
    """Minimum of the transport objective over couplings on the lattice (1/grid) Z.

    The free block c[:m-1, :n-1] is enumerated on the lattice; the last row
    and column are then fixed by the marginals. Marginals that are multiples
    of 1/grid put every vertex on the lattice, so the minimum is exact.
    """
    m, n = cost.shape
    if m == 1 or n == 1:
        return float(np.sum(np.outer(p, q) * cost))
    axes = [np.arange(grid + 1) / grid] * ((m - 1) * (n - 1))
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, (m - 1) * (n - 1))
    block = pts.reshape(-1, m - 1, n - 1)
    last_col = p[:m - 1][None, :] - block.sum(axis=2)
    last_row = q[:n - 1][None, :] - block.sum(axis=1)
    corner = 1.0 - block.sum(axis=(1, 2)) - last_col.sum(axis=1) - last_row.sum(axis=1)
    ok = (last_col >= -1e-12).all(axis=1) & (last_row >= -1e-12).all(axis=1) & (corner >= -1e-12)
    full = np.zeros((pts.shape[0], m, n))
    full[:, :m - 1, :n - 1] = block
    full[:, :m - 1, n - 1] = last_col
    full[:, m - 1, :n - 1] = last_row
    full[:, m - 1, n - 1] = corner
    vals = np.einsum("gij,ij->g", full, cost)
    return float(vals[ok].min())


def ensemble_suite(trials: int = 200, seed: int = 0, dims: Iterable[int] = (2, 3),
                   definitional_trials: int = 5) -> list[PropertyResult]:
    dims = tuple(dims)
    out = []

    def lp_certificate(rng):
        m, n = (int(x) for x in rng.integers(1, 5, 2))
        p, q = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        cost = rng.uniform(size=(m, n))
        c, _ = transportation_solve(cost, p, q)
        infeas, slack = certificate_error(c, cost)
        return max(c.marginal_error(p, q), infeas, slack), {"shape": [m, n]}

    def lp_vertices(rng):
        m, n = (int(x) for x in rng.integers(1, 4, 2))
        p, q = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        cost = rng.uniform(size=(m, n))
        _, v = transportation_solve(cost, p, q)
        best = min(float(np.sum(x * cost)) for x in enumerate_vertices(p, q))
        return abs(v - best), {"shape": [m, n]}

    out.append(run_property("coupling-certificate", trials, seed, 1e-9, lp_certificate))
    out.append(run_property("lp-vs-vertex-enumeration", trials, seed, 1e-9, lp_vertices))

    for kind in KINDS:
        k = kind.value

        def identity(rng, kind=kind):
            d = _rand_dim(rng, dims)
            e = random_ensemble(rng, d)
            basis = haar_unitary(d, rng) if rng.uniform() < 0.5 else Unitary.identity(d)
            closed = ens.ensemble_coherence(kind, e, basis)
            rep = ens.definitional_report(kind, e, basis, definitional_trials, rng)
            return max(closed - rep.value - 1e-8, abs(rep.nearest - closed) - 1e-6), {"dim": d, "size": len(e)}

        def cptp(rng, kind=kind):
            d = _rand_dim(rng, dims)
            e, f = random_ensemble(rng, d), random_ensemble(rng, d)
            ch = random_kraus(d, int(rng.integers(1, 4)), rng)
            before = ens.ensemble_measure(kind, e, f)[0]
            after = ens.ensemble_measure(kind, e.apply_channel(ch), f.apply_channel(ch))[0]
            return before - after, {"dim": d}

        out.append(run_property(f"ensemble-identity/{k}", trials, seed, 0.0, identity))
        out.append(run_property(f"ensemble-cptp-monotone/{k}", trials, seed, 1e-8, cptp))

    def coarse_avg(rng):
        d = _rand_dim(rng, dims)
        e = random_ensemble(rng, d, int(rng.integers(2, 6)))
        part = random_partition(rng, len(e))
        c = ens.coarse_grain(e, part)
        return float(np.max(np.abs(c.average_state().matrix - e.average_state().matrix))), {"dim": d}

    out.append(run_property("coarse-grain-average", trials, seed, 1e-10, coarse_avg))
    return out


# ---- quantumness ---------------------------------------------------------

def random_partition(rng, n: int) -> list[list[int]]:
    labels = rng.integers(0, max(1, int(rng.integers(1, n + 1))), n)
    blocks = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    return [blocks[k] for k in sorted(blocks)]


def random_decomposition(rng, rho: DensityMatrix, parts: int) -> list[tuple[float, DensityMatrix]]:
    """rho = sum_mu lambda_mu rho_mu from a random POVM {M_mu}: rho_mu ~ sqrt(rho) M_mu sqrt(rho)."""
    ch = random_kraus(rho.dim, parts, rng)
    s = np.asarray(rho.sqrt)
    out = []
    for k in ch.operators:
        m = s @ (k.conj().T @ k) @ s
        lam = float(np.trace(m).real)
        if lam > 1e-12:
            out.append((lam, DensityMatrix(m / lam)))
    total = sum(l for l, _ in out)
    return [(l / total, r) for l, r in out]


def quantumness_suite(trials: int = 100, seed: int = 0, dims: Iterable[int] = (2,),
                      steps: int = 400, cfg: qn.OptimizerConfig | None = None,
                      tol: float = qn.ORACLE_TOL) -> list[PropertyResult]:
    """Properties (i)-(vii) plus optimizer soundness.

    Qubits use the grid oracle and are enforced; higher dimensions use the
    optimizer and are report-only.
    """
    out = []
    cfg = cfg or qn.OptimizerConfig(restarts=6)
    for d in dims:
        report_only = d != 2
        for kind in KINDS:
            k = f"{kind.value}/d{d}"

            def Q(e, kind=kind):
                return qn.quantumness_value(kind, e, steps, cfg)

            def p1(rng, d=d, Q=Q):
                if rng.uniform() < 0.2:
                    e = ens.Ensemble.singleton(_rand_state(rng, d))
                else:
                    e = qn.random_classical_ensemble(d, int(rng.integers(2, 5)), rng)
                return Q(e), {"size": len(e)}

            def p2(rng, d=d, Q=Q):
                e = random_ensemble(rng, d)
                return abs(Q(e) - Q(e.conjugate(haar_unitary(d, rng)))), {"size": len(e)}

            def p3(rng, d=d, Q=Q):
                e = random_ensemble(rng, d)
                u = haar_unitary(d, rng)
                from .states import dephasing_channel
                q0 = Q(e)
                return max(Q(e.conjugate(u)) - q0, Q(e.apply_channel(dephasing_channel(u))) - q0), {"size": len(e)}

            def p4(rng, d=d, Q=Q):
                n = int(rng.integers(2, 4))
                lam = rng.dirichlet(np.ones(n))
                parts = [random_ensemble(rng, d, int(rng.integers(1, 4))) for _ in range(n)]
                merged = ens.union(list(zip(lam, parts)))
                return float(sum(l * Q(e) for l, e in zip(lam, parts)) - Q(merged)), {"parts": n}

            def p5(rng, d=d, Q=Q):
                e = random_ensemble(rng, d)
                n = int(rng.integers(2, 4))
                t = rng.dirichlet(np.ones(n))
                # p^(n) chosen freely for n < last, the last one solves sum_n t_n p^(n) = p
                for _ in range(1000):
                    ps = [rng.dirichlet(np.ones(len(e))) for _ in range(n - 1)]
                    last = (e.p - sum(tn * pn for tn, pn in zip(t[:-1], ps))) / t[-1]
                    if last.min() >= 0:
                        break
                    t = t * np.array([0.5] * (n - 1) + [1.0])
                    t = t / t.sum()
                else:
                    return -1.0, {"skipped": True}
                ps.append(last / last.sum())
                parts = [e.with_probabilities(pn) for pn in ps]
                return float(sum(tn * Q(en) for tn, en in zip(t, parts)) - Q(e)), {"parts": n}

            def p6(rng, d=d, Q=Q):
                e = random_ensemble(rng, d, int(rng.integers(1, 4)))
                decomp = [random_decomposition(rng, r, int(rng.integers(1, 4))) for r in e.states]
                return Q(e) - Q(ens.fine_grain(e, decomp)), {"size": len(e)}

            def p7(rng, d=d, Q=Q):
                e = random_ensemble(rng, d, int(rng.integers(2, 6)))
                return Q(ens.coarse_grain(e, random_partition(rng, len(e)))) - Q(e), {"size": len(e)}

            def sound(rng, d=d, kind=kind):
                e = random_ensemble(rng, d)
                res = qn.quantumness(kind, e, cfg)
                us = np.stack([haar_unitary(d, rng).matrix for _ in range(100)])
                v = res.value - float(qn.average_coherence_batch(kind, e, us).min()) - 1e-9
                if d == 2:
                    v = max(v, abs(res.value - qn.grid_oracle_qubit(kind, e, steps)) - tol)
                return v, {"size": len(e)}

            for pid, fn in [("i", p1), ("ii", p2), ("iii", p3), ("iv", p4), ("v", p5), ("vi", p6), ("vii", p7)]:
                out.append(run_property(f"Q-{pid}/{k}", trials, seed, tol, fn, report_only=report_only))
            out.append(run_property(f"optimizer-soundness/{k}", max(1, trials // 4), seed, 0.0, sound,
                                    report_only=report_only))
    return out


SUITES = {
    "measures": measure_suite,
    "coherence": coherence_suite,
    "ensemble": ensemble_suite,
    "quantumness": quantumness_suite,
}
