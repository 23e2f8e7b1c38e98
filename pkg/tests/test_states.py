import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemblage import states as S
from ensemblage.catalog import psi
from ensemblage.errors import BadRank, DimMismatch, InvalidState, NotPSD

from conftest import dims, seeds

PLUS = np.full((2, 2), 0.5)


class TestValidation:
    def test_repairs_small_defects(self):
        rho = S.DensityMatrix(np.diag([0.5 + 5e-11, 0.5 - 1e-11 - 5e-11]))
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-15)
        assert rho.spectral.eigenvalues[0] >= 0

    def test_rejects_negative(self):
        with pytest.raises(NotPSD):
            S.DensityMatrix(np.diag([1.1, -0.1]))

    def test_rejects_trace(self):
        with pytest.raises(InvalidState):
            S.DensityMatrix(np.diag([0.5, 0.6]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidState):
            S.DensityMatrix([[0.5, 0.1], [0.0, 0.5]])

    def test_immutable(self):
        rho = S.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1

    def test_pure_state_norm(self):
        with pytest.raises(InvalidState):
            S.PureState(np.array([1.0, 1.0]))
        assert S.ket(3, 4).amplitudes == pytest.approx([0.6, 0.8])

    def test_unitary_check(self):
        with pytest.raises(InvalidState):
            S.Unitary(np.array([[1, 1], [0, 1]]))

    def test_kraus_completeness(self):
        with pytest.raises(InvalidState):
            S.KrausChannel((np.eye(2) * 0.9,))
        with pytest.raises(DimMismatch):
            S.KrausChannel((np.eye(2) / np.sqrt(2), np.eye(3) / np.sqrt(2)))


class TestDensityFromPure:
    def test_zero(self):
        np.testing.assert_allclose(S.density_from_pure(S.ket(1, 0)).matrix, np.diag([1, 0]))

    def test_plus(self):
        np.testing.assert_allclose(S.density_from_pure(S.ket(1, 1)).matrix, PLUS, atol=1e-15)

    def test_psi_quarter_pi(self):
        np.testing.assert_allclose(S.density_from_pure(psi(np.pi / 4)).matrix, PLUS, atol=1e-15)


class TestDephase:
    def test_removes_coherences(self, plus):
        np.testing.assert_allclose(S.dephase(plus, S.Unitary.identity(2)).matrix, np.eye(2) / 2, atol=1e-15)

    def test_diagonal_fixed(self):
        rho = S.diagonal_state([0.3, 0.7])
        np.testing.assert_allclose(S.dephase(rho, S.Unitary.identity(2)).matrix, rho.matrix)

    def test_own_eigenbasis_fixed(self, plus):
        np.testing.assert_allclose(S.dephase(plus, S.Unitary(S.HADAMARD)).matrix, PLUS, atol=1e-15)

    @given(seeds, dims)
    def test_idempotent(self, seed, d):
        rng = np.random.default_rng(seed)
        rho, b = S.random_density(d, None, rng), S.haar_unitary(d, rng)
        once = S.dephase(rho, b)
        assert np.abs(S.dephase(once, b).matrix - once.matrix).max() <= 1e-10


class TestUnitaryAndKraus:
    def test_identity(self, plus):
        np.testing.assert_allclose(S.apply_unitary(plus, S.Unitary.identity(2)).matrix, plus.matrix)

    def test_bit_flip(self, zero):
        np.testing.assert_allclose(S.apply_unitary(zero, S.Unitary(S.PAULI_X)).matrix, np.diag([0, 1]))

    def test_hadamard(self, plus):
        np.testing.assert_allclose(S.apply_unitary(plus, S.Unitary(S.HADAMARD)).matrix, np.diag([1, 0]),
                                   atol=1e-15)

    def test_dim_mismatch(self, plus):
        with pytest.raises(DimMismatch):
            S.apply_unitary(plus, S.Unitary.identity(3))

    @given(seeds, dims)
    def test_unitary_preserves_spectrum(self, seed, d):
        rng = np.random.default_rng(seed)
        rho = S.random_density(d, None, rng)
        out = S.apply_unitary(rho, S.haar_unitary(d, rng))
        np.testing.assert_allclose(out.spectral.eigenvalues, rho.spectral.eigenvalues, atol=1e-9)

    def test_kraus_identity(self, plus):
        ch = S.KrausChannel((np.eye(2),))
        np.testing.assert_allclose(S.apply_kraus(plus, ch).matrix, plus.matrix)

    def test_kraus_projectors_dephase(self, plus):
        out = S.apply_kraus(plus, S.computational_projectors(2))
        np.testing.assert_allclose(out.matrix, S.dephase(plus, S.Unitary.identity(2)).matrix)

    def test_full_depolarizing(self, plus):
        np.testing.assert_allclose(S.apply_kraus(plus, S.depolarizing_qubit(1.0)).matrix, np.eye(2) / 2,
                                   atol=1e-15)

    def test_branches_diagonal(self):
        br = S.kraus_branches(S.diagonal_state([0.3, 0.7]), S.computational_projectors(2))
        assert [p for p, _ in br] == pytest.approx([0.3, 0.7])
        np.testing.assert_allclose(br[0][1].matrix, np.diag([1, 0]))
        np.testing.assert_allclose(br[1][1].matrix, np.diag([0, 1]))

    def test_branches_identity(self, plus):
        br = S.kraus_branches(plus, S.KrausChannel((np.eye(2),)))
        assert len(br) == 1 and br[0][0] == pytest.approx(1.0)

    def test_branches_plus(self, plus):
        br = S.kraus_branches(plus, S.computational_projectors(2))
        assert [p for p, _ in br] == pytest.approx([0.5, 0.5])

    def test_branches_prune_zero(self, zero):
        assert len(S.kraus_branches(zero, S.computational_projectors(2))) == 1

    @given(seeds, dims, st.integers(1, 4))
    def test_branches_recombine(self, seed, d, n):
        rng = np.random.default_rng(seed)
        rho, ch = S.random_density(d, None, rng), S.random_kraus(d, n, rng)
        br = S.kraus_branches(rho, ch)
        assert sum(p for p, _ in br) == pytest.approx(1.0, abs=1e-9)
        mixed = sum(p * r.matrix for p, r in br)
        assert np.abs(mixed - S.apply_kraus(rho, ch).matrix).max() <= 1e-9

    @given(seeds, dims, st.integers(1, 4))
    def test_incoherent_channel_maps_diagonal_to_diagonal(self, seed, d, n):
        rng = np.random.default_rng(seed)
        ch = S.random_incoherent_channel(d, n, rng)
        delta = S.diagonal_state(rng.dirichlet(np.ones(d)))
        for k in ch.operators:
            out = k @ delta.matrix @ k.conj().T
            assert np.abs(out - np.diag(np.diag(out))).max() <= 1e-14


class TestRandom:
    def test_haar_dim_one(self):
        u = S.haar_unitary(1, 3).matrix
        assert abs(abs(u[0, 0]) - 1) < 1e-15

    def test_haar_deterministic(self):
        assert np.array_equal(S.haar_unitary(3, 5).matrix, S.haar_unitary(3, 5).matrix)

    def test_haar_first_moment(self):
        rng = np.random.default_rng(0)
        vals = [abs(S.haar_unitary(2, rng).matrix[0, 0]) ** 2 for _ in range(10_000)]
        assert np.mean(vals) == pytest.approx(0.5, abs=0.02)

    @given(seeds, dims)
    def test_rank_one_is_pure(self, seed, d):
        assert S.random_density(d, 1, seed).purity == pytest.approx(1.0, abs=1e-9)

    @given(seeds, dims)
    def test_unit_trace_and_determinism(self, seed, d):
        a, b = S.random_density(d, None, seed), S.random_density(d, None, seed)
        assert np.trace(a.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(a.matrix, b.matrix)

    def test_bad_rank(self):
        with pytest.raises(BadRank):
            S.random_density(2, 3, 0)

    def test_spawned_streams_do_not_depend_on_count(self):
        a = S.spawn_seeds(7, 3)
        b = S.spawn_seeds(7, 10)
        for x, y in zip(a, b):
            assert np.random.default_rng(x).random() == np.random.default_rng(y).random()
