import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemblage import ensemble as E
from ensemblage.catalog import b92, psi
from ensemblage.errors import BadDecomposition, BadPartition, BadWeights, DimMismatch
from ensemblage.measures import MeasureKind, distance, measure
from ensemblage.states import (Unitary, apply_kraus, density_from_pure, diagonal_state, haar_unitary, ket,
                               maximally_mixed, random_density, random_kraus)
from ensemblage.verify import random_ensemble

from conftest import seeds

KINDS = list(MeasureKind)
I2 = Unitary.identity(2)
B92_COHERENCE = 0.5 * (1 - 1 / np.sqrt(2))


class TestEnsemble:
    def test_drops_negligible_members(self, zero, one):
        e = E.Ensemble((1.0, 1e-16), (zero, one))
        assert len(e) == 1

    def test_rejects_bad_weights(self, zero, one):
        with pytest.raises(BadWeights):
            E.Ensemble((0.5, 0.6), (zero, one))
        with pytest.raises(BadWeights):
            E.Ensemble((1.2, -0.2), (zero, one))
        with pytest.raises(BadWeights):
            E.Ensemble((), ())

    def test_rejects_mixed_dims(self, zero):
        with pytest.raises(DimMismatch):
            E.Ensemble((0.5, 0.5), (zero, maximally_mixed(3)))

    def test_average_state(self, zero, one):
        e = E.Ensemble((0.25, 0.75), (zero, one))
        np.testing.assert_allclose(e.average_state().matrix, np.diag([0.25, 0.75]))


class TestEnsembleMeasure:
    @pytest.mark.parametrize("kind", KINDS)
    def test_singletons_reduce(self, kind, zero, plus):
        v, c = E.ensemble_measure(kind, E.Ensemble.singleton(zero), E.Ensemble.singleton(plus))
        assert v == pytest.approx(measure(kind, zero, plus))
        np.testing.assert_allclose(c.matrix, [[1.0]])

    @pytest.mark.parametrize("kind", KINDS)
    def test_orthogonal_pair_worst_matching(self, kind, zero, one):
        e = E.Ensemble((0.5, 0.5), (zero, one))
        v, c = E.ensemble_measure(kind, e, e)
        assert v == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(c.matrix, [[0, 0.5], [0.5, 0]])

    @pytest.mark.parametrize("kind", KINDS)
    def test_self_singleton(self, kind, plus):
        e = E.Ensemble.singleton(plus)
        assert E.ensemble_measure(kind, e, e)[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("kind", KINDS)
    def test_sup_dominates_inf(self, kind):
        rng = np.random.default_rng(0)
        e, f = random_ensemble(rng, 2, 3), random_ensemble(rng, 2, 2)
        assert E.ensemble_measure_sup(kind, e, f)[0] >= E.ensemble_measure(kind, e, f)[0] - 1e-12


class TestEnsembleDistance:
    @pytest.mark.parametrize("kind", KINDS)
    def test_self_distance_zero(self, kind):
        e = random_ensemble(np.random.default_rng(3), 3, 3)
        assert E.ensemble_distance(kind, e, e) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_trivial_reduction(self, kind, plus, zero):
        # splitting a member into two identical copies changes nothing
        e = E.Ensemble((0.5, 0.5), (plus, zero))
        split = E.Ensemble((0.25, 0.25, 0.5), (plus, plus, zero))
        assert E.ensemble_distance(kind, e, split) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_singletons(self, kind, zero, plus):
        d = E.ensemble_distance(kind, E.Ensemble.singleton(zero), E.Ensemble.singleton(plus))
        assert d == pytest.approx(distance(kind, zero, plus))

    @pytest.mark.parametrize("kind", KINDS)
    def test_singleton_marginal_forces_coupling(self, kind, zero, plus):
        e = E.Ensemble((0.5, 0.5), (zero, plus))
        d = E.ensemble_distance(kind, e, E.Ensemble.singleton(zero))
        assert d == pytest.approx(0.5 * distance(kind, plus, zero))

    @given(seeds, st.sampled_from(KINDS))
    def test_routes_agree(self, seed, kind):
        rng = np.random.default_rng(seed)
        e, f = random_ensemble(rng, 2), random_ensemble(rng, 2)
        assert E.transport_distance(kind, e, f)[0] == pytest.approx(1 - E.ensemble_measure_sup(kind, e, f)[0],
                                                                    abs=1e-9)

    @given(seeds, st.sampled_from(KINDS))
    def test_cptp_monotone(self, seed, kind):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        e, f = random_ensemble(rng, d), random_ensemble(rng, d)
        ch = random_kraus(d, int(rng.integers(1, 4)), rng)
        me = e.map_states(lambda s: apply_kraus(s, ch))
        mf = f.map_states(lambda s: apply_kraus(s, ch))
        assert E.ensemble_measure(kind, me, mf)[0] >= E.ensemble_measure(kind, e, f)[0] - 1e-8
        assert E.ensemble_distance(kind, me, mf) <= E.ensemble_distance(kind, e, f) + 1e-8


class TestEnsembleCoherence:
    @pytest.mark.parametrize("kind", KINDS)
    def test_incoherent(self, kind):
        e = E.Ensemble((0.3, 0.7), (diagonal_state([0.1, 0.9]), diagonal_state([1.0, 0.0])))
        assert E.ensemble_coherence(kind, e, I2) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_b92(self, kind):
        assert E.ensemble_coherence(kind, b92().ensemble, I2) == pytest.approx(B92_COHERENCE, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_singleton(self, kind, plus):
        from ensemblage.coherence import coherence
        assert E.ensemble_coherence(kind, E.Ensemble.singleton(plus), I2) == pytest.approx(
            coherence(kind, plus, I2).value)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            E.ensemble_coherence("affinity", b92().ensemble, Unitary.identity(3))

    @pytest.mark.parametrize("kind", KINDS)
    def test_definitional_incoherent(self, kind):
        e = E.Ensemble((0.3, 0.7), (diagonal_state([0.1, 0.9]), diagonal_state([1.0, 0.0])))
        assert E.ensemble_coherence_definitional(kind, e, I2, trials=5) == pytest.approx(0.0, abs=1e-9)

    def test_definitional_b92_affinity(self):
        rep = E.definitional_report("affinity", b92().ensemble, I2, trials=20, seed=0)
        assert rep.nearest == pytest.approx(B92_COHERENCE, abs=1e-6)
        assert rep.value == pytest.approx(B92_COHERENCE, abs=1e-6)

    @given(seeds, st.sampled_from(KINDS))
    def test_definitional_bound_and_attainment(self, seed, kind):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        e, b = random_ensemble(rng, d), haar_unitary(d, rng)
        rep = E.definitional_report(kind, e, b, trials=5, seed=seed)
        target = E.ensemble_coherence(kind, e, b)
        assert rep.value >= target - 1e-8
        assert rep.nearest == pytest.approx(target, abs=1e-6)


class TestGraining:
    def test_union_single(self):
        e = b92().ensemble
        u = E.union([(1.0, e)])
        assert u.probabilities == e.probabilities

    def test_union_two_copies(self):
        e = b92().ensemble
        u = E.union([(0.5, e), (0.5, e)])
        assert len(u) == 4 and u.probabilities == pytest.approx([0.25] * 4)

    def test_union_of_singletons(self, zero, plus):
        u = E.union([(0.3, E.Ensemble.singleton(zero)), (0.7, E.Ensemble.singleton(plus))])
        assert u.probabilities == pytest.approx((0.3, 0.7))
        assert u.states[1] is plus

    def test_union_rejects(self, zero):
        with pytest.raises(BadWeights):
            E.union([(0.5, E.Ensemble.singleton(zero))])
        with pytest.raises(DimMismatch):
            E.union([(0.5, E.Ensemble.singleton(zero)), (0.5, E.Ensemble.singleton(maximally_mixed(3)))])

    def test_fine_grain_trivial(self):
        e = b92().ensemble
        f = E.fine_grain(e, [[(1.0, s)] for s in e.states])
        assert f.probabilities == e.probabilities

    def test_fine_grain_maximally_mixed(self, zero, one, plus):
        minus = density_from_pure(ket(1, -1))
        e = E.Ensemble.singleton(maximally_mixed(2))
        assert len(E.fine_grain(e, [[(0.5, zero), (0.5, one)]])) == 2
        assert len(E.fine_grain(e, [[(0.5, plus), (0.5, minus)]])) == 2

    def test_fine_grain_rejects(self, zero, plus):
        e = E.Ensemble.singleton(maximally_mixed(2))
        with pytest.raises(BadDecomposition):
            E.fine_grain(e, [[(0.5, zero), (0.5, plus)]])
        with pytest.raises(BadDecomposition):
            E.fine_grain(e, [])

    def test_coarse_singleton_blocks(self):
        e = b92().ensemble
        c = E.coarse_grain(e, [[0], [1]])
        for a, b in zip(c.states, e.states):
            np.testing.assert_allclose(a.matrix, b.matrix)

    def test_coarse_full_b92(self):
        e = b92().ensemble
        c = E.coarse_grain(e, [[0, 1]])
        expect = (np.diag([1, 0]) + density_from_pure(psi(np.pi / 4)).matrix) / 2
        assert len(c) == 1
        np.testing.assert_allclose(c.states[0].matrix, expect, atol=1e-15)

    def test_coarse_rejects(self):
        with pytest.raises(BadPartition):
            E.coarse_grain(b92().ensemble, [[0], [0, 1]])
        with pytest.raises(BadPartition):
            E.coarse_grain(b92().ensemble, [[0]])

    @given(seeds)
    def test_coarse_preserves_average(self, seed):
        from ensemblage.verify import random_partition
        rng = np.random.default_rng(seed)
        e = random_ensemble(rng, 3, 5)
        c = E.coarse_grain(e, random_partition(rng, len(e)))
        assert np.abs(c.average_state().matrix - e.average_state().matrix).max() <= 1e-10
