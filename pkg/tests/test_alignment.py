import numpy as np
import pytest

from iasec.alignment import (
    AlignmentError,
    AlignmentSet,
    Beamformer,
    build_beamformers,
    build_generators,
    check_full_rank,
    numerical_rank,
    rank_failures,
    stream_power,
    verify_alignment,
)
from iasec.model import DiagonalChannel, PowerConfig, derive_dims, sample_network


def svd_rank(mat, tol_factor=1e-10):
    # independent rank oracle used alongside the library's own
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > max(mat.shape) * s[0] * tol_factor))


def aligned_instance(K, m, seed=0):
    net = sample_network(derive_dims(K, m), seed)
    aset = build_beamformers(net, build_generators(net))
    return net, aset


class TestGenerators:
    def test_three_user_count(self):
        net = sample_network(derive_dims(3, 1), 0)
        assert build_generators(net).M == 1

    def test_four_user_count(self):
        net = sample_network(derive_dims(4, 1), 0)
        gens = build_generators(net)
        assert gens.M == 5
        assert all(g.shape == (33,) for g in gens.generators)

    def test_inverse_roundtrip(self):
        # numerical inversion oracle: R * R^-1 = I elementwise
        net = sample_network(derive_dims(3, 2), 3)
        gens = build_generators(net)
        r = gens.generators[0]
        assert np.allclose(r * (1.0 / r), 1.0, rtol=1e-12)

    def test_commuting(self):
        net = sample_network(derive_dims(4, 1), 1)
        gens = build_generators(net)
        for a in gens.generators:
            for b in gens.generators:
                assert np.allclose(a * b, b * a, rtol=1e-12)

    def test_no_zero_entries(self):
        net = sample_network(derive_dims(4, 1), 2)
        for g in build_generators(net).generators:
            assert np.all(np.abs(g) > 0)


class TestBeamformers:
    def test_three_user_m1_shapes(self):
        _, aset = aligned_instance(3, 1)
        assert aset.matrix(0).shape == (3, 2)
        assert aset.matrix(1).shape == (3, 1)
        assert aset.matrix(2).shape == (3, 1)

    def test_receiver0_interference_collapses(self):
        # SVD oracle: dim span(H01 V1 u H02 V2) = 1 = F - m1 for K=3, m=1
        net, aset = aligned_instance(3, 1, seed=5)
        stacked = np.hstack(
            [net.links[0][k].apply(aset.matrix(k)) for k in (1, 2)]
        )
        assert svd_rank(stacked) == 1

    def test_four_user_interference_dims(self):
        net, aset = aligned_instance(4, 1, seed=2)
        for i in range(4):
            stacked = np.hstack(
                [net.links[i][k].apply(aset.matrix(k)) for k in range(4) if k != i]
            )
            assert svd_rank(stacked) == (1 if i == 0 else 32)

    def test_columns_unit_normalized(self):
        _, aset = aligned_instance(3, 3, seed=1)
        for k in range(3):
            norms = np.linalg.norm(aset.matrix(k), axis=0)
            assert np.allclose(norms, 1.0, atol=1e-12)

    def test_power_normalizers_are_streams_over_F(self):
        net, aset = aligned_instance(3, 2, seed=4)
        dims = net.dims
        expect = np.array(dims.streams) / dims.F
        assert np.allclose(aset.power_normalizers, expect, rtol=1e-12)

    def test_single_generator_power_basis_dimension(self):
        # for K=3 the construction is {w, Rw, ..., R^m w}; span must be m+1
        for m in (1, 2, 3, 4):
            net, aset = aligned_instance(3, m, seed=6)
            assert svd_rank(aset.matrix(0)) == m + 1


class TestVerifyAlignment:
    def test_k3_m2_interference_dims(self):
        net, aset = aligned_instance(3, 2, seed=7)
        report = verify_alignment(net, aset)
        assert [r.interference_dim for r in report.receivers] == [2, 3, 3]
        assert report.passed

    def test_residuals_below_tolerance(self):
        net, aset = aligned_instance(3, 3, seed=8)
        report = verify_alignment(net, aset)
        assert report.worst_residual < 1e-8

    def test_zero_beamformer_fails_rank_check(self):
        net, aset = aligned_instance(3, 1, seed=9)
        broken = AlignmentSet(
            dims=aset.dims,
            beamformers=[
                Beamformer(user=0, matrix=np.zeros_like(aset.matrix(0))),
                *aset.beamformers[1:],
            ],
            power_normalizers=aset.power_normalizers,
        )
        report = verify_alignment(net, broken)
        assert not report.passed

    def test_build_raises_on_degenerate_verification(self):
        net = sample_network(derive_dims(3, 1), 10)
        # an all-equal grid makes every ratio 1 and the basis rank deficient
        flat = DiagonalChannel(np.ones(3, dtype=complex))
        for i in range(3):
            for k in range(3):
                net.links[i][k] = flat
        with pytest.raises(AlignmentError):
            build_beamformers(net, build_generators(net))


class TestFullRank:
    def test_clean_draws_have_no_failures(self):
        net, aset = aligned_instance(3, 1, seed=11)
        audit = check_full_rank(net, aset, trials=50, seed=123)
        assert audit.passed and audit.failures == 0

    def test_zeroed_gains_detected(self):
        # zeroing F - m_k + 1 = 2 slots of a cross link forces rank m1 - 1
        net, aset = aligned_instance(3, 1, seed=12)
        gains = net.links[1][0].gains.copy()
        gains[:2] = 1e-300
        net.links[1][0] = DiagonalChannel(gains)
        bad = rank_failures(net, aset)
        assert (1, 0) in bad


class TestStreamPower:
    def test_arithmetic_example(self):
        aset = AlignmentSet(dims=None, beamformers=[], power_normalizers=np.array([2 / 3]))
        p = stream_power(aset, PowerConfig(rho=7.0, epsilon_margin=1.0))
        assert np.allclose(p, [9.0])

    def test_power_constraint_identity(self):
        net, aset = aligned_instance(3, 2, seed=13)
        cfg = PowerConfig(rho=1e4, epsilon_margin=1.0)
        p = stream_power(aset, cfg)
        for k in range(3):
            v = aset.matrix(k)
            spent = np.trace(v @ v.conj().T).real * p[k] / net.dims.F
            assert np.isclose(spent, cfg.effective, rtol=1e-12)

    def test_large_user_gets_less_per_stream(self):
        net, aset = aligned_instance(3, 1, seed=14)
        p = stream_power(aset, PowerConfig(rho=100.0))
        assert np.isclose(p[0] / p[1], 1 / 2, rtol=1e-12)

    def test_rejects_nonpositive_budget(self):
        _, aset = aligned_instance(3, 1, seed=15)
        with pytest.raises(ValueError):
            PowerConfig(rho=1.0, epsilon_margin=1.0)


def test_numerical_rank_empty_matrix():
    assert numerical_rank(np.zeros((3, 0))) == 0
