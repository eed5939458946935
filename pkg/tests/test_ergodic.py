import numpy as np
import pytest
from scipy import stats

from iasec.alignment import build_beamformers, build_generators, numerical_rank
from iasec.ergodic import (
    augment_with_virtual_user,
    block_network,
    eavesdropper_budget_check,
    ergodic_rates,
    mi_inequality_audit,
    sample_schedule,
    symmetry_audit,
)
from iasec.model import PowerConfig, derive_dims, sample_network

SEED = 16


class TestSchedule:
    def test_shape_and_bijection(self):
        sched = sample_schedule(3, 5, seed=1)
        assert sched.permutations.shape == (5, 3)
        for perm in sched.permutations:
            assert sorted(perm.tolist()) == [0, 1, 2]

    def test_deterministic(self):
        a = sample_schedule(3, 20, seed=2)
        b = sample_schedule(3, 20, seed=2)
        assert np.array_equal(a.permutations, b.permutations)

    def test_uniform_over_orderings(self):
        # chi-square oracle against the uniform law on the 3! orderings
        sched = sample_schedule(3, 6000, seed=3)
        keys = [tuple(p) for p in sched.permutations.tolist()]
        counts = np.array([keys.count(p) for p in sorted(set(keys))])
        assert counts.size == 6
        assert stats.chisquare(counts).pvalue > 0.01

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_schedule(3, 0, seed=1)


class TestBlockNetwork:
    def test_identity_permutation_matches_static_construction(self):
        dims = derive_dims(3, 1)
        block = block_network(dims, SEED, 0, perm=[0, 1, 2], with_eavesdropper=False)
        net = sample_network(dims, SEED, block_index=0)
        aset = build_beamformers(net, build_generators(net))
        for k in range(3):
            assert np.allclose(block.aset.matrix(k), aset.matrix(k))

    def test_role_rotation_frequency(self):
        dims = derive_dims(3, 1)
        sched = sample_schedule(3, 3000, seed=4)
        large_role_user = sched.permutations[:, 0]
        for user in range(3):
            share = np.mean(large_role_user == user)
            assert abs(share - 1 / 3) < 1 / 3 * 0.10

    def test_per_block_interference_dims_follow_roles(self):
        dims = derive_dims(3, 2)
        for b in range(4):
            block = block_network(dims, 11, b)
            K, F = dims.K, dims.F
            for r in range(K):
                stacked = np.hstack(
                    [
                        block.net_role.links[r][s].apply(block.aset.matrix(s))
                        for s in range(K)
                        if s != r
                    ]
                )
                assert numerical_rank(stacked) == F - dims.streams[r]

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            block_network(derive_dims(3, 1), 1, 0, perm=[0, 0, 2])


class TestErgodicRates:
    def test_rate_identities(self):
        dims = derive_dims(3, 1)
        est = ergodic_rates(dims, PowerConfig(rho=1e8), 40, SEED)
        K, F = dims.K, dims.F
        assert est.Rx == pytest.approx(est.eaves_mean / (K * F), rel=1e-12)
        assert est.R_raw == pytest.approx(
            (K * est.own_mean - est.eaves_upper_mean) / (K * F), rel=1e-9
        )
        assert est.R >= 0

    def test_needs_thirty_trials(self):
        with pytest.raises(ValueError):
            ergodic_rates(derive_dims(3, 1), PowerConfig(rho=1e4), 10, 1)

    def test_deterministic_across_workers(self):
        dims = derive_dims(3, 1)
        a = ergodic_rates(dims, PowerConfig(rho=1e6), 30, 5, workers=1)
        b = ergodic_rates(dims, PowerConfig(rho=1e6), 30, 5, workers=4)
        assert a.R == b.R and a.Rx == b.Rx

    def test_own_stream_expectation_slope(self):
        # role rotation mixes stream counts: slope (m1 + (K-1) m2) / K
        from iasec.gaussmi import DEFAULT_RHO_GRID, estimate_slope

        dims = derive_dims(3, 2)
        curve = {
            rho: ergodic_rates(dims, PowerConfig(rho=rho), 60, SEED).own_mean
            for rho in DEFAULT_RHO_GRID
        }
        fit = estimate_slope(lambda r: curve[r], DEFAULT_RHO_GRID)
        target = (dims.streams[0] + 2 * dims.streams[1]) / 3
        assert abs(fit.slope - target) / target < 0.05


class TestBudget:
    def test_rule_rate_decodable_for_every_subset(self):
        dims = derive_dims(3, 1)
        power = PowerConfig(rho=1e8)
        est = ergodic_rates(dims, power, 60, SEED)
        report = eavesdropper_budget_check(dims, power, est.Rx, 60, SEED)
        assert report.passed

    def test_full_set_is_tight(self):
        dims = derive_dims(3, 1)
        power = PowerConfig(rho=1e8)
        est = ergodic_rates(dims, power, 60, SEED)
        report = eavesdropper_budget_check(dims, power, est.Rx, 60, SEED)
        full = [e for e in report.entries if e[0] == (0, 1, 2)][0]
        assert abs(full[4]) < 1e-9

    def test_doubled_rx_fails_at_full_set(self):
        dims = derive_dims(3, 1)
        power = PowerConfig(rho=1e8)
        est = ergodic_rates(dims, power, 60, SEED)
        report = eavesdropper_budget_check(dims, power, 2 * est.Rx, 60, SEED)
        assert not report.passed
        full = [e for e in report.entries if e[0] == (0, 1, 2)][0]
        assert full[4] < 0


class TestInequalityAudit:
    def test_all_lemmas_hold(self):
        dims = derive_dims(3, 1)
        report = mi_inequality_audit(dims, PowerConfig(rho=1e8), 150, SEED)
        assert report.lemma3_violations == 0
        assert report.lemma4_passed
        assert report.symmetry_passed
        assert report.passed

    def test_enumeration_guard(self):
        with pytest.raises(ValueError):
            mi_inequality_audit(derive_dims(5, 1), PowerConfig(rho=1e4), 30, 1)


class TestSymmetryAudit:
    def test_skipped_without_randomization(self):
        report = symmetry_audit(derive_dims(3, 1), PowerConfig(rho=1e4), 100, 1,
                                randomize_roles=False)
        assert report.skipped and report.passed

    def test_user_means_agree(self):
        report = symmetry_audit(derive_dims(3, 1), PowerConfig(rho=1e6), 300, SEED)
        assert not report.skipped
        assert report.passed

    def test_trials_floor(self):
        with pytest.raises(ValueError):
            symmetry_audit(derive_dims(3, 1), PowerConfig(rho=1e4), 50, 1)


class TestAugmentation:
    def test_two_real_users_become_three(self):
        aug_dims = derive_dims(3, 2)
        net = sample_network(aug_dims, 4, with_eavesdropper=True)
        aug = augment_with_virtual_user(aug_dims, net)
        assert aug.dims.K == 3
        assert aug.eavesdropper is None
        # last receiver now listens through the eavesdropper row
        for k in range(2):
            assert np.array_equal(aug.links[2][k].gains, net.eavesdropper[k].gains)
        # the virtual transmitter's links stay freshly sampled
        assert np.array_equal(aug.links[2][2].gains, net.links[2][2].gains)
        assert np.array_equal(aug.links[0][2].gains, net.links[0][2].gains)
        assert not np.array_equal(aug.links[2][0].gains, net.links[2][0].gains)

    def test_augmented_network_aligns(self):
        aug_dims = derive_dims(3, 2)
        for seed in (4, 6, 8):
            net = sample_network(aug_dims, seed, with_eavesdropper=True)
            aug = augment_with_virtual_user(aug_dims, net)
            aset = build_beamformers(aug, build_generators(aug))
            assert aset.matrix(0).shape == (5, 3)

    def test_requires_eavesdropper_row(self):
        aug_dims = derive_dims(3, 1)
        net = sample_network(aug_dims, 4)
        with pytest.raises(ValueError):
            augment_with_virtual_user(aug_dims, net)

    def test_requires_matching_dims(self):
        net = sample_network(derive_dims(3, 1), 4, with_eavesdropper=True)
        with pytest.raises(ValueError):
            augment_with_virtual_user(derive_dims(3, 2), net)
