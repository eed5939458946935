import numpy as np
import pytest
from hypothesis import given, strategies as st

from iasec.model import (
    PowerConfig,
    derive_dims,
    sample_eavesdropper_block,
    sample_network,
    sub_rng,
)


def gains_equal(a, b):
    return np.array_equal(a.gains, b.gains)


class TestDeriveDims:
    def test_three_user_m1(self):
        d = derive_dims(3, 1)
        assert (d.M, d.F) == (1, 3)
        assert d.streams == (2, 1, 1)

    def test_three_user_m2(self):
        d = derive_dims(3, 2)
        assert (d.M, d.F) == (1, 5)
        assert d.streams == (3, 2, 2)

    def test_four_user_m1(self):
        d = derive_dims(4, 1)
        assert (d.M, d.F) == (5, 33)
        assert d.streams == (32, 1, 1, 1)

    @pytest.mark.parametrize("m", range(1, 11))
    def test_three_user_extension_length(self, m):
        assert derive_dims(3, m).F == 2 * m + 1

    @given(K=st.integers(3, 5), m=st.integers(1, 4))
    def test_streams_sum_to_extension(self, K, m):
        d = derive_dims(K, m)
        assert d.streams[0] + d.streams[1] == d.F
        assert all(s == d.streams[1] for s in d.streams[1:])
        assert d.M == (K - 1) * (K - 2) - 1

    @pytest.mark.parametrize("K,m", [(2, 1), (1, 3), (3, 0), (4, -1)])
    def test_rejects_degenerate_parameters(self, K, m):
        with pytest.raises(ValueError):
            derive_dims(K, m)


class TestSampling:
    def test_identical_seed_identical_realization(self):
        dims = derive_dims(3, 1)
        a = sample_network(dims, 1234)
        b = sample_network(dims, 1234)
        for i in range(3):
            for k in range(3):
                assert gains_equal(a.links[i][k], b.links[i][k])

    def test_shapes(self):
        dims = derive_dims(3, 1)
        net = sample_network(dims, 5)
        assert len(net.links) == 3 and all(len(r) == 3 for r in net.links)
        assert all(ch.F == 3 for row in net.links for ch in row)
        assert net.eavesdropper is None

    def test_distinct_links_distinct_gains(self):
        dims = derive_dims(3, 2)
        net = sample_network(dims, 5)
        assert not gains_equal(net.links[0][0], net.links[0][1])

    def test_all_gains_nonzero(self):
        dims = derive_dims(4, 1)
        net = sample_network(dims, 99)
        for row in net.links:
            for ch in row:
                assert np.all(np.abs(ch.gains) > 0)

    def test_unit_second_moment(self):
        # Monte Carlo moment oracle: E|g|^2 = 1 for the sampler's law.
        dims = derive_dims(3, 2)
        mags = []
        for seed in range(250):
            net = sample_network(dims, seed)
            for i in range(3):
                for k in range(3):
                    mags.append(np.abs(net.links[i][k].gains) ** 2)
        mags = np.concatenate(mags)
        assert mags.size >= 10_000
        assert abs(mags.mean() - 1.0) < 0.05

    def test_block_index_changes_draw(self):
        dims = derive_dims(3, 1)
        a = sample_network(dims, 7, block_index=0)
        b = sample_network(dims, 7, block_index=1)
        assert not gains_equal(a.links[0][0], b.links[0][0])

    def test_eavesdropper_row(self):
        dims = derive_dims(3, 1)
        net = sample_network(dims, 7, with_eavesdropper=True)
        assert len(net.eavesdropper) == 3
        assert all(ch.F == 3 for ch in net.eavesdropper)
        # the row matches the standalone block sampler at the same block
        row = sample_eavesdropper_block(dims, 7, 0)
        assert all(gains_equal(a, b) for a, b in zip(net.eavesdropper, row))

    def test_eavesdropper_blocks_independent_and_deterministic(self):
        dims = derive_dims(3, 1)
        b0 = sample_eavesdropper_block(dims, 11, 0)
        b0_again = sample_eavesdropper_block(dims, 11, 0)
        b1 = sample_eavesdropper_block(dims, 11, 1)
        assert all(gains_equal(a, b) for a, b in zip(b0, b0_again))
        assert not gains_equal(b0[0], b1[0])

    def test_realization_serializes_to_json(self):
        import json

        dims = derive_dims(3, 1)
        net = sample_network(dims, 7, with_eavesdropper=True)
        blob = json.dumps(net.as_dict())
        back = json.loads(blob)
        assert back["K"] == 3 and back["seed"] == 7
        g = np.array(back["links"][1][2])
        assert np.allclose(g[:, 0] + 1j * g[:, 1], net.links[1][2].gains)


class TestSeedSplitting:
    def test_rejects_out_of_range_seed(self):
        with pytest.raises(ValueError):
            sub_rng(-1)
        with pytest.raises(ValueError):
            sub_rng(2**64)

    def test_path_sensitivity(self):
        a = sub_rng(3, 1, 2).standard_normal(4)
        b = sub_rng(3, 2, 1).standard_normal(4)
        assert not np.array_equal(a, b)


class TestPowerConfig:
    def test_effective_backoff(self):
        assert PowerConfig(rho=10.0, epsilon_margin=2.0).effective == 8.0

    @pytest.mark.parametrize("rho,eps", [(1.0, 1.0), (1.0, 2.0), (5.0, 0.0), (5.0, -1.0)])
    def test_margin_must_sit_inside_budget(self, rho, eps):
        with pytest.raises(ValueError):
            PowerConfig(rho=rho, epsilon_margin=eps)
