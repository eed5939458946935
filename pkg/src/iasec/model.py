"""Channel dimensioning, random network generation, and seed bookkeeping.

Everything downstream (beamformers, mutual informations, rate sweeps) is a
pure function of a :class:`SystemDims`, a master seed, and optionally a block
index, so identical inputs reproduce identical numbers bit for bit.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemDims",
    "DiagonalChannel",
    "NetworkRealization",
    "PowerConfig",
    "derive_dims",
    "sample_network",
    "sample_eavesdropper_block",
    "sub_rng",
]

# Tags keep the per-purpose random streams disjoint under one master seed.
_TAG_LINK = 1
_TAG_EAVES = 2
_TAG_PERM = 3
_TAG_RETRY = 5

# Gains with magnitude below this are resampled (probability-zero event made
# explicit so later diagonal inversions are always safe).
MIN_GAIN_MAGNITUDE = 1e-12

_U64 = 2**64


def sub_rng(master_seed, *path):
    """Derive an independent generator for (master_seed, path).

    The split is counter-based via ``SeedSequence`` so that sampling order
    does not matter: any (link, block) stream can be drawn in isolation.
    """
    if not 0 <= int(master_seed) < _U64:
        raise ValueError(f"seed must be a u64, got {master_seed}")
    return np.random.default_rng(
        np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])
    )


@dataclass(frozen=True)
class SystemDims:
    """Extension dimensioning for a K-user run.

    ``streams[0]`` is the large stream count (m+1)^M held by one user per
    block; every other user gets m^M streams. F = streams[0] + streams[1].
    """

    K: int
    m: int
    M: int
    F: int
    streams: tuple

    def __post_init__(self):
        if self.K < 3:
            raise ValueError("K must be >= 3 (alignment undefined below that)")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        assert self.M == (self.K - 1) * (self.K - 2) - 1
        assert self.F == self.streams[0] + self.streams[1]
        assert all(s > 0 for s in self.streams)


def derive_dims(K, m):
    """Dimension the extended channel: M = (K-1)(K-2)-1, F = (m+1)^M + m^M."""
    if K < 3:
        raise ValueError(f"K={K}: need at least 3 users")
    if m < 1:
        raise ValueError(f"m={m}: extension parameter must be positive")
    M = (K - 1) * (K - 2) - 1
    big = (m + 1) ** M
    small = m**M
    streams = (big,) + (small,) * (K - 1)
    return SystemDims(K=K, m=m, M=M, F=big + small, streams=streams)


@dataclass
class DiagonalChannel:
    """One link of the extended channel: F complex gains on a diagonal."""

    gains: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=complex)
        if self.gains.ndim != 1:
            raise ValueError("gains must be a vector (the diagonal)")

    @property
    def F(self):
        return self.gains.shape[0]

    def apply(self, mat):
        """Left-multiply a matrix by this diagonal."""
        return self.gains[:, None] * mat


def _sample_gains(rng, F):
    """i.i.d. CN(0,1) gains with near-zero magnitudes rejected."""
    g = (rng.standard_normal(F) + 1j * rng.standard_normal(F)) / np.sqrt(2.0)
    bad = np.abs(g) < MIN_GAIN_MAGNITUDE
    while np.any(bad):
        n = int(bad.sum())
        g[bad] = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        bad = np.abs(g) < MIN_GAIN_MAGNITUDE
    return g


@dataclass
class NetworkRealization:
    """A full draw of the network: K x K diagonal links, optional eavesdropper row."""

    dims: SystemDims
    links: list  # links[i][k]: DiagonalChannel from transmitter k to receiver i
    eavesdropper: list | None
    seed: int
    distribution: str = "cn01"

    def __post_init__(self):
        K = self.dims.K
        if len(self.links) != K or any(len(row) != K for row in self.links):
            raise ValueError("links must form a complete K x K grid")
        if self.eavesdropper is not None and len(self.eavesdropper) != K:
            raise ValueError("eavesdropper row must have one channel per transmitter")

    def gain(self, i, k):
        """Diagonal gain vector from transmitter k to receiver i."""
        return self.links[i][k].gains

    def as_dict(self):
        """JSON-ready form (interleaved re/im gains) for result manifests."""

        def enc(ch):
            return np.stack([ch.gains.real, ch.gains.imag], axis=1).tolist()

        return {
            "K": self.dims.K,
            "m": self.dims.m,
            "F": self.dims.F,
            "seed": self.seed,
            "distribution": self.distribution,
            "links": [[enc(ch) for ch in row] for row in self.links],
            "eavesdropper": None
            if self.eavesdropper is None
            else [enc(ch) for ch in self.eavesdropper],
        }


def sample_network(dims, seed, with_eavesdropper=False, block_index=0):
    """Draw all K^2 links (and the eavesdropper row if requested).

    Each link gets its own counter-derived substream, so the realization is a
    pure function of (dims, seed, block_index) regardless of evaluation order.
    """
    K, F = dims.K, dims.F
    links = [
        [
            DiagonalChannel(_sample_gains(sub_rng(seed, _TAG_LINK, i, k, block_index), F))
            for k in range(K)
        ]
        for i in range(K)
    ]
    eaves = None
    if with_eavesdropper:
        eaves = sample_eavesdropper_block(dims, seed, block_index)
    return NetworkRealization(dims=dims, links=links, eavesdropper=eaves, seed=int(seed))


def sample_eavesdropper_block(dims, seed, block_index):
    """Fresh eavesdropper row H_e for one fading block: K diagonal channels."""
    return [
        DiagonalChannel(_sample_gains(sub_rng(seed, _TAG_EAVES, k, block_index), dims.F))
        for k in range(dims.K)
    ]


@dataclass(frozen=True)
class PowerConfig:
    """Average per-user power budget rho with a back-off margin epsilon."""

    rho: float
    epsilon_margin: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon_margin < self.rho:
            raise ValueError(
                f"need 0 < epsilon_margin < rho, got eps={self.epsilon_margin}, rho={self.rho}"
            )

    @property
    def effective(self):
        """rho - epsilon, the power actually loaded onto the beams."""
        return self.rho - self.epsilon_margin
