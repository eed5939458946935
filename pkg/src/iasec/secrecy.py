"""Rate calculus for the confidential-messages model.

The common secrecy rate R and randomization rate Rx come from the aligned
channel's mutual informations: R trades the worst own-stream rate against the
worst leakage, Rx fills the smallest per-user share of any cross multiple
access region so the randomization indices saturate every eavesdropping
receiver. The equivocation deficit delta_hat tracks how far the scheme sits
from perfect secrecy at finite SNR.
"""

import itertools
from dataclasses import dataclass

from .gaussmi import MiQuery, estimate_slope, mutual_info, sum_capacity_bound
from .model import PowerConfig
from .alignment import stream_power

__all__ = [
    "MAX_ENUM_USERS",
    "RateAssignment",
    "DecodabilityReport",
    "RegionReport",
    "EquivocationReport",
    "SubsetSecrecyBudget",
    "CodebookPlan",
    "confidential_rates",
    "decodability_check",
    "randomization_region_check",
    "equivocation_deficit",
    "epsilon_star",
    "symmetric_proportions",
    "codebook_plan",
]

# Subset minima must be exact, so enumeration is exhaustive and capped.
MAX_ENUM_USERS = 6

_SLACK_TOL = 1e-9


def _nonempty_subsets(items):
    items = sorted(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


@dataclass
class RateAssignment:
    """Common secrecy/randomization rates in bits per frequency-time slot."""

    R: float
    Rx: float
    R_raw: float
    Rx_raw: float
    clamped: bool
    own_bits: tuple  # I(X_i; Y_i) per receiver, bits over the extension
    cross_bits: tuple  # I(X_{K-i}; Y_i) per receiver
    binding_receiver: int
    binding_subset: tuple
    subset_bits: dict  # (receiver, subset) -> conditional MI in bits


def _rate_components(net, aset, powers):
    K = net.dims.K
    users = range(K)
    own = []
    cross = []
    subset_bits = {}
    for i in users:
        others = [k for k in users if k != i]
        own.append(mutual_info(net, aset, powers, MiQuery(i, frozenset({i}))).bits)
        cross.append(mutual_info(net, aset, powers, MiQuery(i, frozenset(others))).bits)
        for sub in _nonempty_subsets(others):
            cond = frozenset(others) - frozenset(sub)
            q = MiQuery(i, frozenset(sub), cond)
            subset_bits[(i, sub)] = mutual_info(net, aset, powers, q).bits
    return own, cross, subset_bits


def confidential_rates(net, aset, powers):
    """Rate assignment for the confidential-messages model.

    R  = min_i I(X_i;Y_i)/F - max_i I(X_{K-i};Y_i) / ((K-1)F)
    Rx = min over receivers i and nonempty S of I(X_S;Y_i|X_rest)/(|S| F)

    Negative formula outputs clamp to zero with the flag set; the subset
    minimum is enumerated exhaustively (2^(K-1)-1 subsets per receiver).
    """
    K, F = net.dims.K, net.dims.F
    if K > MAX_ENUM_USERS:
        raise ValueError(f"subset enumeration capped at K={MAX_ENUM_USERS}")
    own, cross, subset_bits = _rate_components(net, aset, powers)
    r_raw = min(own) / F - max(cross) / ((K - 1) * F)
    binding = min(subset_bits, key=lambda key: subset_bits[key] / len(key[1]))
    rx_raw = subset_bits[binding] / (len(binding[1]) * F)
    clamped = r_raw < 0 or rx_raw < 0
    return RateAssignment(
        R=max(r_raw, 0.0),
        Rx=max(rx_raw, 0.0),
        R_raw=r_raw,
        Rx_raw=rx_raw,
        clamped=clamped,
        own_bits=tuple(own),
        cross_bits=tuple(cross),
        binding_receiver=binding[0],
        binding_subset=binding[1],
        subset_bits=subset_bits,
    )


@dataclass
class DecodabilityReport:
    slack: tuple  # per user, bits per slot
    passed: bool

    @property
    def worst_slack(self):
        return min(self.slack)


def decodability_check(net, aset, powers, rates):
    """Assert R + Rx <= I(X_k;Y_k)/F for every user, reporting the slack."""
    K, F = net.dims.K, net.dims.F
    total = rates.R + rates.Rx
    own = [
        mutual_info(net, aset, powers, MiQuery(k, frozenset({k}))).bits for k in range(K)
    ]
    slack = tuple(b / F - total for b in own)
    passed = all(s >= -_SLACK_TOL * max(1.0, total) for s in slack)
    return DecodabilityReport(slack=slack, passed=passed)


@dataclass
class RegionReport:
    entries: list  # (receiver, subset, slack)
    passed: bool

    @property
    def binding(self):
        return min(self.entries, key=lambda e: e[2])


def randomization_region_check(net, aset, powers, rx_rate):
    """Check |S| Rx <= I(X_S;Y_i|X_rest)/F for every receiver and subset."""
    K, F = net.dims.K, net.dims.F
    _, _, subset_bits = _rate_components(net, aset, powers)
    entries = []
    for (i, sub), bits in sorted(subset_bits.items()):
        entries.append((i, sub, bits / F - len(sub) * rx_rate))
    passed = all(s >= -_SLACK_TOL * max(1.0, rx_rate) for _, _, s in entries)
    return RegionReport(entries=entries, passed=passed)


@dataclass
class EquivocationPoint:
    rho: float
    delta_hat: float
    numerator_worst: float
    numerators: tuple
    denominator: float
    degenerate: bool
    clamped: bool


@dataclass
class EquivocationReport:
    """Equivocation deficit, pointwise on the grid and via the high-SNR trend.

    `delta_hat` is the trend value: the regression slopes of the worst-case
    numerator and of the denominator, taken over the top of the rho grid and
    divided. Pointwise ratios at each grid rho are kept in `points`; they
    carry O(1) mutual-information constants that die off only as log(rho)
    grows, so the trend value is the one to compare against analytic targets.
    The Fano residual is taken as zero throughout (no finite-blocklength
    decoder exists in this laboratory).
    """

    points: list
    delta_hat: float
    num_slope: float
    den_slope: float
    delta_hat_at_top: float
    degenerate: bool


def equivocation_deficit(net, aset, rho_grid, epsilon_margin=1.0):
    """Evaluate the deficit bound on the rho grid.

    Per receiver the numerator is the relaxation upper bound on the leakage
    MI minus (K-1) F Rx; the common denominator is (K-1) F R. Worst case over
    receivers is reported.
    """
    K, F = net.dims.K, net.dims.F
    points = []
    num_curve = []
    den_curve = []
    for rho in rho_grid:
        powers = stream_power(aset, PowerConfig(rho=rho, epsilon_margin=epsilon_margin))
        rates = confidential_rates(net, aset, powers)
        nums = []
        for i in range(K):
            others = [k for k in range(K) if k != i]
            upper = sum_capacity_bound(net, aset, powers, i, others)["upper"].bits
            nums.append(upper - (K - 1) * F * rates.Rx_raw)
        den = (K - 1) * F * rates.R_raw
        worst = max(nums)
        degenerate = den <= 0
        points.append(
            EquivocationPoint(
                rho=float(rho),
                delta_hat=worst / den if not degenerate else float("nan"),
                numerator_worst=worst,
                numerators=tuple(nums),
                denominator=den,
                degenerate=degenerate,
                clamped=rates.clamped,
            )
        )
        num_curve.append(worst)
        den_curve.append(den)
    lookup_num = dict(zip(rho_grid, num_curve))
    lookup_den = dict(zip(rho_grid, den_curve))
    num_fit = estimate_slope(lambda r: lookup_num[r], rho_grid)
    den_fit = estimate_slope(lambda r: lookup_den[r], rho_grid)
    degenerate = den_fit.slope <= 0
    return EquivocationReport(
        points=points,
        delta_hat=num_fit.slope / den_fit.slope if not degenerate else float("nan"),
        num_slope=num_fit.slope,
        den_slope=den_fit.slope,
        delta_hat_at_top=points[-1].delta_hat,
        degenerate=degenerate,
    )


@dataclass
class SubsetSecrecyBudget:
    epsilon_star: float
    minimizing_subset: tuple
    eps: float
    d: float
    proportions: tuple
    receiver: int | None = None


def symmetric_proportions(K):
    """Equal per-user entropy shares over the K-1 eavesdropped users."""
    return (1.0 / (K - 1),) * (K - 1)


def epsilon_star(proportions, eps, d, receiver=None):
    """Secrecy budget that lets full-set equivocation imply all-subset equivocation.

    epsilon* = min over nonempty subsets S of (1 + eps - d) H(W_S)/H(W_all),
    with subset entropies additive in the per-user proportions supplied.
    """
    proportions = tuple(float(p) for p in proportions)
    if any(p <= 0 for p in proportions):
        raise ValueError("entropy proportions must be positive")
    best = None
    best_sub = None
    for sub in _nonempty_subsets(range(len(proportions))):
        share = sum(proportions[u] for u in sub)
        value = (1.0 + eps - d) * share
        if best is None or value < best:
            best, best_sub = value, sub
    return SubsetSecrecyBudget(
        epsilon_star=best,
        minimizing_subset=best_sub,
        eps=eps,
        d=d,
        proportions=proportions,
        receiver=receiver,
    )


@dataclass
class CodebookPlan:
    """Index-space sizes of the binned random codebook (no codewords drawn)."""

    n: int
    F: int
    log2_bins: float
    log2_codewords_per_bin: float
    log2_total: float


def codebook_plan(rates, n, F):
    """Bin/codeword bookkeeping: log2 M_k = n F R, log2 M_k^x = n F Rx."""
    if n < 1:
        raise ValueError("block count n must be >= 1")
    bins = n * F * rates.R
    per_bin = n * F * rates.Rx
    return CodebookPlan(
        n=n,
        F=F,
        log2_bins=bins,
        log2_codewords_per_bin=per_bin,
        log2_total=bins + per_bin,
    )
