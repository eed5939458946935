"""Block-fading machinery for the external-eavesdropper model.

Each fading block redraws the channel and a uniform random user ordering; the
large-stream role rotates so every user's effective channel is identically
distributed. Rates are expectations over blocks: the eavesdropper's whole
multiple-access capacity is spent on randomization messages, split evenly,
and what remains of each user's own-stream rate is secret.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentError, build_beamformers, build_generators, stream_power
from .gaussmi import expectation, mi_from_gains
from .model import (
    NetworkRealization,
    _TAG_PERM,
    _TAG_RETRY,
    sample_eavesdropper_block,
    sample_network,
    sub_rng,
)

__all__ = [
    "PermutationSchedule",
    "BlockAlignment",
    "ErgodicEstimate",
    "BudgetReport",
    "InequalityAuditReport",
    "SymmetryReport",
    "sample_schedule",
    "block_network",
    "ergodic_rates",
    "eavesdropper_budget_check",
    "mi_inequality_audit",
    "symmetry_audit",
    "augment_with_virtual_user",
]

_CI_Z = 1.96
_TOL = 1e-9


@dataclass
class PermutationSchedule:
    """B independent uniform orderings of the K users."""

    K: int
    B: int
    permutations: np.ndarray  # B x K
    seed: int

    def __post_init__(self):
        assert self.permutations.shape == (self.B, self.K)


def sample_schedule(K, B, seed):
    """Draw one uniform permutation per fading block, deterministically."""
    if B < 1:
        raise ValueError("need at least one block")
    perms = np.stack([_block_permutation(K, seed, b) for b in range(B)])
    return PermutationSchedule(K=K, B=B, permutations=perms, seed=int(seed))


def _block_permutation(K, seed, block_index):
    return sub_rng(seed, _TAG_PERM, block_index).permutation(K)


@dataclass
class BlockAlignment:
    """One fading block: role-ordered channels, beamformers, eavesdropper row.

    Role r belongs to user perm[r]; role 0 carries the (m+1)^M streams this
    block. All mutual informations are computed in role coordinates and mapped
    back through `role_of` when a user-indexed quantity is needed.
    """

    block_index: int
    perm: np.ndarray
    role_of: np.ndarray
    net_role: NetworkRealization
    aset: object
    eaves_role: list | None

    def own_gains(self, role):
        """Effective gain matrices of all roles at role `role`'s receiver."""
        K = self.net_role.dims.K
        return [self.net_role.links[role][s].apply(self.aset.matrix(s)) for s in range(K)]

    def eaves_gains(self):
        K = self.net_role.dims.K
        return [self.eaves_role[r].apply(self.aset.matrix(r)) for r in range(K)]


def block_network(dims, seed, block_index, perm=None, with_eavesdropper=True, verify=True,
                  retries=3):
    """Draw and align one fading block under the ordering `perm`.

    A fresh channel is sampled for the block, the grid is reindexed so that
    user perm[0] takes the large-stream role, and the beamformers are built
    and verified on the reordered grid. A draw whose verification fails at
    tolerance (a numerically degenerate realization) is resampled from a
    derived sub-seed up to `retries` times, keeping long Monte Carlo runs
    total without touching any non-degenerate block.
    """
    if perm is None:
        perm = _block_permutation(dims.K, seed, block_index)
    perm = np.asarray(perm)
    K = dims.K
    if sorted(perm.tolist()) != list(range(K)):
        raise ValueError(f"perm must be a bijection on 0..{K - 1}")
    last = None
    for attempt in range(retries + 1):
        if attempt == 0:
            net = sample_network(dims, seed, block_index=block_index)
        else:
            salt = int(sub_rng(seed, _TAG_RETRY, block_index, attempt).integers(0, 2**63))
            net = sample_network(dims, salt, block_index=block_index)
        links_role = [[net.links[perm[r]][perm[s]] for s in range(K)] for r in range(K)]
        net_role = NetworkRealization(
            dims=dims, links=links_role, eavesdropper=None, seed=net.seed
        )
        try:
            aset = build_beamformers(net_role, build_generators(net_role), verify=verify)
            break
        except AlignmentError as exc:
            last = exc
    else:
        raise AlignmentError(f"block {block_index}: degenerate beyond retry budget: {last}")
    eaves_role = None
    if with_eavesdropper:
        eaves_user = sample_eavesdropper_block(dims, seed, block_index)
        eaves_role = [eaves_user[perm[r]] for r in range(K)]
    role_of = np.empty(K, dtype=int)
    role_of[perm] = np.arange(K)
    return BlockAlignment(
        block_index=block_index,
        perm=perm,
        role_of=role_of,
        net_role=net_role,
        aset=aset,
        eaves_role=eaves_role,
    )


@dataclass
class ErgodicEstimate:
    R: float
    Rx: float
    R_raw: float
    clamped: bool
    own_mean: float
    eaves_mean: float
    eaves_upper_mean: float
    R_ci: tuple
    Rx_ci: tuple
    trials: int


def ergodic_rates(dims, power, trials, seed, workers=1, verify_blocks=True):
    """Monte Carlo rate assignment for the ergodic external-eavesdropper model.

    R  = (K E[I(X;Y|H)] - E_upper[I(X_all;Y_e|H,H_e)]) / (K F)
    Rx = E[I(X_all;Y_e|H,H_e)] / (K F)

    E[I(X;Y|H)] averages each user's own-stream MI over blocks and the random
    role rotation; the eavesdropper term's input maximization is bracketed by
    inflating every user's per-stream power to its whole budget.
    """
    if trials < 30:
        raise ValueError("ergodic estimates need at least 30 trials")
    K, F = dims.K, dims.F

    def draw(t):
        return block_network(dims, seed, t, verify=verify_blocks)

    def statistic(block):
        p = stream_power(block.aset, power)
        own = np.mean(
            [mi_from_gains(block.own_gains(r), p, {r}).bits for r in range(K)]
        )
        eg = block.eaves_gains()
        eav = mi_from_gains(eg, p, range(K)).bits
        p_up = np.array([dims.streams[r] * p[r] for r in range(K)])
        eav_up = mi_from_gains(eg, p_up, range(K)).bits
        r_t = (K * own - eav_up) / (K * F)
        rx_t = eav / (K * F)
        return np.array([own, eav, eav_up, r_t, rx_t])

    est = expectation(draw, statistic, trials, workers=workers)
    own_m, eav_m, up_m, r_m, rx_m = (float(v) for v in est.mean)
    return ErgodicEstimate(
        R=max(r_m, 0.0),
        Rx=rx_m,
        R_raw=r_m,
        clamped=r_m < 0,
        own_mean=own_m,
        eaves_mean=eav_m,
        eaves_upper_mean=up_m,
        R_ci=(float(est.ci_low[3]), float(est.ci_high[3])),
        Rx_ci=(float(est.ci_low[4]), float(est.ci_high[4])),
        trials=trials,
    )


def _user_subsets(K, strict=False):
    upper = K - 1 if strict else K
    out = []
    for r in range(1, upper + 1):
        out.extend(itertools.combinations(range(K), r))
    return out


def _roles(block, users):
    return [int(block.role_of[u]) for u in users]


@dataclass
class BudgetReport:
    entries: list  # (subset, lhs bits/slot, rhs mean bits/slot, paired ci_half, slack)
    passed: bool

    @property
    def tightest(self):
        return min(self.entries, key=lambda e: e[4])


def eavesdropper_budget_check(dims, power, rx_rate, trials, seed, workers=1):
    """Check |S| Rx <= E[I(X_S;Y_e|X_rest,H,H_e)]/F for every nonempty user set S.

    The confidence allowance comes from the paired per-block differences
    against the same block's randomization-rate sample, which cancels the
    role-rotation swing shared by both sides. With the full set the
    inequality is an identity of the rate rule, so its slack sits at
    numerical zero when the same seed and trial count are used.
    """
    K, F = dims.K, dims.F
    subsets = _user_subsets(K)

    def draw(t):
        return block_network(dims, seed, t)

    def statistic(block):
        p = stream_power(block.aset, power)
        eg = block.eaves_gains()
        rx_block = mi_from_gains(eg, p, range(K)).bits / (K * F)
        vals = []
        for sub in subsets:
            roles = _roles(block, sub)
            rest = [r for r in range(K) if r not in roles]
            rhs = mi_from_gains(eg, p, roles, conditioned=rest).bits / F
            vals.extend([rhs, rhs - len(sub) * rx_block])
        vals.append(rx_block)
        return np.array(vals)

    est = expectation(draw, statistic, trials, workers=workers)
    rx_mean = est.mean[-1]
    entries = []
    ok = True
    for idx, sub in enumerate(subsets):
        lhs = len(sub) * rx_rate
        rhs = est.mean[2 * idx]
        # shift the paired slack if the caller's rate differs from this
        # sample's own mean (zero when both use the same seed and trials)
        slack = est.mean[2 * idx + 1] - len(sub) * (rx_rate - rx_mean)
        half = est.ci_halfwidth[2 * idx + 1]
        entries.append((sub, lhs, rhs, half, slack))
        if slack < -(half + _TOL * max(1.0, lhs)):
            ok = False
    return BudgetReport(entries=entries, passed=ok)


@dataclass
class InequalityAuditReport:
    lemma3_pairs: int
    lemma3_violations: int
    lemma4_entries: list  # (subset, lhs mean, rhs mean, diff ci_half)
    lemma4_passed: bool
    symmetry_entries: list  # (cond set, user means, ci halves)
    symmetry_passed: bool

    @property
    def passed(self):
        return self.lemma3_violations == 0 and self.lemma4_passed and self.symmetry_passed


def mi_inequality_audit(dims, power, trials, seed, workers=1):
    """Audit the conditioning and averaging inequalities behind the rate rule.

    Per realization: conditioning on a disjoint user set never lowers the
    eavesdropper's MI about the remaining set (checked for every disjoint
    pair, exhaustively for K <= 4). In expectation: the per-user normalized
    conditional MI of S given its complement dominates that of the complement
    alone, and single-user conditional MIs agree across users.
    """
    if trials < 30:
        raise ValueError("audits need at least 30 trials")
    K, F = dims.K, dims.F
    if K > 4:
        raise ValueError("disjoint-pair enumeration is exhaustive only up to K=4")
    nonempty = _user_subsets(K)
    pairs = [
        (m_set, l_set)
        for m_set in nonempty
        for l_set in nonempty
        if not set(m_set) & set(l_set)
    ]
    strict = _user_subsets(K, strict=True)
    sym_conds = [c for c in [()] + strict if len(c) <= K - 2]

    def draw(t):
        return block_network(dims, seed, t)

    def statistic(block):
        p = stream_power(block.aset, power)
        eg = block.eaves_gains()
        cache = {}

        def mi_users(sig, cond=()):
            key = (sig, cond)
            if key not in cache:
                cache[key] = mi_from_gains(
                    eg, p, _roles(block, sig), conditioned=_roles(block, cond)
                ).bits
            return cache[key]

        vals = []
        viol = 0
        for m_set, l_set in pairs:
            plain = mi_users(m_set)
            if plain > mi_users(m_set, l_set) + _TOL * max(1.0, plain):
                viol += 1
        vals.append(float(viol))
        for sub in strict:
            rest = tuple(u for u in range(K) if u not in sub)
            lhs = mi_users(rest) / len(rest)
            rhs = mi_users(sub, rest) / len(sub)
            vals.append(lhs - rhs)
        for cond in sym_conds:
            for u in range(K):
                if u not in cond:
                    vals.append(mi_users((u,), cond))
        return np.array(vals)

    est = expectation(draw, statistic, trials, workers=workers)
    idx = 0
    lemma3_viol = int(round(float(est.mean[idx] * trials)))
    idx += 1
    lemma4_entries = []
    lemma4_ok = True
    for sub in strict:
        diff_mean = est.mean[idx]
        half = est.ci_halfwidth[idx]
        lemma4_entries.append((sub, diff_mean, half))
        if diff_mean > half + _TOL:
            lemma4_ok = False
        idx += 1
    sym_entries = []
    sym_ok = True
    for cond in sym_conds:
        users = [u for u in range(K) if u not in cond]
        means = est.mean[idx : idx + len(users)]
        halves = est.ci_halfwidth[idx : idx + len(users)]
        idx += len(users)
        sym_entries.append((cond, dict(zip(users, means)), dict(zip(users, halves))))
        for a in range(len(users)):
            for b in range(a + 1, len(users)):
                if abs(means[a] - means[b]) > halves[a] + halves[b]:
                    sym_ok = False
    return InequalityAuditReport(
        lemma3_pairs=len(pairs),
        lemma3_violations=lemma3_viol,
        lemma4_entries=lemma4_entries,
        lemma4_passed=lemma4_ok,
        symmetry_entries=sym_entries,
        symmetry_passed=sym_ok,
    )


@dataclass
class SymmetryReport:
    skipped: bool
    user_means: dict
    user_ci_half: dict
    passed: bool


def symmetry_audit(dims, power, trials, seed, randomize_roles=True, workers=1):
    """Check that per-user own-stream MI expectations agree across users.

    Only meaningful when the role rotation is active: with a fixed identity
    ordering there is nothing to symmetrize and the audit reports skipped.
    """
    if trials < 100:
        raise ValueError("symmetry audit needs at least 100 trials")
    if not randomize_roles:
        return SymmetryReport(skipped=True, user_means={}, user_ci_half={}, passed=True)
    K = dims.K

    def draw(t):
        return block_network(dims, seed, t)

    def statistic(block):
        p = stream_power(block.aset, power)
        return np.array(
            [
                mi_from_gains(block.own_gains(int(block.role_of[u])), p, {int(block.role_of[u])}).bits
                for u in range(K)
            ]
        )

    est = expectation(draw, statistic, trials, workers=workers)
    means = {u: float(est.mean[u]) for u in range(K)}
    halves = {u: float(est.ci_halfwidth[u]) for u in range(K)}
    ok = all(
        abs(means[a] - means[b]) <= halves[a] + halves[b]
        for a in range(K)
        for b in range(a + 1, K)
    )
    return SymmetryReport(skipped=False, user_means=means, user_ci_half=halves, passed=ok)


def augment_with_virtual_user(aug_dims, net):
    """Fold a known-CSI eavesdropper into the grid as one more receiver.

    `net` holds the real users on the first K-1 indices of an (already
    K-user-dimensioned) grid plus an eavesdropper row; the returned network
    routes the eavesdropper row into the last receiver's links while keeping
    the freshly sampled virtual-transmitter column, so the confidential
    pipeline applies unchanged.
    """
    if net.eavesdropper is None:
        raise ValueError("augmentation needs the eavesdropper row (known-CSI regime)")
    if net.dims != aug_dims:
        raise ValueError("network must be sampled at the augmented dimensions")
    K = aug_dims.K
    links = [list(row) for row in net.links]
    links[K - 1] = [net.eavesdropper[k] for k in range(K - 1)] + [net.links[K - 1][K - 1]]
    return NetworkRealization(
        dims=aug_dims,
        links=links,
        eavesdropper=None,
        seed=net.seed,
        distribution=net.distribution + "+virtual",
    )
