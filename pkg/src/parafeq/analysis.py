"""Frequency decomposition, eigenvalue clusters and channel partitions.

Indices are 0-based internally; reports convert to 1-based mode numbers.

A channel is a sub-basis on which the low-frequency eigenvalues are simple.
Channel ``j`` is driven by input ``j`` of the control operator, so the
partition has ``m(lambda)`` channels (one channel if the low part is empty).
Copies of a repeated low eigenvalue are assigned to channels by a maximum
bipartite matching between copies and inputs, the edge ``(copy, j)`` being
present when ``|b^j_copy| > eps_adm``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .config import DEFAULT_TOL
from .errors import DimensionMismatch, NoAdmissibleMatching, TruncationExhausted
from .spectral import ControlOperator, SpectralOperator

TAIL_RULES = ("round-robin", "support")


@dataclass(frozen=True)
class Cluster:
    representative: complex
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[Cluster, ...]
    tolerance: float

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def within(self, n_low: int) -> "ClusterSet":
        """Clusters restricted to the indices below ``n_low``."""
        out = []
        for c in self.clusters:
            mem = tuple(n for n in c.members if n < n_low)
            if mem:
                out.append(Cluster(c.representative, mem))
        return ClusterSet(tuple(out), self.tolerance)

    def label_of(self, index: int) -> int:
        for i, c in enumerate(self.clusters):
            if index in c.members:
                return i
        raise IndexError(index)


@dataclass(frozen=True)
class FrequencySplit:
    lam: float
    N_lambda: int
    m_lambda: int
    c_A: float
    truncation: int

    @property
    def low_indices(self) -> np.ndarray:
        return np.arange(self.N_lambda)

    @property
    def tail_indices(self) -> np.ndarray:
        return np.arange(self.N_lambda, self.truncation)

    @property
    def n_channels(self) -> int:
        return max(self.m_lambda, 1)


@dataclass(frozen=True)
class ChannelPartition:
    """``channels[j]`` lists global indices, low ones first (``N_j`` of them)."""

    channels: tuple[np.ndarray, ...]
    low_counts: tuple[int, ...]
    truncation: int
    tail_rule: str = "round-robin"

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def low(self, j: int) -> np.ndarray:
        return self.channels[j][: self.low_counts[j]]

    def tail(self, j: int) -> np.ndarray:
        return self.channels[j][self.low_counts[j]:]

    def owner(self) -> np.ndarray:
        """Channel number of every global index."""
        out = np.empty(self.truncation, dtype=int)
        for j, idx in enumerate(self.channels):
            out[idx] = j
        return out

    def gather(self, x, j: int) -> np.ndarray:
        return np.asarray(x)[..., self.channels[j]]

    def scatter(self, parts) -> np.ndarray:
        parts = [np.asarray(p) for p in parts]
        out = np.zeros(self.truncation, dtype=np.result_type(*parts, complex))
        for idx, p in zip(self.channels, parts):
            out[idx] = p
        return out


@dataclass
class AdmissibilityReport:
    admissible: bool
    per_channel: list[bool]
    magnitudes: list[np.ndarray]
    offending: list[tuple[int, int]] = field(default_factory=list)
    # (input j, global index n, |b|) for coefficients of input j outside channel j
    leakage: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def leak_free(self) -> bool:
        return not self.leakage


@dataclass
class FattoriniReport:
    ranks: list[int]
    sizes: list[int]
    representatives: list[complex]
    verdict: bool
    witness: int | None
    truncation: int

    @property
    def label(self) -> str:
        return f"up to truncation M = {self.truncation}"


@dataclass(frozen=True)
class UniquenessVerdict:
    unique: bool
    statement: str
    witness: complex | None = None


def frequency_split(op: SpectralOperator, lam: float, eps_eig: float = DEFAULT_TOL.eps_eig) -> FrequencySplit:
    """Split the spectrum at ``Re(lambda_n) >= -lam``.

    Monotone real parts make the low part a prefix of length ``N(lam)``.
    """
    if not lam > 0:
        raise ValueError(f"rate must be positive, got {lam}")
    re = op.eigenvalues.real
    N = int(np.searchsorted(-re, lam, side="right"))
    if N == op.truncation:
        warnings.warn(f"all {N} modes satisfy Re >= -{lam:g}; enlarge the truncation",
                      TruncationExhausted, stacklevel=2)
    low = cluster_eigenvalues(op.restrict(N), eps_eig) if N else ClusterSet((), eps_eig)
    m = max((c.size for c in low), default=0)
    return FrequencySplit(float(lam), N, m, op.c_A, op.truncation)


def cluster_eigenvalues(op: SpectralOperator, eps: float = DEFAULT_TOL.eps_eig) -> ClusterSet:
    """Greedy left-to-right clustering: join the first cluster within tolerance."""
    reps: list[complex] = []
    members: list[list[int]] = []
    for n, z in enumerate(op.eigenvalues):
        for r, mem in zip(reps, members):
            if abs(z - r) <= eps * (1 + abs(r)):
                mem.append(n)
                break
        else:
            reps.append(complex(z))
            members.append([n])
    return ClusterSet(tuple(Cluster(r, tuple(m)) for r, m in zip(reps, members)), eps)


def _match_cluster(coef: np.ndarray, members, n_channels: int, eps_adm: float) -> np.ndarray:
    """Channel for each copy, or -1 where the matching leaves it unassigned."""
    adj = np.abs(coef[:n_channels][:, list(members)]).T > eps_adm
    if not adj.any():
        return -np.ones(len(members), dtype=int)
    return maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")


def tail_channel(index: int, N: int, m: int) -> int:
    """Channel (0-based) of tail index ``index`` under the round-robin rule.

    The 1-based ``t``-th tail mode of 1-based channel ``j`` sits at global
    1-based position ``N + m t - (j - 1)``.
    """
    return (-(index + 1 - N)) % m


def tail_position(j: int, t: int, N: int, m: int) -> int:
    """0-based global index of the ``t``-th (1-based) tail mode of channel ``j``."""
    return N + m * t - j - 1


def partition_channels(split: FrequencySplit, clusters: ClusterSet, B: ControlOperator,
                       eps_adm: float = DEFAULT_TOL.eps_adm, tail_rule: str = "round-robin") -> ChannelPartition:
    if tail_rule not in TAIL_RULES:
        raise ValueError(f"unknown tail rule {tail_rule!r}")
    M, N = split.truncation, split.N_lambda
    if B.truncation != M:
        raise DimensionMismatch(f"control has {B.truncation} coefficients, operator has {M}")
    m = split.n_channels
    coef = B.coefficients
    low_parts: list[list[int]] = [[] for _ in range(m)]

    for cl in clusters.within(N):
        if cl.size > B.inputs:
            # pigeonhole: more copies than inputs
            raise NoAdmissibleMatching(
                f"eigenvalue {cl.representative:.6g} has multiplicity {cl.size} "
                f"but only {B.inputs} inputs", cluster=cl.representative)
        match = _match_cluster(coef, cl.members, m, eps_adm)
        if np.any(match < 0):
            raise NoAdmissibleMatching(
                f"no assignment of the copies of eigenvalue {cl.representative:.6g} to distinct "
                f"inputs with nonzero coefficients", cluster=cl.representative)
        for n, j in zip(cl.members, match):
            low_parts[j].append(n)

    tails: list[list[int]] = [[] for _ in range(m)]
    for k in range(N, M):
        j = tail_channel(k, N, m)
        if tail_rule == "support":
            mags = np.abs(coef[:m, k])
            if mags.max() > eps_adm:
                j = int(np.argmax(mags))
        tails[j].append(k)

    channels = tuple(np.array(sorted(lo) + tl, dtype=int) for lo, tl in zip(low_parts, tails))
    return ChannelPartition(channels, tuple(len(lo) for lo in low_parts), M, tail_rule)


def check_admissibility(partition: ChannelPartition, B: ControlOperator,
                        eps_adm: float = DEFAULT_TOL.eps_adm) -> AdmissibilityReport:
    if B.inputs < partition.n_channels or B.truncation != partition.truncation:
        raise DimensionMismatch("partition inconsistent with the control operator")
    coef = B.coefficients
    owner = partition.owner()
    per_channel, mags, offending, leakage = [], [], [], []
    for j in range(partition.n_channels):
        low = partition.low(j)
        mag = np.abs(coef[j, low])
        bad = low[mag <= eps_adm]
        offending += [(j, int(n)) for n in bad]
        per_channel.append(bad.size == 0)
        mags.append(mag)
        out = np.nonzero((owner != j) & (np.abs(coef[j]) > eps_adm))[0]
        leakage += [(j, int(n), float(abs(coef[j, n]))) for n in out]
    return AdmissibilityReport(all(per_channel), per_channel, mags, offending, leakage)


def fattorini_rank(clusters: ClusterSet, B: ControlOperator,
                   eps_rank: float = DEFAULT_TOL.eps_rank) -> FattoriniReport:
    """Rank of the ``m x l_n`` coefficient block on every eigenvalue cluster."""
    ranks, sizes, reps = [], [], []
    for cl in clusters:
        block = B.coefficients[:, list(cl.members)]
        sv = np.linalg.svd(block, compute_uv=False)
        rank = int(np.sum(sv > eps_rank * sv[0])) if sv.size and sv[0] > 0 else 0
        ranks.append(rank)
        sizes.append(cl.size)
        reps.append(cl.representative)
    deficient = [i for i, (r, l) in enumerate(zip(ranks, sizes)) if r < l]
    truncation = max((max(c.members) + 1 for c in clusters), default=0)
    return FattoriniReport(ranks, sizes, reps, not deficient,
                           deficient[0] if deficient else None, truncation)


def uniqueness_verdict(report: FattoriniReport) -> UniquenessVerdict:
    if report.verdict:
        return UniquenessVerdict(True, "parabolic F-equivalence unique (up to truncation)")
    rep = report.representatives[report.witness]
    return UniquenessVerdict(
        False, f"non-unique: N_{{B_H}} != {{0}} (rank deficient at eigenvalue {rep.real:.6g})", rep)


@dataclass
class Analysis:
    split: FrequencySplit
    clusters: ClusterSet
    partition: ChannelPartition | None
    admissibility: AdmissibilityReport | None
    fattorini: FattoriniReport
    uniqueness: UniquenessVerdict
    error: Exception | None = None


def analyze(op: SpectralOperator, B: ControlOperator, lam: float, tol=DEFAULT_TOL,
            tail_rule: str = "round-robin") -> Analysis:
    """Run the whole analysis; a failed matching is recorded, not raised."""
    split = frequency_split(op, lam, tol.eps_eig)
    clusters = cluster_eigenvalues(op, tol.eps_eig)
    fat = fattorini_rank(clusters, B, tol.eps_rank)
    partition = adm = error = None
    try:
        partition = partition_channels(split, clusters, B, tol.eps_adm, tail_rule)
        adm = check_admissibility(partition, B, tol.eps_adm)
    except NoAdmissibleMatching as exc:
        error = exc
    return Analysis(split, clusters, partition, adm, fat, uniqueness_verdict(fat), error)
