"""Synthesis of the parabolic F-equivalence pair (T, K).

On a channel with simple low eigenvalues ``lambda_1..lambda_n`` and control
coefficients ``b_1..b_n`` the finite-dimensional problem

    T (Lambda + b K) = (Lambda - mu) T,    T b = b

is solved entrywise by ``T_ij = b_i K_j / (lambda_i - lambda_j - mu)``.
Inserting this into ``T b = b`` leaves the Cauchy system

    sum_j y_j / (lambda_i - lambda_j - mu) = 1,    y_j = b_j K_j,

which is solved by dense LU.  The tail of the channel is then forced:
``tau_kn = b_k K_n / (lambda_k - lambda_n)`` and
``c_k = 1 - sum_n b_n K_n / (lambda_k - lambda_n)`` (``c_k = 1`` if ``b_k = 0``).

Coefficients are the raw pairings ``<B, e_n>``.  Any ``D(A)'`` weight put on
``b_n`` is divided out of ``K_n`` again, so only the products ``b_n K_n`` and
``b_k K_n`` ever matter and the normalisation cancels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .analysis import (
    ChannelPartition,
    FrequencySplit,
    check_admissibility,
    cluster_eigenvalues,
    frequency_split,
    partition_channels,
)
from .config import DEFAULT_TOL, Tolerances
from .errors import (
    ChannelLeakage,
    DegenerateDenominator,
    InconsistentMu,
    MuBelowFloor,
    NoValidMuFound,
    PartitionMismatch,
    ResonantMu,
    SingularCauchySystem,
    ZeroControlCoefficient,
)
from .spectral import ControlOperator, SpectralOperator, require_valid


@dataclass
class ChannelFeq:
    j: int
    mu: float
    eigenvalues: np.ndarray
    b: np.ndarray
    T_tilde: np.ndarray
    K_tilde: np.ndarray
    cond_G: float

    @property
    def size(self) -> int:
        return self.K_tilde.shape[0]


@dataclass
class TailOperator:
    j: int
    indices: np.ndarray
    tau: np.ndarray          # (len(indices), N_j)
    c: np.ndarray
    valid: bool = True
    violations: list[tuple[int, float]] = field(default_factory=list)
    # sum_n |b_n K_n| over the channel's low modes, drives the envelope
    coupling: float = 0.0
    row_defect: float = 0.0

    @property
    def c_min(self) -> float:
        return float(np.min(np.abs(self.c))) if self.c.size else 1.0


@dataclass
class MuReport:
    mu: float
    valid: bool
    resonance_gap: float
    resonance_pair: tuple[int, int] | None
    c_min: float
    envelope_margin: float
    violations: list[dict] = field(default_factory=list)


@dataclass
class SynthesisResult:
    mu: float
    split: FrequencySplit
    partition: ChannelPartition
    channels: list[ChannelFeq]
    tails: list[TailOperator]
    K: np.ndarray           # m(lambda) x N(lambda), acts on low coordinates
    K_full: np.ndarray      # n_channels x M, zero outside the low block
    T: np.ndarray
    T_inv: np.ndarray
    D: np.ndarray
    mu_report: MuReport | None = None
    attempts: list[dict] = field(default_factory=list)

    @property
    def truncation(self) -> int:
        return self.T.shape[0]

    @property
    def valid(self) -> bool:
        return self.mu_report is None or self.mu_report.valid


def solve_channel_feq(low_eigs, low_b, mu: float, j: int = 0, tol: Tolerances = DEFAULT_TOL) -> ChannelFeq:
    lam = np.asarray(low_eigs, dtype=complex)
    b = np.asarray(low_b, dtype=complex)
    if lam.shape != b.shape:
        raise ValueError("eigenvalue and coefficient lists differ in length")
    if np.any(np.abs(b) <= tol.eps_adm):
        bad = int(np.argmax(np.abs(b) <= tol.eps_adm))
        raise ZeroControlCoefficient(f"channel {j}: zero control coefficient on low mode {bad + 1}")
    n = lam.size
    if n == 0:
        return ChannelFeq(j, mu, lam, b, np.zeros((0, 0), complex), np.zeros(0, complex), 1.0)

    denom = lam[:, None] - lam[None, :] - mu
    gap = np.min(np.abs(denom))
    if gap < tol.eps_res(mu):
        raise ResonantMu(f"mu = {mu:g} within {gap:.3g} of a low eigenvalue gap")
    G = 1.0 / denom
    cond = float(np.linalg.cond(G))
    if not cond <= tol.cond_max:
        raise SingularCauchySystem(f"Cauchy matrix condition number {cond:.3g}")
    y = sla.lu_solve(sla.lu_factor(G), np.ones(n, dtype=complex))
    K = y / b
    T = b[:, None] * K[None, :] / denom
    return ChannelFeq(j, float(mu), lam, b, T, K, cond)


def cauchy_closed_form(low_eigs, mu: float) -> np.ndarray:
    """Product formula for ``y_j = b_j K_j``, used as an independent check."""
    lam = np.asarray(low_eigs, dtype=complex)
    y = np.empty_like(lam)
    for j in range(lam.size):
        d = lam[j] - np.delete(lam, j)
        y[j] = -mu * np.prod((d + mu) / d)
    return y


def build_tail(indices, low_feq: ChannelFeq, op: SpectralOperator, B: ControlOperator,
               tol: Tolerances = DEFAULT_TOL) -> TailOperator:
    """Tail rows ``tau`` and diagonal ``c`` of one channel.

    ``indices`` are the channel's tail indices; the channel input is row
    ``low_feq.j`` of ``B``.
    """
    idx = np.asarray(indices, dtype=int)
    lam_k = op.eigenvalues[idx]
    b_k = B.coefficients[low_feq.j, idx]
    lam_n = low_feq.eigenvalues
    y = low_feq.b * low_feq.K_tilde

    denom = lam_k[:, None] - lam_n[None, :]
    if denom.size and np.min(np.abs(denom)) < tol.eps_res(low_feq.mu):
        raise DegenerateDenominator(f"channel {low_feq.j}: tail eigenvalue coincides with a low one")
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = b_k[:, None] * low_feq.K_tilde[None, :] / denom
        c = 1.0 - np.sum(y[None, :] / denom, axis=1)
    c = np.where(b_k == 0, 1.0 + 0j, c)

    # row identity tau b_L + c b_H = b_H
    lhs = tau @ low_feq.b + c * b_k
    scale = 1.0 + np.abs(b_k) + np.abs(tau) @ np.abs(low_feq.b)
    defect = float(np.max(np.abs(lhs - b_k) / scale)) if idx.size else 0.0

    small = np.abs(c) < tol.eps_c
    violations = [(int(k), float(abs(ck))) for k, ck in zip(idx[small], c[small])]
    return TailOperator(low_feq.j, idx, tau, c, not violations, violations,
                        float(np.sum(np.abs(y))), defect)


def _resonance(op: SpectralOperator, split: FrequencySplit, mu: float):
    """Distance from ``mu`` to the differences ``lambda_l - lambda_h`` (l low)."""
    N = split.N_lambda
    if N == 0:
        return np.inf, None
    lam = op.eigenvalues
    dist = np.abs(lam[:N, None] - lam[None, :] - mu)
    l, h = np.unravel_index(np.argmin(dist), dist.shape)
    return float(dist[l, h]), (int(l), int(h))


def validate_mu(tails: list[TailOperator], op: SpectralOperator, split: FrequencySplit, mu: float,
                channels: list[ChannelFeq] | None = None, tol: Tolerances = DEFAULT_TOL) -> MuReport:
    """Check resonance, ``|c_k| >= eps_c`` and the envelope beyond truncation.

    Past the last retained mode ``lambda_M`` every ``|lambda_k - lambda_n|`` is at
    least ``Re lambda_n - Re lambda_M``, so ``|c_k - 1| <= S / min_n(...)`` with
    ``S = sum |b_n K_n|``; the envelope holds when this is ``<= 1 - eps_c``.
    This assumes the unseen coefficients behave like the retained ones.
    """
    floor = split.lam + split.c_A
    if mu < floor * (1 - 1e-15):
        raise MuBelowFloor(f"mu = {mu:g} below lambda + c_A = {floor:g}")
    violations = []
    gap, pair = _resonance(op, split, mu)
    if gap < tol.eps_res(mu):
        violations.append({"kind": "resonance", "pair": [pair[0] + 1, pair[1] + 1], "gap": gap})
    c_min = 1.0
    for t in tails:
        c_min = min(c_min, t.c_min)
        for k, ck in t.violations:
            violations.append({"kind": "c_small", "channel": t.j + 1, "mode": k + 1, "abs_c": ck})

    margin = np.inf
    re_last = op.eigenvalues[-1].real
    for j, t in enumerate(tails):
        lows = channels[j].eigenvalues if channels is not None else op.eigenvalues[: split.N_lambda]
        if lows.size == 0 or t.coupling == 0:
            continue
        dist = np.min(lows.real) - re_last
        bound = t.coupling / dist if dist > 0 else np.inf
        margin = min(margin, (1 - tol.eps_c) - bound)
        if not bound <= 1 - tol.eps_c:
            violations.append({"kind": "envelope", "channel": t.j + 1, "bound": float(bound)})
    return MuReport(float(mu), not violations, gap, pair, float(c_min), float(margin), violations)


def synthesize_channels(op: SpectralOperator, B: ControlOperator, partition: ChannelPartition, mu: float,
                        tol: Tolerances = DEFAULT_TOL):
    feqs, tails = [], []
    for j in range(partition.n_channels):
        low = partition.low(j)
        feq = solve_channel_feq(op.eigenvalues[low], B.coefficients[j, low], mu, j, tol)
        feqs.append(feq)
        tails.append(build_tail(partition.tail(j), feq, op, B, tol))
    return feqs, tails


def select_mu(op: SpectralOperator, split: FrequencySplit, B: ControlOperator, partition: ChannelPartition,
              mu0: float, attempts: int = 10, seed: int = 0, tol: Tolerances = DEFAULT_TOL):
    """First valid ``mu`` among ``mu0`` and jittered retries.

    Retry ``i`` uses ``mu0 + U(0, 1) (1 + mu0)`` from a generator seeded once,
    so the sequence of candidates is reproducible.
    """
    floor = split.lam + split.c_A
    if mu0 < floor * (1 - 1e-15):
        raise MuBelowFloor(f"mu0 = {mu0:g} below lambda + c_A = {floor:g}")
    rng = np.random.default_rng(seed)
    log = []
    mu = float(mu0)
    for i in range(attempts):
        if i > 0:
            mu = float(mu0 + rng.uniform(0.0, 1.0) * (1.0 + mu0))
        try:
            feqs, tails = synthesize_channels(op, B, partition, mu, tol)
        except (ResonantMu, SingularCauchySystem) as exc:
            log.append({"mu": mu, "valid": False, "reason": type(exc).__name__})
            continue
        rep = validate_mu(tails, op, split, mu, feqs, tol)
        log.append({"mu": mu, "valid": rep.valid,
                    "reason": ",".join(sorted({v["kind"] for v in rep.violations}))})
        if rep.valid:
            return mu, rep, feqs, tails, log
    raise NoValidMuFound(f"no valid mu after {attempts} attempts from mu0 = {mu0:g}", log)


def assemble(partition: ChannelPartition, channel_feqs: list[ChannelFeq], tails: list[TailOperator],
             op: SpectralOperator, B: ControlOperator, split: FrequencySplit | None = None) -> SynthesisResult:
    mus = {f.mu for f in channel_feqs}
    if len(mus) > 1:
        raise InconsistentMu(f"channels synthesized with different shifts {sorted(mus)}")
    if len(channel_feqs) != partition.n_channels or len(tails) != partition.n_channels:
        raise PartitionMismatch("channel count differs from the partition")
    M = op.truncation
    if partition.truncation != M or B.truncation != M:
        raise PartitionMismatch("partition truncation differs from the operator")
    mu = mus.pop()
    if split is None:
        N = sum(partition.low_counts)
        split = FrequencySplit(float("nan"), N, partition.n_channels if N else 0, op.c_A, M)

    T = np.zeros((M, M), dtype=complex)
    T_inv = np.zeros((M, M), dtype=complex)
    K_full = np.zeros((partition.n_channels, M), dtype=complex)
    for j, (feq, tail) in enumerate(zip(channel_feqs, tails)):
        low, hi = partition.low(j), partition.tail(j)
        if feq.size != low.size or not np.array_equal(tail.indices, hi):
            raise PartitionMismatch(f"channel {j} blocks do not match the partition")
        Tt_inv = np.linalg.inv(feq.T_tilde) if low.size else feq.T_tilde
        T[np.ix_(low, low)] = feq.T_tilde
        T[np.ix_(hi, low)] = tail.tau
        T[hi, hi] = tail.c
        T_inv[np.ix_(low, low)] = Tt_inv
        T_inv[np.ix_(hi, low)] = -(tail.tau @ Tt_inv) / tail.c[:, None]
        T_inv[hi, hi] = 1.0 / tail.c
        K_full[j, low] = feq.K_tilde

    N = split.N_lambda
    D = op.eigenvalues.astype(complex).copy()
    D[:N] -= mu
    return SynthesisResult(mu, split, partition, list(channel_feqs), list(tails),
                           K_full[: split.m_lambda, :N].copy(), K_full, T, T_inv, D)


def closed_loop(op: SpectralOperator, B: ControlOperator, K_full: np.ndarray) -> np.ndarray:
    """Truncated ``A + B K`` with ``K_full`` acting through the first inputs."""
    m = K_full.shape[0]
    return np.diag(op.eigenvalues) + B.matrix[:, :m] @ K_full


def synthesize(op: SpectralOperator, B: ControlOperator, lam: float, mu: float | None = None,
               tol: Tolerances = DEFAULT_TOL, attempts: int = 10, seed: int = 0,
               tail_rule: str = "round-robin") -> SynthesisResult:
    """Full pipeline: split, partition, pick ``mu`` and assemble ``(T, K)``."""
    require_valid(op)
    split = frequency_split(op, lam, tol.eps_eig)
    clusters = cluster_eigenvalues(op, tol.eps_eig)
    partition = partition_channels(split, clusters, B, tol.eps_adm, tail_rule)
    adm = check_admissibility(partition, B, tol.eps_adm)
    if not adm.admissible:
        j, n = adm.offending[0]
        raise ZeroControlCoefficient(f"input {j + 1} vanishes on its low mode {n + 1}")
    if not adm.leak_free:
        j, n, v = adm.leakage[0]
        raise ChannelLeakage(f"input {j + 1} acts on mode {n + 1} outside its channel (|b| = {v:.3g})")
    mu0 = split.lam + split.c_A if mu is None else float(mu)
    mu, rep, feqs, tails, log = select_mu(op, split, B, partition, mu0, attempts, seed, tol)
    result = assemble(partition, feqs, tails, op, B, split)
    result.mu_report = rep
    result.attempts = log
    return result
