"""Independent checks of a synthesized (T, K) pair.

Nothing here reuses the synthesis formulas: residuals are formed from the
assembled matrices, the closed-loop spectrum comes from a dense eigensolver
and norms from singular values.  Operator norms are truncated spectral
norms, hence lower bounds for the infinite-dimensional ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import FrequencySplit
from .config import DEFAULT_TOL, Tolerances
from .errors import DimensionMismatch
from .spectral import ControlOperator, SpectralOperator, sobolev_weights
from .synthesis import SynthesisResult, closed_loop

TRUNCATED = "truncated lower bound"


@dataclass
class ResidualReport:
    residuals: np.ndarray
    tb_residual: float
    max_r: float
    gamma: float


@dataclass
class ShiftReport:
    distance: float
    pairs: list[tuple[complex, complex]] = field(default_factory=list)


@dataclass
class TailRegularity:
    cutoffs: list[int]
    partial_sums: np.ndarray      # (len(cutoffs), N)
    last_increment: np.ndarray    # share of the total added by the last quarter
    warning: bool
    label: str = "necessary-condition probe at truncation"


@dataclass
class VerifyReport:
    residual: ResidualReport
    shift: ShiftReport
    conditioning: dict
    tail: TailRegularity
    passed: bool
    thresholds: dict


def feq_residual(result: SynthesisResult, op: SpectralOperator, B: ControlOperator) -> ResidualReport:
    """Column norms of ``T (A + B K) - D T`` and the defect ``max_j |T b^j - b^j|``."""
    M = op.truncation
    if result.T.shape != (M, M) or B.truncation != M or result.D.shape != (M,):
        raise DimensionMismatch(f"result of size {result.T.shape[0]} against truncation {M}")
    X = closed_loop(op, B, result.K_full)
    R = result.T @ X - result.D[:, None] * result.T
    res = np.linalg.norm(R, axis=0)
    Bm = B.matrix[:, : result.K_full.shape[0]]
    tb = float(np.max(np.abs(result.T @ Bm - Bm))) if Bm.size else 0.0
    gamma = min(1.0 - B.growth_exponent, 0.5)
    return ResidualReport(res, tb, float(res.max()), gamma)


def target_spectrum(op: SpectralOperator, split: FrequencySplit, mu: float) -> np.ndarray:
    D = op.eigenvalues.astype(complex).copy()
    D[: split.N_lambda] -= mu
    return D


def greedy_match(found, target) -> ShiftReport:
    """Match each target to its nearest unused computed eigenvalue."""
    pool = list(np.asarray(found, dtype=complex))
    pairs, dist = [], 0.0
    for z in np.asarray(target, dtype=complex):
        d = np.abs(np.array(pool) - z)
        k = int(np.argmin(d))
        dist = max(dist, float(d[k]))
        pairs.append((complex(z), complex(pool.pop(k))))
    return ShiftReport(dist, pairs)


def spectrum_shift_check(op: SpectralOperator, split: FrequencySplit, B: ControlOperator, K, mu: float) -> ShiftReport:
    """Distance between ``eig(A + BK)`` and ``{lambda_n - mu} u {lambda_n}``.

    ``K`` may be the low-coordinate gain ``(m, N)`` or the full ``(m, M)`` one.
    """
    K = np.atleast_2d(np.asarray(K, dtype=complex))
    if K.shape[1] == split.N_lambda and K.shape[1] != op.truncation:
        K = np.hstack([K, np.zeros((K.shape[0], op.truncation - K.shape[1]))])
    ev = np.linalg.eigvals(closed_loop(op, B, K))
    return greedy_match(ev, target_spectrum(op, split, mu))


def transformation_conditioning(result=None, T=None, T_inv=None) -> dict:
    if result is not None:
        T, T_inv = result.T, result.T_inv
    nT = float(np.linalg.norm(T, 2)) if T.size else 1.0
    nTi = float(np.linalg.norm(T_inv, 2)) if T_inv.size else 1.0
    return {"norm_T": nT, "norm_Tinv": nTi, "C_overshoot": nT * nTi, "label": TRUNCATED}


def tail_regularity_check(result: SynthesisResult, op: SpectralOperator, B: ControlOperator) -> TailRegularity:
    """Partial sums of ``sum_k (1 + |lambda_k|^2)^(1-s) |tau_kn|^2`` over the tail.

    Sums are taken at ``M/4, M/2, 3M/4, M``; the last-quarter increment above
    10% of the total is flagged as unresolved by the truncation.
    """
    M, N = op.truncation, result.split.N_lambda
    w = sobolev_weights(op, 1.0 - B.growth_exponent)
    terms = np.zeros((M, N))
    if N:
        terms[N:] = w[N:, None] * np.abs(result.T[N:, :N]) ** 2
    cuts = sorted({max(1, M // 4), max(1, M // 2), max(1, (3 * M) // 4), M})
    csum = np.cumsum(terms, axis=0)
    partial = csum[np.array(cuts) - 1]
    total = partial[-1]
    last = partial[-1] - partial[-2] if len(cuts) > 1 else np.zeros(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(total > 0, last / total, 0.0)
    return TailRegularity(cuts, partial, share, bool(np.any(share > 0.1)))


def verify(result: SynthesisResult, op: SpectralOperator, B: ControlOperator,
           tol: Tolerances = DEFAULT_TOL) -> VerifyReport:
    """All checks; pass thresholds scale with the size of the feedback term."""
    res = feq_residual(result, op, B)
    shift = spectrum_shift_check(op, result.split, B, result.K_full, result.mu)
    cond = transformation_conditioning(result)
    tail = tail_regularity_check(result, op, B)
    bmax = float(np.max(np.abs(B.coefficients))) if B.coefficients.size else 0.0
    kmax = float(np.max(np.abs(result.K_full))) if result.K_full.size else 0.0
    thr = {"residual": tol.max_residual * (1.0 + bmax * kmax),
           "tb_residual": tol.max_tb_residual * max(1.0, bmax * cond["norm_T"])}
    passed = bool(result.valid and res.max_r <= thr["residual"] and res.tb_residual <= thr["tb_residual"])
    return VerifyReport(res, shift, cond, tail, passed, thr)
