"""Truncated diagonal parabolic operators and control operators.

Everything is expressed in eigencoordinates: a state is the complex vector of
its coefficients ``x_n = <x, e_n>`` against the orthonormal eigenbasis, and a
control input is the vector ``b_n = <B, e_n>`` (raw duality pairing, no
``D(A)'`` normalisation).  Arrays are stored read-only so the value types can
be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DeltaResonance,
    EmptySpectrum,
    LengthMismatch,
    NonMonotoneRealPart,
    SectorViolation,
)

# relative slack for the ordering and sector predicates
ORDER_RTOL = 1e-12


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralOperator:
    """Eigenvalues ``lambda_1..lambda_M`` of a diagonal parabolic operator.

    ``basis`` tags the concrete eigenbasis ("torus" for the exponentials
    ``e^{ikx}/sqrt(2 pi)``, "interval" for sine/cosine bases, "custom"
    otherwise) and ``modes`` holds the integer label of each eigenfunction,
    e.g. the wavenumber ``k`` on the torus.
    """

    eigenvalues: np.ndarray
    sector_constant: float = 1.0
    delta: float | None = None
    label: str = ""
    basis: str = "custom"
    modes: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(np.ravel(self.eigenvalues)))
        if self.modes is not None:
            modes = _frozen(np.ravel(self.modes), dtype=int)
            if modes.shape != self.eigenvalues.shape:
                raise LengthMismatch("modes and eigenvalues differ in length")
            object.__setattr__(self, "modes", modes)
        if self.delta is None:
            object.__setattr__(self, "delta", default_delta(self))

    @property
    def truncation(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def m_A(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def c_A(self) -> float:
        return max(0.0, self.m_A)

    def restrict(self, M: int) -> "SpectralOperator":
        if M > self.truncation:
            raise LengthMismatch(f"cannot extend truncation {self.truncation} to {M}")
        modes = None if self.modes is None else self.modes[:M]
        return SpectralOperator(self.eigenvalues[:M], self.sector_constant, self.delta,
                                self.label, self.basis, modes)


@dataclass(frozen=True)
class ControlOperator:
    """``m`` control inputs given by their eigen-coefficients, shape ``(m, M)``.

    ``growth_exponent`` is the ``s`` with ``B_j in D_{-s}(A)``.
    """

    coefficients: np.ndarray
    growth_exponent: float = 0.0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=complex))
        if c.ndim != 2:
            raise LengthMismatch("control coefficients must be a (m, M) array")
        object.__setattr__(self, "coefficients", _frozen(c))
        if not 0.0 <= self.growth_exponent <= 1.0:
            raise ValueError(f"growth exponent {self.growth_exponent} outside [0, 1]")

    @property
    def inputs(self) -> int:
        return self.coefficients.shape[0]

    @property
    def truncation(self) -> int:
        return self.coefficients.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """The ``M x m`` matrix whose columns are the inputs."""
        return self.coefficients.T

    def growth_bound(self, op: SpectralOperator) -> np.ndarray:
        """``max_n |b_n^j| / (1 + |lambda_n|^2)^{s/2}`` for each input."""
        w = (1.0 + np.abs(op.eigenvalues) ** 2) ** (self.growth_exponent / 2)
        return np.max(np.abs(self.coefficients) / w, axis=1)

    def restrict(self, M: int) -> "ControlOperator":
        if M > self.truncation:
            raise LengthMismatch(f"cannot extend truncation {self.truncation} to {M}")
        return ControlOperator(self.coefficients[:, :M], self.growth_exponent)

    def with_inputs(self, rows) -> "ControlOperator":
        return ControlOperator(self.coefficients[list(rows)], self.growth_exponent)


@dataclass
class OperatorReport:
    passed: bool
    checks: dict = field(default_factory=dict)
    m_A: float = float("nan")
    c_A: float = float("nan")
    tightest_sector: float = float("inf")
    error: Exception | None = None

    def raise_for_status(self):
        if self.error is not None:
            raise self.error


def validate_operator(op: SpectralOperator) -> OperatorReport:
    """Check the ordering, sector and resonance hypotheses at truncation.

    Each entry of ``checks`` is ``(ok, first_bad_mode)`` with 1-based modes.
    An empty spectrum raises immediately since nothing else is defined.
    """
    lam = op.eigenvalues
    if lam.size == 0:
        raise EmptySpectrum("eigenvalue list is empty")
    re, im = lam.real, lam.imag
    scale = 1.0 + np.abs(lam)

    checks = {}
    error = None

    rises = np.nonzero(re[1:] > re[:-1] + ORDER_RTOL * scale[:-1])[0]
    if rises.size:
        mode = int(rises[0]) + 2
        checks["monotone"] = (False, mode)
        error = NonMonotoneRealPart(
            f"Re(lambda_{mode}) = {re[mode - 1]:g} exceeds Re(lambda_{mode - 1})", mode)
    else:
        checks["monotone"] = (True, None)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(im != 0, np.abs(re) / np.abs(im), np.inf)
    tightest = float(np.min(ratio))
    bad = np.nonzero((lam != 0) & (np.abs(re) < op.sector_constant * np.abs(im) * (1 - ORDER_RTOL)))[0]
    if bad.size:
        mode = int(bad[0]) + 1
        checks["sector"] = (False, mode)
        error = error or SectorViolation(
            f"|Re(lambda_{mode})| < {op.sector_constant:g} |Im(lambda_{mode})|", mode)
    else:
        checks["sector"] = (True, None)

    hit = np.nonzero(np.abs(op.delta - lam) <= ORDER_RTOL * scale)[0]
    if hit.size:
        mode = int(hit[0]) + 1
        checks["delta"] = (False, mode)
        error = error or DeltaResonance(f"delta = {op.delta:g} equals lambda_{mode}", mode)
    else:
        checks["delta"] = (True, None)

    return OperatorReport(
        passed=error is None,
        checks=checks,
        m_A=op.m_A,
        c_A=op.c_A,
        tightest_sector=tightest,
        error=error,
    )


def require_valid(op: SpectralOperator) -> SpectralOperator:
    validate_operator(op).raise_for_status()
    return op


def sobolev_weights(op: SpectralOperator, s: float, n: int | None = None) -> np.ndarray:
    lam = op.eigenvalues if n is None else op.eigenvalues[:n]
    return (1.0 + np.abs(lam) ** 2) ** s


def sobolev_norm(op: SpectralOperator, s: float, x) -> float:
    """Norm of ``x`` in the generalized Sobolev space ``D_s(A)``."""
    x = np.asarray(x)
    if x.shape[-1] > op.truncation:
        raise LengthMismatch(f"vector of length {x.shape[-1]} exceeds truncation {op.truncation}")
    if s == 0:
        return float(np.linalg.norm(x))
    w = sobolev_weights(op, s, x.shape[-1])
    return float(np.sqrt(np.sum(w * np.abs(x) ** 2)))


def default_delta(op: SpectralOperator) -> float:
    """A shift making ``-A + delta`` invertible on the truncation.

    ``c_A + 1`` strictly exceeds every real part, so it never resonates.
    """
    lam = op.eigenvalues
    if lam.size == 0:
        return 0.0
    # with every Re(lambda) < 0, delta = 0 is already off the spectrum
    return op.c_A + 1.0 if np.any(lam.real >= 0) else 0.0
