"""Closed-loop time integration in eigencoordinates.

The linear closed loop ``X = A + B K`` is propagated exactly by ``exp(h X)``.
For the quadratic torus nonlinearity we use the second-order exponential
time differencing rule of Cox and Matthews, with ``X`` (feedback included)
as the exactly integrated part:

    u_{n+1} = e^{hX} u_n + h (phi_1 + phi_2)(hX) F_n - h phi_2(hX) F_{n-1},

started by one exponential Euler step.  Without a nonlinearity this is the
linear propagator itself, so both integrators agree exactly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConfigError,
    StepSizeWarning,
    SymmetryViolation,
    TooFewSamples,
    UnstableBlowup,
    WrongBasis,
    ZeroNorm,
)
from .spectral import ControlOperator, SpectralOperator, sobolev_norm
from .synthesis import closed_loop

NONLINEARITIES = ("none", "torus_burgers")
EIG_COND_MAX = 1e6
BLOWUP = 1e12


@dataclass
class SimConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    record_every: int = 1
    burn_fraction: float = 0.1
    nonlinearity: str = "none"
    initial: np.ndarray | None = None
    lam_ref: float | None = None
    keep_snapshots: bool = False

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def validate(self):
        if not (self.dt > 0 and self.t_final > 0):
            raise ConfigError("dt and t_final must be positive")
        if abs(self.steps * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ConfigError(f"t_final = {self.t_final} is not a multiple of dt = {self.dt}")
        if not 0 <= self.burn_fraction < 1:
            raise ConfigError("burn_fraction must lie in [0, 1)")
        if self.record_every < 1:
            raise ConfigError("record_every must be a positive integer")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}")
        return self


@dataclass
class DecayFit:
    rate: float
    overshoot: float | None = None


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    norms_H: np.ndarray
    norms_gamma: np.ndarray
    rate_running: np.ndarray
    fitted_rate: float
    overshoot: float | None = None
    coefficients: np.ndarray | None = None
    final: np.ndarray | None = field(default=None, repr=False)


def _phi(z, order: int):
    """Scalar ``phi_1`` or ``phi_2`` with a series near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        if order == 1:
            out = np.expm1(zs) / zs
            ser = 1 + z / 2 + z**2 / 6 + z**3 / 24
        else:
            out = (np.expm1(zs) - zs) / zs**2
            ser = 0.5 + z / 6 + z**2 / 24 + z**3 / 120
    return np.where(small, ser, out)


class _Exponential:
    """``exp(hX)`` and optionally ``phi_1(hX), phi_2(hX)``."""

    def __init__(self, X: np.ndarray, h: float, with_phi: bool = False):
        M = X.shape[0]
        diag = not np.any(X - np.diag(np.diag(X)))
        if diag:
            z = h * np.diag(X)
            self.S = np.diag(np.exp(z))
            if with_phi:
                self.P1, self.P2 = np.diag(_phi(z, 1)), np.diag(_phi(z, 2))
            return
        w, V = np.linalg.eig(X)
        if np.linalg.cond(V) <= EIG_COND_MAX:
            z = h * w
            Vi = np.linalg.inv(V)
            f = lambda d: (V * d) @ Vi
            self.S = f(np.exp(z))
            if with_phi:
                self.P1, self.P2 = f(_phi(z, 1)), f(_phi(z, 2))
        elif with_phi:
            Z = np.zeros((3 * M, 3 * M), dtype=complex)
            I = np.eye(M)
            Z[:M, :M] = h * X
            Z[:M, M:2 * M] = I
            Z[M:2 * M, 2 * M:] = I
            E = sla.expm(Z)
            self.S, self.P1, self.P2 = E[:M, :M], E[:M, M:2 * M], E[:M, 2 * M:]
        else:
            self.S = sla.expm(h * X)


def linear_propagator(op: SpectralOperator, B: ControlOperator, K, dt: float) -> np.ndarray:
    """``exp(dt (A + B K))`` at truncation."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    K = np.zeros((1, op.truncation)) if K is None else np.atleast_2d(K)
    return _Exponential(closed_loop(op, B, K), dt).S


def torus_grid(op: SpectralOperator):
    """Map from mode index to position in a dense ``-kmax..kmax`` array."""
    if op.basis != "torus" or op.modes is None:
        raise WrongBasis(f"model {op.label!r} does not use the torus exponential basis")
    k = op.modes
    kmax = int(np.max(np.abs(k)))
    return k + kmax, kmax


def quadratic_nonlinearity(u, op: SpectralOperator, check: bool = True) -> np.ndarray:
    """Coefficients of ``F(u) = -(1/2) d/dx (u^2)`` on the torus.

    ``F_k = -(i k / 2) sum_{p+q=k} u_p u_q / sqrt(2 pi)``; products landing
    beyond ``kmax`` are dropped.
    """
    pos, kmax = torus_grid(op)
    u = np.asarray(u, dtype=complex)
    full = np.zeros(2 * kmax + 1, dtype=complex)
    full[pos] = u
    if check:
        paired = np.isin(-op.modes, op.modes)
        mirror = full[2 * kmax - pos]
        asym = np.abs(u - np.conj(mirror))[paired]
        if asym.size and asym.max() > 1e-10 * max(1.0, np.max(np.abs(u))):
            raise SymmetryViolation(f"u_(-k) != conj(u_k) by {asym.max():.3g}")
    sq = np.convolve(full, full)[kmax: 3 * kmax + 1] / np.sqrt(2 * np.pi)
    k = np.arange(-kmax, kmax + 1)
    return (-0.5j * k * sq)[pos]


def fit_decay_rate(times, norms, burn_fraction: float = 0.1, lam_ref: float | None = None) -> DecayFit:
    """Least-squares slope of ``log ||u||`` after the burn-in."""
    t = np.asarray(times, dtype=float)
    n = np.asarray(norms, dtype=float)
    if np.any(n <= 0):
        raise ZeroNorm("trajectory reached zero norm")
    keep = t >= burn_fraction * t[-1]
    if keep.sum() < 10:
        raise TooFewSamples(f"{keep.sum()} samples after burn-in, need 10")
    rate = float(np.polyfit(t[keep], np.log(n[keep]), 1)[0])
    over = None
    if lam_ref is not None:
        over = float(np.max(n * np.exp(lam_ref * t)) / n[0])
    return DecayFit(rate, over)


def _guard(B: ControlOperator, K: np.ndarray, dt: float):
    m = K.shape[0]
    level = dt * np.max(np.abs(B.coefficients[:m].sum(axis=0))) * np.linalg.norm(K, 2)
    if level > 0.5:
        warnings.warn(f"dt |B| |K| = {level:.3g} exceeds 0.5; reduce dt", StepSizeWarning, stacklevel=3)


def _integrate(op: SpectralOperator, B: ControlOperator, K, cfg: SimConfig, nonlinear: bool) -> TrajectoryRecord:
    cfg.validate()
    M = op.truncation
    K = np.zeros((1, M), dtype=complex) if K is None else np.atleast_2d(np.asarray(K, dtype=complex))
    u = np.zeros(M, dtype=complex)
    if cfg.initial is not None:
        u0 = np.asarray(cfg.initial, dtype=complex)
        if u0.size > M:
            raise ConfigError(f"initial state has {u0.size} entries, truncation is {M}")
        u[: u0.size] = u0
    gamma = min(1.0 - B.growth_exponent, 0.5)
    X = closed_loop(op, B, K)
    if nonlinear:
        torus_grid(op)
        _guard(B, K, cfg.dt)
    E = _Exponential(X, cfg.dt, with_phi=nonlinear)

    h = cfg.dt
    n0 = float(np.linalg.norm(u))
    times, nH, ng, snaps = [0.0], [n0], [sobolev_norm(op, gamma, u)], [u.copy()]
    F_prev = None
    for i in range(1, cfg.steps + 1):
        if nonlinear:
            F = quadratic_nonlinearity(u, op, check=False)
            if F_prev is None:
                u = E.S @ u + h * (E.P1 @ F)
            else:
                u = E.S @ u + h * (E.P1 @ F + E.P2 @ (F - F_prev))
            F_prev = F
        else:
            u = E.S @ u
        if i % cfg.record_every == 0 or i == cfg.steps:
            nrm = float(np.linalg.norm(u))
            if not np.isfinite(nrm) or nrm > BLOWUP * max(n0, 1e-300):
                raise UnstableBlowup(f"norm {nrm:.3g} at t = {i * h:.4g}")
            times.append(i * h)
            nH.append(nrm)
            ng.append(sobolev_norm(op, gamma, u))
            if cfg.keep_snapshots:
                snaps.append(u.copy())

    times, nH, ng = np.array(times), np.array(nH), np.array(ng)
    with np.errstate(divide="ignore", invalid="ignore"):
        running = np.where(times > 0, np.log(nH / n0) / np.where(times > 0, times, 1.0), 0.0)
    try:
        fit = fit_decay_rate(times, nH, cfg.burn_fraction, cfg.lam_ref)
    except ZeroNorm:
        fit = DecayFit(float("nan"), None)
    return TrajectoryRecord(times, nH, ng, running, fit.rate, fit.overshoot,
                            np.array(snaps) if cfg.keep_snapshots else None, u)


def simulate_linear(op: SpectralOperator, B: ControlOperator, K, cfg: SimConfig) -> TrajectoryRecord:
    return _integrate(op, B, K, cfg, nonlinear=False)


def simulate_nonlinear(op: SpectralOperator, B: ControlOperator, K, cfg: SimConfig) -> TrajectoryRecord:
    """Closed loop with the torus Burgers term; ``nonlinearity='none'`` is linear."""
    nonlinear = cfg.nonlinearity == "torus_burgers"
    if nonlinear and cfg.initial is not None:
        # only the initial state is checked; the scheme preserves the symmetry
        quadratic_nonlinearity(np.pad(np.asarray(cfg.initial, complex),
                                      (0, op.truncation - len(cfg.initial))), op)
    return _integrate(op, B, K, cfg, nonlinear)


def random_real_field(op: SpectralOperator, rng: np.random.Generator, norm: float = 1.0,
                      kmax: int | None = None, decay: float = 1.0) -> np.ndarray:
    """Random Hermitian-symmetric torus coefficients with the given ``L^2`` norm."""
    pos, K = torus_grid(op)
    kmax = K if kmax is None else kmax
    full = np.zeros(2 * K + 1, dtype=complex)
    for k in range(0, kmax + 1):
        c = (rng.normal() + 1j * rng.normal()) / (1 + k) ** decay
        if k == 0:
            c = c.real
        full[K + k] = c
        full[K - k] = np.conj(c)
    u = full[pos]
    paired = np.isin(-op.modes, op.modes)
    u[~paired] = 0
    return u * norm / np.linalg.norm(u)


def write_trajectory_csv(traj: TrajectoryRecord, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm_H", "norm_gamma", "rate_running"])
        for row in zip(traj.times, traj.norms_H, traj.norms_gamma, traj.rate_running):
            w.writerow([format(float(v), ".17g") for v in row])
