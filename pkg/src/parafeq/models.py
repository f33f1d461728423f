"""Builtin model catalog, JSON model files and random admissible instances."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import tail_channel
from .errors import ConfigError, MissingParam, UnknownModel
from .spectral import ControlOperator, SpectralOperator

MODEL_NAMES = ("ks-torus", "ks-interval-coronlu", "heat-torus", "heat-interval-neumann", "custom")

DEFAULT_PARAMS = {
    "ks-torus": {},
    "ks-interval-coronlu": {"nu": 1.0},
    "heat-torus": {"p": 0.0},
    "heat-interval-neumann": {"a": 0.5, "fprime": 1.0},
    "custom": {},
}


@dataclass
class ModelDescriptor:
    name: str
    params: dict = field(default_factory=dict)
    truncation: int = 64


def torus_wavenumbers(M: int) -> np.ndarray:
    """Wavenumber of each reindexed exponential: 0, -1, 1, -2, 2, ..."""
    n = np.arange(1, M + 1)
    k = n // 2
    return np.where(n % 2 == 0, -k, k)


def torus_basis(M: int, x) -> np.ndarray:
    """Values ``e_n(x)`` of the reindexed torus basis, shape ``(len(x), M)``."""
    k = torus_wavenumbers(M)
    return np.exp(1j * np.outer(np.atleast_1d(x), k)) / np.sqrt(2 * np.pi)


def ks_torus(M: int = 64):
    k = torus_wavenumbers(M)
    lam = -(k.astype(float) ** 4) + k.astype(float) ** 2
    op = SpectralOperator(lam, 1.0, label="ks-torus", basis="torus", modes=k)
    coef = np.zeros((3, M), dtype=complex)
    # f_1 = e~_1, f_2 = e~_2 + e~_4, f_3 = e~_3 + e~_5
    for j, idx in enumerate([(0,), (1, 3), (2, 4)]):
        for n in idx:
            if n < M:
                coef[j, n] = 1.0
    return op, ControlOperator(coef, 0.0)


def ks_interval_coronlu(M: int = 64, nu: float = 1.0):
    n = np.arange(1, M + 1)
    lam = -np.pi**4 * n.astype(float) ** 4 + nu * np.pi**2 * n.astype(float) ** 2
    b = -np.pi * n.astype(float)
    # nu = pi^2 (n^2 + k^2) makes lambda_n = lambda_k
    kk = np.arange(1, M + 1)
    s = kk[:, None] ** 2 + kk[None, :] ** 2
    hit = np.isclose(nu, np.pi**2 * s[np.triu_indices(M, 1)], rtol=1e-12, atol=0)
    if hit.any():
        warnings.warn(f"nu = {nu:g} produces a double eigenvalue", RuntimeWarning, stacklevel=2)
    order = np.argsort(-lam, kind="stable")
    op = SpectralOperator(lam[order], 1.0, label=f"ks-interval-coronlu(nu={nu:g})",
                          basis="interval", modes=n[order])
    return op, ControlOperator(b[order][None, :], 1.0)


def heat_torus(M: int = 64, p: float = 0.0):
    """Heat equation on the torus driven by a Dirac mass at ``p``."""
    k = torus_wavenumbers(M)
    lam = -(k.astype(float) ** 2)
    b = np.conj(torus_basis(M, p)[0])
    op = SpectralOperator(lam, 1.0, label=f"heat-torus(p={p:g})", basis="torus", modes=k)
    return op, ControlOperator(b[None, :], 0.3)


def heat_interval_neumann(M: int = 64, a: float = 0.5, fprime: float = 1.0):
    """Linearised Neumann heat equation on (0, 1) controlled by ``1_(0, a)``.

    Eigenfunctions are ``1`` and ``sqrt(2) cos(n pi x)``.
    """
    if not 0 < a <= 1:
        raise ConfigError(f"control support a = {a} outside (0, 1]")
    n = np.arange(M)
    lam = -np.pi**2 * n.astype(float) ** 2 + fprime
    b = np.empty(M)
    b[0] = a
    b[1:] = np.sqrt(2) * np.sin(n[1:] * np.pi * a) / (n[1:] * np.pi)
    op = SpectralOperator(lam, 1.0, label=f"heat-interval-neumann(a={a:g}, f'(0)={fprime:g})",
                          basis="interval", modes=n)
    return op, ControlOperator(b[None, :], 0.0)


_BUILDERS = {
    "ks-torus": lambda M, p: ks_torus(M),
    "ks-interval-coronlu": lambda M, p: ks_interval_coronlu(M, float(p["nu"])),
    "heat-torus": lambda M, p: heat_torus(M, float(p["p"])),
    "heat-interval-neumann": lambda M, p: heat_interval_neumann(M, float(p["a"]), float(p["fprime"])),
}


def builtin_model(desc: ModelDescriptor):
    if desc.name not in MODEL_NAMES:
        raise UnknownModel(f"unknown model {desc.name!r}; choose from {', '.join(MODEL_NAMES)}")
    if desc.name == "custom":
        if "path" not in desc.params:
            raise MissingParam("custom model needs params.path")
        return load_model(desc.params["path"], desc.truncation)
    if int(desc.truncation) < 1:
        raise ConfigError(f"truncation must be positive, got {desc.truncation}")
    params = {**DEFAULT_PARAMS[desc.name], **desc.params}
    missing = [k for k, v in params.items() if v is None]
    if missing:
        raise MissingParam(f"model {desc.name} missing params {missing}")
    return _BUILDERS[desc.name](int(desc.truncation), params)


def _pairs(values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigError("complex numbers must be [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def model_from_dict(doc: dict, truncation: int | None = None):
    for key in ("eigenvalues", "controls"):
        if key not in doc:
            raise MissingParam(f"model file missing key {key!r}")
    lam = _pairs(doc["eigenvalues"])
    M = int(doc.get("truncation", lam.size))
    if truncation is not None:
        M = min(M, int(truncation))
    if M > lam.size:
        raise ConfigError(f"truncation {M} exceeds the {lam.size} listed eigenvalues")
    controls = doc["controls"]
    if not controls:
        raise ConfigError("controls: at least one input required")
    rows, s = [], 0.0
    for i, c in enumerate(controls):
        coef = _pairs(c["coefficients"])
        if coef.size < M:
            raise ConfigError(f"controls[{i}].coefficients: {coef.size} entries, need {M}")
        rows.append(coef[:M])
        s = max(s, float(c.get("growth_exponent", 0.0)))
    modes = doc.get("modes")
    op = SpectralOperator(lam[:M], float(doc.get("sector_constant", 1.0)), label=doc.get("label", ""),
                          basis=doc.get("basis", "custom"), modes=None if modes is None else modes[:M])
    return op, ControlOperator(np.array(rows), s)


def model_to_dict(op: SpectralOperator, B: ControlOperator) -> dict:
    pair = lambda z: [float(np.real(z)), float(np.imag(z))]
    doc = {
        "label": op.label,
        "truncation": op.truncation,
        "sector_constant": op.sector_constant,
        "basis": op.basis,
        "eigenvalues": [pair(z) for z in op.eigenvalues],
        "controls": [{"coefficients": [pair(z) for z in row], "growth_exponent": B.growth_exponent}
                     for row in B.coefficients],
    }
    if op.modes is not None:
        doc["modes"] = [int(k) for k in op.modes]
    return doc


def load_model(path, truncation: int | None = None):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(doc, truncation)


def save_model(path, op: SpectralOperator, B: ControlOperator):
    Path(path).write_text(json.dumps(model_to_dict(op, B), indent=1), encoding="utf-8")


def random_instance(rng: np.random.Generator, lam: float = 10.0, max_low: int = 8, max_modes: int = 64,
                    max_inputs: int = 3, max_per_channel: int = 4, gap: float = 2.0,
                    complex_pairs: bool = True):
    """A random admissible ``(op, B)`` with ``N(lam) <= max_low`` and ``M <= max_modes``.

    Distinct low eigenvalues sit in ``[-lam + 0.5, 2]`` with real parts at
    least ``gap`` apart.  Each channel receives at most ``max_per_channel``
    of them: a single input moving many closely spaced modes by ``mu`` gives a
    closed loop whose eigenvalues are too ill-conditioned to resolve.  One
    eigenvalue is shared by every channel so ``m(lam)`` equals the input
    count.  The tail decays like ``-t^4``.  Each input is supported on its
    own channel only, the layout the partition rediscovers, with tail
    coefficients that vanish about a third of the time.
    """
    lo, hi = -lam + 0.5, 2.0
    m = int(rng.integers(1, max_inputs + 1))
    sizes = rng.integers(1, max_per_channel + 1, m)
    while sizes.sum() > max_low:
        sizes[np.argmax(sizes)] -= 1
    n_max = int((hi - lo) // gap) + 1
    n_dist = int(rng.integers(sizes.max(), min(n_max, sizes.sum()) + 1))
    re = np.sort(rng.uniform(0.0, (hi - lo) - (n_dist - 1) * gap, n_dist)) + gap * np.arange(n_dist) + lo
    values = [complex(x) for x in re[::-1]]
    # a complex pair replaces two neighbouring real values
    # (the pair is gap apart and inside the sector |Re| >= |Im|)
    deep = [i for i in range(n_dist - 1) if values[i + 1].real <= -gap]
    if complex_pairs and deep and rng.random() < 0.3:
        i = int(rng.choice(deep))
        x = values[i + 1].real
        im = rng.uniform(gap / 2, abs(x))
        values[i], values[i + 1] = complex(x, im), complex(x, -im)

    shared = int(rng.integers(0, n_dist))
    members = []                     # (value index, channel)
    for j, nj in enumerate(sizes):
        others = [v for v in range(n_dist) if v != shared]
        picks = [shared] + list(rng.choice(others, int(nj) - 1, replace=False))
        members += [(int(v), j) for v in picks]
    # sort by descending real part; a complex pair keeps +im before -im
    members.sort(key=lambda vj: (-values[vj[0]].real, -values[vj[0]].imag, vj[1]))
    N = len(members)
    M = int(rng.integers(N + 8, max(N + 8, max_modes) + 1))
    t = np.arange(1, M - N + 1)
    tail = -(lam + 1.0) - 5.0 * t.astype(float) ** 4
    eigs = np.concatenate([np.array([values[v] for v, _ in members]), tail.astype(complex)])

    chan = np.empty(M, dtype=int)
    chan[:N] = [j for _, j in members]
    for k in range(N, M):
        chan[k] = tail_channel(k, N, m)

    coef = np.zeros((m, M), dtype=complex)
    mag = rng.uniform(0.5, 2.0, M) * np.exp(1j * rng.uniform(0, 2 * np.pi, M))
    mag[N:] *= (rng.random(M - N) > 0.33) / np.sqrt(t)
    coef[chan, np.arange(M)] = mag
    op = SpectralOperator(eigs, 1.0, label="random")
    return op, ControlOperator(coef, 0.0)
