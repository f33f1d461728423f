"""JSON, CSV and binary report emission.

Complex numbers are written as ``[re, im]`` pairs and mode numbers are
1-based.  JSON output is canonical (sorted keys, shortest float repr) so
reruns are byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .analysis import Analysis
from .synthesis import SynthesisResult
from .verification import VerifyReport


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def dumps(doc) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=1) + "\n"


def analysis_report(an: Analysis) -> dict:
    fat = an.fattorini
    doc = {
        "N_lambda": an.split.N_lambda,
        "m_lambda": an.split.m_lambda,
        "c_A": an.split.c_A,
        "clusters": [{"eigenvalue": c.representative, "modes": [n + 1 for n in c.members]}
                     for c in an.clusters],
        "channels": None,
        "admissible": False,
        "fattorini": {
            "per_cluster_rank": [{"eigenvalue": z, "rank": r, "size": l}
                                 for z, r, l in zip(fat.representatives, fat.ranks, fat.sizes)],
            "verdict": fat.verdict,
            "scope": fat.label,
        },
        "unique": an.uniqueness.unique,
        "uniqueness": an.uniqueness.statement,
    }
    if an.uniqueness.witness is not None:
        doc["fattorini"]["witness"] = an.uniqueness.witness
    if an.partition is not None:
        p = an.partition
        doc["channels"] = [{"low": [int(n) + 1 for n in p.low(j)], "tail_count": int(p.tail(j).size)}
                           for j in range(p.n_channels)]
        doc["admissible"] = an.admissibility.admissible
        doc["offending"] = [[j + 1, n + 1] for j, n in an.admissibility.offending]
        doc["leakage"] = [[j + 1, n + 1, v] for j, n, v in an.admissibility.leakage]
    if an.error is not None:
        doc["error"] = str(an.error)
    return doc


def verify_report(v: VerifyReport) -> dict:
    return {
        "max_residual": v.residual.max_r,
        "tb_residual": v.residual.tb_residual,
        "gamma": v.residual.gamma,
        "spectrum_distance": v.shift.distance,
        "conditioning": v.conditioning,
        "tail_regularity": {
            "cutoffs": v.tail.cutoffs,
            "last_quarter_share_max": float(np.max(v.tail.last_increment)) if v.tail.last_increment.size else 0.0,
            "warning": v.tail.warning,
            "scope": v.tail.label,
        },
        "thresholds": v.thresholds,
        "passed": v.passed,
    }


def synthesis_report(r: SynthesisResult, v: VerifyReport | None = None) -> dict:
    rep = r.mu_report
    doc = {
        "mu": r.mu,
        "lambda": r.split.lam,
        "N_lambda": r.split.N_lambda,
        "attempts": r.attempts,
        "K": r.K,
        "T_norms": {k: v.conditioning[k] for k in ("norm_T", "norm_Tinv", "C_overshoot")} if v else None,
        "per_channel": [{"channel": f.j + 1, "low_modes": [int(n) + 1 for n in r.partition.low(f.j)],
                         "K_tilde": f.K_tilde, "cond_G": f.cond_G, "c_min": t.c_min}
                        for f, t in zip(r.channels, r.tails)],
        "mu_check": None if rep is None else {
            "resonance_gap": rep.resonance_gap, "c_min": rep.c_min,
            "envelope_margin": rep.envelope_margin, "violations": rep.violations,
            "assumption": "envelope uses retained coefficients only"},
        "valid": bool(r.valid and (v is None or v.passed)),
    }
    if v is not None:
        doc["T_norms"]["label"] = v.conditioning["label"]
        doc["verify"] = verify_report(v)
    return doc


def dump_binary(path, T: np.ndarray):
    """8-byte little-endian ``M`` then interleaved float64 re/im, row-major."""
    T = np.ascontiguousarray(T, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", T.shape[0]))
        fh.write(T.view("<f8").tobytes())


def load_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (M,) = struct.unpack("<Q", raw[:8])
    return np.frombuffer(raw[8:], dtype="<f8").view("<c16").reshape(M, M).copy()
