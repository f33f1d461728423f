"""Command line front end.

Settings come from built-in defaults, then a JSON ``--config`` file, then
explicit flags (later wins).  Reports go to stdout and, when a report
directory is given by ``--out-dir`` or ``PARAFEQ_REPORT_DIR``, to files.

Exit codes: 0 success, 2 configuration error, 3 inadmissible control,
4 no valid shift, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis import analyze, cluster_eigenvalues, frequency_split, partition_channels
from .config import Tolerances
from .errors import ConfigError, FeqError
from .models import ModelDescriptor, builtin_model, ks_torus
from .reports import analysis_report, dump_binary, dumps, synthesis_report
from .simulation import SimConfig, random_real_field, simulate_linear, simulate_nonlinear, write_trajectory_csv
from .synthesis import assemble, synthesize, synthesize_channels, validate_mu
from .verification import transformation_conditioning, verify

REPORT_ENV = "PARAFEQ_REPORT_DIR"
GOLDEN_MUS = (24.0, 36.0, 100.0)


@dataclass
class RunConfig:
    model: str = "ks-torus"
    params: dict = field(default_factory=dict)
    truncation: int = 64
    model_file: str | None = None
    lam: float = 20.0
    mu: float | None = None
    seed: int = 0
    attempts: int = 10
    tail_rule: str = "round-robin"
    tolerances: dict = field(default_factory=dict)
    # simulation
    dt: float = 1e-3
    t_final: float = 1.0
    record_every: int = 1
    burn_fraction: float = 0.1
    nonlinearity: str = "none"
    amplitude: float = 1.0
    open_loop: bool = False
    # sweep
    mu_min: float | None = None
    mu_max: float | None = None
    count: int = 20
    workers: int = 1
    sweep_t_final: float = 0.5
    # output
    out_dir: str | None = None
    binary: bool = False

    def descriptor(self) -> ModelDescriptor:
        params = dict(self.params)
        if self.model == "custom":
            if self.model_file is None and "path" not in params:
                raise ConfigError("model_file: required for the custom model")
            params.setdefault("path", self.model_file)
        return ModelDescriptor(self.model, params, self.truncation)

    def tol(self) -> Tolerances:
        known = {f.name for f in fields(Tolerances)}
        for k in self.tolerances:
            if k not in known:
                raise ConfigError(f"tolerances.{k}: unknown tolerance")
        return Tolerances(**{k: float(v) for k, v in self.tolerances.items()})


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    for k, v in doc.items():
        if k not in _TYPES:
            raise ConfigError(f"{k}: unknown config key")
        if k in ("params", "tolerances") and not isinstance(v, dict):
            raise ConfigError(f"{k}: must be an object")
    return doc


def _kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param {item!r}: expected key=value")
        k, v = item.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def resolve(args) -> RunConfig:
    doc = load_config(args.config) if args.config else {}
    cfg = RunConfig()
    for k, v in doc.items():
        setattr(cfg, k, dict(v) if isinstance(v, dict) else v)
    for name in _TYPES:
        v = getattr(args, name, None)
        if v is not None and name not in ("params", "tolerances"):
            setattr(cfg, name, v)
    cfg.params = {**cfg.params, **_kv(getattr(args, "param", None))}
    tol_flags = {k: getattr(args, k, None) for k in ("eps_eig", "eps_adm", "eps_rank", "eps_c")}
    cfg.tolerances = {**cfg.tolerances, **{k: v for k, v in tol_flags.items() if v is not None}}
    if cfg.out_dir is None:
        cfg.out_dir = os.environ.get(REPORT_ENV)
    try:
        cfg.truncation = int(cfg.truncation)
        cfg.lam = float(cfg.lam)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"truncation/lam: {exc}") from exc
    return cfg


def _emit(cfg: RunConfig, name: str, text: str, out=sys.stdout):
    out.write(text)
    if cfg.out_dir:
        d = Path(cfg.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text, encoding="utf-8")


def _model(cfg: RunConfig):
    return builtin_model(cfg.descriptor())


def _synth(cfg: RunConfig, op, B, mu=None):
    tol = cfg.tol()
    r = synthesize(op, B, cfg.lam, cfg.mu if mu is None else mu, tol, cfg.attempts, cfg.seed, cfg.tail_rule)
    return r, verify(r, op, B, tol)


def cmd_analyze(cfg: RunConfig, out) -> int:
    op, B = _model(cfg)
    an = analyze(op, B, cfg.lam, cfg.tol(), cfg.tail_rule)
    _emit(cfg, "analysis.json", dumps(analysis_report(an)), out)
    return 0


def cmd_synthesize(cfg: RunConfig, out) -> int:
    op, B = _model(cfg)
    r, v = _synth(cfg, op, B)
    doc = synthesis_report(r, v)
    _emit(cfg, "synthesis.json", dumps(doc), out)
    if cfg.binary and cfg.out_dir:
        dump_binary(Path(cfg.out_dir) / "T.bin", r.T)
        dump_binary(Path(cfg.out_dir) / "T_inv.bin", r.T_inv)
    return 0 if doc["valid"] else 5


def cmd_verify(cfg: RunConfig, out) -> int:
    op, B = _model(cfg)
    r, v = _synth(cfg, op, B)
    doc = synthesis_report(r, v)["verify"]
    doc["mu"] = r.mu
    _emit(cfg, "verify.json", dumps(doc), out)
    return 0 if v.passed else 5


def _initial(cfg: RunConfig, op, rng):
    if op.basis == "torus":
        return random_real_field(op, rng, cfg.amplitude, kmax=min(8, int(np.max(np.abs(op.modes)))))
    u = rng.normal(size=op.truncation) / (1.0 + np.arange(op.truncation))
    return cfg.amplitude * u / np.linalg.norm(u)


def cmd_simulate(cfg: RunConfig, out) -> int:
    op, B = _model(cfg)
    if cfg.open_loop:
        K, C = None, None
    else:
        r, v = _synth(cfg, op, B)
        K, C = r.K_full, v.conditioning["C_overshoot"]
    rng = np.random.default_rng(cfg.seed)
    sim = SimConfig(cfg.dt, cfg.t_final, int(cfg.record_every), cfg.burn_fraction, cfg.nonlinearity,
                    _initial(cfg, op, rng), cfg.lam)
    run = simulate_nonlinear if cfg.nonlinearity != "none" else simulate_linear
    traj = run(op, B, K, sim)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, Path(cfg.out_dir) / "trajectory.csv")
    summary = {"fitted_rate": traj.fitted_rate, "overshoot": traj.overshoot, "C_overshoot": C,
               "lambda": cfg.lam, "samples": len(traj.times), "final_norm": traj.norms_H[-1],
               "nonlinearity": cfg.nonlinearity, "open_loop": cfg.open_loop}
    _emit(cfg, "simulation.json", dumps(summary), out)
    return 0


def _sweep_point(job):
    cfg, mu = job
    op, B = builtin_model(cfg.descriptor())
    tol = cfg.tol()
    split = frequency_split(op, cfg.lam, tol.eps_eig)
    part = partition_channels(split, cluster_eigenvalues(op, tol.eps_eig), B, tol.eps_adm, cfg.tail_rule)
    try:
        feqs, tails = synthesize_channels(op, B, part, mu, tol)
    except FeqError:
        return {"mu": mu, "valid": False, "c_min": float("nan"), "C_overshoot": float("nan"),
                "fitted_rate": float("nan")}
    rep = validate_mu(tails, op, split, mu, feqs, tol)
    res = assemble(part, feqs, tails, op, B, split)
    C = transformation_conditioning(res)["C_overshoot"]
    rng = np.random.default_rng(cfg.seed)
    sim = SimConfig(cfg.dt, cfg.sweep_t_final, 1, cfg.burn_fraction, "none", _initial(cfg, op, rng))
    rate = simulate_linear(op, B, res.K_full, sim).fitted_rate
    return {"mu": mu, "valid": rep.valid, "c_min": rep.c_min, "C_overshoot": C, "fitted_rate": rate}


def cmd_sweep(cfg: RunConfig, out) -> int:
    op, _ = _model(cfg)
    floor = cfg.lam + op.c_A
    lo = floor if cfg.mu_min is None else float(cfg.mu_min)
    hi = lo + 100.0 if cfg.mu_max is None else float(cfg.mu_max)
    mus = np.linspace(lo, hi, int(cfg.count))
    jobs = [(cfg, float(mu)) for mu in mus]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=int(cfg.workers)) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r["mu"])
    cols = ["mu", "valid", "c_min", "C_overshoot", "fitted_rate"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r[c]).lower() if c == "valid" else format(float(r[c]), ".17g") for c in cols))
    _emit(cfg, "sweep.csv", "\n".join(lines) + "\n", out)
    return 0


def ks_golden(mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form feedback (3 x 5, modes e~1..e~5) and 2 x 2 block at shift mu."""
    a, c = -mu * (mu + 12) / 12, mu * (mu - 12) / 12
    K = np.zeros((3, 5))
    K[0, 0] = -mu
    K[1, 1], K[1, 3] = a, c          # e~2, e~4
    K[2, 2], K[2, 4] = a, c          # e~3, e~5
    Tb = np.array([[mu / 12 + 1, -mu / 12], [mu / 12, 1 - mu / 12]])
    return K, Tb


def reproduce_ks(cfg: RunConfig, out) -> int:
    op, B = ks_torus(cfg.truncation)
    tol = cfg.tol()
    rows, worst = [], 0.0
    for mu in GOLDEN_MUS:
        r = synthesize(op, B, 20.0, mu, tol, attempts=1)
        K, Tb = ks_golden(mu)
        dev = float(np.max(np.abs(r.K - K)))
        for j in (1, 2):
            dev = max(dev, float(np.max(np.abs(r.channels[j].T_tilde - Tb))))
        dev = max(dev, float(np.max(np.abs(r.channels[0].T_tilde - 1.0))))
        worst = max(worst, dev)
        rows.append({"mu": mu, "max_deviation": dev})
    ok = worst <= 1e-9
    _emit(cfg, "ks_example.json", dumps({"results": rows, "max_deviation": worst,
                                         "tolerance": 1e-9, "status": "PASS" if ok else "FAIL"}), out)
    out.write(f"{'PASS' if ok else 'FAIL'} ks-example max deviation {worst:.3e}\n")
    return 0 if ok else 5


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--model", help="ks-torus | ks-interval-coronlu | heat-torus | heat-interval-neumann | custom")
    g.add_argument("--model-file", dest="model_file", help="JSON model file for --model custom")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter, repeatable")
    g.add_argument("-M", "--truncation", type=int)
    g.add_argument("--lambda", dest="lam", type=float, help="target decay rate")
    g.add_argument("--mu", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--attempts", type=int)
    g.add_argument("--tail-rule", dest="tail_rule", choices=["round-robin", "support"])
    for name in ("eps-eig", "eps-adm", "eps-rank", "eps-c"):
        g.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    g.add_argument("--out-dir", dest="out_dir", help=f"report directory (default ${REPORT_ENV})")

    p = argparse.ArgumentParser(prog="parafeq", description="Parabolic F-equivalence synthesis and checks")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="frequency split, channels and uniqueness")
    s = sub.add_parser("synthesize", parents=[common], help="compute (T, K) and verify")
    s.add_argument("--binary", action="store_true", default=None, help="dump T and T_inv as binary")
    sub.add_parser("verify", parents=[common], help="synthesize and print the verification report")
    s = sub.add_parser("simulate", parents=[common], help="closed-loop simulation")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-final", dest="t_final", type=float)
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--burn", dest="burn_fraction", type=float)
    s.add_argument("--nonlinearity", choices=["none", "torus_burgers"])
    s.add_argument("--amplitude", type=float, help="L2 norm of the random initial state")
    s.add_argument("--open-loop", dest="open_loop", action="store_true", default=None)
    s = sub.add_parser("sweep-mu", parents=[common], help="validity and conditioning over a mu grid")
    s.add_argument("--mu-min", dest="mu_min", type=float)
    s.add_argument("--mu-max", dest="mu_max", type=float)
    s.add_argument("--count", type=int)
    s.add_argument("--workers", type=int)
    s = sub.add_parser("reproduce", parents=[common], help="golden comparisons")
    s.add_argument("target", choices=["ks-example"])
    return p


COMMANDS = {"analyze": cmd_analyze, "synthesize": cmd_synthesize, "verify": cmd_verify,
            "simulate": cmd_simulate, "sweep-mu": cmd_sweep, "reproduce": reproduce_ks}


def run_command(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, out)
    except FeqError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
