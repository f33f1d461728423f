"""Numerical tolerances and run configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """Thresholds turning exact-arithmetic predicates into floating-point ones.

    ``eps_eig`` is relative (``|a - b| <= eps_eig (1 + |a|)``), ``eps_adm`` is
    absolute, ``eps_rank`` is relative to the largest singular value and
    ``eps_res_rel`` scales as ``eps_res_rel (1 + |mu|)``.
    """

    eps_eig: float = 1e-9
    eps_adm: float = 1e-12
    eps_rank: float = 1e-10
    eps_res_rel: float = 1e-8
    eps_c: float = 1e-6
    cond_max: float = 1e14
    # residual thresholds used to call a synthesis verified
    max_residual: float = 1e-8
    max_tb_residual: float = 1e-10

    def eps_res(self, mu: float) -> float:
        return self.eps_res_rel * (1.0 + abs(mu))

    def updated(self, **kw) -> "Tolerances":
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in kw.items() if k in known and v is not None})


DEFAULT_TOL = Tolerances()
