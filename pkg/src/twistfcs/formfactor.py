"""Slavnov overlaps, norms and the form-factor sum for the FCS.

Every determinant object is built from the analytic Jacobians of
:mod:`twistfcs.rational`. The FCS summand only needs the ratio

    det J_K(v;u) det J_K~(u;v) / (g(u,v) g(v,u) det G_K(u) det G_K~(v)),

in which vacuum expectation values, Delta products and mu prefactors cancel.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from . import oracle
from .bethe import (
    ADMISSIBLE,
    COLLISION_TOL,
    RapiditySet,
    SpectralLine,
    bethe_residual,
    enumerate_spectrum,
    solve_line,
)
from .errors import NonGenericError, NotOnShellError
from .oracle import ChainConfig
from .rational import (
    RationalKit,
    check_disjoint,
    delta_products,
    f,
    g,
    lambda_eigenvalue,
    lambda_jacobian,
    lambda_jacobian_entries,
    norm_jacobian,
    norm_jacobian_entries,
    set_product,
)
from .twist import CountingSpec, MabaTwist, Twist, solve_rho_link, tilde_twist

__all__ = [
    "RationalKit",
    "lambda_eigenvalue",
    "lambda_jacobian",
    "norm_jacobian",
    "slavnov_overlap",
    "norm",
    "FormFactorTerm",
    "fcs_term",
    "FcsTable",
    "fcs_sum",
]

log = logging.getLogger(__name__)

ON_SHELL_TOL = 1e-8
EXTENDED_GAP = 1e-6
ABORT_GAP = 1e-10
EXTENDED_DPS = 30
COND_WARN = 1e12


def _roots(x) -> list:
    return list(x.roots) if isinstance(x, RapiditySet) else [complex(z) for z in x]


def _require_on_shell(roots, mt: MabaTwist, cfg: ChainConfig):
    res = float(np.max(bethe_residual(roots, mt, cfg), initial=0.0))
    if res > ON_SHELL_TOL:
        raise NotOnShellError(f"on-shell set has Bethe residual {res:.3e}")


def _mu_power(mt: MabaTwist, cfg: ChainConfig) -> complex:
    return (mt.mu / mt.twist.kp) ** cfg.L


def slavnov_overlap(
    on_shell,
    off_shell,
    mt: MabaTwist,
    vacuum_factor: complex,
    cfg: ChainConfig,
    off_mu: complex | None = None,
) -> complex:
    """<0|C(on) B(off)|0> for the operators of ``mt``'s twist.

    ``vacuum_factor`` is <0|B(on)|0> for the same operators. When the off-shell
    vector is built from another twist's operators, pass that twist's mu as
    ``off_mu``; the two creation operators differ by the ratio of mu's.
    """
    on, off = _roots(on_shell), _roots(off_shell)
    if len(on) != len(off):
        raise ValueError("both sets need the same number of rapidities")
    _require_on_shell(on, mt, cfg)
    c = cfg.c
    jac = lambda_jacobian(off, on, mt, cfg)
    lower_off, _ = delta_products(off, c)
    _, upper_on = delta_products(on, c)
    value = vacuum_factor * _mu_power(mt, cfg) * lower_off * upper_on / set_product(g, off, on, c)
    value *= np.linalg.det(jac) if len(on) else 1.0
    if off_mu is not None:
        value *= (off_mu / mt.mu) ** cfg.L
    return complex(value)


def norm(on_shell, mt: MabaTwist, vacuum_factor: complex, cfg: ChainConfig) -> complex:
    """<0|C(u) B(u)|0> for an on-shell set u."""
    on = _roots(on_shell)
    _require_on_shell(on, mt, cfg)
    lower, upper = delta_products(on, cfg.c)
    det = np.linalg.det(norm_jacobian(on, mt, cfg)) if on else 1.0
    return complex(vacuum_factor * _mu_power(mt, cfg) * lower * upper * det)


@dataclass(frozen=True)
class FormFactorTerm:
    v: RapiditySet
    weight0: complex
    ratio_base: complex
    eigen_index: int = -1
    extended: bool = False

    def weight(self, ell: int) -> complex:
        return self.weight0 * self.ratio_base ** ell


def _min_cross_gap(us, vs) -> float:
    if not us or not vs:
        return float("inf")
    return min(abs(u - v) for u in us for v in vs)


def _same_set(us, vs, scale) -> bool:
    if len(us) != len(vs):
        return False
    rest = list(vs)
    for u in us:
        j = int(np.argmin([abs(u - v) for v in rest]))
        if abs(u - rest[j]) > COLLISION_TOL * scale:
            return False
        rest.pop(j)
    return True


def _cond_warn(name, m, idx):
    cond = np.linalg.cond(m)
    if cond > COND_WARN:
        log.warning("line %d: %s condition number %.2e", idx, name, cond)


def _weight_double(us, vs, mk, mkt, cfg, idx):
    c = cfg.c
    j1 = lambda_jacobian(vs, us, mk, cfg)
    j2 = lambda_jacobian(us, vs, mkt, cfg)
    g1 = norm_jacobian(us, mk, cfg)
    g2 = norm_jacobian(vs, mkt, cfg)
    for name, m in (("J_K", j1), ("J_Kt", j2), ("G_K", g1), ("G_Kt", g2)):
        _cond_warn(name, m, idx)
    gg = set_product(g, us, vs, c) * set_product(g, vs, us, c)
    num = np.linalg.det(j1) * np.linalg.det(j2)
    den = gg * np.linalg.det(g1) * np.linalg.det(g2)
    return complex(num / den)


def _weight_extended(us, vs, mk, mkt, cfg, dps=EXTENDED_DPS):
    """Weight and eigenvalue ratio at ``dps`` digits."""
    with mpmath.workdps(dps):
        mp = mpmath.mpc
        c = mp(cfg.c)
        us_m = [mp(x) for x in us]
        vs_m = [mp(x) for x in vs]

        def det(entries):
            return mpmath.det(mpmath.matrix(entries)) if entries else mp(1)

        j1 = det(lambda_jacobian_entries(vs_m, us_m, mk, cfg, c))
        j2 = det(lambda_jacobian_entries(us_m, vs_m, mkt, cfg, c))
        g1 = det(norm_jacobian_entries(us_m, mk, cfg, c))
        g2 = det(norm_jacobian_entries(vs_m, mkt, cfg, c))
        gg = set_product(g, us_m, vs_m, c) * set_product(g, vs_m, us_m, c)
        lam_u = mk.coefficients[0] * set_product(f, us_m, [0], c)
        lam_v = mkt.coefficients[0] * set_product(f, vs_m, [0], c)
        return complex(j1 * j2 / (gg * g1 * g2)), complex(lam_u / lam_v)


def _precise(rs) -> list:
    if isinstance(rs, RapiditySet) and rs.precise is not None:
        return list(rs.precise)
    return _roots(rs)


def fcs_term(u_set, line_v: SpectralLine | RapiditySet, mk: MabaTwist, mkt: MabaTwist, cfg: ChainConfig) -> FormFactorTerm:
    """One summand: ``weight0 * ratio_base**ell`` is the contribution at ``ell``.

    Near-collisions between the two sets, or sets refined in extended
    precision, are evaluated at ``EXTENDED_DPS`` digits.
    """
    us = _roots(u_set)
    if isinstance(line_v, SpectralLine):
        v_rs, idx = line_v.rapidities, line_v.eigen_index
    else:
        v_rs, idx = line_v, -1
    vs = list(v_rs.roots)
    scale = 1.0 + max(abs(z) for z in us + vs) if us else 1.0
    if mk.twist == mkt.twist and _same_set(us, vs, scale):
        return FormFactorTerm(v_rs, 1.0 + 0j, 1.0 + 0j, idx)
    gap = _min_cross_gap(us, vs)
    if gap < ABORT_GAP * scale:
        check_disjoint(us, vs, ABORT_GAP)
    has_precise = any(isinstance(x, RapiditySet) and x.precise is not None for x in (u_set, v_rs))
    extended = has_precise or gap < EXTENDED_GAP * scale
    if extended:
        dps = max([EXTENDED_DPS] + [x.dps for x in (u_set, v_rs) if isinstance(x, RapiditySet)])
        w, ratio = _weight_extended(_precise(u_set), _precise(v_rs), mk, mkt, cfg, dps)
    else:
        w = _weight_double(us, vs, mk, mkt, cfg, idx)
        ratio = lambda_eigenvalue(0, us, mk, cfg) / lambda_eigenvalue(0, vs, mkt, cfg)
    return FormFactorTerm(v_rs, w, complex(ratio), idx, extended)


@dataclass
class FcsTable:
    ells: list
    values: list
    oracle: list | None = None
    meta: dict = field(default_factory=dict)

    def errors(self):
        if self.oracle is None:
            return None
        out = []
        for v, o in zip(self.values, self.oracle):
            err = abs(v - o)
            out.append((err, err / abs(o) if o != 0 else err))
        return out

    def rows(self):
        errs = self.errors()
        for i, ell in enumerate(self.ells):
            v = self.values[i]
            if errs is None:
                yield ell, v, None, None, None
            else:
                yield ell, v, self.oracle[i], errs[i][0], errs[i][1]

    @property
    def max_rel_err(self) -> float | None:
        errs = self.errors()
        return None if errs is None else max((e[1] for e in errs), default=0.0)


@dataclass(frozen=True)
class FcsSetup:
    """Everything the sum needs for one (K, beta, state, branch) choice."""

    twist: Twist
    twist_t: Twist
    mk: MabaTwist
    mkt: MabaTwist
    ground: SpectralLine
    lines: tuple
    state: oracle.EigenState


def prepare(twist: Twist, spec: CountingSpec, state_index: int, cfg: ChainConfig, branch: int = 0) -> FcsSetup:
    twist_t = tilde_twist(twist, spec)
    branches = solve_rho_link(twist, twist_t)
    if branch >= len(branches):
        raise NonGenericError(f"rho branch {branch} unavailable ({len(branches)} found)")
    rho = branches[branch]
    mk, mkt = rho.side(twist), rho.side(twist_t, tilde=True)
    states = oracle.transfer_eigen_data(twist, cfg)
    if not 0 <= state_index < len(states):
        raise ValueError(f"state index {state_index} outside 0..{len(states) - 1}")
    ground = solve_line(states[state_index], mk, cfg)
    if not ground.rapidities.is_admissible:
        raise NotOnShellError(
            f"state {state_index} has no admissible rapidities (class {ground.rapidities.cls})"
        )
    if spec.is_zero:
        lines = (ground,)
    else:
        lines = tuple(enumerate_spectrum(twist_t, mkt, cfg))
    return FcsSetup(twist, twist_t, mk, mkt, ground, lines, states[state_index])


def sum_terms(setup: FcsSetup, cfg: ChainConfig):
    """(terms of admissible lines, non-admissible lines) in eigen_index order."""
    terms, excluded = [], []
    for line in setup.lines:
        if line.rapidities.cls != ADMISSIBLE:
            excluded.append(line)
            continue
        terms.append(fcs_term(setup.ground.rapidities, line, setup.mk, setup.mkt, cfg))
    return terms, excluded


def fcs_sum(
    twist: Twist,
    spec: CountingSpec,
    state_index: int,
    cfg: ChainConfig,
    ells: Sequence[int] | None = None,
    branch: int = 0,
    with_oracle: bool = False,
) -> FcsTable:
    """FCS at every requested ell as the form-factor sum over admissible K~ lines."""
    t0 = time.perf_counter()
    ells = list(range(cfg.L + 1)) if ells is None else list(ells)
    for ell in ells:
        if not 0 <= ell <= cfg.L:
            raise ValueError(f"ell={ell} outside 0..{cfg.L}")
    setup = prepare(twist, spec, state_index, cfg, branch)
    terms, excluded = sum_terms(setup, cfg)
    values = []
    for ell in ells:
        total = 0j
        for term in terms:
            total += term.weight(ell)
        values.append(complex(total))
    meta = {
        "branch": branch,
        "admissible": len(terms),
        "lines": len(setup.lines),
        "extended_terms": sum(t.extended for t in terms),
        "excluded": [],
    }
    oracle_values = None
    if with_oracle or excluded:
        tilde_states = oracle.transfer_eigen_data(setup.twist_t, cfg)
        weights, ratios = oracle.eigenbasis_terms(setup.state, tilde_states)
        for line in excluded:
            i = line.eigen_index
            contrib = [complex(weights[i] * ratios[i] ** ell) for ell in ells]
            meta["excluded"].append(
                {"eigen_index": i, "class": line.rapidities.cls, "max_abs_contribution": max(abs(z) for z in contrib)}
            )
            log.warning("line %d excluded (%s); oracle contribution up to %.3e", i, line.rapidities.cls, meta["excluded"][-1]["max_abs_contribution"])
    if with_oracle:
        oracle_values = oracle.fcs_direct_values(twist, spec.beta, ells, state_index, cfg)
    meta["seconds"] = time.perf_counter() - t0
    return FcsTable(ells, values, oracle_values, meta)
