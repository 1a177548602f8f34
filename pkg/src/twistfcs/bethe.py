"""Bethe rapidities from transfer eigenvalue polynomials.

Each oracle eigenvalue polynomial is turned into a Baxter polynomial Q through
the TQ relation, the zeros of Q are refined by Newton iteration on the Bethe
equations and every set is then classified.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from . import oracle
from .errors import NonGenericError, SingularMatrixError, TQInconsistentError
from .numkernel import CPoly, least_squares, poly_roots, solve_linear
from .oracle import ChainConfig
from .rational import bethe_system, bethe_terms, norm_jacobian, norm_jacobian_entries
from .twist import MabaTwist, Twist

log = logging.getLogger(__name__)

ADMISSIBLE = "admissible"
SPURIOUS = "spurious"
UNRESOLVED = "unresolved"

TQ_TOL = 1e-8
COLLISION_TOL = 1e-8
TERM_TOL = 1e-10
ADMISSIBLE_TOL = 1e-10
REJECT_TOL = 1e-6
NEWTON_TARGET = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 8
# near-strings (u_i - u_j close to +-c) make the double-precision Bethe
# equations ill-conditioned; such sets are refined and kept at this precision
EXTENDED_DPS = 40
MAX_DPS = 160
STRING_TOL = 1e-6
EXTENDED_TARGET = 1e-30


@dataclass(frozen=True)
class RapiditySet:
    roots: tuple
    residual: float = float("inf")
    cls: str = UNRESOLVED
    history: tuple = field(default=(), compare=False, repr=False)
    precise: tuple | None = field(default=None, compare=False, repr=False)
    dps: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(complex(x) for x in self.roots))

    def __len__(self):
        return len(self.roots)

    @property
    def scale(self) -> float:
        return 1.0 + max((abs(x) for x in self.roots), default=0.0)

    @property
    def is_admissible(self) -> bool:
        return self.cls == ADMISSIBLE


@dataclass(frozen=True)
class SpectralLine:
    lambda_poly: CPoly
    q_poly: CPoly
    rapidities: RapiditySet
    eigen_index: int
    tq_residual: float = 0.0

    def record(self) -> dict:
        return {
            "eigen_index": self.eigen_index,
            "lambda_poly": self.lambda_poly.to_list(),
            "q_poly": self.q_poly.to_list(),
            "roots": [[z.real, z.imag] for z in self.rapidities.roots],
            "class": self.rapidities.cls,
            "residual": self.rapidities.residual,
            "tq_residual": self.tq_residual,
        }


@dataclass(frozen=True)
class TQConvention:
    """Lambda(u) Q(u) = s1 (k1-rho1) a(u) Q(u - shift c) + s1 (k2-rho2) d(u) Q(u + shift c)
    + c^inhom_power (rho1+rho2) a(u) d(u), with s1 = (-1)^L when ``alternating``."""

    shift: int = 1
    alternating: bool = False
    inhom_power: bool = True


CANDIDATE_CONVENTIONS = tuple(
    TQConvention(s, alt, p) for s in (1, -1) for alt in (False, True) for p in (True, False)
)


def _shifted_power(j: int, shift: complex) -> np.ndarray:
    """Coefficients of (u + shift)^j."""
    return np.polynomial.polynomial.polypow(np.array([shift, 1.0], dtype=complex), j)


def tq_system(lambda_poly: CPoly, mt: MabaTwist, cfg: ChainConfig, conv: TQConvention):
    """Linear system in (q_0..q_{L-1}) for monic Q; 2L+1 coefficient equations."""
    L, c = cfg.L, cfg.c
    P = np.polynomial.polynomial
    al, be, ga = mt.coefficients
    sign = (-1) ** L if conv.alternating else 1
    a_poly = P.polypow(np.array([1.0, 1.0 / c]), L)
    d_poly = np.zeros(L + 1, dtype=complex)
    d_poly[L] = c ** -L
    lam = lambda_poly.padded(L + 1)
    n = 2 * L + 1

    def column(j):
        e = np.zeros(j + 1, dtype=complex)
        e[j] = 1
        v = P.polymul(lam, e)
        v = P.polysub(v, sign * al * P.polymul(a_poly, _shifted_power(j, -conv.shift * c)))
        v = P.polysub(v, sign * be * P.polymul(d_poly, _shifted_power(j, conv.shift * c)))
        out = np.zeros(n, dtype=complex)
        out[: len(v)] = v
        return out

    m = np.array([column(j) for j in range(L)]).T
    inh = (c ** L if conv.inhom_power else 1) * ga * P.polymul(a_poly, d_poly)
    rhs = np.zeros(n, dtype=complex)
    rhs[: len(inh)] = inh
    rhs = rhs - column(L)
    return m, rhs


def _tq_fit(lambda_poly, mt, cfg, conv):
    m, rhs = tq_system(lambda_poly, mt, cfg, conv)
    q, resid = least_squares(m, rhs)
    full = np.append(q, 1.0)
    # backward error: residual against the size of the terms that cancel
    size = max(float(np.linalg.norm(m, 2) * np.linalg.norm(full) + np.linalg.norm(rhs)), 1e-300)
    return CPoly(full), resid / size


@lru_cache(maxsize=1)
def calibrated_convention() -> TQConvention:
    """Pick the TQ convention that reproduces the oracle spectrum at L = 2.

    A generic complex twist and complex c make every candidate distinguishable.
    The result is frozen for the process lifetime.
    """
    from .twist import solve_rho_link

    cfg = ChainConfig(2, 1.3 + 0.2j)
    twist = Twist(0.3 + 0.2j, -0.5, 1.1 - 0.3j, 0.7 - 0.4j)
    mt = solve_rho_link(twist, twist)[0].side(twist)
    states = oracle.transfer_eigen_data(twist, cfg)
    worst = []
    for conv in CANDIDATE_CONVENTIONS:
        worst.append(max(_tq_fit(st.lambda_poly, mt, cfg, conv)[1] for st in states))
    best = int(np.argmin(worst))
    if worst[best] > TQ_TOL:
        raise TQInconsistentError("no TQ convention reproduces the L = 2 oracle spectrum")
    return CANDIDATE_CONVENTIONS[best]


def tq_solve(lambda_poly: CPoly, mt: MabaTwist, cfg: ChainConfig, conv: TQConvention | None = None, tol: float = TQ_TOL):
    """Monic Baxter polynomial for ``lambda_poly`` and its relative residual."""
    if lambda_poly.degree > cfg.L:
        raise ValueError(f"eigenvalue polynomial of degree {lambda_poly.degree} > L={cfg.L}")
    conv = calibrated_convention() if conv is None else conv
    q, resid = _tq_fit(lambda_poly, mt, cfg, conv)
    if resid > tol:
        raise TQInconsistentError(f"TQ residual {resid:.3e} exceeds {tol:.1e}")
    return q, resid


def roots_of_Q(q: CPoly) -> RapiditySet:
    return RapiditySet(tuple(poly_roots(q)))


def _min_gap(roots) -> float:
    roots = list(roots)
    if len(roots) < 2:
        return float("inf")
    return min(abs(x - y) for i, x in enumerate(roots) for y in roots[:i])


def string_gap(roots, c) -> float:
    """Smallest |u_i - u_j - c| over ordered pairs; small values mark near-strings."""
    roots = list(roots)
    return min((abs(x - y - c) for x in roots for y in roots if x is not y), default=float("inf"))


def _normalized(roots, mt, cfg, c):
    out = []
    for k, u in enumerate(roots):
        terms = bethe_terms(u, roots[:k] + roots[k + 1:], mt, cfg, c)
        big = max(abs(x) for x in terms)
        out.append(abs(sum(terms)) / big if big > 0 else 0.0)
    return out


def _term_scales(roots, mt, cfg, c):
    out = []
    for k, u in enumerate(roots):
        big = max(abs(x) for x in bethe_terms(u, roots[:k] + roots[k + 1:], mt, cfg, c))
        out.append(big if big > 0 else 1.0)
    return np.array(out, dtype=float) if isinstance(c, complex) else out


def bethe_residual(rs: RapiditySet | Sequence[complex], mt: MabaTwist, cfg: ChainConfig) -> np.ndarray:
    """|Y(u_j|others)| divided by the largest of its three term magnitudes.

    Sets carrying extended-precision roots are evaluated at that precision.
    """
    precise = rs.precise if isinstance(rs, RapiditySet) else None
    roots = list(rs.roots if isinstance(rs, RapiditySet) else rs)
    scale = 1.0 + max((abs(x) for x in roots), default=0.0)
    if _min_gap(roots) < COLLISION_TOL * scale:
        raise NonGenericError("coincident rapidities; classify the set as spurious")
    if precise is not None:
        with mpmath.workdps(rs.dps or EXTENDED_DPS):
            vals = _normalized(list(precise), mt, cfg, mpmath.mpc(cfg.c))
            return np.array([float(v) for v in vals])
    return np.array(_normalized(roots, mt, cfg, cfg.c), dtype=float)


def _max_residual(roots, mt, cfg) -> float:
    try:
        return float(np.max(bethe_residual(roots, mt, cfg), initial=0.0))
    except NonGenericError:
        return float("inf")


def newton_refine(rs: RapiditySet, mt: MabaTwist, cfg: ChainConfig) -> RapiditySet:
    """Damped Newton on Y(u_k|others) = 0 with the analytic Jacobian.

    Steps are halved while they fail to decrease ||W Y||, with W the inverse
    term scales frozen at the start of the step.
    """
    roots = np.array(rs.roots, dtype=complex)
    if roots.size == 0:
        return replace(rs, residual=0.0)
    res = _max_residual(roots, mt, cfg)
    history = [res]
    if not np.isfinite(res):
        return replace(rs, residual=res, cls=UNRESOLVED, history=tuple(history))
    for _ in range(NEWTON_MAX_ITER):
        if res <= NEWTON_TARGET:
            break
        F = bethe_system(list(roots), mt, cfg)
        w = 1.0 / _term_scales(list(roots), mt, cfg, cfg.c)
        merit = float(np.linalg.norm(w * F))
        jac = norm_jacobian(list(roots), mt, cfg).T / cfg.c
        try:
            step = solve_linear(jac, F)
        except SingularMatrixError:
            return RapiditySet(tuple(roots), res, UNRESOLVED, tuple(history))
        lam = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            trial = roots - lam * step
            tmerit = float(np.linalg.norm(w * bethe_system(list(trial), mt, cfg)))
            if tmerit < merit:
                break
            lam *= 0.5
        else:
            break
        roots = trial
        res = _max_residual(roots, mt, cfg)
        history.append(res)
    return RapiditySet(tuple(roots), res, UNRESOLVED, tuple(history))


def newton_refine_extended(rs: RapiditySet, mt: MabaTwist, cfg: ChainConfig, dps: int = EXTENDED_DPS) -> RapiditySet:
    """Same damped iteration carried out in ``dps``-digit arithmetic.

    The refined roots are kept in ``precise``; ``roots`` holds their rounding.
    """
    if len(rs) == 0:
        return replace(rs, residual=0.0)
    with mpmath.workdps(dps):
        c = mpmath.mpc(cfg.c)
        roots = [mpmath.mpc(z) for z in (rs.precise or rs.roots)]
        n = len(roots)

        def system(xs):
            return mpmath.matrix([sum(bethe_terms(u, xs[:k] + xs[k + 1:], mt, cfg, c)) for k, u in enumerate(xs)])

        target = max(EXTENDED_TARGET, mpmath.mpf(10) ** (10 - dps))
        res = max(_normalized(roots, mt, cfg, c))
        history = [float(res)]
        for _ in range(NEWTON_MAX_ITER):
            if res <= target:
                break
            F = system(roots)
            w = [1 / x if x else mpmath.mpf(1) for x in _term_scales(roots, mt, cfg, c)]

            def merit_of(vec):
                return mpmath.sqrt(sum(abs(w[k] * vec[k]) ** 2 for k in range(n)))

            merit = merit_of(F)
            jac = mpmath.matrix(norm_jacobian_entries(roots, mt, cfg, c)).T / c
            try:
                step = mpmath.lu_solve(jac, F)
            except ZeroDivisionError:
                break
            lam = mpmath.mpf(1)
            for _ in range(NEWTON_MAX_HALVINGS + 1):
                trial = [roots[k] - lam * step[k] for k in range(n)]
                if merit_of(system(trial)) < merit:
                    break
                lam /= 2
            else:
                break
            roots = trial
            res = max(_normalized(roots, mt, cfg, c))
            history.append(float(res))
        return RapiditySet(tuple(complex(z) for z in roots), float(res), UNRESOLVED, tuple(history), tuple(roots), dps)


def _terms_vanish(rs: RapiditySet, mt, cfg) -> bool:
    scale = rs.scale
    if rs.precise is None:
        roots, c, tol = list(rs.roots), cfg.c, TERM_TOL
        ctx = None
    else:
        # exact zeros stay at the noise floor of the working precision
        roots, c, tol = list(rs.precise), None, 10.0 ** (10 - (rs.dps or EXTENDED_DPS))
        ctx = mpmath.workdps(rs.dps or EXTENDED_DPS)
    if ctx is not None:
        with ctx:
            c = mpmath.mpc(cfg.c)
            return _any_vanishing(roots, mt, cfg, c, tol * scale)
    return _any_vanishing(roots, mt, cfg, c, tol * scale)


def _any_vanishing(roots, mt, cfg, c, bound) -> bool:
    for k, u in enumerate(roots):
        terms = bethe_terms(u, roots[:k] + roots[k + 1:], mt, cfg, c)
        if all(abs(x) < bound for x in terms):
            return True
    return False


def classify(rs: RapiditySet, mt: MabaTwist, cfg: ChainConfig) -> RapiditySet:
    """Spurious for coinciding roots or a vanishing term triple, admissible when on shell."""
    roots = list(rs.roots)
    scale = rs.scale
    if _min_gap(roots) < COLLISION_TOL * scale:
        return replace(rs, cls=SPURIOUS)
    if _terms_vanish(rs, mt, cfg):
        return replace(rs, cls=SPURIOUS)
    res = _max_residual(rs, mt, cfg)
    cls = ADMISSIBLE if res <= ADMISSIBLE_TOL else UNRESOLVED
    if res > REJECT_TOL:
        log.warning("rapidity set rejected, residual %.3e", res)
    return replace(rs, residual=res, cls=cls)


def refine(rs: RapiditySet, mt: MabaTwist, cfg: ChainConfig) -> RapiditySet:
    """Double-precision Newton, escalated to extended precision for near-strings
    or whenever the double result is not on shell or looks term-wise degenerate."""
    out = newton_refine(rs, mt, cfg)
    roots = list(out.roots)
    if len(roots) and _min_gap(roots) < COLLISION_TOL * out.scale:
        return out
    needs_ext = (
        out.residual > ADMISSIBLE_TOL
        or string_gap(roots, cfg.c) < STRING_TOL * out.scale
        or _terms_vanish(out, mt, cfg)
    )
    dps = EXTENDED_DPS
    while needs_ext and dps <= MAX_DPS:
        out = newton_refine_extended(out, mt, cfg, dps)
        # stalling well short of the working precision means the terms span
        # more decades than it resolves; retry with twice the digits
        if out.residual <= EXTENDED_TARGET or out.residual <= 10.0 ** (10 - dps):
            break
        dps *= 2
    return out


def solve_line(state: oracle.EigenState, mt: MabaTwist, cfg: ChainConfig) -> SpectralLine:
    try:
        q, tq_res = tq_solve(state.lambda_poly, mt, cfg)
    except TQInconsistentError as exc:
        raise TQInconsistentError(f"eigen_index {state.index}: {exc}") from exc
    rs = classify(refine(roots_of_Q(q), mt, cfg), mt, cfg)
    return SpectralLine(state.lambda_poly, q, rs, state.index, tq_res)


def enumerate_spectrum(twist: Twist, mt: MabaTwist, cfg: ChainConfig, states=None) -> list[SpectralLine]:
    """One line per oracle eigenstate of t_K(u), in energy order."""
    if mt.twist != twist:
        raise ValueError("rho parameters belong to a different twist")
    if states is None:
        states = oracle.transfer_eigen_data(twist, cfg)
    return [solve_line(st, mt, cfg) for st in states]


def admissible_count(lines: Sequence[SpectralLine]) -> int:
    return sum(ln.rapidities.is_admissible for ln in lines)
