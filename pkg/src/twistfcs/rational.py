"""Rational kit and the on-shell functions built from it.

Conventions (checked against the exact operators):

* ``h(x, y) = f(x, y) / g(x, y) = (x - y + c) / c``;
* eigenvalue ``Lambda(u|us) = (k1-rho1) a(u) f(us, u) + (k2-rho2) d(u) f(u, us)
  + (rho1+rho2) a(u) d(u) g(u, us)``;
* Bethe function ``Y(u|us) = (-1)^L (k1-rho1) a(u) h(us, u) + (k2-rho2) d(u) h(u, us)
  + (rho1+rho2) a(u) d(u)``, so that ``Lambda = g(u, us) Y(u|us)``.

The scalar loops only use ``+ - * /`` so they also run on ``mpmath.mpc``.
"""
from __future__ import annotations

import numpy as np

from .errors import NonGenericError
from .oracle import ChainConfig
from .twist import MabaTwist

POLE_TOL = 1e-10


def f(x, y, c):
    return (x - y + c) / (x - y)


def g(x, y, c):
    return c / (x - y)


def h(x, y, c):
    return (x - y + c) / c


def t(x, y, c):
    return g(x, y, c) ** 2 / f(x, y, c)


def _prod(values, one=1):
    out = one
    for v in values:
        out = out * v
    return out


def set_product(fn, xs, ys, c):
    """prod over x in xs, y in ys of fn(x, y)."""
    return _prod(fn(x, y, c) for x in xs for y in ys)


def delta_products(xs, c):
    """(prod_{i>j} g(x_i, x_j), prod_{i<j} g(x_i, x_j))."""
    n = len(xs)
    lower = _prod(g(xs[i], xs[j], c) for i in range(n) for j in range(i))
    upper = _prod(g(xs[i], xs[j], c) for i in range(n) for j in range(i + 1, n))
    return lower, upper


class RationalKit:
    """The functions f, g, h, t bound to one value of c."""

    def __init__(self, c):
        if c == 0:
            raise ValueError("c must be nonzero")
        self.c = c

    def f(self, x, y):
        return f(x, y, self.c)

    def g(self, x, y):
        return g(x, y, self.c)

    def h(self, x, y):
        return h(x, y, self.c)

    def t(self, x, y):
        return t(x, y, self.c)


def _vac(u, cfg: ChainConfig, c):
    L = cfg.L
    return ((u + c) / c) ** L, (u / c) ** L


def bethe_terms(u, others, mt: MabaTwist, cfg: ChainConfig, c=None):
    """The three terms of Y(u|others)."""
    c = cfg.c if c is None else c
    al, be, ga = mt.coefficients
    a, d = _vac(u, cfg, c)
    sign = -1 if cfg.L % 2 else 1
    return (
        sign * al * a * _prod(h(x, u, c) for x in others),
        be * d * _prod(h(u, x, c) for x in others),
        ga * a * d,
    )


def bethe_function(u, others, mt: MabaTwist, cfg: ChainConfig) -> complex:
    return sum(bethe_terms(u, others, mt, cfg))


def bethe_system(roots, mt: MabaTwist, cfg: ChainConfig) -> np.ndarray:
    """Y(u_k | roots without u_k) for every k."""
    roots = list(roots)
    return np.array([bethe_function(u, roots[:k] + roots[k + 1:], mt, cfg) for k, u in enumerate(roots)])


def _lambda_raw(u, roots, mt: MabaTwist, cfg: ChainConfig, c):
    al, be, ga = mt.coefficients
    a, d = _vac(u, cfg, c)
    return (
        al * a * _prod(f(x, u, c) for x in roots)
        + be * d * _prod(f(u, x, c) for x in roots)
        + ga * a * d * _prod(g(u, x, c) for x in roots)
    )


def lambda_eigenvalue(u, roots, mt: MabaTwist, cfg: ChainConfig) -> complex:
    """Transfer-matrix eigenvalue for the rapidities ``roots``.

    At u = 0 only the first term survives. Within ``POLE_TOL`` of a rapidity the
    value is the mean over a small circle, exact for the on-shell polynomial.
    """
    c = cfg.c
    roots = [complex(x) for x in roots]
    u = complex(u)
    scale = 1.0 + max((abs(x) for x in roots), default=0.0)
    if roots and min(abs(u - x) for x in roots) < POLE_TOL * scale:
        n = len(roots) + cfg.L + 1
        radius = 1e-3 * scale
        if len(roots) > 1:
            spacing = min(abs(x - y) for i, x in enumerate(roots) for y in roots[:i])
            radius = min(radius, 0.25 * spacing)
        pts = u + radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
        return complex(np.mean([_lambda_raw(p, roots, mt, cfg, c) for p in pts]))
    if u == 0:
        al = mt.coefficients[0]
        return complex(al * _prod(f(x, 0, c) for x in roots))
    return complex(_lambda_raw(u, roots, mt, cfg, c))


def check_disjoint(us, vs, tol: float = POLE_TOL):
    scale = 1.0 + max((abs(x) for x in list(us) + list(vs)), default=0.0)
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            if abs(u - v) < tol * scale:
                raise NonGenericError(f"rapidity collision between u[{i}]={u} and v[{j}]={v}")


def lambda_jacobian_entries(vs, us, mt: MabaTwist, cfg: ChainConfig, c=None):
    """Nested list J[j][k] = c dLambda(v_k|us)/du_j."""
    c = cfg.c if c is None else c
    al, be, ga = mt.coefficients
    n = len(us)
    out = [[0] * len(vs) for _ in range(n)]
    for k, v in enumerate(vs):
        a, d = _vac(v, cfg, c)
        g_all = _prod(g(v, x, c) for x in us)
        for j in range(n):
            uj = us[j]
            rest = us[:j] + us[j + 1:]
            term_a = -al * a * g(uj, v, c) ** 2 * _prod(f(x, v, c) for x in rest)
            term_d = be * d * g(v, uj, c) ** 2 * _prod(f(v, x, c) for x in rest)
            term_i = ga * a * d * g_all * g(v, uj, c)
            out[j][k] = term_a + term_d + term_i
    return out


def lambda_jacobian(vs, us, mt: MabaTwist, cfg: ChainConfig) -> np.ndarray:
    us = [complex(x) for x in us]
    vs = [complex(x) for x in vs]
    check_disjoint(us, vs)
    return np.array(lambda_jacobian_entries(vs, us, mt, cfg), dtype=complex)


def norm_jacobian_entries(us, mt: MabaTwist, cfg: ChainConfig, c=None):
    """Nested list G[j][k] = c dY(u_k | us without u_k)/du_j."""
    c = cfg.c if c is None else c
    L = cfg.L
    al, be, ga = mt.coefficients
    sign = -1 if L % 2 else 1
    n = len(us)
    out = [[0] * n for _ in range(n)]
    for k in range(n):
        uk = us[k]
        a, d = _vac(uk, cfg, c)
        da = L / c * ((uk + c) / c) ** (L - 1)
        dd = L / c * (uk / c) ** (L - 1)
        others = [i for i in range(n) if i != k]
        h1 = [h(us[i], uk, c) for i in others]
        h2 = [h(uk, us[i], c) for i in others]
        p1 = _prod(h1)
        p2 = _prod(h2)
        for j in range(n):
            if j == k:
                # d/du_k h(x, u_k) = -1/c, d/du_k h(u_k, x) = +1/c
                s1 = sum(_prod(h1[:m] + h1[m + 1:]) for m in range(len(h1))) if h1 else 0
                s2 = sum(_prod(h2[:m] + h2[m + 1:]) for m in range(len(h2))) if h2 else 0
                val = (
                    sign * al * (da * p1 - a * s1 / c)
                    + be * (dd * p2 + d * s2 / c)
                    + ga * (da * d + a * dd)
                )
            else:
                m = others.index(j)
                r1 = _prod(h1[:m] + h1[m + 1:])
                r2 = _prod(h2[:m] + h2[m + 1:])
                val = sign * al * a * r1 / c - be * d * r2 / c
            out[j][k] = c * val
    return out


def norm_jacobian(us, mt: MabaTwist, cfg: ChainConfig) -> np.ndarray:
    us = [complex(x) for x in us]
    return np.array(norm_jacobian_entries(us, mt, cfg), dtype=complex)
