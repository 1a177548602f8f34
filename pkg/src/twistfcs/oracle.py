"""Exact 2^L-dimensional realisation of the chain's operators.

Sites are numbered 1..L and site 1 is the most significant tensor factor, so
the pseudo-vacuum (all spins up) is the first basis vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DimensionError, NonGenericError
from .numkernel import (
    CPoly,
    eig_biorthogonal,
    kron,
    least_squares,
    mat_exp_pauli,
    pauli_combination,
    poly_from_samples,
    solve_linear,
)
from .twist import CountingSpec, Twist, constraint_residual, decompose_bda

MAX_SITES = 10
ENERGY_DECIMALS = 9
_I2 = np.eye(2, dtype=complex)
_PAULI = tuple(pauli_combination(e) for e in np.eye(3))


def _unit(i: int, j: int) -> np.ndarray:
    e = np.zeros((2, 2), dtype=complex)
    e[i, j] = 1
    return e


@dataclass(frozen=True)
class ChainConfig:
    L: int
    c: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        if not 1 <= int(self.L) <= MAX_SITES:
            raise DimensionError(f"L must lie in 1..{MAX_SITES}, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if self.c == 0:
            raise ValueError("R-matrix scale c must be nonzero")

    @property
    def dim(self) -> int:
        return 2 ** self.L

    def a(self, u):
        return ((u + self.c) / self.c) ** self.L

    def d(self, u):
        return (u / self.c) ** self.L

    def nodes(self) -> np.ndarray:
        """Interpolation nodes c*(k - L/2), k = 0..L."""
        return self.c * (np.arange(self.L + 1) - self.L / 2)


def r_matrix(u: complex, cfg: ChainConfig) -> np.ndarray:
    perm = sum(np.kron(_unit(i, j), _unit(j, i)) for i in range(2) for j in range(2))
    return (u / cfg.c) * np.eye(4, dtype=complex) + perm


@lru_cache(maxsize=128)
def _monodromy(u: complex, L: int, c: complex):
    blocks = [[np.eye(1, dtype=complex), np.zeros((1, 1), complex)], [np.zeros((1, 1), complex), np.eye(1, dtype=complex)]]
    # auxiliary-space entries of R_{a,site}: (u/c) delta_ik + E^{ki} on the site
    site = [[(u / c) * (i == k) * _I2 + _unit(k, i) for k in range(2)] for i in range(2)]
    for _ in range(L):
        blocks = [[sum(kron(blocks[i][m], site[m][k]) for m in range(2)) for k in range(2)] for i in range(2)]
    for row in blocks:
        for b in row:
            b.flags.writeable = False
    return blocks


def monodromy(u: complex, cfg: ChainConfig):
    """2x2 nested list [[A, B], [C, D]] of operators on the chain."""
    return _monodromy(complex(u), cfg.L, cfg.c)


_INDEX = {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}


def monodromy_entry(which: str, u: complex, cfg: ChainConfig) -> np.ndarray:
    i, j = _INDEX[which]
    return monodromy(u, cfg)[i][j]


def modified_monodromy(u: complex, twist: Twist, rho1: complex, rho2: complex, cfg: ChainConfig):
    """Blocks of A.T(u).B for the factorisation K = B D A."""
    if abs(constraint_residual(twist, rho1, rho2)) > 1e-10 * max(1.0, abs(twist.kp * twist.km)):
        raise ValueError("rho does not satisfy the twist constraint")
    bmat, _, amat = decompose_bda(twist, rho1, rho2)
    t = monodromy(u, cfg)
    return [
        [sum(amat[i, m] * t[m][n] * bmat[n, k] for m in range(2) for n in range(2)) for k in range(2)]
        for i in range(2)
    ]


def modified_entry(which: str, u: complex, twist: Twist, rho1: complex, rho2: complex, cfg: ChainConfig) -> np.ndarray:
    i, j = _INDEX[which[0].upper()]
    return modified_monodromy(u, twist, rho1, rho2, cfg)[i][j]


def transfer_matrix(twist: Twist, u: complex, cfg: ChainConfig) -> np.ndarray:
    t = monodromy(u, cfg)
    return twist.k1 * t[0][0] + twist.kp * t[1][0] + twist.km * t[0][1] + twist.k2 * t[1][1]


def site_operator(op, j: int, cfg: ChainConfig) -> np.ndarray:
    """``op`` acting on site j (1-based), identity elsewhere."""
    if not 1 <= j <= cfg.L:
        raise DimensionError(f"site {j} outside 1..{cfg.L}")
    left = np.eye(2 ** (j - 1), dtype=complex)
    right = np.eye(2 ** (cfg.L - j), dtype=complex)
    return kron(kron(left, np.asarray(op, dtype=complex)), right)


def shift_operator(cfg: ChainConfig) -> np.ndarray:
    return transfer_matrix(Twist.pauli("identity"), 0.0, cfg)


def counting_operator(spec: CountingSpec, cfg: ChainConfig) -> np.ndarray:
    if not 0 <= spec.ell <= cfg.L:
        raise DimensionError(f"ell={spec.ell} outside 0..{cfg.L}")
    site = mat_exp_pauli(spec.beta, 1)
    out = np.eye(1, dtype=complex)
    for j in range(cfg.L):
        out = kron(out, site if j < spec.ell else _I2)
    return out


def transfer_coefficients(twist: Twist, cfg: ChainConfig) -> np.ndarray:
    """Matrix coefficients T_j with t_K(u) = sum_j T_j u^j, exact by interpolation."""
    nodes = cfg.nodes()
    samples = np.array([transfer_matrix(twist, x, cfg) for x in nodes])
    vander = np.vander(nodes, cfg.L + 1, increasing=True)
    flat = solve_linear(vander, samples.reshape(cfg.L + 1, -1), rcond=1e-15)
    return flat.reshape(samples.shape)


def hamiltonian_logderiv(twist: Twist, cfg: ChainConfig) -> np.ndarray:
    """c t'(0) t(0)^{-1} + L/2."""
    coef = transfer_coefficients(twist, cfg)
    # X t0 = t1  <=>  t0^T X^T = t1^T
    x = solve_linear(coef[0].T, coef[1].T).T
    return cfg.c * x + (cfg.L / 2) * np.eye(cfg.dim)


def boundary_map(twist: Twist) -> np.ndarray:
    """3x3 matrix M with sigma^a_{L+1} = sum_b M[a, b] sigma^b_1."""
    k1, k2, kp, km = twist.k1, twist.k2, twist.kp, twist.km
    g = twist.gamma
    return np.array(
        [
            [(k1**2 + k2**2 - kp**2 - km**2) / (2 * g), (k1**2 - k2**2 + kp**2 - km**2) / (2j * g), (k2 * km - k1 * kp) / g],
            [(k2**2 - k1**2 + kp**2 - km**2) / (2j * g), (k1**2 + k2**2 + kp**2 + km**2) / (2 * g), (k2 * km + k1 * kp) / (1j * g)],
            [(k2 * kp - k1 * km) / g, 1j * (k1 * km + k2 * kp) / g, (k1 * k2 + kp * km) / g],
        ],
        dtype=complex,
    )


def hamiltonian_boundary(twist: Twist, cfg: ChainConfig, J: float = 1.0) -> np.ndarray:
    if twist.gamma == 0:
        raise NonGenericError("gamma = 0")
    L = cfg.L
    sig = [[site_operator(p, j, cfg) for p in _PAULI] for j in range(1, L + 1)]
    h = sum(sig[j][a] @ sig[j + 1][a] for j in range(L - 1) for a in range(3))
    m = boundary_map(twist)
    for a in range(3):
        image = sum(m[a, b] * sig[0][b] for b in range(3))
        h = h + sig[L - 1][a] @ image
    return J * h


def fit_affine(target: np.ndarray, basis: np.ndarray):
    """Fit target = alpha*basis + delta*I; returns (alpha, delta, max-entry residual)."""
    design = np.stack([basis.ravel(), np.eye(basis.shape[0]).ravel()], axis=1)
    (alpha, delta), _ = least_squares(design, target.ravel())
    resid = float(np.max(np.abs(design @ np.array([alpha, delta]) - target.ravel())))
    return complex(alpha), complex(delta), resid


@dataclass(frozen=True)
class EigenState:
    """One common eigenvector pair of the transfer-matrix family."""

    index: int
    lambda_poly: CPoly
    energy: complex
    right: np.ndarray
    left: np.ndarray

    @property
    def lambda0(self) -> complex:
        return self.lambda_poly.coeff(0)


def _energy(poly: CPoly, cfg: ChainConfig) -> complex:
    return cfg.c * poly.coeff(1) / poly.coeff(0) + cfg.L / 2


def _state_key(energy: complex, poly: CPoly, L: int):
    key = [round(energy.real, ENERGY_DECIMALS), round(energy.imag, ENERGY_DECIMALS)]
    for z in poly.padded(L + 1):
        key += [round(z.real, ENERGY_DECIMALS), round(z.imag, ENERGY_DECIMALS)]
    return tuple(key)


REFERENCE_POINT = 0.3141592653589793 + 0.5772156649015329j


def transfer_eigen_data(twist: Twist, cfg: ChainConfig, track_tol: float = 1e-7) -> list[EigenState]:
    """Eigenstates of t_K(u), ordered by H_K energy.

    The family is diagonalised once at a generic reference point; each state's
    eigenvalue polynomial comes from its bilinear expectation value of t_K at
    the interpolation nodes, after checking the vector is an eigenvector there.
    """
    es = eig_biorthogonal(transfer_matrix(twist, cfg.c * REFERENCE_POINT, cfg))
    nodes = cfg.nodes()
    values = np.empty((cfg.dim, nodes.size), dtype=complex)
    for k, x in enumerate(nodes):
        t = transfer_matrix(twist, x, cfg)
        tr = t @ es.right
        lam = np.einsum("ij,ij->j", es.left, tr)
        resid = np.linalg.norm(tr - es.right * lam, axis=0)
        bound = track_tol * max(1.0, np.linalg.norm(t, 2)) * np.linalg.norm(es.right, axis=0)
        bad = np.nonzero(resid > bound)[0]
        if bad.size:
            raise NonGenericError(f"eigenvector tracking failed at node u={x} for {bad.size} states")
        values[:, k] = lam
    states = []
    for i in range(cfg.dim):
        poly = CPoly(poly_from_samples(nodes, values[i]).padded(cfg.L + 1))
        states.append((poly, es.right[:, i], es.left[:, i]))
    energies = [_energy(p, cfg) for p, _, _ in states]
    order = sorted(range(len(states)), key=lambda i: _state_key(energies[i], states[i][0], cfg.L))
    return [EigenState(n, states[i][0], energies[i], states[i][1], states[i][2]) for n, i in enumerate(order)]


def hamiltonian_eigenstate(twist: Twist, cfg: ChainConfig, state_index: int = 0, gap_tol: float = 1e-9):
    """Right/left eigenvectors of H_K for an isolated level (energy-sorted)."""
    h = hamiltonian_logderiv(twist, cfg)
    w, vr = scipy.linalg.eig(h)
    order = sorted(range(w.size), key=lambda i: (round(w[i].real, ENERGY_DECIMALS), round(w[i].imag, ENERGY_DECIMALS)))
    e = w[order[state_index]]
    others = np.delete(w, order[state_index])
    if np.min(np.abs(others - e)) < gap_tol * max(1.0, abs(e)):
        raise NonGenericError(f"energy level {state_index} is degenerate")
    wl, vl = scipy.linalg.eig(h.T)
    right = vr[:, order[state_index]]
    left = vl[:, int(np.argmin(np.abs(wl - e)))]
    return complex(e), right, left / (left @ right)


def select_state(twist: Twist, cfg: ChainConfig, state_index: int = 0):
    """(right, left) for the requested energy-sorted state.

    Uses the transfer-matrix eigenbasis; if that family is degenerate (e.g. the
    periodic chain) the isolated H_K level is used instead.
    """
    try:
        st = transfer_eigen_data(twist, cfg)[state_index]
        return st.right, st.left
    except NonGenericError:
        _, right, left = hamiltonian_eigenstate(twist, cfg, state_index)
        return right, left


def expectation(op: np.ndarray, right: np.ndarray, left: np.ndarray) -> complex:
    return complex((left @ op @ right) / (left @ right))


def fcs_direct(twist: Twist, spec: CountingSpec, state_index: int, cfg: ChainConfig) -> complex:
    right, left = select_state(twist, cfg, state_index)
    return expectation(counting_operator(spec, cfg), right, left)


def fcs_direct_values(twist: Twist, beta, ells, state_index: int, cfg: ChainConfig) -> list[complex]:
    right, left = select_state(twist, cfg, state_index)
    return [expectation(counting_operator(CountingSpec(beta, ell), cfg), right, left) for ell in ells]


def eigenbasis_terms(state: EigenState, tilde_states: list[EigenState]):
    """Per-state weights and eigenvalue ratios of the resolution-of-identity sum.

    The FCS at ``ell`` is ``sum(w * ratio**ell)``.
    """
    l, r = state.left, state.right
    norm = l @ r
    weights, ratios = [], []
    for st in tilde_states:
        weights.append(complex((l @ st.right) * (st.left @ r) / (norm * (st.left @ st.right))))
        ratios.append(complex(state.lambda0 / st.lambda0))
    return np.array(weights), np.array(ratios)


def vacuum(cfg: ChainConfig) -> np.ndarray:
    v = np.zeros(cfg.dim, dtype=complex)
    v[0] = 1
    return v


def bethe_vector(roots, twist: Twist, rho1: complex, rho2: complex, cfg: ChainConfig) -> np.ndarray:
    """B-bar(u_1)...B-bar(u_n)|0>."""
    v = vacuum(cfg)
    for u in roots:
        v = modified_entry("B", u, twist, rho1, rho2, cfg) @ v
    return v


def dual_bethe_vector(roots, twist: Twist, rho1: complex, rho2: complex, cfg: ChainConfig) -> np.ndarray:
    """<0|C-bar(u_1)...C-bar(u_n), as a row vector."""
    v = vacuum(cfg)
    for u in roots:
        v = v @ modified_entry("C", u, twist, rho1, rho2, cfg)
    return v


def vacuum_factor(roots, twist: Twist, rho1: complex, rho2: complex, cfg: ChainConfig) -> complex:
    """<0|B-bar(u_1)...B-bar(u_n)|0>."""
    return complex(bethe_vector(roots, twist, rho1, rho2, cfg)[0])
