"""Dense complex linear algebra and polynomial helpers.

Matrices are plain ``numpy`` complex arrays. Everything here is a pure function
of its inputs; sizes stay below ``MAX_DIM`` (a chain of 10 sites).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NonGenericError, SingularMatrixError

MAX_DIM = 2 ** 10
DEGENERACY_TOL = 1e-9
ORDER_DECIMALS = 10
POLISH_STEPS = 40
POLISH_TOL = 1e-13


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"square matrix required, got {m.shape}")


def kron(a, b) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > MAX_DIM:
        raise DimensionError(f"kron result {rows}x{cols} exceeds MAX_DIM={MAX_DIM}")
    return np.kron(a, b)


def determinant(m) -> complex:
    m = as_cmatrix(m)
    _require_square(m)
    if m.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(m))


def solve_linear(m, rhs, rcond: float = 1e-13) -> np.ndarray:
    m = as_cmatrix(m)
    _require_square(m)
    rhs = np.asarray(rhs, dtype=complex)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size and s[-1] <= rcond * s[0]:
        raise SingularMatrixError(f"rank deficient system (sigma_min/sigma_max={s[-1] / s[0]:.3e})")
    return np.linalg.solve(m, rhs)


def least_squares(m, rhs, rcond: float = 1e-13):
    """Least-squares solution and the residual norm ``||m x - rhs||``."""
    m = as_cmatrix(m)
    rhs = np.asarray(rhs, dtype=complex)
    x, _, rank, s = np.linalg.lstsq(m, rhs, rcond=None)
    if s.size and (rank < min(m.shape) or s[-1] <= rcond * s[0]):
        raise SingularMatrixError(f"rank deficient least-squares system (rank {rank} of {min(m.shape)})")
    residual = float(np.linalg.norm(m @ x - rhs))
    return x, residual


@dataclass(frozen=True)
class EigenSystem:
    """Right/left eigenvectors stored as columns, with bilinear pairing.

    ``left[:, i] @ right[:, j] == delta_ij`` (no complex conjugation).
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def pairing(self) -> np.ndarray:
        return self.left.T @ self.right

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left.T


def _order(values: np.ndarray) -> np.ndarray:
    keys = [(round(v.real, ORDER_DECIMALS), round(v.imag, ORDER_DECIMALS)) for v in values]
    return np.array(sorted(range(len(values)), key=keys.__getitem__), dtype=int)


def eig_biorthogonal(m, degeneracy_tol: float = DEGENERACY_TOL) -> EigenSystem:
    m = as_cmatrix(m)
    _require_square(m)
    w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    # scipy returns vl with vl^H m = w vl^H; the bilinear dual is its conjugate
    vl = vl.conj()
    scale = max(1.0, float(np.max(np.abs(w))))
    if w.size > 1:
        gaps = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < degeneracy_tol * scale:
            raise NonGenericError(f"non-generic spectrum: eigenvalue gap {gaps.min():.3e}")
    pair = np.einsum("ij,ij->j", vl, vr)
    norms = np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
    if np.any(np.abs(pair) < 1e-12 * norms):
        raise NonGenericError("non-generic spectrum: singular left/right pairing")
    vl = vl / pair
    order = _order(w)
    return EigenSystem(w[order], vr[:, order], vl[:, order])


@dataclass(frozen=True)
class CPoly:
    """Complex polynomial, coefficients in ascending degree."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("polynomial needs a non-empty 1-d coefficient list")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else 0

    @property
    def is_monic(self) -> bool:
        return self.coeffs[self.degree] == 1

    def coeff(self, j: int) -> complex:
        return complex(self.coeffs[j]) if j < self.coeffs.size else 0j

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, self.coeffs.size), dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    def derivative(self) -> "CPoly":
        if self.coeffs.size == 1:
            return CPoly([0j])
        return CPoly(np.polynomial.polynomial.polyder(self.coeffs))

    def trimmed(self, rtol: float = 1e-12) -> "CPoly":
        c = self.coeffs
        big = np.max(np.abs(c))
        if big == 0:
            return CPoly([0j])
        keep = np.nonzero(np.abs(c) > rtol * big)[0]
        return CPoly(c[: keep[-1] + 1])

    def to_list(self):
        return [[float(z.real), float(z.imag)] for z in self.coeffs]

    @classmethod
    def from_roots(cls, roots) -> "CPoly":
        return cls(np.polynomial.polynomial.polyfromroots(np.asarray(roots, dtype=complex)))


def poly_from_samples(nodes, values, rtol: float = 1e-12) -> CPoly:
    nodes = np.asarray(nodes, dtype=complex)
    values = np.asarray(values, dtype=complex)
    if nodes.shape != values.shape or nodes.ndim != 1:
        raise DimensionError("nodes and values must be 1-d arrays of equal length")
    diffs = np.abs(nodes[:, None] - nodes[None, :])
    np.fill_diagonal(diffs, np.inf)
    if nodes.size > 1 and diffs.min() == 0:
        raise DimensionError("interpolation nodes must be distinct")
    vander = np.vander(nodes, nodes.size, increasing=True)
    return CPoly(solve_linear(vander, values, rcond=1e-15)).trimmed(rtol)


def poly_roots(p: CPoly) -> np.ndarray:
    """All roots of ``p`` from the companion matrix, then Newton-polished."""
    p = p.trimmed(0.0)
    if p.degree == 0:
        if p.coeffs[0] == 0:
            raise ValueError("zero polynomial has no well-defined roots")
        return np.zeros(0, dtype=complex)
    coeffs = p.coeffs[: p.degree + 1]
    roots = np.roots(coeffs[::-1]).astype(complex)
    dp = np.polynomial.polynomial.polyder(coeffs)
    stop = POLISH_TOL * np.max(np.abs(coeffs))
    pv = np.polynomial.polynomial.polyval
    for k, z in enumerate(roots):
        best, fbest = z, abs(pv(z, coeffs))
        for _ in range(POLISH_STEPS):
            if fbest <= stop:
                break
            d = pv(best, dp)
            if d == 0:
                break
            trial = best - pv(best, coeffs) / d
            ft = abs(pv(trial, coeffs))
            if not ft < fbest:
                break
            best, fbest = trial, ft
        roots[k] = best
    return roots[_order(roots)]


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_combination(beta) -> np.ndarray:
    bx, by, bz = (complex(b) for b in beta)
    return bx * _PAULI[0] + by * _PAULI[1] + bz * _PAULI[2]


def sinhc(r: complex) -> complex:
    """sinh(r)/r, with the series used near r = 0."""
    if abs(r) < 1e-4:
        r2 = r * r
        return 1 + r2 / 6 + r2 * r2 / 120
    return np.sinh(r) / r


def mat_exp_pauli(beta, sign: int = 1) -> np.ndarray:
    """exp(sign * Q) for Q = beta . sigma via cosh(r) I + sign sinh(r)/r Q."""
    bx, by, bz = (complex(b) for b in beta)
    r = np.sqrt(bx * bx + by * by + bz * bz)
    return np.cosh(r) * np.eye(2, dtype=complex) + sign * sinhc(r) * pauli_combination(beta)
