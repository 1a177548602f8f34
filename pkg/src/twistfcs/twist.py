"""2x2 twist algebra: the conjugated twist, the BDA factorisation and linked rho-parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinkingError, NonGenericError
from .numkernel import mat_exp_pauli, sinhc

# rho2 = CALIBRATION_RATIO * rho1 picks the two rho points used when the
# counting field vanishes and the linking relations leave a free parameter.
CALIBRATION_RATIO = -0.5
CONSTRAINT_TOL = 1e-12


@dataclass(frozen=True)
class Twist:
    """Twist matrix ``[[k1, kp], [km, k2]]``."""

    k1: complex
    k2: complex
    kp: complex
    km: complex

    def __post_init__(self):
        for name in ("k1", "k2", "kp", "km"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.gamma == 0:
            raise NonGenericError("twist with vanishing determinant gamma")

    @classmethod
    def from_matrix(cls, m) -> "Twist":
        m = np.asarray(m, dtype=complex)
        return cls(k1=m[0, 0], k2=m[1, 1], kp=m[0, 1], km=m[1, 0])

    @classmethod
    def pauli(cls, axis: str) -> "Twist":
        return {
            "x": cls(0, 0, 1, 1),
            "y": cls(0, 0, -1j, 1j),
            "z": cls(1, -1, 0, 0),
            "identity": cls(1, 1, 0, 0),
        }[axis]

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.k1, self.kp], [self.km, self.k2]], dtype=complex)

    @property
    def gamma(self) -> complex:
        return self.k1 * self.k2 - self.kp * self.km

    @property
    def trace(self) -> complex:
        return self.k1 + self.k2

    @property
    def is_generic(self) -> bool:
        """Both off-diagonal entries nonzero, as the modified Bethe ansatz needs."""
        return self.kp != 0 and self.km != 0

    def as_list(self):
        return [[z.real, z.imag] for z in (self.k1, self.k2, self.kp, self.km)]


@dataclass(frozen=True)
class CountingSpec:
    """Counting field ``beta`` and the number ``ell`` of leading sites it acts on."""

    beta: tuple
    ell: int = 0

    def __post_init__(self):
        b = tuple(complex(x) for x in self.beta)
        if len(b) != 3:
            raise ValueError("beta needs exactly three components")
        object.__setattr__(self, "beta", b)
        if self.ell < 0:
            raise ValueError("ell must be non-negative")

    @property
    def r(self) -> complex:
        bx, by, bz = self.beta
        return complex(np.sqrt(bx * bx + by * by + bz * bz))

    @property
    def is_zero(self) -> bool:
        return all(b == 0 for b in self.beta)

    def with_ell(self, ell: int) -> "CountingSpec":
        return CountingSpec(self.beta, ell)


@dataclass(frozen=True)
class RhoData:
    """Linked parameters for the pair (K, K~); tilde entries carry a ``t`` suffix."""

    rho1: complex
    rho2: complex
    rho1t: complex
    rho2t: complex
    mu: complex
    mut: complex
    branch_id: int = 0

    def side(self, twist: Twist, tilde: bool = False) -> "MabaTwist":
        """Pair ``twist`` with the K~ parameters when ``tilde``, else with the K ones."""
        if tilde:
            return MabaTwist(twist, self.rho1t, self.rho2t)
        return MabaTwist(twist, self.rho1, self.rho2)


@dataclass(frozen=True)
class MabaTwist:
    """A twist together with one admissible point (rho1, rho2) of its constraint."""

    twist: Twist
    rho1: complex
    rho2: complex

    @property
    def mu(self) -> complex:
        return mu_factor(self.twist, self.rho1, self.rho2)

    @property
    def coefficients(self):
        """(k1 - rho1, k2 - rho2, rho1 + rho2)."""
        return self.twist.k1 - self.rho1, self.twist.k2 - self.rho2, self.rho1 + self.rho2

    @property
    def constraint_residual(self) -> complex:
        return constraint_residual(self.twist, self.rho1, self.rho2)


def constraint_residual(twist: Twist, rho1: complex, rho2: complex) -> complex:
    return rho1 * rho2 - (twist.k2 * rho1 + twist.k1 * rho2) + twist.kp * twist.km


def mu_factor(twist: Twist, rho1: complex, rho2: complex) -> complex:
    denom = 1 - rho1 * rho2 / (twist.kp * twist.km)
    if denom == 0:
        raise NonGenericError("mu has a pole: rho1*rho2 == kp*km")
    return 1 / denom


def tilde_twist(twist: Twist, spec: CountingSpec) -> Twist:
    """K~ = cosh(r) K - sinh(r)/r K.Q(beta), i.e. K exp(-Q(beta))."""
    bx, by, bz = spec.beta
    k1, k2, kp, km = twist.k1, twist.k2, twist.kp, twist.km
    qt = np.array(
        [
            [kp * bx + 1j * kp * by + k1 * bz, k1 * bx - 1j * k1 * by - kp * bz],
            [k2 * bx + 1j * k2 * by + km * bz, km * bx - 1j * km * by - k2 * bz],
        ]
    )
    r = spec.r
    return Twist.from_matrix(np.cosh(r) * twist.matrix - sinhc(r) * qt)


def tilde_twist_product(twist: Twist, spec: CountingSpec) -> np.ndarray:
    """Reference route for ``tilde_twist``: the plain 2x2 product."""
    return twist.matrix @ mat_exp_pauli(spec.beta, -1)


def _branch(twist, twist_t, rho1, rho2, scale, branch_id):
    rho1t, rho2t = rho1 * scale, rho2 * scale
    try:
        mu = mu_factor(twist, rho1, rho2)
        mut = mu_factor(twist_t, rho1t, rho2t)
    except NonGenericError:
        return None
    if not (np.isfinite(mu) and np.isfinite(mut)) or mu == 0 or mut == 0:
        return None
    return RhoData(complex(rho1), complex(rho2), complex(rho1t), complex(rho2t), complex(mu), complex(mut), branch_id)


def _rho2_from_rho1(twist: Twist, rho1: complex) -> complex:
    # rho2 (rho1 - k1) = k2 rho1 - kp km
    denom = rho1 - twist.k1
    if denom == 0:
        raise LinkingError("constraint cannot fix rho2 at rho1 == k1")
    return (twist.k2 * rho1 - twist.kp * twist.km) / denom


def solve_rho_link(twist: Twist, twist_t: Twist) -> list[RhoData]:
    """All rho branches satisfying both quadratic constraints and the linking relations.

    Linking ``rho_i~ = rho_i * km~/km`` turns the two constraints into one
    linear relation plus one quadratic in ``rho1``. When the linear relation is
    empty (K~ == K) the calibration line ``rho2 = CALIBRATION_RATIO * rho1`` is used.
    """
    if not (twist.is_generic and twist_t.is_generic):
        raise NonGenericError("both twists need nonzero off-diagonal entries")
    s = twist_t.km / twist.km
    # s^2 (k2 r1 + k1 r2 - kp km) - s (k2~ r1 + k1~ r2) + kp~ km~ = 0
    alpha = s * s * twist.k2 - s * twist_t.k2
    beta = s * s * twist.k1 - s * twist_t.k1
    delta = s * s * twist.kp * twist.km - twist_t.kp * twist_t.km
    size = max(abs(alpha), abs(beta), abs(delta), abs(s * s * twist.kp * twist.km))
    tiny = 1e-13 * size

    candidates: list[complex | tuple] = []
    if abs(beta) > tiny:
        # rho2 = (delta - alpha rho1)/beta substituted into the K constraint
        a2 = -alpha
        a1 = delta - twist.k2 * beta + twist.k1 * alpha
        a0 = -twist.k1 * delta + twist.kp * twist.km * beta
        for r1 in _quadratic_roots(a2, a1, a0):
            candidates.append((r1, (delta - alpha * r1) / beta))
    elif abs(alpha) > tiny:
        r1 = delta / alpha
        candidates.append((r1, _rho2_from_rho1(twist, r1)))
    elif abs(delta) <= tiny:
        # identical twists up to scale: one free parameter, fixed by calibration line
        t = CALIBRATION_RATIO
        for r1 in _quadratic_roots(t, -(twist.k2 + twist.k1 * t), twist.kp * twist.km):
            candidates.append((r1, t * r1))
    else:
        raise LinkingError(
            "linking constraints are unsolvable for this (K, K~) pair; "
            "perturb the counting field beta (e.g. add a small off-axis component)"
        )

    candidates.sort(key=lambda p: (round(p[0].real, 12), round(p[0].imag, 12)))
    out = []
    for r1, r2 in candidates:
        b = _branch(twist, twist_t, r1, r2, s, len(out))
        if b is not None:
            out.append(b)
    if not out:
        raise LinkingError("every rho branch sits on a pole of mu")
    return out


def _quadratic_roots(a2: complex, a1: complex, a0: complex) -> list[complex]:
    size = max(abs(a2), abs(a1), abs(a0))
    if abs(a2) <= 1e-14 * size:
        if abs(a1) <= 1e-14 * size:
            raise LinkingError("linking quadratic is identically degenerate")
        return [complex(-a0 / a1)]
    disc = np.sqrt(complex(a1 * a1 - 4 * a2 * a0))
    # numerically stable pair
    q = -0.5 * (a1 + disc) if (a1.conjugate() * disc).real >= 0 else -0.5 * (a1 - disc)
    if q == 0:
        return [0j, 0j]
    return [complex(q / a2), complex(a0 / q)]


def decompose_bda(twist: Twist, rho1: complex, rho2: complex):
    """Matrices (B, D, A) with K = B D A."""
    if not twist.is_generic:
        raise NonGenericError("factorisation needs kp != 0 and km != 0")
    mu = mu_factor(twist, rho1, rho2)
    sq = np.sqrt(mu)
    a = sq * np.array([[1, rho2 / twist.km], [rho1 / twist.kp, 1]], dtype=complex)
    b = sq * np.array([[1, rho1 / twist.km], [rho2 / twist.kp, 1]], dtype=complex)
    d = np.diag([twist.k1 - rho1, twist.k2 - rho2]).astype(complex)
    return b, d, a


def check_rho(twist: Twist, twist_t: Twist, rho: RhoData) -> dict:
    """Residuals of both constraints and both linking relations."""
    return {
        "constraint_K": abs(constraint_residual(twist, rho.rho1, rho.rho2)),
        "constraint_Kt": abs(constraint_residual(twist_t, rho.rho1t, rho.rho2t)),
        "link_1": abs(rho.rho1t * twist.km - rho.rho1 * twist_t.km),
        "link_2": abs(rho.rho2t * twist.km - rho.rho2 * twist_t.km),
    }
