import numpy as np
import pytest

from twistfcs.errors import NonGenericError
from twistfcs.numkernel import mat_exp_pauli, pauli_combination
from twistfcs.twist import (
    CountingSpec,
    Twist,
    check_rho,
    constraint_residual,
    decompose_bda,
    mu_factor,
    solve_rho_link,
    tilde_twist,
    tilde_twist_product,
)

SX = Twist.pauli("x")


def test_tilde_twist_trivial_and_diagonal():
    assert tilde_twist(SX, CountingSpec((0, 0, 0))) == SX
    b = 0.8
    t = tilde_twist(SX, CountingSpec((0, 0, b)))
    assert np.allclose([t.kp, t.km, t.k1, t.k2], [np.exp(b), np.exp(-b), 0, 0])


def test_tilde_twist_matches_product(rng):
    for _ in range(10):
        k = Twist.from_matrix(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        beta = tuple(rng.normal(size=3) + 1j * rng.normal(size=3))
        spec = CountingSpec(beta)
        assert np.allclose(tilde_twist(k, spec).matrix, k.matrix @ mat_exp_pauli(beta, -1), atol=1e-12)
        assert np.allclose(tilde_twist_product(k, spec), tilde_twist(k, spec).matrix, atol=1e-12)


def test_sigma_x_constraint_is_product():
    for r1 in (1.0, 2.0, -0.3 + 0.4j):
        assert abs(constraint_residual(SX, r1, -1 / r1)) < 1e-15


@pytest.mark.parametrize("rho, dmat", [((1, -1), (-1, 1)), ((2, -0.5), (-2, 0.5))])
def test_bda_examples(rho, dmat):
    assert mu_factor(SX, *rho) == pytest.approx(0.5)
    b, d, a = decompose_bda(SX, *rho)
    assert np.allclose(d, np.diag(dmat))
    assert np.allclose(b @ d @ a, SX.matrix)


def test_bda_cyclicity(rng):
    b, d, a = decompose_bda(SX, 2, -0.5)
    for _ in range(5):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert abs(np.trace(d @ a @ m @ b) - np.trace(SX.matrix @ m)) < 1e-12


def test_trivial_beta_uses_calibration_line():
    branches = solve_rho_link(SX, SX)
    assert len(branches) == 2
    for rho in branches:
        assert rho.rho1t == rho.rho1 and rho.rho2t == rho.rho2
        assert rho.rho2 == pytest.approx(-0.5 * rho.rho1)
        assert abs(rho.rho1 * rho.rho2 + 1) < 1e-14


@pytest.mark.parametrize("axis", ["x", "y"])
@pytest.mark.parametrize("beta", [(1, 0, 1), (1, 1, 1), (1, -1, 2), (0.3j, 0.2, -0.7)])
def test_linked_branches_satisfy_everything(axis, beta):
    k = Twist.pauli(axis)
    kt = tilde_twist(k, CountingSpec(beta))
    branches = solve_rho_link(k, kt)
    assert len(branches) == 2
    for rho in branches:
        res = check_rho(k, kt, rho)
        assert max(abs(v) for v in res.values()) < 1e-12


def test_diagonal_twist_rejected():
    with pytest.raises(NonGenericError):
        solve_rho_link(Twist.pauli("z"), Twist.pauli("z"))
    with pytest.raises(NonGenericError):
        Twist(1, 1, 1, 1)


def test_pauli_combination_real_beta_hermitian():
    q = pauli_combination((0.3, -1.1, 0.4))
    assert np.allclose(q, q.conj().T)


def test_tilde_twist_keeps_determinant(rng):
    for _ in range(5):
        k = Twist.from_matrix(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        kt = tilde_twist(k, CountingSpec(tuple(rng.normal(size=3) + 1j * rng.normal(size=3))))
        assert abs(kt.gamma - k.gamma) <= 1e-12 * max(1, abs(k.gamma))


def test_square_root_branch_is_irrelevant():
    from twistfcs.numkernel import sinhc

    for r in (0.3 + 1.2j, 2.0, -0.7j, 1e-6):
        assert np.cosh(-r) == pytest.approx(np.cosh(r), rel=1e-14)
        assert sinhc(-r) == pytest.approx(sinhc(r), rel=1e-14)
