import numpy as np
import pytest

from twistfcs import bethe, oracle
from twistfcs.bethe import ADMISSIBLE, SPURIOUS, RapiditySet
from twistfcs.errors import TQInconsistentError
from twistfcs.numkernel import CPoly
from twistfcs.oracle import ChainConfig
from twistfcs.rational import bethe_function, lambda_eigenvalue
from twistfcs.twist import CountingSpec, MabaTwist, Twist, solve_rho_link, tilde_twist

SX, SY = Twist.pauli("x"), Twist.pauli("y")


def _mt(twist, branch=0):
    return solve_rho_link(twist, twist)[branch].side(twist)


def _lines(twist, L, c=1.0):
    cfg = ChainConfig(L, c)
    mt = _mt(twist)
    return cfg, mt, bethe.enumerate_spectrum(twist, mt, cfg)


def test_calibrated_convention_is_plain_shift():
    conv = bethe.calibrated_convention()
    assert conv == bethe.TQConvention(shift=1, alternating=False, inhom_power=True)


def test_l2_sigma_x_every_line_has_monic_q():
    cfg = ChainConfig(2)
    mt = _mt(SX)
    for st in oracle.transfer_eigen_data(SX, cfg):
        q, resid = bethe.tq_solve(st.lambda_poly, mt, cfg)
        assert q.degree == 2 and q.coeff(2) == 1
        assert resid <= 1e-10


def test_tq_residual_detects_corruption():
    cfg = ChainConfig(2)
    mt = _mt(SX)
    st = oracle.transfer_eigen_data(SX, cfg)[1]
    bad = st.lambda_poly.coeffs.copy()
    bad[1] += 1e-3
    _, resid = bethe.tq_solve(CPoly(bad), mt, cfg, tol=1.0)
    assert resid > 1e-5
    with pytest.raises(TQInconsistentError):
        bethe.tq_solve(CPoly(bad), mt, cfg)


def test_roots_of_q():
    rs = bethe.roots_of_Q(CPoly([-0.25, 0, 1]))
    assert np.allclose(sorted(z.real for z in rs.roots), [-0.5, 0.5])
    q = CPoly([2, -1, 3, 1])
    roots = bethe.roots_of_Q(q).roots
    assert np.allclose(CPoly.from_roots(roots).coeffs, q.coeffs, atol=1e-8)
    assert any(abs(z - w.conjugate()) < 1e-10 for z in roots for w in roots if abs(z.imag) > 1e-6)


def test_single_site_bethe_function():
    """One site, K = sigma^x, rho = (2, -1/2): Y(u) = 3/2 u^2 + 4 u + 2."""
    cfg = ChainConfig(1)
    mt = MabaTwist(SX, 2.0, -0.5)
    for u in (0.3, -1.7 + 0.2j, 2j):
        assert abs(bethe_function(u, [], mt, cfg) - (1.5 * u * u + 4 * u + 2)) < 1e-13
    for root in (-2 / 3, -2):
        assert abs(bethe_function(root, [], mt, cfg)) < 1e-13
    # the same roots follow from the one-site eigenvector condition rho1 (u+1) + rho2 u = +-1
    for root, sign in ((-2 / 3, 1), (-2, -1)):
        assert abs(2.0 * (root + 1) - 0.5 * root - sign) < 1e-13


@pytest.mark.parametrize("twist", [SX, SY], ids=["x", "y"])
@pytest.mark.parametrize("L", [2, 4])
def test_spectrum_admissible_and_consistent(twist, L):
    cfg, mt, lines = _lines(twist, L)
    assert len(lines) == 2 ** L
    assert bethe.admissible_count(lines) == 2 ** L
    u0 = np.linalg.eigvals(oracle.transfer_matrix(twist, 0, cfg))
    for ln in lines:
        assert ln.rapidities.residual <= 1e-10
        assert ln.tq_residual <= 1e-8
        lam0 = lambda_eigenvalue(0, ln.rapidities.roots, mt, cfg)
        assert np.min(np.abs(u0 - lam0)) < 1e-9 * max(1, abs(lam0))


def test_trivial_beta_tilde_spectrum_matches():
    cfg = ChainConfig(2)
    kt = tilde_twist(SX, CountingSpec((0, 0, 0)))
    rho = solve_rho_link(SX, kt)[0]
    a = bethe.enumerate_spectrum(SX, rho.side(SX), cfg)
    b = bethe.enumerate_spectrum(kt, rho.side(kt, True), cfg)
    for x, y in zip(a, b):
        assert np.allclose(x.q_poly.coeffs, y.q_poly.coeffs)
        assert np.allclose(sorted(x.rapidities.roots, key=abs), sorted(y.rapidities.roots, key=abs), atol=1e-9)


def test_newton_fixed_point_and_recovery(rng):
    cfg, mt, lines = _lines(SX, 4)
    for ln in lines[:4]:
        rs = ln.rapidities
        again = bethe.newton_refine(RapiditySet(rs.roots), mt, cfg)
        assert np.max(np.abs(np.array(again.roots) - np.array(rs.roots))) <= 1e-13 * rs.scale
        kick = rng.normal(size=len(rs)) + 1j * rng.normal(size=len(rs))
        start = np.array(rs.roots) + 1e-4 * kick / np.abs(kick)
        back = bethe.refine(RapiditySet(tuple(start)), mt, cfg)
        assert np.max(np.abs(np.array(back.roots) - np.array(rs.roots))) <= 1e-11 * rs.scale


def test_newton_quadratic_tail():
    cfg, mt, lines = _lines(SY, 4)
    rs = lines[5].rapidities
    start = RapiditySet(tuple(np.array(rs.roots) * (1 + 1e-3)))
    hist = [h for h in bethe.newton_refine(start, mt, cfg).history if h > 1e-14]
    assert len(hist) >= 3
    # terminal phase: r_{k+1} <= C r_k^2 with a modest C
    ratios = [hist[k + 1] / hist[k] ** 2 for k in range(len(hist) - 1) if hist[k] < 1e-3]
    assert ratios and max(ratios) < 1e4


def test_scaling_invariance():
    c = 1.7 - 0.4j
    _, mt, lines = _lines(SX, 2)
    cfg1, cfgc = ChainConfig(2, 1.0), ChainConfig(2, c)
    for ln in lines:
        r1 = bethe.bethe_residual(ln.rapidities.roots, mt, cfg1)
        rc = bethe.bethe_residual([c * z for z in ln.rapidities.roots], mt, cfgc)
        assert np.allclose(r1, rc, atol=1e-12)


def test_classify_spurious_cases():
    cfg = ChainConfig(2)
    mt = _mt(SX)
    z = 0.3 + 0.2j
    assert bethe.classify(RapiditySet((z, z)), mt, cfg).cls == SPURIOUS
    # u = 0 kills the d-terms; a partner at -c kills the remaining h-product
    assert bethe.classify(RapiditySet((0.0, -1.0)), mt, cfg).cls == SPURIOUS


def test_complex_c_spectrum():
    cfg, mt, lines = _lines(Twist(0.3, -0.2j, 1.1, 0.8 + 0.1j), 4, c=0.9 + 0.3j)
    assert all(ln.rapidities.cls == ADMISSIBLE for ln in lines)


@pytest.mark.parametrize("L", [6])
def test_near_string_lines_become_admissible(L):
    cfg, mt, lines = _lines(SX, L)
    assert bethe.admissible_count(lines) == 2 ** L
    assert any(ln.rapidities.precise is not None for ln in lines)


def test_record_round_trip_fields():
    cfg, mt, lines = _lines(SX, 2)
    rec = lines[0].record()
    assert set(rec) == {"eigen_index", "lambda_poly", "q_poly", "roots", "class", "residual", "tq_residual"}
    assert len(rec["roots"]) == 2 and rec["class"] == ADMISSIBLE


def test_real_spectrum_roots_pair_up():
    cfg, mt, lines = _lines(SX, 4)
    checked = 0
    for ln in lines:
        if np.max(np.abs(ln.lambda_poly.coeffs.imag)) > 1e-12 or abs(np.imag(mt.rho1)) + abs(np.imag(mt.rho2)) > 0:
            continue
        roots = np.array(ln.rapidities.roots)
        for z in roots:
            assert np.min(np.abs(roots - np.conj(z))) < 1e-8 * ln.rapidities.scale
        checked += 1
    assert checked > 0


def test_tq_and_bethe_zero_tests_agree():
    cfg, mt, lines = _lines(SY, 4)
    for ln in lines:
        assert (ln.tq_residual <= 1e-8) == (ln.rapidities.residual <= 1e-10)
