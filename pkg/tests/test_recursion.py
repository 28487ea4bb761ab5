import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from potts_tisgm.model import BoundaryLaw, PottsParams, theta_critical
from potts_tisgm.recursion import (phi, phi_root_bounds, psi_at_thetac, recursion_map,
                                   scalar_map_fm, solve_phi, solve_quadratic_k2,
                                   vector_residual)

SQ2 = math.sqrt(2)


def companion_positive_roots(m, q, k, theta):
    """Positive real roots of phi_m from companion-matrix eigenvalues."""
    coeffs = [m] + [-(theta - 1)] * (k - 1) + [q - m]
    r = np.roots(coeffs)
    real = r[np.abs(r.imag) < 1e-7].real
    return np.sort(real[real > 0])


# --- recursion map / residual ------------------------------------------------

@pytest.mark.parametrize("q,theta", [(2, 3.0), (3, 1.5), (5, 20.0)])
def test_recursion_map_free_point(q, theta):
    out = recursion_map(BoundaryLaw((1.0,) * (q - 1)), PottsParams(q, 2, theta))
    assert np.allclose(out.h, 0.0, atol=1e-15)
    assert vector_residual(np.ones(q - 1), PottsParams(q, 3, theta)) == pytest.approx(0, abs=1e-15)


def test_recursion_map_at_nontrivial_fixed_point():
    p = PottsParams(3, 2, 5.0)
    z = (2 + SQ2) ** 2
    h = np.array([math.log(z), 0.0])
    out = recursion_map(h, p)
    assert np.all(np.isfinite(out.h))
    assert np.allclose(p.k * out.h, h, atol=1e-12)


def test_recursion_map_rejects_nonfinite():
    with pytest.raises(ValueError):
        recursion_map([float("inf"), 0.0], PottsParams(3, 2, 5.0))


def test_vector_residual_examples():
    p = PottsParams(3, 2, 5.0)
    assert vector_residual(BoundaryLaw(((2 + SQ2) ** 2, 1.0)), p) <= 1e-10
    assert vector_residual(BoundaryLaw((2.0, 1.0)), p) > 0.1


# --- scalar map --------------------------------------------------------------

@given(st.integers(2, 9), st.integers(2, 6), st.floats(1.01, 50), st.data())
def test_fm_has_fixed_point_one(q, k, theta, data):
    m = data.draw(st.integers(1, q - 1))
    assert scalar_map_fm(1.0, m, PottsParams(q, k, theta)) == pytest.approx(1.0, rel=1e-14)


def test_fm_nontrivial_fixed_point():
    z = (2 + SQ2) ** 2
    assert scalar_map_fm(z, 1, PottsParams(3, 2, 5.0)) == pytest.approx(z, rel=1e-13)


def test_fm_rejects_bad_m():
    with pytest.raises(ValueError):
        scalar_map_fm(1.0, 3, PottsParams(3, 2, 5.0))


@settings(max_examples=200)
@given(st.integers(2, 9), st.integers(2, 6), st.floats(1.01, 50), st.floats(-3, 3), st.data())
def test_fm_reciprocal_identity(q, k, theta, logz, data):
    m = data.draw(st.integers(1, q - 1))
    p, z = PottsParams(q, k, theta), 10.0 ** logz
    assert scalar_map_fm(z, m, p) * scalar_map_fm(1 / z, q - m, p) == pytest.approx(1.0, rel=1e-10)


@settings(max_examples=200)
@given(st.integers(2, 9), st.integers(2, 6), st.floats(1.01, 50), st.floats(-2, 2), st.data())
def test_phi_reflection(q, k, theta, logx, data):
    m = data.draw(st.integers(1, q - 1))
    p, x = PottsParams(q, k, theta), 10.0 ** logx
    lhs, rhs = phi(x, m, p), x ** k * phi(1 / x, q - m, p)
    scale = m * x ** k + (theta - 1) * sum(x ** i for i in range(1, k)) + q
    assert abs(lhs - rhs) <= 1e-10 * scale


# --- phi ---------------------------------------------------------------------

@pytest.mark.parametrize("q,k", [(3, 2), (4, 3), (7, 5)])
def test_phi_vanishes_at_one_on_thetac(q, k):
    p = PottsParams(q, k, theta_critical(q, k))
    for m in range(1, q):
        assert phi(1.0, m, p) == pytest.approx(0.0, abs=1e-12)


def test_phi_examples():
    assert phi(2 + SQ2, 1, PottsParams(3, 2, 5.0)) == pytest.approx(0.0, abs=1e-10)
    xs = np.geomspace(1e-4, 1e4, 2001)
    assert np.all(phi(xs, 1, PottsParams(3, 2, 3.0)) > 0)


# --- root isolation ----------------------------------------------------------

def test_solve_phi_two_roots():
    rs = solve_phi(1, PottsParams(3, 2, 5.0))
    assert rs.multiplicities == [1, 1]
    assert rs.values == pytest.approx([2 - SQ2, 2 + SQ2], rel=1e-12)
    assert sum(rs.values) == pytest.approx(4.0)          # theta - 1
    assert rs.values[0] * rs.values[1] == pytest.approx(2.0)  # q - m


def test_solve_phi_double_root_at_tangency():
    rs = solve_phi(1, PottsParams(3, 2, 1 + 2 * SQ2))
    assert rs.roots == ((pytest.approx(SQ2, rel=1e-10), 2),)


def test_solve_phi_no_root():
    assert len(solve_phi(1, PottsParams(3, 2, 3.0))) == 0


def test_solve_phi_at_theta_q_plus_one():
    assert solve_phi(1, PottsParams(3, 2, 4.0)).values == pytest.approx([1.0, 2.0], rel=1e-12)
    assert solve_phi(2, PottsParams(3, 2, 4.0)).values == pytest.approx([0.5, 1.0], rel=1e-12)


def test_solve_phi_snaps_trivial_root_only_at_thetac():
    assert 1.0 in solve_phi(1, PottsParams(3, 2, "4")).values
    near = solve_phi(1, PottsParams(3, 2, 4.0 + 1e-8)).values
    assert 1.0 not in near
    assert near[0] == pytest.approx(1.0, abs=1e-7)


def test_quadratic_examples():
    rs = solve_quadratic_k2(1, 3, 5.0)
    assert rs.values == pytest.approx([2 - SQ2, 2 + SQ2], rel=1e-14)
    assert solve_quadratic_k2(2, 4, 5.0).roots == ((1.0, 2),)
    assert solve_quadratic_k2(2, 3, 4.0).values == pytest.approx([0.5, 1.0], rel=1e-15)
    assert len(solve_quadratic_k2(1, 3, 3.0)) == 0


def test_quadratic_stable_for_large_theta():
    rs = solve_quadratic_k2(1, 3, 1e9)
    small, big = rs.values
    assert small * big == pytest.approx(2.0, rel=1e-14)
    assert small == pytest.approx(2.0 / (1e9 - 1), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 10), st.floats(1.05, 60), st.data())
def test_k2_solver_agrees_with_quadratic(q, theta, data):
    m = data.draw(st.integers(1, q - 1))
    a = solve_phi(m, PottsParams(q, 2, theta))
    b = solve_quadratic_k2(m, q, theta)
    assert a.multiplicities == b.multiplicities
    assert a.values == pytest.approx(b.values, rel=1e-10)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 8), st.integers(2, 6), st.floats(1.05, 40), st.data())
def test_solve_phi_against_companion_roots(q, k, theta, data):
    m = data.draw(st.integers(1, q - 1))
    p = PottsParams(q, k, theta)
    rs = solve_phi(m, p)
    assert rs.total_multiplicity <= 2
    assert rs.values == sorted(rs.values)
    expected = companion_positive_roots(m, q, k, theta)
    if rs.total_multiplicity == 2 and len(rs) == 2:
        assert rs.values == pytest.approx(list(expected), rel=1e-7)
    elif len(rs) == 0:
        # companion eigenvalues may show a spurious near-double root only
        # extremely close to tangency
        assert len(expected) == 0 or np.ptp(expected) < 1e-6
    for x in rs.values:
        scale = m * x ** k + (theta - 1) * sum(x ** i for i in range(1, k)) + q
        assert abs(phi(x, m, p)) <= 1e-10 * scale
        lower, upper = phi_root_bounds(m, p)
        assert lower <= x <= upper


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(2, 5), st.floats(1.05, 40), st.data())
def test_roots_embed_as_vector_fixed_points(q, k, theta, data):
    m = data.draw(st.integers(1, q - 1))
    p = PottsParams(q, k, theta)
    for x in solve_phi(m, p).values:
        # spins 1..m carry z*, spin q carries the gauge
        z = np.ones(q - 1)
        z[:m] = x ** k
        assert vector_residual(z, p) <= 1e-9 * max(1.0, x ** k)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 9), st.integers(2, 5), st.floats(1.05, 40))
def test_roots_for_different_m_are_disjoint(q, k, theta):
    p = PottsParams(q, k, theta)
    if abs(theta - theta_critical(q, k)) < 1e-6:
        return
    seen = []
    for m in range(1, q):
        for x in solve_phi(m, p).values:
            assert all(abs(x - y) > 1e-9 * max(x, y) for y in seen)
        seen.extend(solve_phi(m, p).values)


def test_one_is_not_a_root_off_thetac():
    for theta in (3.5, 3.99, 4.01, 6.0):
        for m in (1, 2):
            assert 1.0 not in solve_phi(m, PottsParams(3, 2, theta)).values


# --- psi ---------------------------------------------------------------------

def test_psi_examples():
    assert psi_at_thetac(1.0, 2, PottsParams(4, 2, 2.0)) == 0.0
    assert psi_at_thetac(1.0, 1, PottsParams(3, 2, 2.0)) == -1.0
    assert psi_at_thetac(2.0, 1, PottsParams(3, 2, 2.0)) == 0.0


@pytest.mark.parametrize("q,k", [(3, 2), (4, 3), (6, 4), (5, 5)])
def test_psi_is_phi_over_x_minus_one(q, k):
    p = PottsParams(q, k, theta_critical(q, k))
    xs = np.array([0.3, 0.9, 1.7, 4.0])
    for m in range(1, q):
        assert np.allclose(psi_at_thetac(xs, m, p) * (xs - 1), phi(xs, m, p), rtol=1e-12, atol=1e-12)
        assert (abs(psi_at_thetac(1.0, m, p)) < 1e-12) == (q == 2 * m)
