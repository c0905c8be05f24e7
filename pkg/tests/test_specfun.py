import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kquantum import specfun
from oracles import accel_ld_binomial, hamiltonian_element, laguerre_series, recoil_series


@pytest.mark.parametrize(
    "n, k, x, expected",
    [(0, 3, 0.04, 1.0), (1, 1, 0.04, 1.96), (2, 0, 1.0, -0.5)],
)
def test_laguerre_examples(n, k, x, expected):
    assert specfun.laguerre(n, k, x) == pytest.approx(expected, abs=1e-15)


@given(n=st.integers(0, 40), k=st.integers(0, 6), x=st.floats(0, 25))
@settings(max_examples=200, deadline=None)
def test_laguerre_matches_explicit_sum(n, k, x):
    ref = laguerre_series(n, k, x)
    scale = max(1.0, math.comb(n + k, n) * math.exp(x / 2))
    assert specfun.laguerre(n, k, x) == pytest.approx(ref, abs=1e-12 * scale)


def test_laguerre_table_agrees_with_scalar():
    table = specfun.laguerre_table(50, 3, 0.25)
    assert table == pytest.approx([specfun.laguerre(n, 3, 0.25) for n in range(50)], rel=1e-14)


@pytest.mark.parametrize("args", [(-1, 0, 1.0), (1, -1, 1.0), (1, 1, -0.1), (1, 1, float("nan"))])
def test_laguerre_rejects_bad_input(args):
    with pytest.raises(ValueError):
        specfun.laguerre(*args)


def test_sqrt_factorial_ratio_both_branches():
    for n in (0, 5, 64, 65, 200, 5000):
        for k in (1, 3, 5):
            exact = math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(n + k + 1)))
            assert specfun.sqrt_factorial_ratio(n, k) == pytest.approx(exact, rel=1e-13)


def test_recoil_factor_examples():
    # frozen from the mpmath series oracle
    assert specfun.recoil_factor(0, 1, 0.2) == pytest.approx(0.9801986733067553, rel=1e-13)
    assert specfun.recoil_factor(1, 2, 0.5) == pytest.approx(0.4044777470179396, rel=1e-13)
    for k in range(1, 6):
        assert specfun.recoil_factor(7, k, 0.0) == 1.0 / math.factorial(k)


def test_recoil_factor_guard():
    assert specfun.recoil_factor_guarded(-1, 3, 0.2) == 0.0
    assert specfun.recoil_factor_guarded(2, 3, 0.2) == specfun.recoil_factor(2, 3, 0.2)
    with pytest.raises(ValueError):
        specfun.recoil_factor(-1, 3, 0.2)


def test_recoil_factor_no_overflow_at_large_n():
    val = specfun.recoil_factor(400, 3, 0.2)
    assert math.isfinite(val)
    assert abs(val) < 1.0


@pytest.mark.parametrize("eta", [0.1, 0.2, 0.5, 1.0])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_recoil_factor_matches_series(k, eta):
    for n in (0, 1, 7, 30):
        assert specfun.recoil_factor(n, k, eta) == pytest.approx(recoil_series(n, k, eta), rel=1e-10)


def test_coupling_magnitude_examples():
    assert specfun.coupling_magnitude(-1, 3, 0.2) == 0.0
    assert specfun.coupling_magnitude(0, 1, 0.2) == pytest.approx(0.19603973466135107, rel=1e-13)
    assert specfun.coupling_magnitude(0, 3, 0.2) == pytest.approx(0.0032013154615394358, rel=1e-13)


@pytest.mark.parametrize("n, k, eta", [(0, 3, 0.2), (2, 2, 0.3), (4, 1, 0.7)])
def test_coupling_magnitude_matches_dense_matrix_element(n, k, eta):
    ref = abs(hamiltonian_element(n, k, eta))
    assert specfun.coupling_magnitude(n, k, eta) == pytest.approx(ref, rel=1e-10)


def test_accel_examples():
    assert specfun.accel_coefficient(0, 3, 0.0) == 0.5
    for n in range(20):
        assert specfun.accel_coefficient(n, 1, 0.0) == 1.0
    assert specfun.accel_coefficient(2, 2, 0.0) == 5.0
    assert specfun.accel_coefficient(-3, 2, 0.4) == 0.0


def test_accel_small_eta_approaches_ld():
    for k in range(1, 5):
        for n in range(10):
            assert specfun.accel_coefficient(n, k, 1e-6) == pytest.approx(float(accel_ld_binomial(n, k)), rel=1e-9)


def test_accel_matches_recoil_definition():
    k, eta = 3, 0.4
    for n in range(12):
        up = math.factorial(n + k) / math.factorial(n) * recoil_series(n, k, eta) ** 2
        down = math.factorial(n) / math.factorial(n - k) * recoil_series(n - k, k, eta) ** 2 if n >= k else 0.0
        assert specfun.accel_coefficient(n, k, eta) == pytest.approx(k * (up - down), rel=1e-10, abs=1e-14)


def test_accel_table_matches_scalar():
    for k, eta in [(3, 0.2), (2, 0.5), (1, 1.0)]:
        table = specfun.accel_table(60, k, eta)
        ref = [specfun.accel_coefficient(n, k, eta) for n in range(60)]
        assert table == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_telescoping_sum_of_coupling_differences():
    for k, eta in [(1, 0.3), (3, 0.2), (4, 0.5)]:
        g2 = lambda n: specfun.coupling_magnitude(n, k, eta) ** 2  # noqa: E731
        N = 40
        lhs = sum(g2(n) - g2(n - k) for n in range(N + 1))
        rhs = sum(g2(n) for n in range(N - k + 1, N + 1))
        assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize(
    "k, a",
    [
        (1, [Fraction(1)]),
        (2, [Fraction(1), Fraction(2)]),
        (3, [Fraction(1, 2), Fraction(3, 4), Fraction(3, 4)]),
    ],
)
def test_ld_poly_coeffs_examples(k, a):
    assert list(specfun.ld_poly_coeffs(k).a) == a


def test_ld_poly_coeffs_b_for_k3():
    assert list(specfun.ld_poly_coeffs(3).b) == [Fraction(1), Fraction(3, 4), Fraction(1, 2)]


@pytest.mark.parametrize("k", range(1, 13))
def test_ld_poly_coeffs_invariants_and_exactness(k):
    pc = specfun.ld_poly_coeffs(k)
    assert len(pc.a) == k and len(pc.b) == k
    assert all(c >= 0 for c in pc.a)
    assert pc.a[0] == Fraction(1, math.factorial(k - 1))
    assert pc.a[-1] != 0 and pc.b[0] != 0 and pc.b[-1] != 0
    assert all(pc.b[l - 1] == 2 * pc.a[l - 1] / l for l in range(1, k + 1))
    for n in range(2 * k + 1):
        assert pc(n) == accel_ld_binomial(n, k)


def test_velocity_squared_polynomial():
    pc = specfun.ld_poly_coeffs(3)
    assert pc.velocity_squared(Fraction(2)) == 1 * 2 + Fraction(3, 4) * 4 + Fraction(1, 2) * 8


def test_bound_constant_and_asymptotic_bound():
    # mpmath: exp(0.02) / (pi * 0.2**7)
    assert specfun.bound_constant(3, 0.2) == pytest.approx(25370.325970974003, rel=1e-13)
    assert specfun.asymptotic_bound(1, 3, 0.2) == pytest.approx(25370.325970974003, rel=1e-13)
    assert specfun.asymptotic_bound(36, 2, 0.5) / specfun.asymptotic_bound(9, 2, 0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        specfun.asymptotic_bound(0, 3, 0.2)
    with pytest.raises(ValueError):
        specfun.bound_constant(3, 0.0)


def test_coupling_table_signs_and_ld():
    table = specfun.coupling_table(20, 3, 0.2)
    for n in range(17):
        assert abs(table[n]) * 0.2**3 == pytest.approx(specfun.coupling_magnitude(n, 3, 0.2), rel=1e-13)
    ld = specfun.coupling_table(20, 2, 0.0, lamb_dicke=True)
    assert ld[3] == pytest.approx(math.sqrt(5 * 4) / 2)


def test_exact_accel_crosses_zero():
    vals = specfun.accel_table(400, 3, 0.2)
    assert vals.min() < 0 < vals.max()


def test_accel_envelope_holds_at_small_eta():
    n = np.arange(50, 5001)
    for k in range(1, 6):
        vals = specfun.accel_table(5001, k, 0.2)[50:]
        assert np.all(vals <= specfun.asymptotic_bound(n, k, 0.2))
