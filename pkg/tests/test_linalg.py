import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exthess.linalg import (
    check_symmetric,
    eigen_ascending,
    hessian_generalized,
    weyl_check,
)


def random_symmetric(rng, n, scale=1.0):
    m = rng.normal(size=(n, n)) * scale
    return 0.5 * (m + m.T)


def test_check_symmetric_rejects_bad_input():
    with pytest.raises(ValueError):
        check_symmetric(np.ones((2, 3)))
    with pytest.raises(ValueError):
        check_symmetric([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        check_symmetric([[np.nan, 0.0], [0.0, 1.0]])


def test_eigen_ascending_matches_lapack():
    rng = np.random.default_rng(0)
    for n in (2, 3, 4, 6, 8):
        for _ in range(30):
            m = random_symmetric(rng, n, scale=rng.uniform(0.1, 10.0))
            ours = eigen_ascending(m).values
            ref = np.linalg.eigvalsh(m)
            assert np.all(np.diff(ours) >= -1e-12)
            assert np.allclose(ours, ref, atol=1e-10 * max(1.0, abs(ref).max()))


def test_eigen_ascending_zero_and_diagonal():
    assert np.allclose(eigen_ascending(np.zeros((3, 3))).values, 0.0)
    d = np.diag([3.0, -1.0, 2.0])
    assert np.allclose(eigen_ascending(d).values, [-1.0, 2.0, 3.0])


def test_hessian_generalized_closed_form_identity():
    # for A = I the spectrum is {u'} (n-1 times) and u' + |x|^2 u''
    x = np.array([0.6, -0.2, 1.1])
    u1, u2 = 1.3, -0.4
    H = hessian_generalized(np.ones(3), x, u1, u2)
    lam = np.sort(np.linalg.eigvalsh(H))
    expect = np.sort([u1, u1, u1 + np.dot(x, x) * u2])
    assert np.allclose(lam, expect, atol=1e-12)


def test_hessian_generalized_matches_finite_differences():
    a = np.array([1.0, 1.5, 2.5])

    def u(s):
        return s + 3.0 * s ** -0.5

    def field(x):
        return u(0.5 * np.dot(a * x, x))

    x0 = np.array([0.9, -1.2, 0.7])
    s0 = 0.5 * np.dot(a * x0, x0)
    u1 = 1.0 - 1.5 * s0 ** -1.5
    u2 = 2.25 * s0 ** -2.5
    H = hessian_generalized(a, x0, u1, u2)
    h = 1e-5
    for i in range(3):
        for j in range(3):
            ei = np.zeros(3); ei[i] = h
            ej = np.zeros(3); ej[j] = h
            fd = (field(x0 + ei + ej) - field(x0 + ei - ej)
                  - field(x0 - ei + ej) + field(x0 - ei - ej)) / (4 * h * h)
            assert H[i, j] == pytest.approx(fd, abs=5e-5)


def test_weyl_inequalities_random_pairs():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = rng.integers(2, 7)
        A1 = random_symmetric(rng, n, scale=10.0 ** rng.uniform(-1, 1))
        A2 = random_symmetric(rng, n, scale=10.0 ** rng.uniform(-1, 1))
        assert weyl_check(A1, A2)


def test_weyl_detects_false_claims():
    # corrupting the inequality via mismatched dimensions must raise
    with pytest.raises(ValueError):
        weyl_check(np.eye(3), np.eye(4))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4),
       st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4))
def test_weyl_property_diagonal_pairs(d1, d2):
    assert weyl_check(np.diag(d1), np.diag(d2))


def test_generalized_hessian_eigenvalue_sandwich():
    # rank-one interlacing: for u'' >= 0, a_i u' <= lam_i <= a_{i+1} u'
    # (top eigenvalue bounded by a_n u' + 2 a_n s u''); mirrored for u'' <= 0
    rng = np.random.default_rng(7)
    for _ in range(2000):
        n = rng.integers(2, 6)
        a = np.sort(rng.uniform(0.2, 3.0, size=n))
        x = rng.normal(size=n) * rng.uniform(0.5, 4.0)
        u1 = rng.uniform(0.1, 3.0)
        u2 = rng.uniform(-1.0, 1.0)
        s = 0.5 * np.dot(a * x, x)
        lam = eigen_ascending(hessian_generalized(a, x, u1, u2)).values
        tol = 1e-9 * max(1.0, np.abs(lam).max())
        if u2 >= 0.0:
            assert np.all(lam >= a * u1 - tol)
            assert np.all(lam[:-1] <= a[1:] * u1 + tol)
            assert lam[-1] <= a[-1] * u1 + 2.0 * a[-1] * s * u2 + tol
        else:
            assert np.all(lam <= a * u1 + tol)
            assert np.all(lam[1:] >= a[:-1] * u1 - tol)
            assert lam[0] >= a[0] * u1 + 2.0 * a[-1] * s * u2 - tol
