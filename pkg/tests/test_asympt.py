import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exthess.asympt import alpha_delta, detect_s_bar, fit_decay
from exthess.errors import AsymptoticsError
from exthess.symfun import HessianQuotientRoot, HessianRoot, alpha_of


def test_fit_decay_recovers_pure_power_laws():
    s = np.geomspace(2.0, 2e4, 600)
    for p in (-5.0, -3.2, -1.5, -0.9, -0.5):
        fit = fit_decay(s, 2.7 * s**p)
        assert fit.exponent == pytest.approx(p, abs=1e-3)
        assert not fit.log_correction
        assert fit.residual < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(-5.0, -0.5), st.floats(0.1, 50.0))
def test_fit_decay_power_law_property(p, amp):
    s = np.geomspace(3.0, 3e3, 200)
    fit = fit_decay(s, amp * s**p)
    assert abs(fit.exponent - p) <= 1e-3


def test_fit_decay_log_coincidence():
    s = np.geomspace(10.0, 1e12, 1200)
    vals = 4.0 * s**-1.5 * np.log(s)
    fit = fit_decay(s, vals, alpha=1.5, beta=3.0)
    assert fit.log_correction
    assert fit.exponent == pytest.approx(-1.5, abs=0.01)
    # without the expected rates the plain fit absorbs the log factor
    plain = fit_decay(s, vals)
    assert not plain.log_correction


def test_fit_decay_guards():
    with pytest.raises(ValueError):
        fit_decay([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(AsymptoticsError):
        fit_decay(np.geomspace(1, 100, 50), np.linspace(1, -1, 50))


def test_alpha_delta_reduces_to_alpha():
    ops = [HessianRoot(3, 3), HessianRoot(2, 3), HessianQuotientRoot(3, 1, 3)]
    for op in ops:
        from exthess.symfun import solve_a_star

        a = np.full(3, solve_a_star(op))
        assert alpha_delta(op, a, 0.0) == pytest.approx(alpha_of(op, a),
                                                        abs=1e-14)


def test_alpha_delta_monge_ampere_example():
    op = HessianRoot(3, 3)
    a = np.ones(3)
    # a.grad f = 1 and d1 f = 1/3, so delta = 1 gives exponent exactly 1
    assert alpha_delta(op, a, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert alpha_delta(op, a, 0.5) == pytest.approx(1.2, abs=1e-14)


def test_detect_s_bar_requires_three_dimensions():
    op = HessianRoot(4, 4)

    class Stub:
        s_start, s_end = 2.0, 100.0

        def w_at(self, s):
            return 1.0

        def wprime_at(self, s):
            return 0.0

    with pytest.raises(AsymptoticsError):
        detect_s_bar(op, np.ones(4), 0.5, Stub())


def test_detect_s_bar_rejects_non_quadratic_tail():
    op = HessianRoot(3, 3)

    class Stub:
        s_start, s_end = 2.0, 100.0

        def w_at(self, s):
            return 2.0  # tail slope stays far from 1

        def wprime_at(self, s):
            return 0.0

    with pytest.raises(AsymptoticsError):
        detect_s_bar(op, np.ones(3), 0.5, Stub())
