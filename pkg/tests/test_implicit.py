import numpy as np
import pytest

from exthess.errors import DomainError, StructuralError
from exthess.implicit import ImplicitSolves, RightHandSide, constant_rhs, power_rhs
from exthess.symfun import HessianQuotientRoot, HessianRoot


@pytest.fixture
def ma():
    return HessianRoot(3, 3)


@pytest.fixture
def benchmark_rhs():
    return power_rhs(0.5, 3.0, 2.0, np.ones(3), sign=-1)


def test_rhs_validation():
    with pytest.raises(ValueError):
        power_rhs(0.5, 2.0, 2.0, np.ones(3))  # beta must exceed 2
    with pytest.raises(ValueError):
        power_rhs(0.5, 3.0, 1.0, np.ones(3))  # s0 must exceed 1
    with pytest.raises(ValueError):
        power_rhs(-0.1, 3.0, 2.0, np.ones(3))
    with pytest.raises(ValueError):
        constant_rhs(value=2.0)


def test_power_rhs_envelopes(benchmark_rhs):
    rhs = benchmark_rhs
    assert rhs.sup_g == pytest.approx(1.0)
    assert rhs.inf_g == pytest.approx(1.0 - 0.5 * 2.0 ** -1.5)
    x = np.array([2.0, 0.0, 0.0])  # s = 2
    assert rhs.evaluate(x) == pytest.approx(rhs.gunder(2.0))
    assert rhs.validate_bracket(np.ones(3)) >= -1e-12


def test_constant_rhs_collapses():
    rhs = constant_rhs()
    assert rhs.inf_g == rhs.sup_g == 1.0
    assert rhs.evaluate(np.array([5.0, 1.0, 0.0])) == 1.0
    assert rhs.gbar(10.0) == pytest.approx(1.0)


def test_diagonal_envelopes_monge_ampere_closed_form(ma, benchmark_rhs):
    # f(w a) = w for A = I, so the envelope solves are the envelopes themselves
    ctx = ImplicitSolves(ma, np.ones(3), benchmark_rhs)
    for s in (2.0, 3.7, 25.0, 4000.0):
        assert ctx.w0(s) == pytest.approx(benchmark_rhs.gbar(s), rel=1e-11)
        assert ctx.W0(s) == pytest.approx(benchmark_rhs.gunder(s), rel=1e-11)


def test_first_coordinate_solves_monge_ampere_closed_form(ma, benchmark_rhs):
    # (h w^2)^(1/3) = g  =>  h = g^3 / w^2
    ctx = ImplicitSolves(ma, np.ones(3), benchmark_rhs)
    for s in (2.0, 9.0, 310.0):
        w0 = ctx.w0(s)
        for w in (w0, 1.4 * w0, 2.2):
            expect = float(benchmark_rhs.gbar(s)) ** 3 / w**2
            assert ctx.h(s, w) == pytest.approx(expect, rel=1e-10)
        W0 = ctx.W0(s)
        for w in (0.3, 0.5 * W0, W0):
            expect = float(benchmark_rhs.gunder(s)) ** 3 / w**2
            assert ctx.H(s, w) == pytest.approx(expect, rel=1e-10)


def test_h_rejects_w_below_envelope(ma, benchmark_rhs):
    ctx = ImplicitSolves(ma, np.ones(3), benchmark_rhs)
    with pytest.raises(DomainError):
        ctx.h(2.0, 0.5)  # below w0(2) ~ 1
    with pytest.raises(DomainError):
        ctx.H(2.0, 1.5)  # above W0(2) < 1
    with pytest.raises(DomainError):
        ctx.w0(1.0)  # below s0


def test_radial_quantities_monge_ampere(ma, benchmark_rhs):
    ctx = ImplicitSolves(ma, np.ones(3), benchmark_rhs)
    inf_g = benchmark_rhs.inf_g
    assert ctx.a_tilde() == pytest.approx(inf_g, rel=1e-12)
    # f(hbar, at w, at w) = inf_g  =>  hbar = inf_g^3 / (at w)^2 = inf_g / w^2
    for w in (1.0, 1.7, 3.0):
        assert ctx.hbar(w) == pytest.approx(inf_g / w**2, rel=1e-10)


def test_memoization_is_consistent(ma, benchmark_rhs):
    ctx = ImplicitSolves(ma, np.ones(3), benchmark_rhs)
    first = ctx.h(5.0, 1.2)
    fresh = ImplicitSolves(ma, np.ones(3), benchmark_rhs).h(5.0, 1.2)
    assert first == pytest.approx(fresh, rel=1e-13)


def test_shift_budget_failure_for_quotient():
    # (sigma_3/sigma_1)^(1/2) stays bounded in the first coordinate, so the
    # lower-envelope solve cannot bracket once w is small
    op = HessianQuotientRoot(3, 1, 3)
    a = np.full(3, 3.0 ** 0.5)  # f(a,a,a) = (a^2/3)^(1/2) = 1
    rhs = power_rhs(0.1, 3.0, 2.0, a, sign=-1)
    ctx = ImplicitSolves(op, a, rhs)
    with pytest.raises(StructuralError):
        ctx.H(2.0, 0.2)


def test_rhs_dataclass_guard():
    with pytest.raises(ValueError):
        RightHandSide(evaluate=lambda x: 1.0, C0=0.0, beta=3.0, s0=2.0,
                      inf_g=-1.0, sup_g=1.0)
