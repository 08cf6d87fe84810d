import numpy as np
import pytest
from scipy.integrate import quad

from exthess.barriers import (
    AsymptoticTarget,
    DomainSpec,
    boundary_barrier,
    choose_delta,
    choose_K,
    integrate_radial_w,
    integrate_sub_w,
    integrate_super_w,
    mu,
)
from exthess.errors import StructuralError
from exthess.implicit import ImplicitSolves, constant_rhs, power_rhs
from exthess.symfun import HessianRoot


@pytest.fixture(scope="module")
def ma():
    return HessianRoot(3, 3)


@pytest.fixture(scope="module")
def flat_ctx(ma):
    # g = 1: the sub-profile ODE has the closed form w^3 = 1 + C s^(-3/2)
    return ImplicitSolves(ma, np.ones(3), constant_rhs(s0=2.0))


def closed_form_w(s, xi2=2.0, s0=2.0):
    return (1.0 + (xi2**3 - 1.0) * (s0 / np.asarray(s)) ** 1.5) ** (1.0 / 3.0)


def test_sub_profile_matches_closed_form(flat_ctx):
    prof = integrate_sub_w(flat_ctx, 2.0, 2000.0)
    s = np.geomspace(2.0, 2000.0, 400)
    rel = np.abs(prof.w_at(s) / closed_form_w(s) - 1.0)
    assert rel.max() <= 1e-8


def test_sub_profile_equilibrium(flat_ctx):
    prof = integrate_sub_w(flat_ctx, 1.0, 500.0)
    assert np.abs(prof.w - 1.0).max() <= 1e-9
    # u is then the running integral of 1
    assert prof.u_at(500.0) == pytest.approx(498.0, abs=1e-7)


def test_sub_profile_rejects_slope_below_envelope(flat_ctx):
    with pytest.raises(ValueError):
        integrate_sub_w(flat_ctx, 0.5, 100.0)


def test_profile_span_guard(flat_ctx):
    prof = integrate_sub_w(flat_ctx, 2.0, 100.0)
    with pytest.raises(Exception):
        prof.w_at(1000.0)
    shifted = prof.shifted(5.0)
    assert shifted.u_at(50.0) == pytest.approx(prof.u_at(50.0) + 5.0)
    assert shifted.w_at(50.0) == pytest.approx(prof.w_at(50.0))


def test_super_profile_monotone_below_envelope(ma):
    rhs = power_rhs(0.5, 3.0, 2.0, np.ones(3), sign=-1)
    ctx = ImplicitSolves(ma, np.ones(3), rhs)
    eta2 = 0.5 * ctx.W0(2.0)
    prof = integrate_super_w(ctx, eta2, 0.5, 1e5)
    assert np.all(np.diff(prof.w) >= -1e-9)
    assert prof.w_at(1e5) <= ctx.W0(1e5) + 1e-8
    assert prof.w[0] == pytest.approx(eta2)


def test_radial_profile_closed_form(ma):
    rhs = power_rhs(0.5, 3.0, 2.0, np.ones(3), sign=-1)
    ctx = ImplicitSolves(ma, np.ones(3), rhs)
    at = ctx.a_tilde()
    # hbar = inf_g / w^2 for MA, so w^3 = 1 + C (1/s)^(3/2) in sigma units
    prof = integrate_radial_w(ctx, 2.0, 1e4)
    assert prof.s_start == pytest.approx(0.5 * at)
    s = np.geomspace(prof.s_start, 1e4, 200)
    expect = (1.0 + (2.0**3 - 1.0) * (prof.s_start / s) ** 1.5) ** (1.0 / 3.0)
    rel = np.abs(prof.w_at(s) / expect - 1.0)
    assert rel.max() <= 1e-7


def test_mu_matches_quadrature_oracle(flat_ctx):
    prof = integrate_sub_w(flat_ctx, 2.0, 1e6)
    got = mu(prof, 4.0)
    oracle, err = quad(lambda s: closed_form_w(s) - 1.0, 4.0, np.inf,
                       limit=200)
    assert err < 1e-7
    assert got.value == pytest.approx(oracle - 4.0, abs=1e-5)
    assert got.exponent == pytest.approx(-1.5, abs=0.02)


def test_mu_tail_shrinks_with_span(flat_ctx):
    short = mu(integrate_sub_w(flat_ctx, 2.0, 1e4), 4.0)
    long = mu(integrate_sub_w(flat_ctx, 2.0, 1e6), 4.0)
    assert long.tail_bound < short.tail_bound
    assert long.value == pytest.approx(short.value, abs=1e-3)


def test_choose_delta_and_K(ma):
    assert choose_delta(ma, np.ones(3)) == pytest.approx(0.5, abs=1e-12)
    assert choose_K(ma, np.ones(3), 1.0) == pytest.approx(1.0, abs=1e-6)
    # degree-one homogeneity puts the threshold at K = sup g
    assert choose_K(ma, np.ones(3), 1.2) == pytest.approx(1.2, abs=1e-5)
    aniso = (1.0 / (1.0 * 1.5 * 2.5)) ** (1.0 / 3.0) * np.array([1.0, 1.5, 2.5])
    with pytest.raises(StructuralError):
        choose_delta(ma, aniso)  # alpha <= 1 on this ray


def test_asymptotic_target_validation(ma):
    t = AsymptoticTarget(np.ones(3), c=2.0)
    rep = t.validate(ma)
    assert rep.in_calA and rep.in_scriptA
    with pytest.raises(ValueError):
        AsymptoticTarget(np.array([1.0, -1.0, 2.0]))


def test_domain_spec_guards():
    with pytest.raises(ValueError):
        DomainSpec([0.5, 1.0, 1.0])
    with pytest.raises(ValueError):
        DomainSpec([1.0, 1.0, 1.0], n_mesh=100)
    with pytest.raises(ValueError):
        DomainSpec([1.0, 1.0, 1.0], center=[0.3, 0.0, 0.0])
    dom = DomainSpec([1.0, 1.2, 1.5])
    assert dom.mesh.shape[0] == 2048
    # mesh points sit on the ellipsoid and normals are outward unit vectors
    assert np.allclose(np.sum((dom.mesh / dom.semi_axes) ** 2, axis=1), 1.0)
    assert np.allclose(np.linalg.norm(dom.normals, axis=1), 1.0)
    assert np.all(np.sum(dom.mesh * dom.normals, axis=1) > 0.0)
    with pytest.raises(ValueError):
        dom.check_normalization(np.ones(3), 1.0)  # boundary leaves D_{s0=1}


def test_boundary_barrier_touches_from_below():
    dom = DomainSpec([1.0, 1.0, 1.0], phi=0.25)
    a = np.ones(3)
    x_bar, t = boundary_barrier(dom, a, K=1.0, index=17)
    assert t > 0.0
    diff = dom.mesh - x_bar
    quad_vals = 0.5 * np.sum(a * diff**2, axis=1)
    omega = 0.25 + quad_vals - quad_vals[17]
    # touches phi at its own mesh point, stays below elsewhere on the boundary
    assert omega[17] == pytest.approx(0.25, abs=1e-12)
    assert np.all(omega <= 0.25 + 1e-12)
