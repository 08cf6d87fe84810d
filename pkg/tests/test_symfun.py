import numpy as np
import pytest

from exthess.errors import ConeViolationError, StructuralError
from exthess.symfun import (
    ConeSpec,
    CustomOperator,
    HessianQuotientRoot,
    HessianRoot,
    LambdaVec,
    SpecialLagrangian,
    alpha_of,
    check_structure,
    diagonal_root,
    elementary_symmetric,
    operator_from_descriptor,
    sigma_k,
    solve_a_star,
    validate_A,
)


def test_elementary_symmetric_known_values():
    e = elementary_symmetric([1.0, 2.0, 3.0])
    assert np.allclose(e, [1.0, 6.0, 11.0, 6.0])
    assert sigma_k([1.0, 2.0, 3.0], 3) == pytest.approx(6.0)


def test_lambda_vec_requires_vector():
    with pytest.raises(ValueError):
        LambdaVec([1.0])
    with pytest.raises(ValueError):
        LambdaVec(np.eye(2))


def test_hessian_root_values_and_homogeneity():
    op = HessianRoot(3, 3)
    assert op.evaluate([1.0, 1.0, 1.0]) == pytest.approx(1.0)
    assert op.evaluate([1.0, 2.0, 3.0]) == pytest.approx(6.0 ** (1.0 / 3.0))
    # degree-one homogeneity
    lam = np.array([0.5, 1.1, 2.3])
    assert op.evaluate(4.0 * lam) == pytest.approx(4.0 * op.evaluate(lam))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    ops = [HessianRoot(2, 3), HessianRoot(3, 3), HessianQuotientRoot(3, 1, 3),
           SpecialLagrangian(1.2 * np.pi, 3)]
    for op in ops:
        for _ in range(20):
            lam = rng.uniform(0.3, 3.0, size=3)
            grad = op.gradient(lam)
            h = 1e-6
            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                fd = (op.evaluate(lam + e) - op.evaluate(lam - e)) / (2 * h)
                assert grad[i] == pytest.approx(fd, abs=1e-6, rel=1e-6)


def test_garding_cone_membership():
    op = HessianRoot(2, 3)
    assert op.cone.contains([-0.1, 1.0, 1.0])  # sigma_1, sigma_2 > 0
    assert not op.cone.contains([-2.0, 0.5, 0.5])
    with pytest.raises(ConeViolationError):
        op.evaluate([-2.0, 0.5, 0.5])


def test_positive_orthant_cone_for_special_lagrangian():
    op = SpecialLagrangian(1.1 * np.pi, 3)
    assert op.cone.contains([0.1, 0.2, 0.3])
    assert not op.cone.contains([-0.1, 1.0, 1.0])


def test_cone_batch_agrees_with_scalar():
    cone = ConeSpec("garding", dimension=3, k=2)
    rng = np.random.default_rng(11)
    lams = rng.uniform(-1.0, 2.0, size=(200, 3))
    batch = cone.contains_batch(lams)
    for row, flag in zip(lams, batch):
        assert cone.contains(row) == bool(flag)


def test_diagonal_root_monge_ampere():
    op = HessianRoot(3, 3)
    assert diagonal_root(op, 8.0) == pytest.approx(8.0, rel=1e-12)
    assert solve_a_star(op) == pytest.approx(1.0, rel=1e-12)


def test_alpha_of_identity_multiple():
    # the diagonal ray gives alpha = n/2 for homogeneous kinds
    for n in (3, 4, 5):
        op = HessianRoot(n, n)
        a_star = solve_a_star(op)
        assert alpha_of(op, np.full(n, a_star)) == pytest.approx(n / 2.0,
                                                                 abs=1e-12)


def test_validate_A_levels():
    op = HessianRoot(3, 3)
    rep = validate_A(op, [1.0, 1.0, 1.0])
    assert rep.in_calA and rep.in_scriptA
    assert rep.alpha == pytest.approx(1.5, abs=1e-12)
    off = validate_A(op, [2.0, 2.0, 2.0])
    assert not off.in_calA
    with pytest.raises(ValueError):
        validate_A(op, [0.0, 1.0, 1.0])


def test_alpha_anisotropic_below_one():
    op = HessianRoot(3, 3)
    ray = np.array([1.0, 1.5, 2.5])
    # normalize the ray onto the unit level set of sigma_3^(1/3)
    t = (1.0 / np.prod(ray)) ** (1.0 / 3.0)
    a = t * ray
    assert op.evaluate(np.sort(a)) == pytest.approx(1.0, rel=1e-12)
    # heavy anisotropy pushes the decay exponent below 1
    assert alpha_of(op, a) < 1.0


def test_custom_operator_roundtrip():
    base = HessianRoot(2, 3)
    op = CustomOperator(base._eval_inside, base._grad_inside, base.cone,
                        homogeneous=True)
    lam = np.array([0.5, 1.0, 2.0])
    assert op.evaluate(lam) == pytest.approx(base.evaluate(lam))
    assert np.allclose(op.gradient(lam), base.gradient(lam))


def test_operator_from_descriptor():
    op = operator_from_descriptor({"kind": "hessian_root", "k": 3, "n": 3})
    assert isinstance(op, HessianRoot)
    op = operator_from_descriptor({"kind": "hessian_quotient_root",
                                   "k": 3, "l": 1, "n": 3})
    assert isinstance(op, HessianQuotientRoot)
    with pytest.raises(ValueError):
        operator_from_descriptor({"kind": "unknown"})


def test_check_structure_budget_guard():
    with pytest.raises(ValueError):
        check_structure(HessianRoot(3, 3), budget=10)


def test_check_structure_hessian_root_passes():
    rep = check_structure(HessianRoot(3, 3))
    assert rep.all_required_pass()
    d = rep.to_dict()
    assert d["monotone"]["passed"] and d["r_shift"]["passed"]
