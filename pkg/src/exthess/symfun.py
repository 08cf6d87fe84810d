"""Symmetric operators f on eigenvalue vectors.

Implements the elementary-symmetric-function roots, Hessian quotient
roots and the arctan (special Lagrangian) operator together with their
analytic gradients, admissibility cones and numeric checkers for the
structure conditions a well-posed exterior problem needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeViolationError, StructuralError

__all__ = [
    "LambdaVec",
    "ConeSpec",
    "SymmetricOperator",
    "HessianRoot",
    "HessianQuotientRoot",
    "SpecialLagrangian",
    "CustomOperator",
    "StructureReport",
    "sigma_k",
    "elementary_symmetric",
    "solve_a_star",
    "diagonal_root",
    "alpha_of",
    "validate_A",
    "check_structure",
]


# ---------------------------------------------------------------------------
# basic eigenvalue-vector helpers


class LambdaVec:
    """An ascending vector of n >= 2 real eigenvalues."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("eigenvalue vector must be 1-D with length >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("eigenvalue vector must be finite")
        self.values = np.sort(arr)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __repr__(self):
        return f"LambdaVec({self.values.tolist()})"


def _as_array(lam) -> np.ndarray:
    if isinstance(lam, LambdaVec):
        return lam.values
    arr = np.asarray(lam, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D eigenvalue vector")
    return arr


def elementary_symmetric(lam) -> np.ndarray:
    """All elementary symmetric polynomials e_0..e_n of ``lam``.

    Computed by the stable coefficient recurrence for prod(1 + lam_i t),
    never by subset enumeration.
    """
    arr = _as_array(lam)
    e = np.zeros(arr.size + 1)
    e[0] = 1.0
    for x in arr:
        e[1 : arr.size + 1] = e[1 : arr.size + 1] + x * e[0 : arr.size]
    return e


def sigma_k(lam, k: int) -> float:
    """k-th elementary symmetric function of the eigenvalue vector."""
    arr = _as_array(lam)
    if not 1 <= k <= arr.size:
        raise ValueError(f"k={k} out of range for dimension {arr.size}")
    return float(elementary_symmetric(arr)[k])


def _elementary_symmetric_batch(lams: np.ndarray) -> np.ndarray:
    """e_0..e_n for each row of an (m, n) array; returns (m, n+1)."""
    m, n = lams.shape
    e = np.zeros((m, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        x = lams[:, i : i + 1]
        e[:, 1 : n + 1] = e[:, 1 : n + 1] + x * e[:, 0:n]
    return e


def _deleted_elementary(lam: np.ndarray, order: int) -> np.ndarray:
    """sigma_order of the tuple with the i-th entry deleted, for each i."""
    n = lam.size
    out = np.empty(n)
    for i in range(n):
        sub = np.delete(lam, i)
        out[i] = elementary_symmetric(sub)[order] if order <= n - 1 else 0.0
    return out


# ---------------------------------------------------------------------------
# admissibility cones


@dataclass(frozen=True)
class ConeSpec:
    """Admissibility cone: Garding cone of order k, or the positive orthant.

    ``kind`` is "garding" (with ``k``) or "positive"; Garding order n
    coincides with the positive orthant.
    """

    kind: str
    dimension: int
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("garding", "positive"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.kind == "garding" and not 1 <= self.k <= self.dimension:
            raise ValueError("Garding order must satisfy 1 <= k <= n")

    def margin(self, lam) -> float:
        """Minimum of the defining quantities; positive iff strictly inside."""
        arr = _as_array(lam)
        if arr.size != self.dimension:
            raise ValueError("dimension mismatch")
        if self.kind == "positive":
            return float(arr.min())
        e = elementary_symmetric(arr)
        return float(e[1 : self.k + 1].min())

    def contains(self, lam) -> bool:
        return self.margin(lam) > 0.0

    def first_violation(self, lam):
        """Index j of the first failing sigma_j (or eigenvalue index), or None."""
        arr = _as_array(lam)
        if self.kind == "positive":
            bad = np.nonzero(arr <= 0.0)[0]
            return int(bad[0]) + 1 if bad.size else None
        e = elementary_symmetric(arr)
        for j in range(1, self.k + 1):
            if e[j] <= 0.0:
                return j
        return None

    def contains_batch(self, lams: np.ndarray) -> np.ndarray:
        if self.kind == "positive":
            return np.all(lams > 0.0, axis=1)
        e = _elementary_symmetric_batch(lams)
        return np.all(e[:, 1 : self.k + 1] > 0.0, axis=1)


def cone_contains(cone: ConeSpec, lam):
    """Strict membership together with the worst defining margin."""
    margin = cone.margin(lam)
    return margin > 0.0, margin


# ---------------------------------------------------------------------------
# operators


class SymmetricOperator:
    """A smooth symmetric function f on an admissibility cone."""

    cone: ConeSpec
    dimension: int

    # -- mandatory interface -------------------------------------------------

    def _eval_inside(self, lam: np.ndarray) -> float:
        raise NotImplementedError

    def _grad_inside(self, lam: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def homogeneous_degree_one(self) -> bool:
        return False

    # -- shared behaviour ----------------------------------------------------

    def _require_inside(self, lam: np.ndarray):
        j = self.cone.first_violation(lam)
        if j is not None:
            raise ConeViolationError(
                f"eigenvalue vector {lam.tolist()} outside cone "
                f"(defining inequality {j} failed)",
                sigma_index=j,
            )

    def evaluate(self, lam) -> float:
        arr = _as_array(lam)
        self._require_inside(arr)
        return self._eval_inside(arr)

    def gradient(self, lam) -> np.ndarray:
        arr = _as_array(lam)
        self._require_inside(arr)
        return self._grad_inside(arr)

    def evaluate_batch(self, lams: np.ndarray) -> np.ndarray:
        """Row-wise evaluation; rows outside the cone yield NaN."""
        lams = np.asarray(lams, dtype=float)
        ok = self.cone.contains_batch(lams)
        out = np.full(lams.shape[0], np.nan)
        if np.any(ok):
            out[ok] = self._eval_batch_inside(lams[ok])
        return out

    def _eval_batch_inside(self, lams: np.ndarray) -> np.ndarray:
        return np.array([self._eval_inside(row) for row in lams])

    def diagonal_value(self, t: float) -> float:
        return self.evaluate(np.full(self.dimension, t))

    def describe(self) -> dict:
        raise NotImplementedError


class HessianRoot(SymmetricOperator):
    """sigma_k(lambda)^(1/k) on the Garding cone of order k."""

    def __init__(self, k: int, n: int):
        if not 1 <= k <= n:
            raise ValueError("need 1 <= k <= n")
        self.k = k
        self.dimension = n
        self.cone = ConeSpec("garding", n, k)

    homogeneous_degree_one = True

    def _eval_inside(self, lam):
        return float(elementary_symmetric(lam)[self.k]) ** (1.0 / self.k)

    def _eval_batch_inside(self, lams):
        e = _elementary_symmetric_batch(lams)
        return e[:, self.k] ** (1.0 / self.k)

    def _grad_inside(self, lam):
        sk = float(elementary_symmetric(lam)[self.k])
        partials = _deleted_elementary(lam, self.k - 1)
        return (1.0 / self.k) * sk ** (1.0 / self.k - 1.0) * partials

    def describe(self):
        return {"kind": "hessian_root", "k": self.k, "n": self.dimension}


class HessianQuotientRoot(SymmetricOperator):
    """(sigma_k / sigma_l)^(1/(k-l)) on the Garding cone of order k."""

    def __init__(self, k: int, l: int, n: int):
        if not 1 <= l < k <= n:
            raise ValueError("need 1 <= l < k <= n")
        self.k = k
        self.l = l
        self.dimension = n
        self.cone = ConeSpec("garding", n, k)

    homogeneous_degree_one = True

    def _eval_inside(self, lam):
        e = elementary_symmetric(lam)
        return float(e[self.k] / e[self.l]) ** (1.0 / (self.k - self.l))

    def _eval_batch_inside(self, lams):
        e = _elementary_symmetric_batch(lams)
        return (e[:, self.k] / e[:, self.l]) ** (1.0 / (self.k - self.l))

    def _grad_inside(self, lam):
        e = elementary_symmetric(lam)
        sk, sl = float(e[self.k]), float(e[self.l])
        dk = _deleted_elementary(lam, self.k - 1)
        dl = _deleted_elementary(lam, self.l - 1)
        value = (sk / sl) ** (1.0 / (self.k - self.l))
        return value / (self.k - self.l) * (dk / sk - dl / sl)

    def describe(self):
        return {
            "kind": "hessian_quotient_root",
            "k": self.k,
            "l": self.l,
            "n": self.dimension,
        }


class SpecialLagrangian(SymmetricOperator):
    """(1/Theta) * sum(arctan lambda_i) on the positive orthant.

    Requires Theta >= (n-1) pi/2 so that the boundary condition holds with
    unit normalization, and Theta < n pi/2 so that f can reach 1 on the
    diagonal ray.
    """

    def __init__(self, theta: float, n: int):
        lo, hi = (n - 1) * math.pi / 2.0, n * math.pi / 2.0
        if not lo <= theta < hi:
            raise ValueError(
                f"Theta must lie in [{lo:.6f}, {hi:.6f}) for dimension {n}"
            )
        self.theta = theta
        self.dimension = n
        self.cone = ConeSpec("positive", n)

    def _eval_inside(self, lam):
        return float(np.arctan(lam).sum()) / self.theta

    def _eval_batch_inside(self, lams):
        return np.arctan(lams).sum(axis=1) / self.theta

    def _grad_inside(self, lam):
        return 1.0 / (self.theta * (1.0 + lam * lam))

    def describe(self):
        return {"kind": "special_lagrangian", "theta": self.theta, "n": self.dimension}


class CustomOperator(SymmetricOperator):
    """User-supplied f with its own gradient and cone."""

    def __init__(self, func, grad, cone: ConeSpec, homogeneous=False):
        self._func = func
        self._grad = grad
        self.cone = cone
        self.dimension = cone.dimension
        self._homogeneous = bool(homogeneous)

    @property
    def homogeneous_degree_one(self):
        return self._homogeneous

    def _eval_inside(self, lam):
        return float(self._func(lam))

    def _grad_inside(self, lam):
        return np.asarray(self._grad(lam), dtype=float)

    def describe(self):
        return {"kind": "custom", "n": self.dimension}


# ---------------------------------------------------------------------------
# normalization and decay exponent


def diagonal_root(op: SymmetricOperator, target: float, t_hint: float = 1.0) -> float:
    """The unique t > 0 with f(t, ..., t) = target.

    Bracketed by geometric expansion from ``t_hint`` and resolved by Brent's
    method to relative tolerance 1e-12.
    """
    from scipy.optimize import brentq

    if target <= 0.0:
        raise ValueError("target must be positive")

    def resid(t):
        return op.diagonal_value(t) - target

    lo = hi = max(t_hint, 1e-300)
    budget = 0
    while resid(lo) > 0.0:
        lo *= 0.5
        budget += 1
        if budget > 2000:
            raise StructuralError("no lower bracket for the diagonal-ray solve")
    budget = 0
    while resid(hi) < 0.0:
        hi *= 2.0
        budget += 1
        if budget > 2000:
            raise StructuralError(
                "no upper bracket for the diagonal-ray solve; "
                "f does not reach the target on the diagonal ray"
            )
    if lo == hi:
        return lo
    return float(brentq(resid, lo, hi, xtol=1e-300, rtol=1e-14))


def solve_a_star(op: SymmetricOperator) -> float:
    """The normalization constant a* with f(a*, ..., a*) = 1."""
    return diagonal_root(op, 1.0)


def alpha_of(op: SymmetricOperator, a_diag) -> float:
    """Decay exponent lam . grad f / (2 lam_n d f/d lam_1) at lam = lam(A)."""
    a = np.sort(_as_array(a_diag))
    grad = op.gradient(a)
    if grad[0] <= 0.0:
        raise StructuralError("df/dlambda_1 <= 0 at lambda(A); operator not monotone")
    return float(np.dot(a, grad) / (2.0 * a[-1] * grad[0]))


@dataclass
class TargetValidation:
    in_calA: bool
    in_scriptA: bool
    alpha: float
    f_value: float


def validate_A(op: SymmetricOperator, a_diag) -> TargetValidation:
    """Check f(lambda(A)) = 1 and the decay-exponent condition alpha > 1.

    ``a_diag`` must be the diagonal entries of a positive definite A.
    """
    a = np.sort(_as_array(a_diag))
    if a[0] <= 0.0:
        raise ValueError("A must be positive definite (all diagonal entries > 0)")
    value = op.evaluate(a)
    in_cal = abs(value - 1.0) <= 1e-10
    alpha = alpha_of(op, a)
    in_script = in_cal and alpha > 1.0 + 1e-12
    return TargetValidation(in_cal, in_script, alpha, value)


# ---------------------------------------------------------------------------
# structure-condition checker


@dataclass
class ConditionResult:
    passed: bool
    detail: str = ""
    worst_margin: float | None = None
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "detail": self.detail,
            "worst_margin": self.worst_margin,
            "failures": self.failures[:10],
        }


@dataclass
class StructureReport:
    monotone: ConditionResult
    boundary_condition: ConditionResult
    nu_condition: ConditionResult
    max_partial: ConditionResult
    r_shift: ConditionResult
    concavity_sampled: ConditionResult
    seed: int
    sample_size: int

    def all_required_pass(self, waive_r_shift: bool = False) -> bool:
        required = [self.monotone, self.boundary_condition, self.nu_condition,
                    self.max_partial]
        if not waive_r_shift:
            required.append(self.r_shift)
        return all(c.passed for c in required)

    def to_dict(self):
        return {
            "monotone": self.monotone.to_dict(),
            "boundary_condition": self.boundary_condition.to_dict(),
            "nu_condition": self.nu_condition.to_dict(),
            "max_partial": self.max_partial.to_dict(),
            "r_shift": self.r_shift.to_dict(),
            "concavity_sampled": self.concavity_sampled.to_dict(),
            "seed": self.seed,
            "sample_size": self.sample_size,
        }


def _sample_cone_points(op: SymmetricOperator, rng, count: int) -> np.ndarray:
    """Quasi-random interior points of the cone, various scales and signs."""
    n = op.dimension
    points = []
    # positive-orthant points over several decades are always admissible
    scales = 10.0 ** rng.uniform(-1.5, 1.5, size=count)
    raw = rng.gamma(2.0, 1.0, size=(count, n)) + 1e-3
    points.append(raw * scales[:, None])
    # mixed-sign candidates, kept only when inside the cone
    cand = rng.normal(0.0, 2.0, size=(4 * count, n))
    ok = op.cone.contains_batch(cand)
    points.append(cand[ok][: count // 2])
    return np.vstack(points)


def _check_monotone(op, pts):
    worst = math.inf
    fails = []
    for lam in pts:
        g = op.gradient(lam)
        m = float(g.min())
        worst = min(worst, m)
        if m <= 0.0:
            fails.append(lam.tolist())
    return ConditionResult(not fails, "min partial over samples", worst, fails)


def _check_boundary(op, pts, inf_g, rng):
    """Sample near-boundary points and require f < inf_g there."""
    worst = -math.inf
    fails = []
    checked = 0
    for lam in pts[: min(len(pts), 200)]:
        # walk toward the cone boundary along a random direction
        d = rng.normal(size=lam.size)
        d /= np.linalg.norm(d)
        t_in, t_out = 0.0, 1.0
        budget = 0
        while op.cone.contains(lam + t_out * d * np.linalg.norm(lam)):
            t_in, t_out = t_out, 2.0 * t_out
            budget += 1
            if budget > 60:
                break
        else:
            scale = np.linalg.norm(lam)
            for _ in range(60):
                mid = 0.5 * (t_in + t_out)
                if op.cone.contains(lam + mid * d * scale):
                    t_in = mid
                else:
                    t_out = mid
            near = lam + t_in * d * scale
            if op.cone.margin(near) <= 1e-3 * max(1.0, abs(op.cone.margin(lam))):
                val = op.evaluate(near)
                worst = max(worst, val)
                checked += 1
                if val >= inf_g:
                    fails.append(near.tolist())
    detail = f"sampled limsup check near the cone boundary ({checked} points)"
    return ConditionResult(not fails and checked > 0, detail, worst, fails)


def _check_nu(op, pts):
    """Executable form of the scaling-lower-bound condition.

    Degree-one homogeneous operators satisfy it exactly through the Euler
    identity. Other kinds get a sampled positivity check, including ray
    ladders up to 1e9, which is where the arctan example fails.
    """
    eps = 1e-8
    if op.homogeneous_degree_one:
        worst = 0.0
        fails = []
        for lam in pts:
            euler = float(np.dot(lam, op.gradient(lam)))
            err = abs(euler - op.evaluate(lam)) / max(1.0, abs(euler))
            worst = max(worst, err)
            if err > 1e-10:
                fails.append(lam.tolist())
        return ConditionResult(
            not fails, "Euler identity for homogeneous kind (nu(t) = t)", worst, fails
        )
    fails = []
    worst = math.inf
    base = pts[:20]
    ladder = 10.0 ** np.arange(0, 10)
    for lam in base:
        unit = lam / np.linalg.norm(lam)
        for t in ladder:
            p = t * unit
            if not op.cone.contains(p):
                continue
            s = float(np.dot(p, op.gradient(p)))
            fval = op.evaluate(p)
            ratio = s / max(fval, eps)
            worst = min(worst, ratio)
            if s < eps * max(fval, eps):
                fails.append([float(t), unit.tolist()])
    return ConditionResult(
        not fails,
        "heuristic sampled check sum(lam_i df_i) >= eps*max(f, eps) on ray ladders",
        worst,
        fails,
    )


def _check_max_partial(op, pts):
    fails = []
    for lam in pts:
        order = np.argsort(lam)
        if lam[order[0]] >= lam[order[1]] - 1e-12:
            continue  # needs a strict minimum eigenvalue
        g = op.gradient(lam)
        if int(np.argmax(g)) != int(order[0]):
            fails.append(lam.tolist())
    return ConditionResult(not fails, "argmax df equals argmin lambda", None, fails)


def _check_r_shift(op, pts, rng):
    """Search a shift R with f(lam_1, ..., lam_n + R) >= 1 per sample."""
    n = op.dimension
    # the condition quantifies over the positive orthant; include small points
    cand = [np.full(n, 0.05), np.full(n, 0.5)]
    cand += [rng.gamma(1.0, 0.5, size=n) + 1e-3 for _ in range(40)]
    witnesses = []
    fails = []
    for lam in cand:
        lam = np.sort(lam)
        shifted = lam.copy()
        R = max(1.0, lam[-1])
        found = False
        for _ in range(60):
            shifted[-1] = lam[-1] + R
            try:
                if op.evaluate(shifted) >= 1.0:
                    witnesses.append(R)
                    found = True
                    break
            except ConeViolationError:
                pass
            R *= 2.0
        if not found:
            fails.append(lam.tolist())
    detail = "doubling search for the eigenvalue-shift witness (budget 2^60)"
    worst = max(witnesses) if witnesses else None
    return ConditionResult(not fails, detail, worst, fails)


def _check_concavity(op, pts, rng):
    """Sampled midpoint-secant test; informational only."""
    fails = []
    for lam in pts[:200]:
        other = lam * (1.0 + 0.5 * rng.normal(size=lam.size))
        if not op.cone.contains(other):
            continue
        mid = 0.5 * (lam + other)
        if not op.cone.contains(mid):
            continue
        gap = op.evaluate(mid) - 0.5 * (op.evaluate(lam) + op.evaluate(other))
        if gap < -1e-9 * max(1.0, abs(op.evaluate(mid))):
            fails.append(lam.tolist())
    return ConditionResult(not fails, "sampled midpoint concavity (informational)", None, fails)


def check_structure(
    op: SymmetricOperator,
    sample_seed: int = 0,
    g_bounds: dict | None = None,
    budget: int = 200,
) -> StructureReport:
    """Evaluate every structure condition on a reproducible cone sample."""
    if budget < 100:
        raise ValueError("sample budget must be at least 100 cone points")
    g_bounds = g_bounds or {"inf_g": 1.0, "sup_g": 1.0}
    rng = np.random.default_rng(sample_seed)
    pts = _sample_cone_points(op, rng, budget)
    return StructureReport(
        monotone=_check_monotone(op, pts),
        boundary_condition=_check_boundary(op, pts, g_bounds["inf_g"], rng),
        nu_condition=_check_nu(op, pts),
        max_partial=_check_max_partial(op, pts),
        r_shift=_check_r_shift(op, pts, rng),
        concavity_sampled=_check_concavity(op, pts, rng),
        seed=sample_seed,
        sample_size=len(pts),
    )


def operator_from_descriptor(desc: dict) -> SymmetricOperator:
    """Build an operator from its JSON descriptor (CLI wire format)."""
    kind = desc.get("kind")
    n = int(desc.get("n", 3))
    if kind == "hessian_root":
        return HessianRoot(int(desc["k"]), n)
    if kind == "hessian_quotient_root":
        return HessianQuotientRoot(int(desc["k"]), int(desc["l"]), n)
    if kind == "special_lagrangian":
        return SpecialLagrangian(float(desc["theta"]), n)
    raise ValueError(f"unknown operator kind {kind!r}")
