"""Global barriers by splicing profiles with boundary quadratics.

The subsolution is the pointwise max of a boundary-hugging family of
quadratics and a profile carrying the quadratic asymptotics; the
supersolution is the pointwise min of a radial profile pinned to inf g
and a damped profile carrying the asymptotics. Splice radii, parameter
searches and the feasibility threshold c_star follow the comparison
construction; all sup/min over boundaries and shells are sampled maxima
over recorded meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ..errors import AsymptoticsError, ConeViolationError, SpliceError, StructuralError
from ..implicit import ImplicitSolves, RightHandSide
from ..linalg import eigen_ascending, hessian_generalized
from ..symfun import SymmetricOperator, validate_A
from .profiles import (
    AsymptoticTarget,
    BarrierProfile,
    choose_delta,
    choose_K,
    integrate_radial_w,
    integrate_sub_w,
    integrate_super_w,
    mu,
)

__all__ = [
    "DomainSpec",
    "SpliceReport",
    "BarrierContext",
    "PiecewiseSub",
    "PiecewiseSuper",
    "QuadraticSuper",
    "boundary_barrier",
    "exterior_samples",
    "certify_sub",
    "certify_super",
]


def _fibonacci_sphere(count, offset=0.5):
    i = np.arange(count) + offset
    phi = np.arccos(1.0 - 2.0 * i / count)
    theta = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)],
        axis=1,
    )


class DomainSpec:
    """A strictly convex ellipsoid with C2 boundary data.

    The boundary is discretized by a quasi-uniform mesh; all boundary
    extrema used by the construction are sampled over this mesh. The
    normalization unit ball inside D inside D_{s0} is checked on the
    mesh when a right-hand side is attached.
    """

    def __init__(self, semi_axes, phi=0.0, n_mesh: int = 2048, center=None):
        self.semi_axes = np.asarray(semi_axes, dtype=float)
        if self.semi_axes.size != 3 or np.any(self.semi_axes < 1.0):
            raise ValueError("need 3 semi-axes, each at least 1 (unit ball inside)")
        if center is not None and np.any(np.asarray(center) != 0.0):
            raise ValueError("only origin-centered domains are supported")
        self._phi = phi
        self.n_mesh = int(n_mesh)
        if self.n_mesh < 2000:
            raise ValueError("boundary mesh needs at least 2000 points")
        dirs = _fibonacci_sphere(self.n_mesh)
        self.mesh = dirs * self.semi_axes
        grad = self.mesh / self.semi_axes**2
        self.normals = grad / np.linalg.norm(grad, axis=1, keepdims=True)
        self.phi_values = self.phi(self.mesh)
        # typical mesh spacing on the largest semi-axis sphere
        self.mesh_spacing = self.semi_axes.max() * np.sqrt(4.0 * np.pi / self.n_mesh)

    def phi(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if callable(self._phi):
            vals = np.array([float(self._phi(p)) for p in x])
        else:
            vals = np.full(x.shape[0], float(self._phi))
        return vals

    def phi_tangential_gradient(self, xi, normal, h: float = 1e-5):
        """Tangential surface gradient of phi at a boundary point."""
        if not callable(self._phi):
            return np.zeros(3)
        grad = np.zeros(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            grad[i] = (float(self._phi(xi + e)) - float(self._phi(xi - e))) / (2 * h)
        return grad - np.dot(grad, normal) * normal

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.sum((x / self.semi_axes) ** 2, axis=1) < 1.0

    def boundary_radius(self, dirs) -> np.ndarray:
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        return 1.0 / np.sqrt(np.sum((dirs / self.semi_axes) ** 2, axis=1))

    def check_normalization(self, a_diag, s0: float):
        s_vals = 0.5 * np.sum(a_diag * self.mesh**2, axis=1)
        if s_vals.max() > s0 + 1e-12:
            raise ValueError(
                f"domain leaves D_s0: max boundary s {s_vals.max():.6f} > {s0}"
            )


def _level_set_points(a_diag, s, count=512, offset=0.5):
    dirs = _fibonacci_sphere(count, offset)
    scale = np.sqrt(2.0 * s / np.sum(a_diag * dirs**2, axis=1))
    return dirs * scale[:, None]


def boundary_barrier(domain: DomainSpec, a_diag, K: float, index: int,
                     t_init: float = 0.25, budget: int = 60):
    """Supporting quadratic at boundary mesh point ``index``.

    Returns (x_bar, t). The quadratic equals phi at the point, has
    Hessian K A, and lies below phi at every other mesh point with
    margin 1e-10 outside a mesh-cell neighborhood. The center x_bar is
    pushed along the inward conormal until the sampled inequality holds.
    """
    a = np.asarray(a_diag, dtype=float)
    xi = domain.mesh[index]
    nu = domain.normals[index]
    phi_xi = domain.phi_values[index]
    grad_t = domain.phi_tangential_gradient(xi, nu)
    rho = 2.0 * domain.mesh_spacing
    near = np.linalg.norm(domain.mesh - xi, axis=1) <= rho
    near[index] = True

    t = t_init * max(K, 1.0)
    for _ in range(budget):
        x_bar = xi - grad_t / (K * a) - t * nu / a
        # omega(x) - phi(x) on the mesh, with omega(xi) = phi(xi) exactly
        diff = domain.mesh - x_bar
        quad = 0.5 * K * np.sum(a * diff**2, axis=1)
        omega = phi_xi + quad - quad[index]
        gap = omega - domain.phi_values
        if gap[~near].max() <= -1e-10 and gap[near].max() <= 1e-12:
            return x_bar, t
        t *= 2.0
    raise SpliceError(
        f"no supporting quadratic at mesh point {index} within the t budget; "
        "raise K or refine the boundary mesh"
    )


@dataclass
class SpliceReport:
    c_star: float
    runs: dict = field(default_factory=dict)

    def record(self, c, params):
        self.runs[f"{c:.12g}"] = params

    def to_dict(self):
        return {"c_star": self.c_star, "runs": self.runs}


class _BoundaryQuadratics:
    """The max-of-quadratics boundary subsolution w(x) = max_xi omega_xi."""

    def __init__(self, domain: DomainSpec, a_diag, K: float):
        self.domain = domain
        self.a = np.asarray(a_diag, dtype=float)
        self.K = K
        n = domain.n_mesh
        self.x_bar = np.empty((n, 3))
        self.t_values = np.empty(n)
        for i in range(n):
            self.x_bar[i], self.t_values[i] = boundary_barrier(domain, self.a, K, i)
        # omega_xi(x) = K/2 x^T A x - P_xi . x + q_xi
        self.P = K * self.a * self.x_bar
        xi = domain.mesh
        self.q = (
            domain.phi_values
            - 0.5 * K * np.sum(self.a * xi**2, axis=1)
            + np.sum(self.P * xi, axis=1)
        )

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lead = 0.5 * self.K * np.sum(self.a * x**2, axis=1)
        return lead + np.max(self.q[None, :] - x @ self.P.T, axis=1)

    def min_over_all(self, x):
        """min over both mesh points and evaluation points of omega."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lead = 0.5 * self.K * np.sum(self.a * x**2, axis=1)
        return float((lead[:, None] + self.q[None, :] - x @ self.P.T).min())

    def hessian(self):
        return np.diag(self.K * self.a)


class PiecewiseSub:
    """Global subsolution: boundary quadratics near D, profile far out."""

    def __init__(self, ctx, quads, profile, s1, s2):
        self.ctx = ctx
        self.quads = quads
        self.profile = profile
        self.s1 = s1
        self.s2 = s2
        self.a = ctx.a

    def s_of(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 0.5 * np.sum(self.a * x**2, axis=1)

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.s_of(x)
        out = np.empty(s.size)
        lo = s <= self.s1
        hi = s >= self.s2
        mid = ~lo & ~hi
        if lo.any():
            out[lo] = self.quads.value(x[lo])
        if hi.any():
            out[hi] = self.profile.u_at(s[hi])
        if mid.any():
            out[mid] = np.maximum(
                self.quads.value(x[mid]), self.profile.u_at(s[mid])
            )
        return out

    def piece(self, x):
        """'boundary' or 'profile', whichever is active at x."""
        s = float(self.s_of(x)[0])
        if s <= self.s1:
            return "boundary"
        if s >= self.s2:
            return "profile"
        q = float(self.quads.value(x)[0])
        return "boundary" if q >= self.profile.u_at(s) else "profile"

    def hessian(self, x):
        x = np.asarray(x, dtype=float).reshape(3)
        if self.piece(x) == "boundary":
            return self.quads.hessian()
        s = float(self.s_of(x)[0])
        return hessian_generalized(
            self.a, x, self.profile.w_at(s), self.profile.wprime_at(s)
        )


class PiecewiseSuper:
    """Global supersolution: radial profile near D, damped profile far out."""

    def __init__(self, ctx, radial, damped, r1, r2, s_bar):
        self.ctx = ctx
        self.radial = radial
        self.damped = damped
        self.r1 = r1
        self.r2 = r2
        self.s_bar = s_bar
        self.a = ctx.a
        self.a_tilde = ctx.a_tilde()

    def _sigma(self, x):
        return 0.5 * self.a_tilde * np.sum(np.atleast_2d(x) ** 2, axis=1)

    def s_of(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 0.5 * np.sum(self.a * x**2, axis=1)

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        out = np.empty(r.size)
        lo = r <= self.r1
        hi = r >= self.r2
        mid = ~lo & ~hi
        if lo.any():
            out[lo] = self.radial.u_at(self._sigma(x[lo]))
        if hi.any():
            out[hi] = self.damped.u_at(self.s_of(x[hi]))
        if mid.any():
            out[mid] = np.minimum(
                self.radial.u_at(self._sigma(x[mid])),
                self.damped.u_at(self.s_of(x[mid])),
            )
        return out

    def piece(self, x):
        """'radial' or 'damped', whichever is active at x."""
        r = float(np.linalg.norm(x))
        if r <= self.r1:
            return "radial"
        if r >= self.r2:
            return "damped"
        v = self.radial.u_at(float(self._sigma(x)[0]))
        U = self.damped.u_at(float(self.s_of(x)[0]))
        return "radial" if v <= U else "damped"

    def hessian(self, x):
        x = np.asarray(x, dtype=float).reshape(3)
        if self.piece(x) == "radial":
            sig = float(self._sigma(x)[0])
            return hessian_generalized(
                np.full(3, self.a_tilde), x,
                self.radial.w_at(sig), self.radial.wprime_at(sig),
            )
        s = float(self.s_of(x)[0])
        return hessian_generalized(
            self.a, x, self.damped.w_at(s), self.damped.wprime_at(s)
        )


class QuadraticSuper:
    """The shortcut supersolution 0.5 x^T A x + c, valid when inf g >= 1."""

    def __init__(self, a_diag, c):
        self.a = np.asarray(a_diag, dtype=float)
        self.c = float(c)

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 0.5 * np.sum(self.a * x**2, axis=1) + self.c

    def piece(self, x):
        return "quadratic"

    def hessian(self, x):
        return np.diag(self.a)


class BarrierContext:
    """Orchestrates barrier construction for one (op, A, g, D) problem.

    ``prepare`` resolves every c-independent quantity: the boundary
    quadratics and their minimum m, the smallest feasible slope C_bar,
    the damped supersolution profile with its threshold radius, the
    radial slope zeta2_bar, and the feasibility threshold c_star.
    ``build_sub`` / ``build_super`` then produce barriers for a given c.
    """

    def __init__(self, op: SymmetricOperator, target: AsymptoticTarget,
                 rhs: RightHandSide, domain: DomainSpec,
                 s1=None, s2=None, r1=None, r2=None,
                 s_max_factor: float = 1e6, require_script: bool = True):
        self.op = op
        self.target = target
        self.rhs = rhs
        self.domain = domain
        self.a = np.sort(target.a)
        self.solves = ImplicitSolves(op, self.a, rhs)
        self.s1 = 2.0 * rhs.s0 if s1 is None else float(s1)
        self.s2 = 4.0 * rhs.s0 if s2 is None else float(s2)
        if not rhs.s0 < self.s1 < self.s2:
            raise ValueError("need s0 < s1 < s2")
        self._r1 = r1
        self._r2 = r2
        self.s_max = s_max_factor * rhs.s0
        self.require_script = require_script
        self.prepared = False

    # -- c-independent preparation -------------------------------------------

    def prepare(self):
        check = self.target.validate(self.op)
        if not check.in_calA:
            raise StructuralError("f(lambda(A)) != 1: A not on the unit level set")
        if self.require_script and not check.in_scriptA:
            raise StructuralError(
                f"alpha(A) = {check.alpha:.6f} <= 1: asymptotic matching infeasible"
            )
        self.alpha = check.alpha
        self.domain.check_normalization(self.a, self.rhs.s0)
        self.K = choose_K(self.op, self.a, self.rhs.sup_g)
        self.quads = _BoundaryQuadratics(self.domain, self.a, self.K)

        # m = min of the boundary quadratics over the shell between
        # the domain boundary and the s1 level set
        shell = self._shell_samples()
        self.m = self.quads.min_over_all(shell)
        self.max_w_s2 = float(
            self.quads.value(_level_set_points(self.a, self.s2)).max()
        )

        self.C_bar = self._search_C_bar()
        if self.alpha > 1.0:
            c_star_sub = self.m + mu(
                integrate_sub_w(self.solves, self.C_bar, self.s_max), self.s1
            ).value
        else:
            # far-field constants diverge; only unmatched subsolutions
            # are available and no c is feasible
            c_star_sub = np.inf

        if self.alpha <= 1.0:
            self.quadratic_super = self.rhs.inf_g >= 1.0
            self.s_bar = None
            self.c_star = np.inf
            self.report = SpliceReport(c_star=self.c_star)
            self.prepared = True
            return self

        if self.rhs.inf_g >= 1.0:
            self.quadratic_super = True
            self.s_bar = None
            max_phi_shift = float(
                (self.domain.phi_values
                 - 0.5 * np.sum(self.a * self.domain.mesh**2, axis=1)).max()
            )
            c_star_super = max_phi_shift
        else:
            self.quadratic_super = False
            self._prepare_super()
            max_phi = float(self.domain.phi_values.max())
            c_star_super = max_phi + self.rad0.u_at(self.sigma1) + self.mu_bar

        self.c_star = max(c_star_sub, c_star_super)
        self.report = SpliceReport(c_star=self.c_star)
        self.prepared = True
        return self

    def _shell_samples(self, count: int = 4096):
        sampler = qmc.Halton(d=3, seed=7)
        pts = []
        need = count
        while need > 0:
            raw = sampler.random(2 * need)
            dirs = raw[:, :2]
            theta = 2.0 * np.pi * dirs[:, 0]
            z = 2.0 * dirs[:, 1] - 1.0
            rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
            d = np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)
            r_lo = self.domain.boundary_radius(d)
            r_hi = np.sqrt(2.0 * self.s1 / np.sum(self.a * d**2, axis=1))
            ok = r_hi > r_lo
            r = r_lo + raw[:, 2] * (r_hi - r_lo)
            pts.append((d * r[:, None])[ok][:need])
            need = count - sum(p.shape[0] for p in pts)
        shell = np.concatenate(pts)
        lev = _level_set_points(self.a, self.s1)
        return np.concatenate([shell, self.domain.mesh, lev])

    def _splice_sub_margin(self, xi2: float) -> float:
        prof = integrate_sub_w(self.solves, xi2, 1.05 * self.s2)
        return (
            self.m + (prof.u_at(self.s2) - prof.u_at(self.s1)) - self.max_w_s2
        )

    def _search_C_bar(self) -> float:
        lo = self.solves.w0(self.rhs.s0) + 1e-9
        if self._splice_sub_margin(lo) >= 0.0:
            return lo
        hi = max(2.0, 2.0 * lo)
        for _ in range(60):
            if self._splice_sub_margin(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise SpliceError("no slope satisfies the outer splice inequality")
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if self._splice_sub_margin(mid) >= 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-3 * hi:
                break
        return hi

    def _prepare_super(self):
        self.delta = choose_delta(self.op, self.a)
        self.eta2 = 0.5 * self.solves.W0(self.rhs.s0)
        self.U0 = integrate_super_w(self.solves, self.eta2, self.delta, self.s_max)
        self.mu_bar = mu(self.U0, self.rhs.s0).value

        from ..asympt import detect_s_bar

        self.s_bar = detect_s_bar(self.op, self.a, self.delta, self.U0)
        self.s_hat = max(self.s_bar, self.rhs.s0)
        self.r1 = (1.25 * np.sqrt(2.0 * self.s_hat / self.a[0])
                   if self._r1 is None else float(self._r1))
        self.r2 = 2.0 * self.r1 if self._r2 is None else float(self._r2)
        at = self.solves.a_tilde()
        self.sigma1 = 0.5 * at * self.r1**2
        self.sigma2 = 0.5 * at * self.r2**2
        if 0.5 * self.a[0] * self.r1**2 < self.s_hat - 1e-12:
            raise SpliceError("r1 too small: D_s_hat not inside B_r1")

        self.zeta2_bar = self._search_zeta2()
        self.rad0 = integrate_radial_w(self.solves, self.zeta2_bar,
                                       1.1 * self.sigma2)

    def _splice_super_margin(self, zeta2: float) -> float:
        rad = integrate_radial_w(self.solves, zeta2, 1.05 * self.sigma2)
        grow = rad.u_at(self.sigma2) - rad.u_at(self.sigma1)
        return (
            self.U0.u_at(self.s_hat) + grow
            - self.U0.u_at(0.5 * self.a[-1] * self.r2**2)
        )

    def _search_zeta2(self) -> float:
        lo = 1.0 + 1e-9
        if self._splice_super_margin(lo) >= 0.0:
            return lo
        hi = 2.0
        for _ in range(60):
            if self._splice_super_margin(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise SpliceError("no radial slope satisfies the outer splice inequality")
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if self._splice_super_margin(mid) >= 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-3 * hi:
                break
        return hi

    # -- per-c builds ---------------------------------------------------------

    def _require_prepared(self):
        if not self.prepared:
            raise RuntimeError("call prepare() first")

    def _solve_xi2(self, c: float) -> float:
        from scipy.optimize import brentq

        def G(xi2):
            prof = integrate_sub_w(self.solves, xi2, self.s_max)
            return self.m + mu(prof, self.s1).value - c

        lo = self.C_bar
        g_lo = G(lo)
        if g_lo > 0.0:
            raise SpliceError(
                f"c = {c} is below the feasible range (c_star = {self.c_star})"
            )
        hi = max(2.0 * lo, 2.0)
        for _ in range(60):
            if G(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise SpliceError("slope search for the requested c did not bracket")
        return float(brentq(G, lo, hi, xtol=1e-10, rtol=1e-12))

    def build_sub(self, c=None, s_span=None):
        """Subsolution; matches far-field constant c when c is given.

        With c = None the smallest feasible slope is used and no
        asymptotic matching is attempted (needed when alpha <= 1 and the
        far-field constant diverges).
        """
        self._require_prepared()
        if c is None:
            xi2 = self.C_bar * (1.0 + 1e-6)
        else:
            if c <= self.c_star:
                raise SpliceError(f"need c > c_star = {self.c_star}")
            xi2 = self._solve_xi2(c)
        s_hi = self.s_max if s_span is None else max(s_span, 2.0 * self.s2)
        prof = integrate_sub_w(self.solves, xi2, s_hi)
        xi1 = self.m - prof.u_at(self.s1)
        prof = prof.shifted(xi1)
        sub = PiecewiseSub(self.solves, self.quads, prof, self.s1, self.s2)
        margin_inner = float(
            self.quads.value(_level_set_points(self.a, self.s1)).min() - self.m
        )
        margin_outer = float(prof.u_at(self.s2) - self.max_w_s2)
        params = {
            "xi1": xi1, "xi2": xi2, "s1": self.s1, "s2": self.s2,
            "m": self.m, "K": self.K,
            "splice_margin_inner": margin_inner,
            "splice_margin_outer": margin_outer,
        }
        if margin_inner < 0.0 or margin_outer < 0.0:
            raise SpliceError(f"negative subsolution splice margin: {params}")
        return sub, params

    def build_super(self, c: float, s_span=None):
        self._require_prepared()
        if c <= self.c_star:
            raise SpliceError(f"need c > c_star = {self.c_star}")
        if self.quadratic_super:
            sup = QuadraticSuper(self.a, c)
            params = {"form": "quadratic", "c": c}
            return sup, params
        eta1 = c - self.mu_bar
        damped = self.U0.shifted(eta1)
        M = eta1 + self.U0.u_at(self.s_hat)
        zeta1 = M - self.rad0.u_at(self.sigma1)
        radial = self.rad0.shifted(zeta1)
        sup = PiecewiseSuper(self.solves, radial, damped, self.r1, self.r2,
                             self.s_bar)
        margin_inner = float(
            self.U0.u_at(0.5 * self.a[0] * self.r1**2) - self.U0.u_at(self.s_hat)
        )
        margin_outer = float(self._splice_super_margin(self.zeta2_bar))
        boundary_margin = float(
            (sup.value(self.domain.mesh) - self.domain.phi_values).min()
        )
        params = {
            "eta1": eta1, "eta2": self.eta2, "delta": self.delta,
            "zeta1": zeta1, "zeta2": self.zeta2_bar,
            "r1": self.r1, "r2": self.r2, "s_bar": self.s_bar,
            "mu_bar": self.mu_bar,
            "splice_margin_inner": margin_inner,
            "splice_margin_outer": margin_outer,
            "boundary_margin": boundary_margin,
        }
        if margin_inner < 0.0 or margin_outer < 0.0 or boundary_margin < 0.0:
            raise SpliceError(f"negative supersolution margin: {params}")
        return sup, params


def exterior_samples(domain: DomainSpec, r_max: float, count: int,
                     seed: int = 0) -> np.ndarray:
    """Quasi-random points outside D and inside the ball of radius r_max."""
    sampler = qmc.Halton(d=3, seed=seed)
    pts = []
    have = 0
    while have < count:
        raw = 2.0 * r_max * sampler.random(4 * count) - r_max
        inside_ball = np.sum(raw**2, axis=1) < r_max**2
        keep = raw[inside_ball & ~domain.contains(raw)]
        pts.append(keep)
        have += keep.shape[0]
    return np.concatenate(pts)[:count]


def _certify(barrier, op, rhs, points, sign, region=None):
    margins = np.empty(points.shape[0])
    for i, x in enumerate(points):
        if region is not None and not region(barrier, x):
            margins[i] = np.inf
            continue
        lam = eigen_ascending(barrier.hessian(x)).values
        try:
            fval = op.evaluate(lam)
        except ConeViolationError:
            margins[i] = -np.inf
            continue
        margins[i] = sign * (fval - rhs.evaluate(x))
    return margins


def certify_sub(sub, op, rhs, points) -> np.ndarray:
    """Pointwise margins f(lambda(D2 u)) - g; nonnegative (to tolerance)
    certifies the subsolution property at the sample."""
    return _certify(sub, op, rhs, points, +1.0)


def certify_super(sup, op, rhs, points) -> np.ndarray:
    """Pointwise margins g - f(lambda(D2 u)) on the validity region: the
    damped piece only past its threshold radius, other pieces everywhere."""

    def region(barrier, x):
        if barrier.piece(x) != "damped":
            return True
        s = float(barrier.s_of(x)[0])
        return s > barrier.s_bar

    return _certify(sup, op, rhs, points, -1.0, region=region)
