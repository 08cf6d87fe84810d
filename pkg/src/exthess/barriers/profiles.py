"""One-dimensional barrier profiles from the reduced implicit ODEs.

Three families are integrated, all first-order ODEs for w = u' in the
generalized-symmetric variable s:

* decreasing profiles above the upper envelope (subsolution family),
* increasing profiles below the lower envelope (supersolution family,
  with the extra damping parameter delta),
* decreasing radial profiles tied to inf g (boundary supersolutions).

Profiles carry their dense ODE solution plus u as an extra quadrature
state, so evaluation anywhere on the integration span is cheap and
accurate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import AsymptoticsError, IntegrationError, StructuralError
from ..implicit import ImplicitSolves, RightHandSide
from ..symfun import SymmetricOperator, alpha_of, validate_A

__all__ = [
    "AsymptoticTarget",
    "BarrierProfile",
    "MuResult",
    "integrate_sub_w",
    "integrate_super_w",
    "integrate_radial_w",
    "mu",
    "choose_delta",
    "choose_K",
]


@dataclass
class AsymptoticTarget:
    """Prescribed quadratic behavior 0.5 x^T A x + b.x + c at infinity.

    A is accepted in diagonal form only (entries ascending); the linear
    part b is eliminated internally by an affine shift and restored at
    the reporting layer.
    """

    a: np.ndarray
    b: np.ndarray
    c: float

    def __init__(self, a, b=None, c=0.0):
        arr = np.asarray(a, dtype=float)
        if np.any(arr <= 0.0):
            raise ValueError("A must be positive definite")
        if np.any(np.diff(arr) < 0.0):
            raise ValueError("diagonal entries must be ascending")
        self.a = arr
        self.b = np.zeros(arr.size) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)

    @property
    def dimension(self):
        return self.a.size

    def validate(self, op: SymmetricOperator):
        return validate_A(op, self.a)

    def s_of(self, x) -> np.ndarray:
        """The generalized-symmetric variable 0.5 x^T A x (batch friendly)."""
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(self.a * x * x, axis=-1)


@dataclass
class BarrierProfile:
    """A profile (s-grid, w = u', u) with dense in-span evaluation."""

    kind: str
    params: dict
    s_start: float
    grid: np.ndarray
    w: np.ndarray
    u: np.ndarray
    dense: object = field(repr=False)
    wprime_fn: object = field(repr=False)

    @property
    def s_end(self) -> float:
        return float(self.grid[-1])

    def _check_span(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s_start - 1e-9) or np.any(s > self.s_end * (1 + 1e-12)):
            raise ValueError(
                f"s outside the integrated span [{self.s_start}, {self.s_end}]"
            )
        return np.clip(s, self.s_start, self.s_end)

    def w_at(self, s):
        s = self._check_span(s)
        return self.dense(np.atleast_1d(s))[0] if np.ndim(s) else float(self.dense(s)[0])

    def u_at(self, s):
        s = self._check_span(s)
        return self.dense(np.atleast_1d(s))[1] if np.ndim(s) else float(self.dense(s)[1])

    def wprime_at(self, s):
        if np.ndim(s):
            return np.array([self.wprime_fn(float(t), self.w_at(float(t)))
                             for t in np.asarray(s, dtype=float)])
        return self.wprime_fn(float(s), self.w_at(float(s)))

    def shifted(self, du: float) -> "BarrierProfile":
        """Same profile with u offset by ``du`` (changes the first parameter)."""
        base = self.dense

        def dense(s):
            out = np.array(base(s), copy=True)
            out[1] += du
            return out

        return BarrierProfile(
            kind=self.kind,
            params={**self.params, "u_offset": self.params.get("u_offset", 0.0) + du},
            s_start=self.s_start,
            grid=self.grid,
            w=self.w,
            u=self.u + du,
            dense=dense,
            wprime_fn=self.wprime_fn,
        )

    def export_csv(self, path):
        header = (
            f"# kind={self.kind} params={self.params}\n"
            "# s,w,u,w_minus_1\n"
        )
        with open(path, "w") as fh:
            fh.write(header)
            for s, w, u in zip(self.grid, self.w, self.u):
                fh.write(f"{s!r},{w!r},{u!r},{w - 1.0!r}\n")


def _integrate(rhs, s_start, s_max, w_init, u_init, rtol=1e-11, atol=1e-12,
               n_grid=2000):
    sol = solve_ivp(
        rhs,
        (s_start, s_max),
        [w_init, u_init],
        method="DOP853",
        dense_output=True,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegrationError(f"profile integration failed: {sol.message}")
    grid = np.unique(np.concatenate([
        np.geomspace(s_start, s_max, n_grid), sol.t
    ]))
    vals = sol.sol(grid)
    return grid, vals[0], vals[1], sol.sol


def integrate_sub_w(
    ctx: ImplicitSolves,
    xi2: float,
    s_max: float,
    s_start: float | None = None,
    xi1: float = 0.0,
) -> BarrierProfile:
    """Decreasing profile above the upper diagonal envelope.

    Solves dw/ds = (h(s, w) - a1 w) / (2 an s) from w(s_start) = xi2,
    together with u as cumulative quadrature of w.
    """
    a = ctx.a
    s_start = ctx.rhs.s0 if s_start is None else s_start
    if xi2 < ctx.w0(s_start) - 1e-12:
        raise ValueError("initial slope must not be below the upper envelope")

    def wprime(s, w):
        w_eff = max(w, ctx.w0(s))
        return (ctx.h(s, w_eff) - a[0] * w_eff) / (2.0 * a[-1] * s)

    def rhs(s, y):
        return [wprime(s, y[0]), y[0]]

    grid, w, u, dense = _integrate(rhs, s_start, s_max, xi2, xi1)
    floor = np.array([ctx.w0(s) for s in grid[:: max(1, grid.size // 64)]])
    probe = grid[:: max(1, grid.size // 64)]
    if np.any(dense(probe)[0] < floor - 1e-8):
        raise IntegrationError("sub-profile crossed its lower envelope")
    if np.any(np.diff(w) > 1e-9):
        raise IntegrationError("sub-profile is not decreasing")
    return BarrierProfile(
        kind="sub", params={"xi1": xi1, "xi2": xi2},
        s_start=s_start, grid=grid, w=w, u=u, dense=dense, wprime_fn=wprime,
    )


def integrate_super_w(
    ctx: ImplicitSolves,
    eta2: float,
    delta: float,
    s_max: float,
    eta1: float = 0.0,
) -> BarrierProfile:
    """Increasing profile below the lower diagonal envelope."""
    a = ctx.a
    s_start = ctx.rhs.s0
    W0_start = ctx.W0(s_start)
    if not 0.0 < eta2 <= W0_start + 1e-12:
        raise ValueError("initial slope must lie in (0, W0(s0)]")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")

    def wprime(s, w):
        w_eff = min(max(w, 1e-300), ctx.W0(s))
        return (ctx.H(s, w_eff) - a[0] * w_eff) / ((2.0 * a[-1] + delta) * s)

    def rhs(s, y):
        return [wprime(s, y[0]), y[0]]

    grid, w, u, dense = _integrate(rhs, s_start, s_max, eta2, eta1)
    probe = grid[:: max(1, grid.size // 64)]
    ceil = np.array([ctx.W0(s) for s in probe])
    if np.any(dense(probe)[0] > ceil + 1e-8):
        raise IntegrationError("super-profile crossed its upper envelope")
    if np.any(np.diff(w) < -1e-9):
        raise IntegrationError("super-profile is not increasing")
    return BarrierProfile(
        kind="super", params={"eta1": eta1, "eta2": eta2, "delta": delta},
        s_start=s_start, grid=grid, w=w, u=u, dense=dense, wprime_fn=wprime,
    )


def integrate_radial_w(
    ctx: ImplicitSolves,
    zeta2: float,
    s_max: float,
    zeta1: float = 0.0,
) -> BarrierProfile:
    """Decreasing radial profile pinned to inf g, starting at s = a_tilde/2."""
    at = ctx.a_tilde()
    s_start = 0.5 * at
    if zeta2 < 1.0:
        raise ValueError("initial slope must be at least 1")

    def wprime(s, w):
        w_eff = max(w, 1.0)
        return (ctx.hbar(w_eff) - at * w_eff) / (2.0 * at * s)

    def rhs(s, y):
        return [wprime(s, y[0]), y[0]]

    grid, w, u, dense = _integrate(rhs, s_start, s_max, zeta2, zeta1)
    if np.any(w < 1.0 - 1e-9):
        raise IntegrationError("radial profile dropped below 1")
    if np.any(np.diff(w) > 1e-9):
        raise IntegrationError("radial profile is not decreasing")
    return BarrierProfile(
        kind="radial", params={"zeta1": zeta1, "zeta2": zeta2, "a_tilde": at},
        s_start=s_start, grid=grid, w=w, u=u, dense=dense, wprime_fn=wprime,
    )


@dataclass
class MuResult:
    value: float
    tail_bound: float
    exponent: float

    def __float__(self):
        return self.value


def mu(profile: BarrierProfile, s_from: float) -> MuResult:
    """Far-field constant: integral of (w - 1) from s_from, minus s_from.

    The integral over the computed span comes from the quadrature state;
    the tail beyond the span is estimated from the fitted power-law decay
    exponent p of w - 1 (which must exceed 1 to be integrable).
    """
    from ..asympt import fit_decay

    if not profile.s_start - 1e-9 <= s_from <= profile.s_end:
        raise ValueError("s_from outside the profile span")
    s_end = profile.s_end
    body = (profile.u_at(s_end) - profile.u_at(s_from)) - (s_end - s_from)
    mask = profile.grid >= s_end / 10.0
    resid = np.abs(profile.w[mask] - 1.0)
    if np.all(resid < 1e-14):
        return MuResult(body - s_from, 0.0, np.inf)
    fit = fit_decay(profile.grid[mask], resid)
    p = -fit.exponent
    if p <= 1.0:
        raise AsymptoticsError(
            f"fitted tail exponent {p:.3f} <= 1; far-field constant diverges "
            "(decay-rate premise alpha > 1 violated)"
        )
    w_end = profile.w_at(s_end)
    tail = (w_end - 1.0) * s_end / (p - 1.0)
    return MuResult(body + tail - s_from, abs(tail), -p)


def choose_delta(op: SymmetricOperator, a_diag) -> float:
    """Damping delta = an (alpha - 1), which keeps the damped exponent
    2 alpha / (alpha + 1) above 1."""
    a = np.sort(np.asarray(a_diag, dtype=float))
    alpha = alpha_of(op, a)
    if alpha <= 1.0:
        raise StructuralError(f"alpha(A) = {alpha:.6f} <= 1; A not admissible")
    return float(a[-1] * (alpha - 1.0))


def choose_K(op: SymmetricOperator, a_diag, sup_g: float) -> float:
    """Smallest K (to 1e-6) with f(K lambda(A)) >= sup g."""
    from scipy.optimize import brentq

    a = np.sort(np.asarray(a_diag, dtype=float))

    def resid(K):
        return op.evaluate(K * a) - sup_g

    lo = hi = 1.0
    while resid(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-12:
            return lo
    while resid(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise StructuralError("f does not reach sup g on the ray of A")
    if lo == hi:
        return 1.0
    return float(brentq(resid, lo, hi, xtol=1e-6, rtol=1e-12))
