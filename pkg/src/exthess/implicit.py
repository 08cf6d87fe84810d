"""Scalar implicit solves defining the profile ODE right-hand sides.

Each quantity here is "the root of f(...) = envelope" for some envelope
of the right-hand side g: the diagonal envelopes w0 / W0, the first
coordinate solves h / H, the radial analogues a_tilde and hbar. Roots
are found by a safeguarded Newton iteration warm-started from the last
answer, with a Brent bracket as fallback, and memoized per context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, StructuralError
from .symfun import SymmetricOperator

__all__ = ["RightHandSide", "ImplicitSolves", "constant_rhs", "power_rhs"]

_ROUND = 12  # significant digits for memo keys


def _key(*vals):
    return tuple(float(f"{v:.{_ROUND}e}") for v in vals)


@dataclass
class RightHandSide:
    """g(x) together with its decay envelopes 1 +- C0 s^(-beta/2).

    ``evaluate`` maps a point x to g(x). The envelope bracket is assumed
    for s >= s0 and validated by sampling in ``validate_bracket``.
    """

    evaluate: Callable[[np.ndarray], float]
    C0: float
    beta: float
    s0: float
    inf_g: float
    sup_g: float
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.C0 < 0.0:
            raise ValueError("C0 must be nonnegative")
        if self.beta <= 2.0:
            raise ValueError("beta must exceed 2")
        if self.s0 <= 1.0:
            raise ValueError("s0 must exceed 1")
        if self.inf_g <= 0.0:
            raise ValueError("inf g must be positive")
        if self.inf_g > self.sup_g + 1e-12:
            raise ValueError("need inf_g <= sup_g")

    def gbar(self, s) -> float:
        return 1.0 + self.C0 * np.asarray(s, dtype=float) ** (-0.5 * self.beta)

    def gunder(self, s) -> float:
        return 1.0 - self.C0 * np.asarray(s, dtype=float) ** (-0.5 * self.beta)

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(x) for x in points])

    def validate_bracket(self, a_diag, rng=None, samples: int = 200) -> float:
        """Sampled check of the envelope bracket; returns the worst margin."""
        rng = rng or np.random.default_rng(0)
        a = np.asarray(a_diag, dtype=float)
        worst = np.inf
        for _ in range(samples):
            s = self.s0 * 10.0 ** rng.uniform(0.0, 4.0)
            y = rng.normal(size=a.size)
            x = y * np.sqrt(2.0 * s / np.dot(a * y, y))
            g = self.evaluate(x)
            worst = min(worst, self.gbar(s) - g, g - self.gunder(s))
        if worst < -1e-9:
            raise ValueError(
                f"g violates its decay envelopes (worst margin {worst:.3e})"
            )
        return float(worst)


def constant_rhs(value: float = 1.0, s0: float = 2.0, beta: float = 3.0) -> RightHandSide:
    """g identically equal to ``value`` (envelopes collapse when value = 1)."""
    if value != 1.0:
        raise ValueError("constant g must equal 1 for collapsed envelopes; "
                         "rescale the equation otherwise")
    return RightHandSide(
        evaluate=lambda x: 1.0,
        C0=0.0,
        beta=beta,
        s0=s0,
        inf_g=1.0,
        sup_g=1.0,
        description={"form": "constant", "value": 1.0},
    )


def power_rhs(C0: float, beta: float, s0: float, a_diag, sign: int = -1) -> RightHandSide:
    """g(x) = 1 + sign*C0*max(s, s0)^(-beta/2) with s = 0.5 x^T A x."""
    a = np.asarray(a_diag, dtype=float)
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")

    def g(x):
        s = max(0.5 * float(np.dot(a * np.asarray(x), np.asarray(x))), s0)
        return 1.0 + sign * C0 * s ** (-0.5 * beta)

    if sign < 0:
        inf_g, sup_g = 1.0 - C0 * s0 ** (-0.5 * beta), 1.0
    else:
        inf_g, sup_g = 1.0, 1.0 + C0 * s0 ** (-0.5 * beta)
    return RightHandSide(
        evaluate=g, C0=C0, beta=beta, s0=s0, inf_g=inf_g, sup_g=sup_g,
        description={"form": "power", "C0": C0, "beta": beta, "sign": sign},
    )


class ImplicitSolves:
    """Memoized implicit solves for one (operator, A, rhs) context."""

    def __init__(self, op: SymmetricOperator, a_diag, rhs: RightHandSide):
        self.op = op
        self.a = np.sort(np.asarray(a_diag, dtype=float))
        self.rhs = rhs
        self._cache: dict = {}
        self._warm: dict = {}

    # -- generic machinery ---------------------------------------------------

    def _newton_brent(self, resid, dresid, lo, hi, guess, tol=1e-12):
        """Root of an increasing residual on [lo, hi]; |resid(root)| <= tol."""
        x = min(max(guess, lo), hi)
        for _ in range(8):
            r = resid(x)
            if abs(r) <= tol:
                return x
            d = dresid(x)
            if d <= 0.0:
                break
            step = r / d
            x_new = x - step
            if not lo <= x_new <= hi:
                break
            x = x_new
        else:
            r = resid(x)
            if abs(r) <= tol:
                return x
        root = brentq(resid, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)
        # Newton polish after Brent to push the residual to the tolerance
        for _ in range(4):
            r = resid(root)
            if abs(r) <= tol:
                break
            d = dresid(root)
            if d <= 0.0:
                break
            root -= r / d
        return root

    def _first_coord_lower(self, rest: np.ndarray, hi: float, target: float):
        """A first coordinate inside the cone with f below ``target``.

        Walks down from ``hi`` (which has f >= target); near the cone exit
        f drops below any positive target by the boundary condition.
        """
        cone = self.op.cone
        scale = max(abs(hi), float(np.abs(rest).max()), 1.0)
        step = 1e-3 * scale
        lo = hi
        for _ in range(80):
            cand = lo - step
            vec = np.concatenate(([cand], rest))
            if not cone.contains(vec):
                # bisect back toward the cone boundary, stay strictly inside
                t_in, t_out = lo, cand
                for _ in range(200):
                    mid = 0.5 * (t_in + t_out)
                    if cone.contains(np.concatenate(([mid], rest))):
                        t_in = mid
                    else:
                        t_out = mid
                    if t_in - t_out < 1e-14 * scale:
                        break
                lo = t_in
                vec = np.concatenate(([lo], rest))
                if self.op.evaluate(vec) < target:
                    return lo
                raise StructuralError(
                    "no sign change before the cone boundary; the boundary "
                    "condition limsup f < inf g appears to fail here"
                )
            if self.op.evaluate(vec) < target:
                return cand
            lo = cand
            step *= 2.0
        raise StructuralError("lower-bracket search budget exhausted")

    def _solve_first_coord(self, rest, target, hi, warm_key, tol=1e-12):
        """Root h of f(h, rest...) = target with h <= hi and f(hi,...) >= target."""
        def resid(h):
            return self.op.evaluate(np.concatenate(([h], rest))) - target

        def dresid(h):
            return float(self.op.gradient(np.concatenate(([h], rest)))[0])

        top = resid(hi)
        if top < -1e-9 * max(1.0, abs(target)):
            raise DomainError("upper endpoint has f below the target")
        if abs(top) <= tol:
            return hi
        lo = self._first_coord_lower(rest, hi, target)
        guess = self._warm.get(warm_key, 0.5 * (lo + hi))
        root = self._newton_brent(resid, dresid, lo, hi, guess, tol)
        self._warm[warm_key] = root
        return root

    # -- diagonal envelopes --------------------------------------------------

    def _diagonal_solve(self, target):
        def resid(w):
            return self.op.evaluate(w * self.a) - target

        def dresid(w):
            return float(np.dot(self.a, self.op.gradient(w * self.a)))

        lo = hi = 1.0
        while resid(lo) > 0.0:
            lo *= 0.5
            if lo < 1e-300:
                raise StructuralError("no lower bracket on the diagonal ray")
        while resid(hi) < 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise StructuralError("no upper bracket on the diagonal ray")
        if lo == hi:
            return 1.0
        return self._newton_brent(resid, dresid, lo, hi, 0.5 * (lo + hi))

    def w0(self, s: float) -> float:
        """The diagonal scaling with f(w a) equal to the upper envelope."""
        if s < self.rhs.s0 - 1e-12:
            raise DomainError(f"s={s} below s0={self.rhs.s0}")
        if self.rhs.C0 == 0.0:
            return 1.0
        key = ("w0", _key(s))
        if key not in self._cache:
            self._cache[key] = self._diagonal_solve(float(self.rhs.gbar(s)))
        return self._cache[key]

    def W0(self, s: float) -> float:
        """The diagonal scaling with f(w a) equal to the lower envelope."""
        if s < self.rhs.s0 - 1e-12:
            raise DomainError(f"s={s} below s0={self.rhs.s0}")
        if self.rhs.C0 == 0.0:
            return 1.0
        key = ("W0", _key(s))
        if key not in self._cache:
            self._cache[key] = self._diagonal_solve(float(self.rhs.gunder(s)))
        return self._cache[key]

    # -- first-coordinate solves ----------------------------------------------

    def h(self, s: float, w: float) -> float:
        """First coordinate with f(h, a2 w, ..., an w) = upper envelope."""
        if w < self.w0(s) - 1e-9:
            raise DomainError(f"w={w} below w0({s})={self.w0(s)}")
        key = ("h", _key(s, w))
        if key not in self._cache:
            rest = self.a[1:] * w
            self._cache[key] = self._solve_first_coord(
                rest, float(self.rhs.gbar(s)), self.a[0] * w, ("h",)
            )
        return self._cache[key]

    def H(self, s: float, w: float) -> float:
        """First coordinate with f(H, a2 w, ..., an w) = lower envelope.

        Needs the eigenvalue-shift condition: the doubling search fails
        structurally when f stays below the envelope for any shift.
        """
        if w <= 0.0:
            raise DomainError("w must be positive")
        if w > self.W0(s) + 1e-9:
            raise DomainError(f"w={w} above W0({s})={self.W0(s)}")
        key = ("H", _key(s, w))
        if key not in self._cache:
            rest = self.a[1:] * w
            target = float(self.rhs.gunder(s))

            def resid(Hv):
                return self.op.evaluate(np.concatenate(([Hv], rest))) - target

            def dresid(Hv):
                return float(self.op.gradient(np.concatenate(([Hv], rest)))[0])

            lo = self.a[0] * w
            hi = max(lo, 1.0)
            budget = 0
            while resid(hi) < 0.0:
                hi *= 2.0
                budget += 1
                if budget > 45:
                    raise StructuralError(
                        "no upper bracket for H within the shift budget; the "
                        "eigenvalue-shift condition fails for this operator"
                    )
            guess = self._warm.get(("H",), 0.5 * (lo + hi))
            root = self._newton_brent(resid, dresid, lo, hi, guess)
            self._warm[("H",)] = root
            self._cache[key] = root
        return self._cache[key]

    # -- radial quantities ----------------------------------------------------

    def a_tilde(self) -> float:
        """Diagonal constant with f(a_tilde, ..., a_tilde) = inf g."""
        key = ("a_tilde",)
        if key not in self._cache:
            from .symfun import diagonal_root

            self._cache[key] = diagonal_root(self.op, self.rhs.inf_g)
        return self._cache[key]

    def hbar(self, w: float) -> float:
        """First coordinate with f(hbar, at w, ..., at w) = inf g."""
        if w <= 0.0:
            raise DomainError("w must be positive")
        at = self.a_tilde()
        key = ("hbar", _key(w))
        if key not in self._cache:
            rest = np.full(self.op.dimension - 1, at * w)
            self._cache[key] = self._solve_first_coord(
                rest, self.rhs.inf_g, at * w, ("hbar",)
            )
        return self._cache[key]
