"""The saddle point alpha(x, y) of the smooth-number counting function.

``alpha`` is the root of ``sum_{p <= y} log p / (p^alpha - 1) = log x``. The
checks below compare exact counts from :mod:`smoothdio.smooth` with the
local scaling law ``Psi(cx, y) ~ Psi(x, y) c^alpha`` and with the
``x^(1 - 1/C +- eps)`` bounds for ``y = (log x)^C``. Those statements carry
unquantified constants, so the checks return reports rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import HypothesisViolated, NoBracket, ToleranceUnreachable
from .smooth import Real, primes_upto, psi

RESIDUAL_RTOL = 1e-9
_BISECT_WIDTH = 1e-7
_MAX_NEWTON = 60


@dataclass(frozen=True)
class SaddleResult:
    x: float
    y: float
    alpha: float
    residual: float
    u_ht: float

    def to_dict(self) -> dict:
        return asdict(self)


def saddle_sum(alpha: float, y: Real) -> float:
    """``sum_{p <= y} log p / (p^alpha - 1)``."""
    logs = np.log(primes_upto(math.floor(y)).astype(np.float64))
    return math.fsum((logs / np.expm1(alpha * logs)).tolist())


def _saddle_derivative(alpha: float, logs: np.ndarray) -> float:
    em = np.expm1(alpha * logs)
    return -math.fsum((logs * logs * (em + 1.0) / (em * em)).tolist())


def solve_alpha(x: Real, y: Real) -> SaddleResult:
    """Solve for alpha by bisection down to a narrow bracket, then Newton steps.

    The left side is strictly decreasing in alpha and blows up at 0+, so the
    root is unique. It lies in (0, 1] for most ``x >= y``; for very small
    ``y`` it can exceed 1 (e.g. x = y = 3), and the upper bracket end is
    doubled until it straddles the root.
    """
    x, y = float(x), float(y)
    if not (y >= 2 and x >= y):
        raise HypothesisViolated("solve_alpha needs x >= y >= 2")
    logs = np.log(primes_upto(math.floor(y)).astype(np.float64))
    logx = math.log(x)
    tol = RESIDUAL_RTOL * logx

    def f(a: float) -> float:
        return math.fsum((logs / np.expm1(a * logs)).tolist()) - logx

    lo, hi = 1e-6, 1.0 + 1e-6
    while f(lo) <= 0:
        lo /= 2
        if lo < 1e-300:
            raise NoBracket(f"no bracket for alpha at x={x}, y={y}")
    while f(hi) >= 0:
        hi *= 2
        if hi > 1e6:
            raise NoBracket(f"no bracket for alpha at x={x}, y={y}")

    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid

    a = 0.5 * (lo + hi)
    r = f(a)
    for _ in range(_MAX_NEWTON):
        if abs(r) <= tol:
            break
        step = a - r / _saddle_derivative(a, logs)
        # stay inside the bracket; fall back to bisection if Newton leaves it
        if r > 0:
            lo = a
        else:
            hi = a
        a = step if lo < step < hi else 0.5 * (lo + hi)
        r = f(a)
    if abs(r) > tol:
        raise ToleranceUnreachable(f"alpha residual {r:.3g} above {tol:.3g} at x={x}, y={y}")
    return SaddleResult(x=x, y=y, alpha=a, residual=r, u_ht=logx / math.log(y))


@dataclass(frozen=True)
class ScalingReport:
    x: float
    y: float
    c: float
    alpha: float
    psi_x: int
    psi_cx: int
    measured: float
    predicted: float
    relative_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_scaling_law(x: Real, y: Real, c: Real) -> ScalingReport:
    """Compare ``Psi(cx, y) / Psi(x, y)`` against ``c^alpha(x, y)``."""
    if not 1 <= float(c) <= float(y):
        raise HypothesisViolated("scaling law needs 1 <= c <= y")
    a = solve_alpha(x, y).alpha
    px = psi(x, y).value
    pcx = psi(float(c) * float(x), y).value
    measured = pcx / px
    predicted = float(c) ** a
    return ScalingReport(
        x=float(x),
        y=float(y),
        c=float(c),
        alpha=a,
        psi_x=px,
        psi_cx=pcx,
        measured=measured,
        predicted=predicted,
        relative_gap=abs(measured - predicted) / predicted,
    )


@dataclass(frozen=True)
class Lemma2Report:
    x: float
    C: float
    eps: float
    y: float
    alpha: float
    alpha_target: float
    alpha_gap: float
    alpha_ok: bool
    psi: int
    psi_lower: float
    psi_upper: float
    psi_lower_ok: bool
    psi_upper_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_lemma2_bounds(x: Real, C: Real, eps: Real) -> Lemma2Report:
    """With ``y = (log x)^C``: is ``|alpha - (1 - 1/C)| < eps`` and
    ``x^(1-1/C-eps) <= Psi(x, y) <= x^(1-1/C+eps)`` at this finite x?"""
    x, C, eps = float(x), float(C), float(eps)
    if C <= 1 or eps <= 0:
        raise HypothesisViolated("lemma2 check needs C > 1 and eps > 0")
    y = math.log(x) ** C
    if y < 2:
        raise HypothesisViolated(f"y = (log x)^C = {y:.4g} is below 2")
    if y > x:
        raise HypothesisViolated(f"y = (log x)^C = {y:.4g} exceeds x")
    a = solve_alpha(x, y).alpha
    target = 1.0 - 1.0 / C
    count = psi(x, y).value
    lower = x ** (target - eps)
    upper = x ** (target + eps)
    return Lemma2Report(
        x=x,
        C=C,
        eps=eps,
        y=y,
        alpha=a,
        alpha_target=target,
        alpha_gap=abs(a - target),
        alpha_ok=abs(a - target) < eps,
        psi=count,
        psi_lower=lower,
        psi_upper=upper,
        psi_lower_ok=lower <= count,
        psi_upper_ok=count <= upper,
    )
