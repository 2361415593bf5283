"""Irrational numbers, continued-fraction convergents and certified ``||theta n + phi||``.

Three families of theta are supported:

* quadratic surds ``(p + q*sqrt(d)) / r``, expanded exactly on integer triples;
* the named constants ``e`` and the golden ratio, via their known patterns;
* decimal literals carrying a stated number of correct digits, expanded
  only as far as both ends of the uncertainty interval agree.

Real evaluation goes through mpmath interval arithmetic; interval endpoints
are converted to :class:`fractions.Fraction` so every comparison downstream
is exact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from itertools import count
from typing import Iterator, Union

from mpmath.ctx_iv import MPIntervalContext
from mpmath.libmp import to_man_exp

from .errors import HypothesisViolated, NotIrrational, PrecisionExhausted

# working precision is given in decimal digits
DEFAULT_PRECISION_CAP = 2000
_START_DIGITS = 30
_LOG2_10 = math.log2(10)

SURD = "surd"
E = "e"
GOLDEN = "golden"
DECIMAL = "decimal"


@dataclass(frozen=True)
class IrrationalSpec:
    """A real number given exactly enough to expand and evaluate it.

    Use the constructors :meth:`sqrt`, :meth:`surd`, :meth:`e`,
    :meth:`golden` and :meth:`decimal` rather than the raw fields.
    """

    kind: str
    p: int = 0
    q: int = 0
    d: int = 0
    r: int = 1
    digits: str = ""
    precision: int = 0

    def __post_init__(self):
        if self.kind == SURD:
            if self.d <= 0 or math.isqrt(self.d) ** 2 == self.d or self.q == 0:
                raise NotIrrational(f"surd ({self.p}+{self.q}*sqrt({self.d}))/{self.r} is rational")
            if self.r == 0:
                raise HypothesisViolated("surd denominator r must be nonzero")
        elif self.kind == DECIMAL:
            if self.precision < 50:
                raise HypothesisViolated("decimal literal precision must be >= 50")
            ndigits = sum(ch.isdigit() for ch in self.digits)
            if ndigits < self.precision:
                raise HypothesisViolated(
                    f"decimal literal has {ndigits} digits, fewer than its precision {self.precision}"
                )
            try:
                Decimal(self.digits)
            except InvalidOperation:
                raise HypothesisViolated(f"bad decimal literal {self.digits!r}") from None
        elif self.kind not in (E, GOLDEN):
            raise HypothesisViolated(f"unknown irrational kind {self.kind!r}")

    @classmethod
    def sqrt(cls, d: int) -> IrrationalSpec:
        return cls(SURD, p=0, q=1, d=d, r=1)

    @classmethod
    def surd(cls, p: int, q: int, d: int, r: int) -> IrrationalSpec:
        return cls(SURD, p=p, q=q, d=d, r=r)

    @classmethod
    def e(cls) -> IrrationalSpec:
        return cls(E)

    @classmethod
    def golden(cls) -> IrrationalSpec:
        return cls(GOLDEN)

    @classmethod
    def decimal(cls, digits: str, precision: int) -> IrrationalSpec:
        return cls(DECIMAL, digits=digits, precision=precision)

    @property
    def literal_value(self) -> Fraction:
        """Exact rational value of the digit string (decimal literals only)."""
        return Fraction(Decimal(self.digits))

    @property
    def literal_radius(self) -> Fraction:
        return Fraction(1, 10**self.precision)

    def __str__(self) -> str:
        if self.kind == SURD:
            if (self.p, self.q, self.r) == (0, 1, 1):
                return f"sqrt:{self.d}"
            return f"surd:{self.p},{self.q},{self.d},{self.r}"
        if self.kind == E:
            return "e"
        if self.kind == GOLDEN:
            return "phi-golden"
        return f"dec:{self.digits}@{self.precision}"


Phase = Union[Fraction, IrrationalSpec]


def parse_theta(text: str) -> IrrationalSpec:
    """Parse ``sqrt:<d>``, ``surd:<p>,<q>,<d>,<r>``, ``e``, ``phi-golden`` or ``dec:<digits>@<precision>``."""
    text = text.strip()
    if text == "e":
        return IrrationalSpec.e()
    if text == "phi-golden":
        return IrrationalSpec.golden()
    tag, sep, body = text.partition(":")
    if not sep:
        raise HypothesisViolated(f"cannot parse irrational {text!r}")
    try:
        if tag == "sqrt":
            return IrrationalSpec.sqrt(int(body))
        if tag == "surd":
            p, q, d, r = (int(part) for part in body.split(","))
            return IrrationalSpec.surd(p, q, d, r)
        if tag == "dec":
            digits, _, prec = body.rpartition("@")
            return IrrationalSpec.decimal(digits, int(prec))
    except ValueError as exc:
        if isinstance(exc, HypothesisViolated):
            raise
        raise HypothesisViolated(f"cannot parse irrational {text!r}") from None
    raise HypothesisViolated(f"cannot parse irrational {text!r}")


def parse_phase(text: str) -> Phase:
    """Parse ``rat:<num>/<den>`` (or ``rat:<num>``) or ``dec:<digits>@<precision>``."""
    text = text.strip()
    if text.startswith("rat:"):
        try:
            return Fraction(text[4:])
        except (ValueError, ZeroDivisionError):
            raise HypothesisViolated(f"cannot parse rational {text!r}") from None
    if text.startswith("dec:"):
        return parse_theta(text)
    raise HypothesisViolated(f"cannot parse phase {text!r}")


def format_phase(phi: Phase) -> str:
    if isinstance(phi, IrrationalSpec):
        return str(phi)
    return f"rat:{phi.numerator}/{phi.denominator}"


# --- continued fractions -------------------------------------------------------


def _surd_quotients(spec: IrrationalSpec) -> Iterator[int]:
    p, q, d, r = spec.p, spec.q, spec.d, spec.r
    if q < 0:
        p, q, r = -p, -q, -r
    # x = (P + sqrt(D)) / Q with Q | D - P^2
    P, D, Q = p, q * q * d, r
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    s = math.isqrt(D)
    while True:
        if Q > 0:
            a = (P + s) // Q
        else:
            a = -((P + s) // -Q) - 1
        yield a
        P = a * Q - P
        Q = (D - P * P) // Q


def _e_quotients() -> Iterator[int]:
    yield 2
    for k in count(1):
        yield 1
        yield 2 * k
        yield 1


def _fraction_quotients(x: Fraction) -> Iterator[tuple[int, bool]]:
    # (partial quotient, whether the complete quotient was exactly that integer)
    while True:
        a = math.floor(x)
        rest = x - a
        yield a, rest == 0
        if rest == 0:
            return
        x = 1 / rest


def _decimal_quotients(spec: IrrationalSpec) -> Iterator[int]:
    lo = spec.literal_value - spec.literal_radius
    hi = spec.literal_value + spec.literal_radius
    # the set of reals sharing a CF prefix is an interval, so a prefix shared by
    # both endpoints (with non-terminal complete quotients) is shared by all of [lo, hi]
    for (a_lo, end_lo), (a_hi, end_hi) in zip(_fraction_quotients(lo), _fraction_quotients(hi)):
        if a_lo != a_hi or end_lo or end_hi:
            break
        yield a_lo
    raise PrecisionExhausted(f"{spec} is too short to certify the next partial quotient")


def partial_quotients(theta: IrrationalSpec) -> Iterator[int]:
    """Partial quotients ``a_0, a_1, ...`` of the continued fraction of theta."""
    if theta.kind == SURD:
        return _surd_quotients(theta)
    if theta.kind == GOLDEN:
        return iter(lambda: 1, None)
    if theta.kind == E:
        return _e_quotients()
    return _decimal_quotients(theta)


@dataclass(frozen=True)
class Convergent:
    a: int
    q: int
    index: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.a, self.q)

    def __str__(self) -> str:
        return f"{self.a}/{self.q}"


def iter_convergents(theta: IrrationalSpec, precision_cap: int = DEFAULT_PRECISION_CAP) -> Iterator[Convergent]:
    """All convergents of theta in order, each checked against ``|theta - a/q| < 1/q^2``.

    Raises :class:`PrecisionExhausted` from a decimal literal that runs out
    of certified partial quotients.
    """
    p_prev, q_prev = 0, 1
    p, q = 1, 0
    for k, a_k in enumerate(partial_quotients(theta)):
        p_prev, p = p, a_k * p + p_prev
        q_prev, q = q, a_k * q + q_prev
        conv = Convergent(p, q, k)
        _check_convergent(theta, conv, precision_cap)
        yield conv


def convergents(theta: IrrationalSpec, q_max: int, precision_cap: int = DEFAULT_PRECISION_CAP) -> list[Convergent]:
    """Every convergent ``a/q`` of theta with ``q <= q_max``."""
    if q_max < 1:
        raise HypothesisViolated("q_max must be >= 1")
    if theta.kind == DECIMAL and q_max * q_max > 10**theta.precision:
        raise PrecisionExhausted(f"q_max^2 exceeds 10^{theta.precision}, the certified precision of {theta}")
    out: list[Convergent] = []
    it = iter_convergents(theta, precision_cap)
    while True:
        if len(out) >= 2 and out[-1].q + out[-2].q > q_max:
            # the next denominator is at least q_k + q_{k-1}
            return out
        conv = next(it)
        if conv.q > q_max:
            return out
        out.append(conv)


def _check_convergent(theta: IrrationalSpec, conv: Convergent, precision_cap: int) -> None:
    bound = Fraction(1, conv.q)
    digits = _START_DIGITS + 2 * len(str(conv.q))
    while True:
        lo, hi = _enclose(theta, conv.q, Fraction(-conv.a), digits)
        err_hi = max(abs(lo), abs(hi))
        if err_hi < bound:
            return
        if min(abs(lo), abs(hi)) >= bound and lo * hi > 0:
            raise AssertionError(f"{conv} violates |theta - a/q| < 1/q^2 for {theta}")
        if theta.kind == DECIMAL or digits >= precision_cap:
            raise PrecisionExhausted(f"cannot certify {conv} as a convergent of {theta}")
        digits = min(2 * digits, precision_cap)


# --- interval evaluation -------------------------------------------------------

_local = threading.local()


def _context(digits: int) -> MPIntervalContext:
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    ctx = cache.get(digits)
    if ctx is None:
        ctx = MPIntervalContext()
        ctx.prec = int(digits * _LOG2_10) + 16
        cache[digits] = ctx
    return ctx


def _to_fraction(raw) -> Fraction:
    man, exp = to_man_exp(raw)
    return Fraction(int(man)) * (Fraction(2) ** int(exp))


def _fraction_iv(ctx: MPIntervalContext, x: Fraction):
    return ctx.mpf(x.numerator) / x.denominator


def _theta_iv(ctx: MPIntervalContext, theta: IrrationalSpec):
    if theta.kind == SURD:
        return (theta.p + theta.q * ctx.sqrt(theta.d)) / theta.r
    if theta.kind == GOLDEN:
        return (1 + ctx.sqrt(5)) / 2
    if theta.kind == E:
        return ctx.e
    w = ctx.mpf(1) / ctx.mpf(10) ** theta.precision
    return _fraction_iv(ctx, theta.literal_value) + ctx.mpf([-1, 1]) * w


def _phase_iv(ctx: MPIntervalContext, phi: Phase):
    if isinstance(phi, IrrationalSpec):
        return _theta_iv(ctx, phi)
    return _fraction_iv(ctx, Fraction(phi))


def _enclose(theta: IrrationalSpec, n: int, offset: Phase, digits: int) -> tuple[Fraction, Fraction]:
    """Exact rational bounds on ``theta*n + offset``."""
    ctx = _context(max(digits, _START_DIGITS))
    t = _theta_iv(ctx, theta) * n + _phase_iv(ctx, offset)
    a, b = t._mpi_
    return _to_fraction(a), _to_fraction(b)


def enclose(theta: IrrationalSpec, digits: int = 50) -> tuple[Fraction, Fraction]:
    """Rational lower and upper bounds on theta at about ``digits`` decimal digits."""
    return _enclose(theta, 1, Fraction(0), digits)


def approx(x: Phase) -> float:
    """Nearest-double approximation, for fast prefiltering only."""
    if isinstance(x, IrrationalSpec):
        lo, hi = _enclose(x, 1, Fraction(0), _START_DIGITS)
        return float((lo + hi) / 2)
    return float(x)


@dataclass(frozen=True)
class CertifiedDistance:
    """A certified enclosure ``lo <= value <= hi`` with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    @property
    def value(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def radius(self) -> Fraction:
        return (self.hi - self.lo) / 2

    def __float__(self) -> float:
        return float(self.value)


def _interval_norm(lo: Fraction, hi: Fraction) -> CertifiedDistance:
    k = round((lo + hi) / 2)
    lows, highs = [], []
    for j in (k - 1, k, k + 1):
        a, b = lo - j, hi - j
        lows.append(Fraction(0) if a <= 0 <= b else min(abs(a), abs(b)))
        highs.append(max(abs(a), abs(b)))
    return CertifiedDistance(min(lows), min(min(highs), Fraction(1, 2)))


def distance_to_integer(
    theta: IrrationalSpec, phi: Phase, n: int, precision_cap: int = DEFAULT_PRECISION_CAP
) -> CertifiedDistance:
    """Certified ``||theta*n + phi||`` with radius at most ``1e-6`` times the value.

    Working precision doubles from about 30 digits up to ``precision_cap``
    digits; :class:`PrecisionExhausted` is raised when the relative radius
    cannot be reached (for instance when a decimal-literal input is too
    coarse).
    """
    if n < 1:
        raise HypothesisViolated("n must be >= 1")
    digits = min(_START_DIGITS + len(str(n)), precision_cap)
    prev_radius = None
    while True:
        d = _interval_norm(*_enclose(theta, n, phi, digits))
        if d.radius * 10**6 <= d.value:
            return d
        stalled = prev_radius is not None and d.radius * 2 > prev_radius
        if digits >= precision_cap or stalled:
            raise PrecisionExhausted(
                f"||theta*n + phi|| for n={n} not certified to 1e-6 relative at {digits} digits"
            )
        prev_radius = d.radius
        digits = min(2 * digits, precision_cap)


def convergent_error(theta: IrrationalSpec, conv: Convergent, digits: int = 60) -> CertifiedDistance:
    """Certified enclosure of ``|theta - a/q|``."""
    lo, hi = _enclose(theta, conv.q, Fraction(-conv.a), digits + 2 * len(str(conv.q)))
    lo, hi = lo / conv.q, hi / conv.q
    if lo >= 0:
        return CertifiedDistance(lo, hi)
    if hi <= 0:
        return CertifiedDistance(-hi, -lo)
    return CertifiedDistance(Fraction(0), max(-lo, hi))


def power_bounds(n: int, exponent: Fraction, digits: int = 40) -> tuple[Fraction, Fraction]:
    """Rational bounds on ``n ** exponent`` for a positive integer ``n``."""
    ctx = _context(digits)
    val = ctx.exp(ctx.log(ctx.mpf(n)) * _fraction_iv(ctx, Fraction(exponent)))
    a, b = val._mpi_
    return _to_fraction(a), _to_fraction(b)
