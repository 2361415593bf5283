"""End-to-end construction of smooth ``n`` with small ``||theta n + phi||``.

From a convergent ``a/q`` of theta and parameters ``C > 2``, ``eps > 0``:

* ``gamma = 1/3 - 2/(3C) - 5 eps/6`` (must be positive),
* ``x`` is defined by ``x^((1+gamma)/2) = q`` and ``y = (log x)^C``,
* ``S`` and ``J`` are the ``y``-smooth integers in ``[q, 2q)`` and
  ``[x^((1-gamma)/2), 2 x^((1-gamma)/2))``,
* a solution is a pair ``(u, v)`` in ``S x J`` with
  ``||a u v / q + phi|| <= x^(-gamma)``.

Each solution ``n = u v`` lies in ``[x, 4x)``, so
``||theta n + phi|| <= x^(-gamma) + 4x/q^2``. Records are certified
individually: smoothness, the rational distance bound, the chain bound,
and the final inequality ``||theta n + phi|| < n^(-(1/3 - 2/(3C)) + eps)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import expsum
from .errors import (
    BudgetExceeded,
    GammaNonpositive,
    HypothesisViolated,
    NoConvergentInPrecision,
    PrecisionExhausted,
)
from .irrational import (
    DEFAULT_PRECISION_CAP,
    CertifiedDistance,
    Convergent,
    IrrationalSpec,
    Phase,
    approx,
    convergent_error,
    distance_to_integer,
    format_phase,
    iter_convergents,
    power_bounds,
)
from .smooth import SmoothWindow, is_smooth, largest_prime_factor, lpf_table, sieve_window

DEFAULT_EPS = 0.05
DEFAULT_WORK_BUDGET = 10**10
# float prefilter error, relative to |theta|*n + |phi| + 1
_FLOAT_SLACK = 2.0**-48
_PLAN_RTOL = 1e-9


def gamma_for(C: float, eps: float) -> float:
    return 1 / 3 - 2 / (3 * C) - 5 * eps / 6


def theorem_exponent(C: float) -> Fraction:
    """``1/3 - 2/(3C)`` as an exact rational (C taken as its exact binary value)."""
    return Fraction(1, 3) - Fraction(2, 3) / Fraction(C)


def _phase_fraction(phi: Phase) -> Fraction:
    if isinstance(phi, IrrationalSpec):
        if phi.kind != "decimal":
            raise HypothesisViolated("phi must be a rational or a decimal literal")
        return phi.literal_value
    return Fraction(phi)


@dataclass(frozen=True)
class ConstructionPlan:
    theta: IrrationalSpec
    phi: Phase
    C: float
    eps: float
    gamma: float
    convergent: Convergent
    x: float
    y: float
    H: int
    J_start: float
    threshold: float

    @property
    def a(self) -> int:
        return self.convergent.a

    @property
    def q(self) -> int:
        return self.convergent.q

    @property
    def S_range(self) -> tuple[int, int]:
        # x^((1+gamma)/2) is q by definition; use the integer to avoid rounding past it
        return (self.q, 2)

    @property
    def J_range(self) -> tuple[float, int]:
        return (self.J_start, 2)

    def to_dict(self) -> dict:
        return {
            "theta": str(self.theta),
            "phi": format_phase(self.phi),
            "C": self.C,
            "eps": self.eps,
            "gamma": self.gamma,
            "a": self.a,
            "q": self.q,
            "convergent_index": self.convergent.index,
            "x": self.x,
            "y": self.y,
            "H": self.H,
            "S_range": list(self.S_range),
            "J_range": list(self.J_range),
            "threshold": self.threshold,
        }


def make_plan(
    theta: IrrationalSpec,
    phi: Phase,
    C: float,
    eps: float,
    q_min: int,
    *,
    precision_cap: int = DEFAULT_PRECISION_CAP,
) -> ConstructionPlan:
    """Derive every construction parameter from the smallest convergent with ``q >= q_min``."""
    C, eps = float(C), float(eps)
    if not C > 2:
        raise HypothesisViolated(f"C must exceed 2 (got {C})")
    if not eps > 0:
        raise HypothesisViolated(f"eps must be positive (got {eps})")
    gamma = gamma_for(C, eps)
    if not gamma > 0:
        raise GammaNonpositive(f"gamma = 1/3 - 2/(3C) - 5eps/6 = {gamma:.6g} is not positive for C={C}, eps={eps}")
    _phase_fraction(phi)
    try:
        conv = next(c for c in iter_convergents(theta, precision_cap) if c.q >= q_min)
    except PrecisionExhausted as exc:
        raise NoConvergentInPrecision(f"no convergent with q >= {q_min} within precision: {exc}") from None
    q = conv.q
    logx = 2 * math.log(q) / (1 + gamma)
    x = math.exp(logx)
    y = logx**C
    if y < 2:
        raise HypothesisViolated(f"y = (log x)^C = {y:.4g} < 2; raise q_min")
    if abs(x ** ((1 + gamma) / 2) - q) > _PLAN_RTOL * q:
        raise PrecisionExhausted("x^((1+gamma)/2) does not reproduce q to 1e-9")
    return ConstructionPlan(
        theta=theta,
        phi=phi,
        C=C,
        eps=eps,
        gamma=gamma,
        convergent=conv,
        x=x,
        y=y,
        H=math.floor(x**gamma) + 1,
        J_start=x / q,
        threshold=x**-gamma,
    )


def plan_windows(plan: ConstructionPlan, *, workers: int = 1, cache_dir=None) -> tuple[SmoothWindow, SmoothWindow]:
    S = sieve_window(plan.q, 2, plan.y, workers=workers, cache_dir=cache_dir)
    J = sieve_window(plan.J_start, 2, plan.y, workers=workers, cache_dir=cache_dir)
    return S, J


# --- exact rational distances mod q ----------------------------------------------


@dataclass(frozen=True, eq=False)
class ResidueTable:
    """For each ``s mod q``: ``||s/q + phi||`` as ``num[s] / denom`` and whether it is ``<= threshold``."""

    q: int
    denom: int
    num: np.ndarray
    ok: np.ndarray
    allowed: np.ndarray

    def distance(self, s: int) -> Fraction:
        return Fraction(int(self.num[s]), self.denom)


def residue_table(q: int, phi: Phase, threshold: float) -> ResidueTable:
    ph = _phase_fraction(phi)
    M = q * ph.denominator // math.gcd(q, ph.denominator)
    shift = (ph.numerator * (M // ph.denominator)) % M
    step = M // q
    cut = math.floor(Fraction(threshold) * M)
    if M < 2**62:
        r = (np.arange(q, dtype=np.int64) * step + shift) % M
        num = np.minimum(r, M - r)
    else:
        vals = [(s * step + shift) % M for s in range(q)]
        num = np.array([min(v, M - v) for v in vals], dtype=object)
    ok = np.asarray(num <= cut, dtype=bool)
    return ResidueTable(q=q, denom=M, num=num, ok=ok, allowed=np.flatnonzero(ok).astype(np.int64))


# --- solutions -----------------------------------------------------------------


@dataclass(frozen=True)
class Certification:
    passed: bool
    margin: float
    theorem_bound: float
    theorem_ok: bool
    chain_bound: float
    chain_ok: bool
    triangle_bound: float
    triangle_ok: bool
    eq23_ok: bool
    smooth_ok: bool
    largest_prime_factor: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SolutionRecord:
    n: int
    u: int
    v: int
    dist_rational: Fraction
    dist_true: CertifiedDistance
    achieved_exponent: float
    certificate: Optional[Certification] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "u": self.u,
            "v": self.v,
            "dist_rational": self.dist_rational,
            "dist_true": float(self.dist_true.value),
            "dist_true_radius": float(self.dist_true.radius),
            "achieved_exponent": self.achieved_exponent,
        }
        if self.certificate is not None:
            out.update({f"cert_{k}": v for k, v in self.certificate.to_dict().items()})
        return out


def _achieved_exponent(dist: CertifiedDistance, n: int) -> float:
    return -math.log(float(dist.value)) / math.log(n) if n > 1 else math.nan


def certify_theorem_inequality(
    record: SolutionRecord, plan: ConstructionPlan, *, precision_cap: int = DEFAULT_PRECISION_CAP
) -> Certification:
    """Certify ``||theta n + phi|| < n^(-(1/3 - 2/(3C)) + eps)`` for one record, and the
    intermediate chain ``||theta n + phi|| <= x^(-gamma) + 4x/q^2``.

    ``margin`` is the certified gap between the theorem bound and the
    distance (positive on success). The record's distance is recomputed
    here rather than trusted.
    """
    n = record.n
    dist = distance_to_integer(plan.theta, plan.phi, n, precision_cap)
    bound_lo, _ = power_bounds(n, -theorem_exponent(plan.C) + Fraction(plan.eps))
    theorem_ok = dist.hi < bound_lo

    q = plan.q
    T = Fraction(plan.threshold)
    chain = T + 4 * Fraction(plan.x) / (q * q)
    chain_ok = dist.hi <= chain

    dr = plan_distance(plan, n)
    conv_err = convergent_error(plan.theta, plan.convergent)
    triangle = dr + n * conv_err.hi
    triangle_ok = dist.hi <= triangle

    eq23_ok = dr == record.dist_rational and dr <= T and record.u * record.v == n
    lpf = largest_prime_factor(n)
    smooth_ok = is_smooth(n, plan.y) and lpf <= plan.y and lpf <= math.log(n) ** plan.C

    return Certification(
        passed=theorem_ok and chain_ok and triangle_ok and eq23_ok and smooth_ok,
        margin=float(bound_lo - dist.hi),
        theorem_bound=float(bound_lo),
        theorem_ok=theorem_ok,
        chain_bound=float(chain),
        chain_ok=chain_ok,
        triangle_bound=float(triangle),
        triangle_ok=triangle_ok,
        eq23_ok=eq23_ok,
        smooth_ok=smooth_ok,
        largest_prime_factor=lpf,
    )


def plan_distance(plan: ConstructionPlan, n: int) -> Fraction:
    """Exact ``||a n / q + phi||``."""
    t = Fraction(plan.a * n, plan.q) + _phase_fraction(plan.phi)
    return abs(t - round(t))


def _hits_for_u(u: int, plan: ConstructionPlan, table: ResidueTable, jv: np.ndarray, jr: np.ndarray, slot):
    """Elements ``v`` of J with ``(a u v mod q)`` in the accepted residue set."""
    q = plan.q
    b = (plan.a * u) % q
    allowed = table.allowed
    if slot is not None and len(allowed) < len(jv) and math.gcd(b, q) == 1:
        # residue lookup: v = b^-1 * s (mod q) for each accepted s
        targets = (pow(b, -1, q) * allowed) % q
        idx = slot[targets]
        return np.sort(jv[idx[idx >= 0]])
    s = (b * jr) % q
    return jv[table.ok[s]]


def _scan_part(plan, table, S_part, jv, jr, slot, limit, theta_f, phi_f):
    # float prefilter: keep every pair that could be among the `limit` best by true distance
    keep_d, keep_e, keep_u, keep_v = [], [], [], []
    bound = math.inf
    pending = 0
    abs_theta, abs_phi = abs(theta_f), abs(phi_f)

    def prune(bound):
        d = np.concatenate(keep_d)
        e = np.concatenate(keep_e)
        uu = np.concatenate(keep_u)
        vv = np.concatenate(keep_v)
        if len(d) > limit:
            bound = min(bound, float(np.partition(d + e, limit - 1)[limit - 1]))
            sel = d - e <= bound
            d, e, uu, vv = d[sel], e[sel], uu[sel], vv[sel]
        return [d], [e], [uu], [vv], bound

    for u in S_part.tolist():
        vs = _hits_for_u(u, plan, table, jv, jr, slot)
        if len(vs) == 0:
            continue
        n = u * vs
        t = theta_f * n.astype(np.float64) + phi_f
        d = np.abs(t - np.rint(t))
        e = _FLOAT_SLACK * (abs_theta * n.astype(np.float64) + abs_phi + 1.0)
        sel = d - e <= bound
        if not sel.any():
            continue
        keep_d.append(d[sel])
        keep_e.append(e[sel])
        keep_u.append(np.full(int(sel.sum()), u, dtype=np.int64))
        keep_v.append(vs[sel])
        pending += int(sel.sum())
        if pending > 4 * limit + 2**16:
            keep_d, keep_e, keep_u, keep_v, bound = prune(bound)
            pending = len(keep_d[0])
    if not keep_d:
        empty = np.zeros(0)
        return empty, empty, empty.astype(np.int64), empty.astype(np.int64)
    keep_d, keep_e, keep_u, keep_v, _ = prune(bound)
    return keep_d[0], keep_e[0], keep_u[0], keep_v[0]


def search_solutions(
    plan: ConstructionPlan,
    limit: int,
    *,
    windows: Optional[tuple[SmoothWindow, SmoothWindow]] = None,
    workers: int = 1,
    work_budget: int = DEFAULT_WORK_BUDGET,
    precision_cap: int = DEFAULT_PRECISION_CAP,
    cache_dir=None,
) -> list[SolutionRecord]:
    """The ``limit`` best pairs ``(u, v)`` in ``S x J`` satisfying the rational distance
    condition, ordered by ``(||theta uv + phi||, n, u)``, each certified.

    For each ``u`` the admissible ``v`` are those whose residue mod q lands
    in the accepted class set; when ``a u`` is invertible mod q and that set
    is smaller than J, the classes are inverted and looked up in a residue
    index of J instead of scanning J.
    """
    if limit < 1:
        raise HypothesisViolated("limit must be >= 1")
    S, J = windows if windows is not None else plan_windows(plan, workers=workers, cache_dir=cache_dir)
    su = expsum._as_array(S)
    jv = expsum._as_array(J)
    if len(su) * len(jv) > work_budget:
        raise BudgetExceeded(f"|S|*|J| = {len(su) * len(jv)} exceeds work budget {work_budget}")
    q = plan.q
    table = residue_table(q, plan.phi, plan.threshold)
    jr = jv % q
    slot = None
    if len(np.unique(jr)) == len(jr):
        slot = np.full(q, -1, dtype=np.int64)
        slot[jr] = np.arange(len(jv), dtype=np.int64)

    theta_f = approx(plan.theta)
    phi_f = approx(plan.phi)
    parts = np.array_split(su, max(1, workers)) if workers > 1 else [su]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda p: _scan_part(plan, table, p, jv, jr, slot, limit, theta_f, phi_f), parts)
            )
    else:
        results = [_scan_part(plan, table, su, jv, jr, slot, limit, theta_f, phi_f)]

    d = np.concatenate([r[0] for r in results])
    e = np.concatenate([r[1] for r in results])
    uu = np.concatenate([r[2] for r in results]).astype(np.int64)
    vv = np.concatenate([r[3] for r in results]).astype(np.int64)
    if len(d) > limit:
        bound = float(np.partition(d + e, limit - 1)[limit - 1])
        sel = d - e <= bound
        uu, vv = uu[sel], vv[sel]

    records = []
    for u, v in zip(uu.tolist(), vv.tolist()):
        n = u * v
        dist = distance_to_integer(plan.theta, plan.phi, n, precision_cap)
        records.append(
            SolutionRecord(
                n=n,
                u=u,
                v=v,
                dist_rational=table.distance((plan.a * n) % q),
                dist_true=dist,
                achieved_exponent=_achieved_exponent(dist, n),
            )
        )
    records.sort(key=lambda r: (r.dist_true.value, r.n, r.u))
    out = []
    for rec in records[:limit]:
        cert = certify_theorem_inequality(rec, plan, precision_cap=precision_cap)
        out.append(
            SolutionRecord(rec.n, rec.u, rec.v, rec.dist_rational, rec.dist_true, rec.achieved_exponent, cert)
        )
    return out


def count_solutions(plan: ConstructionPlan, windows: tuple[SmoothWindow, SmoothWindow]) -> int:
    """Number of pairs in ``S x J`` satisfying the rational distance condition."""
    S, J = windows
    table = residue_table(plan.q, plan.phi, plan.threshold)
    jr = expsum._as_array(J) % plan.q
    total = 0
    for u in expsum._as_array(S).tolist():
        b = (plan.a * u) % plan.q
        total += int(np.count_nonzero(table.ok[(b * jr) % plan.q]))
    return total


# --- diagnostics ---------------------------------------------------------------


def diagnostics(
    plan: ConstructionPlan,
    *,
    windows: Optional[tuple[SmoothWindow, SmoothWindow]] = None,
    workers: int = 1,
    work_budget: int = DEFAULT_WORK_BUDGET,
    cache_dir=None,
) -> dict:
    """Measured counterparts of the cardinality bounds for S and J, of
    ``sum_h |S_h|``, and of its bilinear rewriting with dyadic blocks.

    Implied constants are unknown, so this reports raw values and exponents
    (``log(value) / log x``) next to the predicted exponents; nothing is
    asserted. The lower exponent ``1 - 1/C - eps/8`` applies only when no
    solution exists, which ``solutions`` records.
    """
    S, J = windows if windows is not None else plan_windows(plan, workers=workers, cache_dir=cache_dir)
    C, eps, g = plan.C, plan.eps, plan.gamma
    logx = math.log(plan.x) if plan.x > 1 else math.nan

    def expo(v: float) -> float:
        return math.log(v) / logx if v > 0 and logx > 0 else math.nan

    series = expsum.eval_S_h(S, J, plan.a, plan.q, plan.H, workers=workers, work_budget=work_budget)
    c_h = expsum.phase_coefficients(series)
    bw = expsum.build_bw_coefficients(J, plan.H, c_h)
    identity = expsum.bilinear_form(S, bw, plan.a, plan.q)
    dyadic = expsum.lemma4_dyadic(S, bw, plan.a, plan.q, work_budget=work_budget)
    b_max = max((abs(v) for v in bw.values()), default=0.0)
    b_l2 = math.fsum(abs(v) ** 2 for v in bw.values())
    return {
        "q": plan.q,
        "x": plan.x,
        "gamma": g,
        "H": plan.H,
        "size_S": len(S),
        "size_J": len(J),
        "S_window_length": plan.q,
        "S_within_window": len(S) <= plan.q,
        "S_exponent": expo(len(S)),
        "S_exponent_predicted": (1 + g) / 2 * (1 - 1 / C),
        "J_exponent": expo(len(J)),
        "J_exponent_predicted": (1 - g) / 2 * (1 - 1 / C),
        "sum_abs_S_h": series.total,
        "sum_exponent": expo(series.total),
        "lower_exponent": 1 - 1 / C - eps / 8,
        "upper_exponent": 0.5 * (1 - 1 / C) + 0.75 * g + 0.25 + eps / 4,
        "bilinear_identity": identity.real,
        "bilinear_identity_gap": abs(identity - series.total),
        "b_max": b_max,
        "b_max_exponent": expo(b_max),
        "b_l2": b_l2,
        "b_l2_exponent": expo(b_l2),
        "b_l2_exponent_predicted": (1 - g) / 2 * (1 - 1 / C) + g + eps / 4,
        "dyadic_blocks_u": dyadic.blocks_u,
        "dyadic_blocks_w": dyadic.blocks_w,
        "dyadic_lhs_block_sum": dyadic.lhs_block_sum,
        "dyadic_rhs_block_sum": dyadic.rhs_block_sum,
        "dyadic_max_block_ratio": dyadic.max_block_ratio,
        "solutions": count_solutions(plan, (S, J)),
    }


# --- record scan ---------------------------------------------------------------


@dataclass(frozen=True)
class ScanRecord:
    n: int
    dist: CertifiedDistance
    score: float
    achieved_exponent: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dist": float(self.dist.value),
            "dist_radius": float(self.dist.radius),
            "score": self.score,
            "achieved_exponent": self.achieved_exponent,
        }


def record_scan(
    theta: IrrationalSpec,
    phi: Phase,
    C: float,
    n_max: int,
    *,
    work_budget: int = DEFAULT_WORK_BUDGET,
    precision_cap: int = DEFAULT_PRECISION_CAP,
) -> list[ScanRecord]:
    """Successive record-breakers of ``||theta n + phi|| * n^(1/3 - 2/(3C))`` over the
    ``n <= n_max`` whose largest prime factor is at most ``(log n)^C``.

    A double-precision pass with a rigorous error allowance discards every
    ``n`` that provably cannot be a record; the survivors are certified
    with interval arithmetic and compared exactly.
    """
    if n_max < 1:
        raise HypothesisViolated("n_max must be >= 1")
    if n_max > work_budget:
        raise BudgetExceeded(f"n_max = {n_max} exceeds work budget {work_budget}")
    kappa = theorem_exponent(float(C))
    ns = np.arange(1, n_max + 1, dtype=np.int64)
    lpf = lpf_table(n_max)[1:]
    logs = np.log(ns.astype(np.float64))
    good = lpf.astype(np.float64) <= logs ** float(C)
    ns = ns[good]
    if len(ns) == 0:
        return []
    theta_f, phi_f = approx(theta), approx(phi)
    nf = ns.astype(np.float64)
    t = theta_f * nf + phi_f
    d = np.abs(t - np.rint(t))
    e = _FLOAT_SLACK * (abs(theta_f) * nf + abs(phi_f) + 1.0)
    w = nf ** float(kappa)
    lo = (d - e) * w * (1 - 1e-12)
    hi = (d + e) * w * (1 + 1e-12)
    prev_best = np.minimum.accumulate(hi)
    cand = np.ones(len(ns), dtype=bool)
    cand[1:] = lo[1:] < prev_best[:-1]

    out: list[ScanRecord] = []
    best_lo = best_hi = None
    for n in ns[cand].tolist():
        dist = distance_to_integer(theta, phi, n, precision_cap)
        plo, phi_ = power_bounds(n, kappa)
        s_lo, s_hi = dist.lo * plo, dist.hi * phi_
        if best_lo is not None and s_lo >= best_hi:
            continue
        if best_lo is not None and not s_hi < best_lo:
            raise PrecisionExhausted(f"cannot separate the score of n={n} from the running record")
        best_lo, best_hi = s_lo, s_hi
        out.append(ScanRecord(n=n, dist=dist, score=float((s_lo + s_hi) / 2), achieved_exponent=_achieved_exponent(dist, n)))
    return out
