"""Exponential sums over pairs of smooth windows, and numerical harnesses for the
large-sieve-type lemmas behind the construction.

The central kernel is :func:`eval_S_h`. Rather than adding ``|S|*|J|``
unit vectors for every ``h``, it first builds the exact integer histogram
``N_r = #{(u, v) : u*v = r (mod q)}`` and then evaluates
``S_h = sum_r N_r e(h*a*r/q)`` in one pass over the occupied classes. The
histogram is integer-valued, so splitting it across threads cannot change
the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import BadFraction, BudgetExceeded, HypothesisViolated
from .serialize import fmt_real
from .smooth import Real, SmoothWindow

DEFAULT_WORK_BUDGET = 10**10
TABLE_CAP = 2**24
# dense histograms are used up to this modulus, sorted sparse ones beyond
_DENSE_LIMIT = 2**24
_MAX_MODULUS = 2**31
_CHUNK = 2**22
_COEFF_SLACK = 1e-12

IntSet = Union[SmoothWindow, Sequence[int], np.ndarray]


def _as_array(values: IntSet) -> np.ndarray:
    if isinstance(values, SmoothWindow):
        return values.elements
    return np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.int64)


def unit_table(q: int) -> np.ndarray:
    """``e(r/q)`` for ``r = 0..q-1``."""
    r = np.arange(q, dtype=np.float64)
    return np.exp(2j * np.pi * r / q)


def _row_chunks(n_rows: int, row_len: int, workers: int) -> list[tuple[int, int]]:
    step = max(1, _CHUNK // max(row_len, 1))
    if workers > 1:
        step = max(1, min(step, math.ceil(n_rows / workers)))
    return [(i, min(i + step, n_rows)) for i in range(0, n_rows, step)]


def residue_histogram(S: IntSet, J: IntSet, q: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Sparse histogram of ``u*v mod q`` over ``S x J``: ``(residues, counts)``, residues sorted."""
    if q >= _MAX_MODULUS:
        raise BudgetExceeded(f"modulus {q} too large for residue histogramming")
    su = _as_array(S) % q
    sv = _as_array(J) % q
    if len(su) == 0 or len(sv) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    ru, cu = np.unique(su, return_counts=True)
    rv, cv = np.unique(sv, return_counts=True)
    if len(ru) > len(rv):
        ru, cu, rv, cv = rv, cv, ru, cu
    dense = q <= _DENSE_LIMIT

    def part(span: tuple[int, int]):
        lo, hi = span
        idx = (ru[lo:hi, None] * rv[None, :]) % q
        w = cu[lo:hi, None] * cv[None, :]
        if dense:
            return np.bincount(idx.ravel(), weights=w.ravel().astype(np.float64), minlength=q)
        keys, inv = np.unique(idx.ravel(), return_inverse=True)
        return keys, np.bincount(inv, weights=w.ravel().astype(np.float64))

    spans = _row_chunks(len(ru), len(rv), workers)
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(part, spans))
    else:
        parts = [part(s) for s in spans]

    if dense:
        total = np.zeros(q, dtype=np.int64)
        for p in parts:
            total += np.rint(p).astype(np.int64)
        residues = np.flatnonzero(total)
        return residues.astype(np.int64), total[residues]
    keys = np.concatenate([k for k, _ in parts])
    vals = np.concatenate([np.rint(v).astype(np.int64) for _, v in parts])
    residues, inv = np.unique(keys, return_inverse=True)
    counts = np.zeros(len(residues), dtype=np.int64)
    np.add.at(counts, inv, vals)
    return residues, counts


@dataclass(frozen=True, eq=False)
class ExpSumSeries:
    """``S_h`` for ``h = 1..H``; ``values`` keeps the complex sums, ``magnitudes`` their moduli."""

    q: int
    a: int
    H: int
    values: np.ndarray = field(repr=False)
    magnitudes: list[float] = field(repr=False)
    total: float
    size_S: int = 0
    size_J: int = 0

    def to_csv(self) -> str:
        rows = ["h,magnitude"]
        rows += [f"{h},{fmt_real(m)}" for h, m in enumerate(self.magnitudes, start=1)]
        rows.append(f"# total={fmt_real(self.total)}")
        return "\n".join(rows) + "\n"


def read_series_csv(text: str) -> tuple[list[float], float]:
    """Parse :meth:`ExpSumSeries.to_csv` output back into ``(magnitudes, total)``."""
    mags: list[float] = []
    total = math.nan
    for line in text.splitlines():
        if not line or line == "h,magnitude":
            continue
        if line.startswith("# total="):
            total = float(line[len("# total=") :])
            continue
        _, m = line.split(",")
        mags.append(float(m))
    return mags, total


def eval_S_h(
    S: IntSet,
    J: IntSet,
    a: int,
    q: int,
    H: int,
    *,
    workers: int = 1,
    work_budget: int = DEFAULT_WORK_BUDGET,
    table_cap: int = TABLE_CAP,
) -> ExpSumSeries:
    """``S_h = sum_{u in S} sum_{v in J} e(h*a*u*v/q)`` for ``h = 1..H``, evaluated at ``a/q`` exactly."""
    if q < 1 or H < 1:
        raise HypothesisViolated("need q >= 1 and H >= 1")
    if math.gcd(a, q) != 1:
        raise BadFraction(f"gcd({a}, {q}) != 1")
    su, sv = _as_array(S), _as_array(J)
    if len(su) * len(sv) * H > work_budget:
        raise BudgetExceeded(f"|S|*|J|*H = {len(su) * len(sv) * H} exceeds work budget {work_budget}")
    residues, counts = residue_histogram(su, sv, q, workers)
    weights = counts.astype(np.float64)
    table = unit_table(q) if q <= table_cap else None
    values = np.zeros(H, dtype=np.complex128)
    for h in range(1, H + 1):
        k = (h * a) % q
        idx = (k * residues) % q
        if table is not None:
            values[h - 1] = np.dot(weights, table[idx])
        else:
            ang = (2 * np.pi / q) * idx.astype(np.float64)
            values[h - 1] = complex(
                math.fsum((weights * np.cos(ang)).tolist()), math.fsum((weights * np.sin(ang)).tolist())
            )
    mags = np.abs(values)
    return ExpSumSeries(
        q=q,
        a=a,
        H=H,
        values=values,
        magnitudes=mags.tolist(),
        total=math.fsum(mags.tolist()),
        size_S=len(su),
        size_J=len(sv),
    )


def phase_coefficients(series: ExpSumSeries) -> list[complex]:
    """The unimodular ``c_h`` with ``c_h * S_h = |S_h|`` (1 where ``S_h = 0``)."""
    out = []
    for v in series.values.tolist():
        m = abs(v)
        out.append(complex(1.0) if m == 0 else v.conjugate() / m)
    return out


# --- lower bound for sums over well-spaced phases --------------------------------


@dataclass(frozen=True)
class Lemma3Report:
    N: int
    M: int
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _frac_part(x) -> float:
    # reduce exactly when possible so h*x keeps full precision
    return float(x - math.floor(x))


def lemma3_lower_bound_check(x_seq: Iterable, M: int) -> Lemma3Report:
    """Check ``sum_{h=1}^M |sum_n e(h x_n)| >= N/6`` for a sequence with every ``||x_n|| >= 1/M``.

    The inequality is a theorem, so ``passed`` is False only on a bug.
    Inputs may be floats or Fractions; the hypothesis is checked in the
    input's own arithmetic and violating inputs are rejected.
    """
    xs = list(x_seq)
    if M < 1:
        raise HypothesisViolated("M must be a positive integer")
    for i, x in enumerate(xs):
        floor_dist = Fraction(1, M) if isinstance(x, (int, Fraction)) else 1 / M
        if abs(x - round(x)) < floor_dist:
            raise HypothesisViolated(f"||x_{i + 1}|| < 1/{M}")
    N = len(xs)
    frac = np.array([_frac_part(x) for x in xs], dtype=np.float64)
    h = np.arange(1, M + 1, dtype=np.float64)
    phases = np.exp(2j * np.pi * np.outer(h, frac))
    lhs = math.fsum(np.abs(phases.sum(axis=1)).tolist())
    rhs = N / 6
    return Lemma3Report(N=N, M=M, lhs=lhs, rhs=rhs, passed=lhs >= rhs)


# --- bilinear bound at a rational point -----------------------------------------


def block_indices(M: Real) -> np.ndarray:
    """Integers ``m`` with ``M <= m < 2M``."""
    lo = math.ceil(M)
    hi = math.ceil(2 * M)
    return np.arange(lo, hi, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class BilinearInstance:
    """Coefficients ``a_m`` (``m ~ M``) and ``b_n`` (``n ~ N``) with moduli at most 1, and a reduced fraction ``a/q``."""

    M: Real
    N: Real
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    a: int
    q: int

    def __post_init__(self):
        am = np.asarray(self.a_coeffs, dtype=np.complex128)
        bn = np.asarray(self.b_coeffs, dtype=np.complex128)
        object.__setattr__(self, "a_coeffs", am)
        object.__setattr__(self, "b_coeffs", bn)
        if self.M < 1 or self.N < 1 or self.q < 1:
            raise HypothesisViolated("need M, N, q >= 1")
        if len(am) != len(block_indices(self.M)) or len(bn) != len(block_indices(self.N)):
            raise HypothesisViolated("coefficient arrays must cover M <= m < 2M and N <= n < 2N")
        if (len(am) and np.max(np.abs(am)) > 1 + _COEFF_SLACK) or (len(bn) and np.max(np.abs(bn)) > 1 + _COEFF_SLACK):
            raise HypothesisViolated("coefficients must have modulus <= 1")
        if math.gcd(self.a, self.q) != 1:
            raise BadFraction(f"gcd({self.a}, {self.q}) != 1")


@dataclass(frozen=True)
class Lemma4Report:
    M: float
    N: float
    q: int
    lhs: float
    rhs: float
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def lemma4_rhs(norm_a2: float, norm_b2: float, M: float, N: float, q: int) -> float:
    """``(sum|a|^2 sum|b|^2)^(1/2) (MN/q + M + N + q)^(1/2) (log 2MN)^(1/2)``."""
    return math.sqrt(norm_a2 * norm_b2) * math.sqrt(M * N / q + M + N + q) * math.sqrt(math.log(2 * M * N))


def _bilinear_value(
    m_idx: np.ndarray, am: np.ndarray, n_idx: np.ndarray, bn: np.ndarray, a: int, q: int
) -> complex:
    # sum_m sum_n a_m b_n e(a m n / q) by residues, chunked over m
    if len(m_idx) == 0 or len(n_idx) == 0:
        return 0j
    table = unit_table(q)
    mr = (m_idx % q) * (a % q) % q
    nr = n_idx % q
    acc = 0j
    step = max(1, _CHUNK // len(nr))
    for lo in range(0, len(mr), step):
        idx = (mr[lo : lo + step, None] * nr[None, :]) % q
        acc += complex(am[lo : lo + step] @ (table[idx] @ bn))
    return acc


def lemma4_bound(instance: BilinearInstance) -> Lemma4Report:
    """Both sides of the bilinear bound at ``theta = a/q``; the ratio is a measurement."""
    inst = instance
    m_idx, n_idx = block_indices(inst.M), block_indices(inst.N)
    lhs = abs(_bilinear_value(m_idx, inst.a_coeffs, n_idx, inst.b_coeffs, inst.a, inst.q))
    rhs = lemma4_rhs(
        float(np.sum(np.abs(inst.a_coeffs) ** 2)),
        float(np.sum(np.abs(inst.b_coeffs) ** 2)),
        float(inst.M),
        float(inst.N),
        inst.q,
    )
    ratio = 0.0 if lhs == 0 else lhs / rhs
    return Lemma4Report(M=float(inst.M), N=float(inst.N), q=inst.q, lhs=lhs, rhs=rhs, ratio=ratio)


# --- the bilinear rewriting of sum_h |S_h| -------------------------------------


def build_bw_coefficients(J: IntSet, H: int, c_h: Sequence[complex]) -> dict[int, complex]:
    """``b_w = sum_{h*v = w, h <= H, v in J} c_h``; zero entries are dropped."""
    if H < 1 or len(c_h) != H:
        raise HypothesisViolated("need H >= 1 and exactly H coefficients c_1..c_H")
    c = np.asarray(c_h, dtype=np.complex128)
    if len(c) and np.max(np.abs(c)) > 1 + _COEFF_SLACK:
        raise HypothesisViolated("coefficients c_h must have modulus <= 1")
    jv = _as_array(J)
    hs = np.arange(1, H + 1, dtype=np.int64)
    keep = c != 0
    if not keep.any() or len(jv) == 0:
        return {}
    w = np.outer(hs[keep], jv).ravel()
    weights = np.repeat(c[keep], len(jv))
    keys, inv = np.unique(w, return_inverse=True)
    re = np.bincount(inv, weights=weights.real)
    im = np.bincount(inv, weights=weights.imag)
    out = {}
    for k, x, yv in zip(keys.tolist(), re.tolist(), im.tolist()):
        if x != 0 or yv != 0:
            out[k] = complex(x, yv)
    return out


def bilinear_form(S: IntSet, bw: Mapping[int, complex], a: int, q: int) -> complex:
    """``sum_{u in S} sum_w b_w e(a*u*w/q)`` (``a_u`` is the indicator of S)."""
    su = _as_array(S)
    ws = np.array(sorted(bw), dtype=np.int64)
    bv = np.array([bw[w] for w in ws.tolist()], dtype=np.complex128)
    return _bilinear_value(su, np.ones(len(su), dtype=np.complex128), ws, bv, a, q)


def dyadic_blocks(lo: Real, hi: Real) -> list[tuple[Real, Real]]:
    """Cover ``[lo, hi)`` by blocks ``[M, min(2M, hi))`` starting at ``lo``."""
    if not 1 <= lo < hi:
        raise HypothesisViolated("dyadic_blocks needs 1 <= lo < hi")
    out = []
    M = lo
    while M < hi:
        end = min(2 * M, hi)
        out.append((M, end))
        M = end
    return out


@dataclass(frozen=True)
class DyadicReport:
    blocks_u: int
    blocks_w: int
    lhs_total: float
    lhs_block_sum: float
    rhs_block_sum: float
    max_block_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def lemma4_dyadic(
    S: IntSet, bw: Mapping[int, complex], a: int, q: int, *, work_budget: int = DEFAULT_WORK_BUDGET
) -> DyadicReport:
    """Split the ``u`` and ``w`` ranges of the bilinear form dyadically and apply the
    bilinear bound to each block pair.

    The bound is homogeneous in the coefficients, so ``b_w`` larger than 1 in
    modulus (they are bounded by a divisor count) are used unnormalized.
    """
    su = np.sort(_as_array(S))
    ws = np.array(sorted(bw), dtype=np.int64)
    if len(su) * len(ws) > work_budget:
        raise BudgetExceeded(f"|S|*|supp b| = {len(su) * len(ws)} exceeds work budget {work_budget}")
    bv = np.array([bw[w] for w in ws.tolist()], dtype=np.complex128)
    if len(su) == 0 or len(ws) == 0:
        return DyadicReport(0, 0, 0.0, 0.0, 0.0, 0.0)
    ublocks = dyadic_blocks(int(su[0]), int(su[-1]) + 1)
    wblocks = dyadic_blocks(int(ws[0]), int(ws[-1]) + 1)
    total = 0j
    lhs_sum = rhs_sum = 0.0
    worst = 0.0
    for ulo, uhi in ublocks:
        uu = su[(su >= ulo) & (su < uhi)]
        if len(uu) == 0:
            continue
        for wlo, whi in wblocks:
            sel = (ws >= wlo) & (ws < whi)
            if not sel.any():
                continue
            val = _bilinear_value(uu, np.ones(len(uu), dtype=np.complex128), ws[sel], bv[sel], a, q)
            rhs = lemma4_rhs(float(len(uu)), float(np.sum(np.abs(bv[sel]) ** 2)), float(ulo), float(wlo), q)
            total += val
            lhs_sum += abs(val)
            rhs_sum += rhs
            worst = max(worst, abs(val) / rhs if rhs else 0.0)
    return DyadicReport(len(ublocks), len(wblocks), abs(total), lhs_sum, rhs_sum, worst)
