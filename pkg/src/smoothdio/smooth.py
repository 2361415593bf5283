"""Smooth (friable) integers: windowed sieving and exact Psi(x, y) counts."""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np
from sympy import factorint

from .errors import HypothesisViolated, WindowTooLarge

Real = Union[int, float, Fraction]

# largest integer a window may contain
CEILING = 2**63 - 1
DEFAULT_SEGMENT = 2**22
DEFAULT_MAX_LENGTH = 2**28
# psi() uses a direct prime table for the "one large prime factor" shortcut up to here
_PSI_TABLE_LIMIT = 2 * 10**7


@lru_cache(maxsize=8)
def primes_upto(n: int) -> np.ndarray:
    """Primes ``<= n`` by the sieve of Eratosthenes (read-only int64 array)."""
    n = int(n)
    if n < 2:
        out = np.zeros(0, dtype=np.int64)
    else:
        mark = np.ones(n + 1, dtype=bool)
        mark[:2] = False
        mark[4::2] = False
        for p in range(3, math.isqrt(n) + 1, 2):
            if mark[p]:
                mark[p * p :: 2 * p] = False
        out = np.flatnonzero(mark).astype(np.int64)
    out.setflags(write=False)
    return out


def lpf_table(n: int) -> np.ndarray:
    """``table[m]`` is the largest prime factor of ``m`` for ``1 <= m <= n`` (1 for m = 1)."""
    table = np.zeros(n + 1, dtype=np.int64)
    if n >= 1:
        table[1] = 1
    for p in primes_upto(n):
        table[p::p] = p
    return table


def largest_prime_factor(n: int) -> int:
    if n < 1:
        raise HypothesisViolated("n must be positive")
    if n == 1:
        return 1
    return max(factorint(n))


def is_smooth(n: int, y: Real) -> bool:
    """True if no prime factor of ``n`` exceeds ``y`` (trial division by primes <= y)."""
    if n < 1:
        raise HypothesisViolated("n must be positive")
    for p in primes_upto(math.floor(y)).tolist():
        if n == 1:
            break
        while n % p == 0:
            n //= p
    return n == 1


def window_bounds(x: Real, c: Real) -> tuple[int, int]:
    """Integer lattice ``[lo, hi)`` of the real window ``[x, c*x)``."""
    fx, fc = Fraction(x), Fraction(c)
    return math.ceil(fx), math.ceil(fx * fc)


@dataclass(frozen=True, eq=False)
class SmoothWindow:
    """The ``y``-smooth integers in ``[x, c*x)``, sorted, as a read-only int64 array."""

    x: Real
    c: Real
    y: Real
    elements: np.ndarray = field(repr=False)

    @property
    def lo(self) -> int:
        return window_bounds(self.x, self.c)[0]

    @property
    def hi(self) -> int:
        return window_bounds(self.x, self.c)[1]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements.tolist())

    def __contains__(self, m) -> bool:
        i = np.searchsorted(self.elements, m)
        return bool(i < len(self.elements) and self.elements[i] == m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SmoothWindow):
            return NotImplemented
        return (self.lo, self.hi, math.floor(self.y)) == (other.lo, other.hi, math.floor(other.y)) and bool(
            np.array_equal(self.elements, other.elements)
        )

    def tolist(self) -> list[int]:
        return self.elements.tolist()


def _sieve_segment(start: int, stop: int, primes: np.ndarray) -> np.ndarray:
    cof = np.int64(start) + np.arange(stop - start, dtype=np.int64)
    for p in primes.tolist():
        pk = p
        while pk < stop:
            cof[(-start) % pk :: pk] //= p
            if pk > stop // p:
                break
            pk *= p
    hits = np.flatnonzero(cof == 1)
    return np.int64(start) + hits.astype(np.int64)


def sieve_window(
    x: Real,
    c: Real,
    y: Real,
    *,
    segment_size: int = DEFAULT_SEGMENT,
    workers: int = 1,
    max_length: int = DEFAULT_MAX_LENGTH,
    cache_dir: Optional[Union[str, Path]] = None,
) -> SmoothWindow:
    """All ``y``-smooth integers in ``[x, c*x)``.

    Each segment of ``segment_size`` integers is sieved by dividing out every
    prime power ``p^k`` with ``p <= y``; survivors whose cofactor is 1 are
    smooth. Segments are independent, so ``workers > 1`` sieves them on a
    thread pool and concatenates the results in order.
    """
    if Fraction(x) <= 0 or Fraction(c) <= 1:
        raise HypothesisViolated("need x > 0 and c > 1")
    if Fraction(y) < 2:
        raise HypothesisViolated("need y >= 2")
    lo, hi = window_bounds(x, c)
    if hi - 1 > CEILING:
        raise WindowTooLarge(f"window end {hi - 1} exceeds the ceiling 2^63-1")
    if hi - lo > max_length:
        raise WindowTooLarge(f"window of {hi - lo} integers exceeds max_length={max_length}; split it")
    ybound = math.floor(y)

    if cache_dir is not None:
        path = cache_path(cache_dir, lo, hi, ybound)
        if path.exists():
            _, _, _, elements = load_window(path)
            return _window(x, c, y, elements)

    if lo >= hi:
        elements = np.zeros(0, dtype=np.int64)
    elif ybound >= hi - 1:
        elements = np.arange(lo, hi, dtype=np.int64)
    else:
        primes = primes_upto(ybound)
        cuts = list(range(lo, hi, segment_size)) + [hi]
        spans = list(zip(cuts[:-1], cuts[1:]))
        if workers > 1 and len(spans) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda s: _sieve_segment(s[0], s[1], primes), spans))
        else:
            parts = [_sieve_segment(a, b, primes) for a, b in spans]
        elements = np.concatenate(parts)

    if cache_dir is not None:
        save_window(cache_path(cache_dir, lo, hi, ybound), lo, hi, ybound, elements)
    return _window(x, c, y, elements)


def _window(x, c, y, elements: np.ndarray) -> SmoothWindow:
    elements = np.ascontiguousarray(elements, dtype=np.int64)
    elements.setflags(write=False)
    return SmoothWindow(x, c, y, elements)


# --- cache files ---------------------------------------------------------------

_MAGIC = "SMOOTHWIN"


def cache_path(cache_dir: Union[str, Path], lo: int, hi: int, ybound: int) -> Path:
    return Path(cache_dir) / f"smoothwin_{lo}_{hi}_{ybound}.txt"


def save_window(path: Union[str, Path], lo: int, hi: int, ybound: int, elements, binary: bool = False) -> None:
    """Write a window cache file atomically.

    Text form: header ``SMOOTHWIN v1 <lo> <hi> <y>`` then one integer per line.
    Binary form: header ``SMOOTHWIN v1-le64 <lo> <hi> <y>`` then little-endian int64s.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(elements, dtype=np.int64)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".smoothwin-")
    try:
        with os.fdopen(fd, "wb") as fh:
            if binary:
                fh.write(f"{_MAGIC} v1-le64 {lo} {hi} {ybound}\n".encode())
                fh.write(arr.astype("<i8").tobytes())
            else:
                fh.write(f"{_MAGIC} v1 {lo} {hi} {ybound}\n".encode())
                if len(arr):
                    fh.write(("\n".join(map(str, arr.tolist())) + "\n").encode())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_window(path: Union[str, Path]) -> tuple[int, int, int, np.ndarray]:
    """Read a cache file written by :func:`save_window`; returns ``(lo, hi, y, elements)``."""
    with open(path, "rb") as fh:
        header = fh.readline().decode().split()
        if len(header) != 5 or header[0] != _MAGIC or header[1] not in ("v1", "v1-le64"):
            raise ValueError(f"{path}: not a SMOOTHWIN v1 file")
        lo, hi, ybound = (int(v) for v in header[2:])
        body = fh.read()
    if header[1] == "v1-le64":
        elements = np.frombuffer(body, dtype="<i8").astype(np.int64)
    else:
        elements = np.array([int(tok) for tok in body.split()], dtype=np.int64)
    return lo, hi, ybound, elements


# --- Psi(x, y) -----------------------------------------------------------------


@dataclass(frozen=True)
class PsiCount:
    x: Real
    y: Real
    value: int


def psi(x: Real, y: Real) -> PsiCount:
    """Exact ``Psi(x, y) = #{n <= x : P(n) <= y}``.

    Uses ``Psi(X, p_k) = 1 + sum_{j<=k} Psi(X / p_j, p_j)`` (the unrolled form of
    ``Psi(X, p_k) = Psi(X, p_{k-1}) + Psi(X / p_k, p_k)``) with memoization.
    Nodes with ``p_k^2 >= X`` are closed directly: then every non-smooth
    ``n <= X`` has exactly one prime factor above ``p_k``.
    """
    if Fraction(x) < 1:
        raise HypothesisViolated("psi needs x >= 1")
    if Fraction(y) < 2:
        raise HypothesisViolated("psi needs y >= 2")
    X, Y = math.floor(x), math.floor(y)
    if Y >= X:
        return PsiCount(x, y, X)
    return PsiCount(x, y, _psi_exact(X, Y))


def _psi_exact(X: int, Y: int) -> int:
    plist = primes_upto(Y).tolist()
    big = primes_upto(X) if X <= _PSI_TABLE_LIMIT else None
    memo: dict[tuple[int, int], int] = {}

    def rec(n: int, k: int) -> int:
        # n >= 1; counts m <= n whose prime factors are all among plist[:k+1]
        if k == 0:
            return n.bit_length()
        pk = plist[k]
        if pk >= n:
            return n
        key = (n, k)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if big is not None and pk * pk >= n:
            i = int(np.searchsorted(big, pk, side="right"))
            j = int(np.searchsorted(big, n, side="right"))
            total = n - int(np.sum(n // big[i:j]))
        else:
            total = 1
            for j in range(k + 1):
                p = plist[j]
                if p > n:
                    break
                total += rec(n // p, j)
        memo[key] = total
        return total

    return rec(X, len(plist) - 1)
