"""Brute-force ground truth by direct counting.

Counts drift values over dense integer ranges (digit sums come from a
shared table built once per range) and converts level counts into exact
interval enclosures of the atom masses. This is the anti-bug oracle for
the exact recursion: the two sides share no code.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import threading

import numpy as np

from .digits import check_base, int_digit_sum
from .errors import LevelTooSmall
from .exactdist import DriftDistribution, lattice_point

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba present in normal installs
    _HAVE_NUMBA = False


def digit_sum_table(limit: int, base: int) -> np.ndarray:
    """Digit sums of 0..limit-1 as uint8, built by base-power tiling."""
    check_base(base)
    if limit <= 0:
        return np.zeros(0, dtype=np.uint8)
    if limit > 2**31:
        raise ValueError("table limit too large")
    table = np.zeros(limit, dtype=np.uint8)
    block = 1
    while block < limit:
        for d in range(1, base):
            lo = d * block
            if lo >= limit:
                break
            hi = min(lo + block, limit)
            np.add(table[: hi - lo], np.uint8(d), out=table[lo:hi])
        block *= base
    return table


if _HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _carry_counts_kernel(table, r, m, s_r, bm1, kmax):  # pragma: no cover - jitted
        counts = np.zeros(kmax, dtype=np.int64)
        for n in range(m):
            # digit sums differ by s(r) - c*(b-1); bin by the carry count c.
            # widen before subtracting: the table entries are uint8
            d = np.int64(table[n]) - np.int64(table[n + r])
            counts[(s_r + d) // bm1] += 1
        return counts


def _carry_counts(
    table: np.ndarray, r: int, m: int, s_r: int, base: int, table_max: int | None = None
) -> np.ndarray:
    """counts[c] = |{n < m : adding r to n creates c carries}|."""
    if table_max is None:
        table_max = int(table[:m].max(initial=0))
    kmax = (table_max + s_r) // (base - 1) + 2 if m else 1
    if _HAVE_NUMBA:
        return _carry_counts_kernel(table, r, m, s_r, base - 1, kmax)
    diff = table[:m].astype(np.int16)
    diff -= table[r : r + m]
    diff += np.int16(s_r)
    counts = np.bincount(diff // (base - 1), minlength=kmax)
    return counts.astype(np.int64)


class _TableCache:
    """Keeps the most recent digit-sum table; sweeps reuse it across r.

    Guarded by a lock so threaded sweeps over a shared (limit, base) only
    build once; mixed keys stay correct but rebuild.
    """

    def __init__(self):
        self.key = None
        self.table = None
        self.max = 0
        self._lock = threading.Lock()

    def get(self, limit: int, base: int) -> tuple[np.ndarray, int]:
        with self._lock:
            if self.key != (limit, base):
                self.table = digit_sum_table(limit, base)
                self.max = int(self.table.max(initial=0))
                self.key = (limit, base)
            return self.table, self.max


_tables = _TableCache()


def empirical_density(r: int, base: int, n: int) -> dict[int, Fraction]:
    """Exact counting densities count/n of each drift value over 0..n-1."""
    check_base(base)
    if n < 1:
        raise ValueError("n must be >= 1")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return {0: Fraction(1)}
    s_r = int_digit_sum(r, base)
    table, tmax = _tables.get(n + r, base)
    counts = _carry_counts(table, r, n, s_r, base, tmax)
    return {
        lattice_point(s_r, k, base): Fraction(int(c), n)
        for k, c in enumerate(counts)
        if c
    }


def tower_counts(r: int, base: int, level: int) -> tuple[np.ndarray, int, int]:
    """Carry-count histogram over the first base**(level+1) - r tower levels.

    Returns (counts indexed by carry count, number of counted levels,
    total levels). The drift is constant on each counted level and each
    level has mass 1/total.
    """
    check_base(base)
    if r < 0:
        raise ValueError("r must be nonnegative")
    total = base ** (level + 1)
    if total <= r:
        raise LevelTooSmall(f"base**(level+1) = {total} must exceed r = {r}")
    m = total - r
    if r == 0:
        counts = np.zeros(1, dtype=np.int64)
        counts[0] = m
        return counts, m, total
    s_r = int_digit_sum(r, base)
    table, tmax = _tables.get(total, base)
    counts = _carry_counts(table, r, m, s_r, base, tmax)
    return counts, m, total


def tower_enclosure(
    r: int, base: int, level: int, d: int
) -> tuple[Fraction, Fraction]:
    """Exact interval [c/b^(l+1), (c+r)/b^(l+1)] guaranteed to contain the
    atom mass at d; the r uncounted top levels account for the width."""
    counts, _, total = tower_counts(r, base, level)
    if r == 0:
        c = counts[0] if d == 0 else 0
        return Fraction(int(c), total), Fraction(int(c), total)
    s_r = int_digit_sum(r, base)
    q, rem = divmod(s_r - d, base - 1)
    c = int(counts[q]) if rem == 0 and 0 <= q < len(counts) else 0
    return Fraction(c, total), Fraction(c + r, total)


@dataclass(frozen=True)
class EnclosureViolation:
    r: int
    base: int
    level: int
    k: int
    d: int
    mass: Fraction
    lo: Fraction
    hi: Fraction


def check_enclosures(
    dist: DriftDistribution, level: int, min_mass: Fraction = Fraction(1, 10**9)
) -> list[EnclosureViolation]:
    """Verify every atom above min_mass against its tower enclosure."""
    r, base = dist.r, dist.base
    counts, _, total = tower_counts(r, base, level)
    violations = []
    for k, mass in enumerate(dist.atoms):
        if mass <= min_mass:
            continue
        c = int(counts[k]) if k < len(counts) else 0
        lo = Fraction(c, total)
        hi = Fraction(c + r, total)
        if not lo <= mass <= hi:
            violations.append(
                EnclosureViolation(r, base, level, k, dist.position(k), mass, lo, hi)
            )
    return violations


@dataclass(frozen=True)
class CesaroResult:
    empirical: Fraction
    exact_lo: Fraction
    exact_hi: Fraction

    @property
    def distance(self) -> Fraction:
        if self.exact_lo <= self.empirical <= self.exact_hi:
            return Fraction(0)
        return min(
            abs(self.empirical - self.exact_lo), abs(self.empirical - self.exact_hi)
        )


def cesaro_check(
    r: int,
    base: int,
    n: int,
    f: str,
    d: int | None = None,
    dist: DriftDistribution | None = None,
) -> CesaroResult:
    """Counting average of f(drift) over 0..n-1 against the exact atom sum.

    f is "identity", "square", "abs" or "indicator" (with d). The exact
    side is an interval covering the certified tail.
    """
    from .exactdist import distribution, tail_abs_moment_bound

    check_base(base)
    if f == "indicator" and d is None:
        raise ValueError("indicator needs a point d")
    if dist is None:
        dist = distribution(r, base)
    s_r = dist.s_r
    if r == 0:
        counts = np.zeros(1, dtype=np.int64)
        counts[0] = n
    else:
        table, tmax = _tables.get(n + r, base)
        counts = _carry_counts(table, r, n, s_r, base, tmax)
    ks = np.arange(len(counts))
    ds = s_r - ks * (base - 1)
    if f == "identity":
        emp = Fraction(int(np.sum(counts * ds)), n)
        partial = sum(Fraction(dd) * m for dd, m in dist.items())
        t1 = tail_abs_moment_bound(dist, 1)
        return CesaroResult(emp, partial - t1, partial + t1)
    if f == "square":
        emp = Fraction(int(np.sum(counts * ds * ds)), n)
        partial = sum(Fraction(dd) ** 2 * m for dd, m in dist.items())
        t2 = tail_abs_moment_bound(dist, 2)
        return CesaroResult(emp, partial, partial + t2)
    if f == "abs":
        emp = Fraction(int(np.sum(counts * np.abs(ds))), n)
        partial = sum(abs(Fraction(dd)) * m for dd, m in dist.items())
        t1 = tail_abs_moment_bound(dist, 1)
        return CesaroResult(emp, partial, partial + t1)
    if f == "indicator":
        q, rem = divmod(s_r - d, base - 1)
        c = int(counts[q]) if rem == 0 and 0 <= q < len(counts) else 0
        emp = Fraction(c, n)
        mass = dist.mass_at(d)
        if rem == 0 and q >= len(dist.atoms):
            return CesaroResult(emp, Fraction(0), dist.tail_mass)
        return CesaroResult(emp, mass, mass)
    raise ValueError(f"unknown function descriptor {f!r}")
