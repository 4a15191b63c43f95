"""Distance-to-normal diagnostics for the normalized drift laws.

The normalized law puts mass at d/sigma_r. The CDF distance against the
standard normal is bracketed exactly (up to the certified tail), smooth
gaps are computed from the atoms, and rate tables track how both scale
with the block count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .digits import check_base, rho_lambda
from .errors import InvalidBase, InvalidEpsilon, TailTooHeavy
from .exactdist import (
    DriftDistribution,
    distribution,
    tail_abs_moment_bound,
    variance_exact,
)

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
KS_TAIL_LIMIT = 1e-6

# sup |f'''| of the mollifier profile, attained at 1/2 (value 105/2).
MOLLIFIER_D3_SUP = 52.5


def normal_cdf(t: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-t / SQRT2)


def normal_pdf(t: float) -> float:
    return math.exp(-0.5 * t * t) / SQRT2PI


def mollifier_profile(t: float) -> float:
    """C^3 ramp from 1 to 0 across [0, 1]; first three derivatives vanish
    at both endpoints (degree-7 smoothstep, mirrored)."""
    if t <= 0.0:
        return 1.0
    if t >= 1.0:
        return 0.0
    return 1.0 - t**4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t**3)


def mollifier_profile_d3(t: float) -> float:
    """Third derivative of the profile on [0, 1]: -840 t (1-t) (5t^2-5t+1)."""
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return -840.0 * t * (1.0 - t) * (5.0 * t * t - 5.0 * t + 1.0)


def mollifier(t: float, eps: float, u: float) -> float:
    """Smooth indicator of (-inf, t]: 1 below t - eps, 0 above t + eps,
    profile((eps - t + u)/(2 eps)) in between. ||third derivative|| =
    MOLLIFIER_D3_SUP / (8 eps^3)."""
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be > 0, got {eps}")
    return mollifier_profile((eps - t + u) / (2.0 * eps))


def mollifier_d3_norm(eps: float) -> float:
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be > 0, got {eps}")
    return MOLLIFIER_D3_SUP / (8.0 * eps**3)


# --- normalized atoms -------------------------------------------------------


def normalized_support(dist: DriftDistribution) -> tuple[np.ndarray, np.ndarray]:
    """(positions, masses) of the normalized law, positions ascending.

    The zero-variance case (r = 0) degenerates to a unit mass at 0.
    """
    if dist.r == 0:
        return np.array([0.0]), np.array([1.0])
    sigma = math.sqrt(variance_exact(dist.r, dist.base))
    pos = np.array([d / sigma for d, _ in dist.items()], dtype=np.float64)
    mass = np.array([float(m) for _, m in dist.items()], dtype=np.float64)
    return pos[::-1], mass[::-1]


def ks_distance(dist: DriftDistribution, tail_limit: float = KS_TAIL_LIMIT) -> tuple[float, float]:
    """Bracket of sup_t |F_r(t) - Phi(t)| for the normalized law.

    Exact at and between the atoms; the unknown tail (all of it below the
    lowest computed atom) widens the upper end, as does the normal mass
    beyond the computed support.
    """
    tail = float(dist.tail_mass)
    if tail >= tail_limit:
        raise TailTooHeavy(f"tail mass {tail} >= {tail_limit}")
    pos, mass = normalized_support(dist)
    cdf_vals = np.array([normal_cdf(t) for t in pos])
    cum = tail + np.concatenate(([0.0], np.cumsum(mass)))
    # F at the left limit of atom j is cum[j], at the atom cum[j+1]
    d_atoms = max(
        float(np.max(np.abs(cum[:-1] - cdf_vals))),
        float(np.max(np.abs(cum[1:] - cdf_vals))),
    )
    lo = d_atoms
    hi = max(d_atoms, tail, float(cdf_vals[0]))
    return lo, hi + 1e-13  # cover float rounding of the CDF evaluations


GAUSS_NODES = 64
_leg_nodes, _leg_weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
_profile_at_nodes = np.array([mollifier_profile((1.0 + u) / 2.0) for u in _leg_nodes])


def gaussian_mollifier_expectation(t: float, eps: float) -> float:
    """E mollifier(t, eps, Y) for standard normal Y, by Gauss-Legendre on
    the ramp interval plus the exact CDF below it."""
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be > 0, got {eps}")
    x = t + eps * _leg_nodes
    dens = np.exp(-0.5 * x * x) / SQRT2PI
    ramp = eps * float(np.sum(_leg_weights * _profile_at_nodes * dens))
    return normal_cdf(t - eps) + ramp


def smooth_gap(dist: DriftDistribution, h, tail_limit: float = KS_TAIL_LIMIT) -> float:
    """|E h(Z) - E h(Y)| with Z the normalized drift and Y standard normal.

    h is "cubic", "sin", or ("mollifier", t, eps). The atom sum is exact up
    to the certified tail; E h(Y) is analytic (odd h) or quadrature.
    """
    tail = float(dist.tail_mass)
    if tail >= tail_limit:
        raise TailTooHeavy(f"tail mass {tail} >= {tail_limit}")
    pos, mass = normalized_support(dist)
    if h == "cubic":
        e_z = float(np.sum(mass * pos**3))
        e_y = 0.0
    elif h == "sin":
        e_z = float(np.sum(mass * np.sin(pos)))
        e_y = 0.0
    elif isinstance(h, tuple) and h[0] == "mollifier":
        _, t, eps = h
        vals = np.array([mollifier(t, eps, u) for u in pos])
        # tail atoms sit far left where the mollifier is 1
        e_z = float(np.sum(mass * vals)) + tail
        e_y = gaussian_mollifier_expectation(t, eps)
    else:
        raise ValueError(f"unknown function descriptor {h!r}")
    return abs(e_z - e_y)


def third_abs_moment_normalized(dist: DriftDistribution) -> float:
    """E|Z|^3 for the normalized law, tail-bounded (used for budget rows)."""
    pos, mass = normalized_support(dist)
    partial = float(np.sum(mass * np.abs(pos) ** 3))
    if dist.r == 0:
        return partial
    sigma = math.sqrt(variance_exact(dist.r, dist.base))
    return partial + float(tail_abs_moment_bound(dist, 3)) / sigma**3


@dataclass(frozen=True)
class MollifierChainCheck:
    eps: float
    ks_hi: float
    smooth_sup: float  # max over the probe grid of |E h_t(Z) - E h_t(Y)|
    slack: float  # 4 eps / sqrt(2 pi)

    @property
    def holds(self) -> bool:
        return self.ks_hi <= self.smooth_sup + self.slack + 1e-10


def mollifier_chain_check(
    dist: DriftDistribution, eps: float, grid_points: int = 801
) -> MollifierChainCheck:
    """Numerical check that the CDF distance is controlled by the mollifier
    gaps plus 4 eps / sqrt(2 pi).

    The smooth sup is taken over a grid of shift points covering the
    support, including every atom and its eps-shifts.
    """
    if eps <= 0:
        raise InvalidEpsilon(f"eps must be > 0, got {eps}")
    _, ks_hi = ks_distance(dist)
    pos, mass = normalized_support(dist)
    tail = float(dist.tail_mass)
    span = np.linspace(pos[0] - 2 * eps, pos[-1] + 2 * eps, grid_points)
    ts = np.unique(np.concatenate([span, pos, pos - eps, pos + eps]))
    # E h_t(Z) for all t at once: ramp contribution per atom
    arg = (eps - ts[:, None] + pos[None, :]) / (2.0 * eps)
    hz = np.where(arg <= 0, 1.0, np.where(arg >= 1, 0.0, 0.0))
    ramp_mask = (arg > 0) & (arg < 1)
    a = arg[ramp_mask]
    hz[ramp_mask] = 1.0 - a**4 * (35.0 - 84.0 * a + 70.0 * a * a - 20.0 * a**3)
    e_z = hz @ mass + tail
    e_y = np.array([gaussian_mollifier_expectation(t, eps) for t in ts])
    smooth_sup = float(np.max(np.abs(e_z - e_y)))
    return MollifierChainCheck(eps, ks_hi, smooth_sup, 4.0 * eps / SQRT2PI)


# --- rate tables -------------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    r: int
    base: int
    rho: int
    lam: int
    variance: Fraction
    ks_lo: float
    ks_hi: float
    ks_times_rho_eighth: float
    smooth_gap: float
    smooth_gap_times_sqrt_rho: float


@dataclass(frozen=True)
class RateReport:
    rows: tuple[RateRow, ...]

    def column_ratio(self, column: str, min_rho: int = 16) -> float:
        """max/min of a normalized column over rows with rho >= min_rho."""
        vals = [getattr(row, column) for row in self.rows if row.rho >= min_rho]
        if not vals:
            return float("nan")
        lo = min(vals)
        return float("inf") if lo == 0 else max(vals) / lo


def rate_report(
    family,
    base: int,
    cache_dir: str | None = None,
    tail_eps: Fraction | None = None,
) -> RateReport:
    """One diagnostics row per family member: block counts, variance, CDF
    distance bracket and the cubic smooth gap, with rate-normalized columns."""
    check_base(base)
    rows = []
    for r in family:
        kwargs = {} if tail_eps is None else {"tail_eps": tail_eps}
        dist = distribution(r, base, cache_dir=cache_dir, **kwargs)
        rho, lam = rho_lambda(r, base)
        var = variance_exact(r, base)
        ks_lo, ks_hi = ks_distance(dist)
        gap = smooth_gap(dist, "cubic")
        rows.append(
            RateRow(
                r=r,
                base=base,
                rho=rho,
                lam=lam,
                variance=var,
                ks_lo=ks_lo,
                ks_hi=ks_hi,
                ks_times_rho_eighth=ks_hi * rho**0.125,
                smooth_gap=gap,
                smooth_gap_times_sqrt_rho=gap * math.sqrt(rho),
            )
        )
    return RateReport(tuple(rows))


def local_limit_gap(
    r: int, d: int, dist: DriftDistribution | None = None, cache_dir: str | None = None
) -> float:
    """|atom mass at d - Gaussian density 1/(sigma sqrt(2 pi)) e^{-d^2/2
    sigma^2}|, base 2 only."""
    if dist is None:
        dist = distribution(r, 2, cache_dir=cache_dir)
    if dist.base != 2:
        raise InvalidBase("the local limit comparison is defined for base 2")
    var = float(variance_exact(r, 2))
    sigma = math.sqrt(var)
    gauss = math.exp(-d * d / (2.0 * var)) / (sigma * SQRT2PI)
    return abs(float(dist.mass_at(d)) - gauss)
