"""The per-block drift process and its mixing diagnostics.

Adding r block by block (most-significant first) splits the drift into one
contribution per nonzero block. The process is sampled in bulk with the
same keyed digit source as the scalar odometer, and an empirical mixing
coefficient is estimated over a fixed finite event family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .digits import block_prefix_integers, check_base, expand, int_digit_sum
from .errors import InsufficientSamples
from .exactdist import DriftDistribution, distribution
from .odometer import (
    DEFAULT_PROPAGATION_CAP,
    _add_digit_sums,
    sample_digit_matrix,
    sample_drift,
)

# Wilson score z for 99.9% two-sided confidence.
WILSON_Z = 3.290526731491926
MIN_EVENT_HITS = 50


@dataclass(frozen=True)
class MixingProcessSample:
    r: int
    base: int
    values: tuple[int, ...]  # one drift contribution per nonzero block
    total: int


def sample_process(sample, r: int, cap: int = DEFAULT_PROPAGATION_CAP) -> MixingProcessSample:
    """Per-block drift contributions of one sampled digit string.

    values[i-1] is the drift added by the i-th nonzero block (left to
    right); their sum is the full drift of r on this sample.
    """
    b = sample.base
    prefixes = block_prefix_integers(expand(r, b))
    # realize enough digits that x + r stays inside the prefix
    probe = sample_drift(sample, r, cap)
    m = max(probe.digits_consumed, 1)
    x = sample.prefix_value(m)
    sums = [int_digit_sum(x + t, b) for t in prefixes]
    values = tuple(sums[i + 1] - sums[i] for i in range(len(prefixes) - 1))
    return MixingProcessSample(r, b, values, sums[-1] - sums[0])


def process_matrix(
    r: int,
    base: int,
    n_samples: int,
    seed: int,
    first_index: int = 0,
    cap: int = DEFAULT_PROPAGATION_CAP,
) -> np.ndarray:
    """Per-block drift values for a batch: shape (n_samples, lambda), int16.

    Row sums equal the plain drift draws for the same (seed, index).
    """
    check_base(base)
    prefixes = block_prefix_integers(expand(r, base))
    X = sample_digit_matrix(r, base, n_samples, seed, first_index, cap)
    sums = [_add_digit_sums(X, t, base) for t in prefixes]
    lam = len(prefixes) - 1
    out = np.empty((n_samples, lam), dtype=np.int16)
    for i in range(lam):
        out[:, i] = sums[i + 1] - sums[i]
    return out


def block_laws(r: int, base: int, atoms: int | None = None) -> list[DriftDistribution]:
    """Exact marginal law of each per-block contribution.

    Block i acts like adding its own block value (trailing zeros do not
    change the law), so the marginal is the drift distribution of the block
    value alone.
    """
    prefixes = block_prefix_integers(expand(r, base))
    laws = []
    for i in range(len(prefixes) - 1):
        v = prefixes[i + 1] - prefixes[i]
        while v % base == 0:
            v //= base
        laws.append(distribution(v, base, atoms=atoms))
    return laws


def exact_median(dist: DriftDistribution) -> int:
    """Smallest lattice value d with P(X <= d) >= 1/2."""
    cum_above = Fraction(0)  # mass strictly above the current atom
    half = Fraction(1, 2)
    choice = dist.position(0)
    for k, m in enumerate(dist.atoms):
        if 1 - cum_above >= half:
            choice = dist.position(k)
        else:
            break
        cum_above += m
    return choice


def exact_mode(dist: DriftDistribution) -> int:
    best_k = max(range(len(dist.atoms)), key=lambda k: dist.atoms[k])
    return dist.position(best_k)


@dataclass(frozen=True)
class MomentReport:
    r: int
    base: int
    order: int
    samples: int
    per_block: tuple[tuple[float, float], ...]  # (estimate, standard error)
    max_estimate: float


def moment_check(
    r: int, base: int, order: int, n_samples: int, seed: int = 0
) -> MomentReport:
    """Empirical absolute moments E|X_i|^order per block, with standard errors."""
    if order == 0:
        prefixes = block_prefix_integers(expand(r, base))
        per = tuple((1.0, 0.0) for _ in range(len(prefixes) - 1))
        return MomentReport(r, base, 0, n_samples, per, 1.0)
    if not 1 <= order <= 4:
        raise ValueError("order must be in 0..4")
    X = process_matrix(r, base, n_samples, seed)
    A = np.abs(X.astype(np.float64)) ** order
    means = A.mean(axis=0)
    ses = A.std(axis=0, ddof=1) / math.sqrt(n_samples)
    per = tuple((float(m), float(s)) for m, s in zip(means, ses))
    return MomentReport(r, base, order, n_samples, per, float(means.max()))


def phi_bound(k: int, base: int) -> float:
    """Mixing-coefficient bound 2*((b-1)/b)**(k/2 - 1); may exceed 1 for
    small k (trivially true there)."""
    check_base(base)
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * ((base - 1) / base) ** (k / 2 - 1)


@dataclass(frozen=True)
class PhiHalfSums:
    n_terms: int
    phi_half: float  # sum of k * sqrt(min(1, bound(k)))
    phi_half_bar: float  # max(sqrt(phi_half), phi_half**2)


def phi_half_sums(base: int, n_terms: int) -> PhiHalfSums:
    """Partial sums of the weighted mixing series, with the bound capped at 1."""
    check_base(base)
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    total = 0.0
    for k in range(1, n_terms + 1):
        total += k * math.sqrt(min(1.0, phi_bound(k, base)))
    return PhiHalfSums(n_terms, total, max(math.sqrt(total), total * total))


def smooth_gap_budget(
    third_moment_sum: float,
    second_sum: float,
    fourth_sum: float,
    h3_norm: float,
    phi_half_bar: float,
) -> float:
    """Display-only mixing budget for a smooth gap: ||h'''|| (5/2 + 28 Phi) S3
    + 120 ||h'''|| Phi sqrt(S2) sqrt(S4), with S_j the summed normalized
    absolute block moments."""
    return h3_norm * (2.5 + 28.0 * phi_half_bar) * third_moment_sum + (
        120.0 * h3_norm * phi_half_bar * math.sqrt(second_sum) * math.sqrt(fourth_sum)
    )


def wilson_radius(successes: int, trials: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval."""
    if trials == 0:
        return 1.0
    z2 = z * z
    return (
        z
        * math.sqrt(successes * (trials - successes) / trials + z2 / 4.0)
        / (trials + z2)
    )


@dataclass(frozen=True)
class PhiEstimate:
    r: int
    base: int
    k: int
    p: int
    estimate: float  # max over event pairs of |P_A(B) - P(B)|
    ci: float  # combined Wilson radii at the maximizing pair
    bound: float
    samples: int
    event_family: str
    a_events: int
    b_events: int

    @property
    def violated(self) -> bool:
        return self.estimate - self.ci > self.bound


def _side_events(X: np.ndarray, cols: list[int], laws) -> tuple[np.ndarray, list[str]]:
    """Boolean event matrix for one side of the gap.

    Per index: four one-coordinate events (>= exact median, == exact mode,
    <= -1, == 0); plus all 16 combinations on the (first, last) index pair
    when the side has at least two indices.
    """
    preds = []
    labels = []
    per_col = {}
    for c in cols:
        med = exact_median(laws[c])
        mode = exact_mode(laws[c])
        col = X[:, c]
        four = [
            (col >= med, f"X{c + 1}>={med}"),
            (col == mode, f"X{c + 1}=={mode}"),
            (col <= -1, f"X{c + 1}<=-1"),
            (col == 0, f"X{c + 1}==0"),
        ]
        per_col[c] = four
        for ev, lab in four:
            preds.append(ev)
            labels.append(lab)
    if len(cols) >= 2:
        i, j = cols[0], cols[-1]
        for evi, labi in per_col[i]:
            for evj, labj in per_col[j]:
                preds.append(evi & evj)
                labels.append(f"{labi}&{labj}")
    return np.column_stack(preds), labels


def estimate_phi(
    r: int,
    base: int,
    k: int,
    p: int,
    n_samples: int,
    seed: int = 0,
    family: str = "default",
    min_hits: int = MIN_EVENT_HITS,
    values: np.ndarray | None = None,
) -> PhiEstimate:
    """Empirical lower-bound estimate of the mixing coefficient at gap k.

    Maximizes |P_A(B) - P(B)| over the restricted event family, with A over
    the first p blocks and B over blocks at index >= p + k. Conditioning
    events with fewer than min_hits hits are dropped. A precomputed
    process_matrix for the same (r, base, n, seed) can be passed as values.
    """
    check_base(base)
    if k < 1 or p < 1:
        raise ValueError("k and p must be >= 1")
    prefixes = block_prefix_integers(expand(r, base))
    lam = len(prefixes) - 1
    bound = phi_bound(k, base)
    if p + k > lam:
        # no blocks left beyond the gap: trivial sigma-algebra
        return PhiEstimate(
            r, base, k, p, 0.0, 0.0, bound, n_samples, family, 0, 0
        )
    X = process_matrix(r, base, n_samples, seed) if values is None else values
    laws = block_laws(r, base)
    a_cols = list(range(min(p, lam)))
    b_cols = list(range(p + k - 1, lam))
    A, _ = _side_events(X, a_cols, laws)
    B, _ = _side_events(X, b_cols, laws)
    count_a = A.sum(axis=0)
    keep = count_a >= min_hits
    if not keep.any():
        raise InsufficientSamples(
            f"every conditioning event has fewer than {min_hits} hits"
        )
    A = A[:, keep]
    count_a = count_a[keep]
    count_b = B.sum(axis=0)
    count_ab = A.astype(np.float64).T @ B.astype(np.float64)
    p_cond = count_ab / count_a[:, None]
    p_b = count_b / n_samples
    diffs = np.abs(p_cond - p_b[None, :])
    ai, bi = np.unravel_index(np.argmax(diffs), diffs.shape)
    estimate = float(diffs[ai, bi])
    ci = wilson_radius(
        int(round(count_ab[ai, bi])), int(count_a[ai])
    ) + wilson_radius(int(count_b[bi]), n_samples)
    return PhiEstimate(
        r,
        base,
        k,
        p,
        estimate,
        ci,
        bound,
        n_samples,
        family,
        A.shape[1],
        B.shape[1],
    )
