import numpy as np
import pytest
import scipy.stats

from digitdrift.errors import PropagationCapExceeded
from digitdrift.odometer import (
    DriftSample,
    LazyBadicSample,
    advance,
    drift_samples,
    sample_digit_matrix,
    sample_drift,
    truncated_drift,
)
from digitdrift import rng


class FixedSample:
    """Digit provider with a scripted prefix, then zeros."""

    def __init__(self, base, digits):
        self.base = base
        self._digits = list(digits)

    def digit(self, i):
        return self._digits[i] if i < len(self._digits) else 0

    def prefix_value(self, m):
        v = 0
        for i in range(m - 1, -1, -1):
            v = v * self.base + self.digit(i)
        return v


class AllMaxSample(FixedSample):
    def digit(self, i):
        return self.base - 1

    def prefix_value(self, m):
        return self.base**m - 1


def test_sample_digits_never_change():
    s = LazyBadicSample(10, seed=1, index=5)
    first = [s.digit(i) for i in range(20)]
    again = [s.digit(i) for i in range(20)]
    assert first == again
    twin = LazyBadicSample(10, seed=1, index=5)
    assert [twin.digit(i) for i in range(20)] == first


def test_scalar_digits_match_vector_block():
    X = rng.digit_block(99, 10, 40, range(15), first_index=3)
    for i in range(40):
        for j in range(15):
            assert X[i, j] == rng.digit_at(99, 3 + i, j, 10)


def test_sample_drift_zero_r():
    s = LazyBadicSample(2, seed=0, index=0)
    assert sample_drift(s, 0) == DriftSample(0, 0, 0)


def test_sample_drift_scripted_carry():
    # adding 1 to ...011: two carries, drift -1
    s = FixedSample(2, [1, 1, 0])
    out = sample_drift(s, 1)
    assert out.delta == -1
    assert out.carries == 2
    assert out.digits_consumed == 3


def test_sample_drift_identity_random():
    for idx in range(200):
        s = LazyBadicSample(10, seed=3, index=idx)
        out = sample_drift(s, 5900991)
        assert out.delta == 33 - 9 * out.carries


def test_sample_drift_cap():
    s = AllMaxSample(2, [])
    with pytest.raises(PropagationCapExceeded):
        sample_drift(s, 1, cap=50)


def test_truncated_drift_examples():
    s = LazyBadicSample(2, seed=9, index=4)
    full = sample_drift(s, 7)
    k = full.digits_consumed + 2
    assert truncated_drift(s, 7, k) == full.delta
    assert truncated_drift(s, 0, 5) == 0


def test_truncated_decomposition():
    # s_k(x + t + u) - s_k(x) splits through the shifted view
    for idx in range(30):
        s = LazyBadicSample(10, seed=21, index=idx)
        t, u, k = 47, 129, 9
        lhs = truncated_drift(s, t + u, k)
        rhs = truncated_drift(s, t, k) + truncated_drift(advance(s, t), u, k)
        assert lhs == rhs


def test_advance_zero_and_power():
    s = LazyBadicSample(10, seed=2, index=0)
    v0 = advance(s, 0)
    assert [v0.digit(i) for i in range(12)] == [s.digit(i) for i in range(12)]
    v = advance(s, 10**4)
    assert [v.digit(i) for i in range(4)] == [s.digit(i) for i in range(4)]


def test_advance_composes():
    s = LazyBadicSample(10, seed=2, index=1)
    v = advance(advance(s, 30), 12)
    w = advance(s, 42)
    assert [v.digit(i) for i in range(10)] == [w.digit(i) for i in range(10)]


def test_cocycle_per_sample():
    for idx in range(50):
        s = LazyBadicSample(10, seed=5, index=idx)
        t, u = 93, 4507
        total = sample_drift(s, t + u).delta
        split = sample_drift(s, t).delta + sample_drift(advance(s, t), u).delta
        assert total == split


def test_drift_samples_match_scalar():
    r, base, seed, n = 5900991, 10, 42, 400
    delta, carries = drift_samples(r, base, n, seed)
    for i in range(n):
        out = sample_drift(LazyBadicSample(base, seed=seed, index=i), r)
        assert delta[i] == out.delta
        assert carries[i] == out.carries


def test_drift_samples_first_index_offset():
    d_all, _ = drift_samples(118, 2, 50, seed=7)
    d_tail, _ = drift_samples(118, 2, 30, seed=7, first_index=20)
    assert np.array_equal(d_all[20:], d_tail)


def test_drift_samples_carry_identity_bulk():
    delta, carries = drift_samples(118, 2, 20000, seed=0)
    assert np.all(delta == 5 - carries)


def test_empirical_mean_near_zero():
    # zero-mean law: N draws stay within 4 sigma / sqrt(N)
    n = 200000
    delta, _ = drift_samples(7, 10, n, seed=42)
    sigma = np.sqrt(28.0)
    assert abs(delta.mean()) < 4 * sigma / np.sqrt(n)


def test_digit_matrix_wide_enough():
    X = sample_digit_matrix(999, 10, 5000, seed=1)
    vals = X.astype(object)
    powers = np.array([10**j for j in range(X.shape[1])], dtype=object)
    x_vals = (vals * powers).sum(axis=1)
    assert all(int(x) + 999 < 10 ** X.shape[1] for x in x_vals)


def test_digit_marginals_chi_square():
    # each position uniform at significance 1e-3
    n, m, base = 100000, 8, 10
    X = rng.digit_block(2024, base, n, range(m))
    for j in range(m):
        counts = np.bincount(X[:, j], minlength=base)
        chi2 = float(((counts - n / base) ** 2 / (n / base)).sum())
        p = scipy.stats.chi2.sf(chi2, base - 1)
        assert p > 1e-3, f"position {j}: chi2={chi2} p={p}"
