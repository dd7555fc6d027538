from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ldts.errors import ArgumentError, ConfigError
from ldts.pacing import PacingConfig, PacingKind, pacing_fraction, pacing_table, sample_count

KINDS = list(PacingKind)


def test_linear_endpoints():
    cfg = PacingConfig(0.2, 100, PacingKind.LINEAR)
    assert pacing_fraction(cfg, 0) == 0.2
    assert pacing_fraction(cfg, 100) == 1.0


def test_root_midpoint_matches_high_precision():
    mpmath.mp.dps = 50
    expected = mpmath.sqrt(mpmath.mpf("0.2") ** 2 + (1 - mpmath.mpf("0.2") ** 2) * mpmath.mpf("0.5"))
    got = pacing_fraction(PacingConfig(0.2, 100, PacingKind.ROOT), 50)
    assert abs(got - float(expected)) < 1e-12
    assert got == pytest.approx(0.72111, abs=1e-5)


def test_geometric_midpoint():
    got = pacing_fraction(PacingConfig(0.25, 100, PacingKind.GEOM), 50)
    assert got == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_beyond_T_is_one(kind):
    cfg = PacingConfig(0.3, 10, kind)
    assert all(pacing_fraction(cfg, t) == 1.0 for t in range(10, 40))


@pytest.mark.parametrize("kind", KINDS)
def test_lambda_one_is_constant(kind):
    cfg = PacingConfig(1.0, 7, kind)
    assert [pacing_fraction(cfg, t) for t in range(20)] == [1.0] * 20


@pytest.mark.parametrize("lam, T", [(0.0, 10), (-0.1, 10), (1.5, 10), (float("nan"), 10), (0.5, 0), (0.5, -3)])
def test_invalid_config_rejected(lam, T):
    with pytest.raises(ConfigError):
        PacingConfig(lam, T)


def test_kind_parsing():
    assert PacingConfig(0.5, 3, "geometric").kind is PacingKind.GEOM
    assert PacingConfig(0.5, 3, "root").kind is PacingKind.ROOT
    with pytest.raises(ConfigError):
        PacingKind.parse("cosine")


def test_negative_epoch_rejected():
    with pytest.raises(ArgumentError):
        pacing_fraction(PacingConfig(), -1)


@given(
    lam=st.floats(min_value=1e-6, max_value=1.0),
    T=st.integers(min_value=1, max_value=300),
    kind=st.sampled_from(KINDS),
)
def test_monotone_and_in_range(lam, T, kind):
    cfg = PacingConfig(lam, T, kind)
    values = np.array([f for _, f in pacing_table(cfg, T + 5)])
    assert values[0] == lam
    assert np.all(values > 0) and np.all(values <= 1.0)
    assert np.all(np.diff(values) >= 0)
    assert np.all(values[T:] == 1.0)


@pytest.mark.parametrize("n, fraction, expected", [(10, 1.0, 10), (10, 0.35, 3), (5, 0.01, 1), (1000, 0.625, 625)])
def test_sample_count_examples(n, fraction, expected):
    assert sample_count(n, fraction) == expected
    # exact rational oracle on the float's binary value
    assert expected == max(1, min(n, int(Fraction(fraction) * n)))


def test_sample_count_errors():
    with pytest.raises(ArgumentError):
        sample_count(0, 0.5)
    with pytest.raises(ArgumentError):
        sample_count(10, 0.0)


@given(n=st.integers(1, 5000), a=st.floats(1e-9, 1.0), b=st.floats(1e-9, 1.0))
def test_sample_count_monotone(n, a, b):
    lo, hi = sorted((a, b))
    assert 1 <= sample_count(n, lo) <= sample_count(n, hi) <= n
