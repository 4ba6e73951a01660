import math

import pytest
import scipy.stats
from hypothesis import given, strategies as st

from rotorlab.stats import chi2_sf, chi_square_uniform, normal_sf, two_proportion_z, two_sided_p


@pytest.mark.parametrize("z", [-3.0, -0.5, 0.0, 1.0, 2.5, 6.0])
def test_normal_sf(z):
    assert normal_sf(z) == pytest.approx(scipy.stats.norm.sf(z), rel=1e-12)
    assert two_sided_p(z) == pytest.approx(2 * scipy.stats.norm.sf(abs(z)), rel=1e-12)


@given(st.integers(1, 400), st.floats(0.05, 4.0))
def test_chi2_sf(dof, scale):
    x = dof * scale
    assert chi2_sf(x, dof) == pytest.approx(scipy.stats.chi2.sf(x, dof), rel=1e-9)


def test_chi_square_uniform():
    counts = [10, 12, 8, 11, 9]
    stat, dof, p = chi_square_uniform(counts)
    ref = scipy.stats.chisquare(counts)
    assert dof == 4
    assert stat == pytest.approx(ref.statistic)
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_chi_square_degenerate():
    assert chi_square_uniform([7])[2] == 1.0


def test_two_proportion():
    z = two_proportion_z(30, 100, 50, 100)
    pooled = 0.4
    expected = (0.3 - 0.5) / math.sqrt(pooled * 0.6 * (2 / 100))
    assert z == pytest.approx(expected)
    assert two_proportion_z(0, 10, 0, 10) == 0.0
