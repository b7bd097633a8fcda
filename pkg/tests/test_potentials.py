import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmscatter.kinematics import e_h_system, positron_h_system
from fmscatter.potentials import (BranchError, ConfigError, MerkurievCutoff, MerkurievSplit,
                                  ScreeningProfile, complex_scaled, coulomb, cutoff_chi,
                                  default_cutoffs, screen_residual)


def test_chi_at_reference_point():
    c = MerkurievCutoff(x0=3.0, y0=10.0, mu=2.1)
    assert cutoff_chi(3.0, 0.0, c) == pytest.approx(2 * math.exp(-1) / (1 + math.exp(-1)))
    assert cutoff_chi(3.0, 0.0, c) == pytest.approx(0.53788284, abs=1e-8)
    assert cutoff_chi(0.0, 5.0, c) == pytest.approx(1.0)


def test_screening_profile():
    p = ScreeningProfile(32.0, 5.5, 2.0)
    assert p.factor(10.0) == 1.0
    assert p.factor(32.0) == 1.0
    assert p.factor(37.5) == pytest.approx(math.exp(-1))
    assert screen_residual(2.0, 37.5, p) == pytest.approx(2 * math.exp(-1))


def test_parameter_validation():
    with pytest.raises(ConfigError):
        MerkurievCutoff(1.0, mu=2.0)
    with pytest.raises(ConfigError):
        MerkurievCutoff(-1.0)
    with pytest.raises(ConfigError):
        ScreeningProfile(n_exp=1.0)
    with pytest.raises(ConfigError):
        ScreeningProfile(y_sc=0.0)
    with pytest.raises(BranchError):
        cutoff_chi(1.0, 1.0, MerkurievCutoff(1.0, mu=2.1), theta=0.8)
    with pytest.raises(ConfigError):
        complex_scaled(coulomb, 0.9)
    with pytest.raises(ConfigError):
        default_cutoffs(e_h_system(), repulsive="bogus")


def test_repulsive_pair_is_long_range():
    s = positron_h_system()
    cut = default_cutoffs(s)
    assert cut[1] is None and cut[0] is not None and cut[2] is not None
    sp = MerkurievSplit(s, cut)
    x, y = np.array([0.5, 2.0]), np.array([1.0, 30.0])
    assert np.allclose(sp.short(1, x, y), 0.0)
    assert np.allclose(sp.long(1, x, y), sp.pair(1, x))


def test_x0_is_mean_radius():
    s = e_h_system()
    c = default_cutoffs(s)[0]
    g = -s.coulomb_strength(0)
    assert c.x0 == pytest.approx(1.5 * 2 / g)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 40.0), st.floats(0.0, 200.0), st.floats(0.0, 0.3))
def test_split_sums_to_pair(x, y, theta):
    sp = MerkurievSplit(e_h_system(), default_cutoffs(e_h_system()))
    tot = sp.short(0, x, y, theta) + sp.long(0, x, y, theta)
    assert tot == pytest.approx(sp.pair(0, x, theta), rel=1e-10, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 20.0), st.floats(0.0, 100.0), st.floats(0.01, 0.3))
def test_complex_scaling_is_analytic_continuation(x, y, theta):
    c = MerkurievCutoff(3.0)
    ph = np.exp(1j * theta)
    s = (x * ph / c.x0) ** c.mu / (1 + y * ph / c.y0)
    direct = 2 * np.exp(-s) / (1 + np.exp(-s))
    assert cutoff_chi(x, y, c, theta) == pytest.approx(direct, rel=1e-10, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 1e3), st.floats(0.0, 1e3))
def test_chi_bounds(x, y):
    v = cutoff_chi(x, y, MerkurievCutoff(3.0))
    assert 0.0 <= v <= 1.0


def test_three_body_term_is_pair_sum_far_out():
    # far from all pair regions W equals the full spectator interaction
    s = e_h_system()
    sp = MerkurievSplit(s, default_cutoffs(s))
    x, y, u = 40.0, 45.0, 0.3
    assert sp.three_body_term(2, x, y, u) == pytest.approx(sp.residual(2, x, y, u), rel=1e-6)
    assert sp.total(2, x, y, u) == pytest.approx(sp.pair(2, x) + sp.residual(2, x, y, u))
