import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmscatter.kinematics import (PROTON_MASS, BinaryChannel, InvalidInputError, Particle,
                                  build_system, channel_momentum, cyclic, e_h_system,
                                  e_ps_system, positron_h_system)

masses = st.floats(min_value=0.1, max_value=5000.0)
charges = st.sampled_from([-2.0, -1.0, 1.0, 2.0])


def test_cyclic():
    assert [cyclic(a) for a in range(3)] == [(1, 2), (2, 0), (0, 1)]


def test_invalid_particles():
    with pytest.raises(InvalidInputError):
        Particle(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        Particle(-1.0, 1.0)
    with pytest.raises(InvalidInputError):
        Particle(1.0, math.nan)
    with pytest.raises(InvalidInputError):
        build_system([(1.0, 1.0), (1.0, -1.0)])


def test_binary_channel_validation():
    with pytest.raises(InvalidInputError):
        BinaryChannel(0, 1, 0, 0.1)
    with pytest.raises(InvalidInputError):
        BinaryChannel(0, 1, 1, -0.5)


def test_preset_strengths():
    # infinite proton: g = -sqrt(2) for e-p, so E_1 = -g^2/4 = -1/2
    eh = e_h_system()
    assert eh.coulomb_strength(0) == pytest.approx(-math.sqrt(2.0))
    assert eh.coulomb_strength(2) == pytest.approx(1.0)
    eps = e_ps_system()
    assert eps.coulomb_strength(0) == pytest.approx(-1.0)
    ph = positron_h_system()
    assert ph.bound_pair(0) and ph.bound_pair(2) and not ph.bound_pair(1)


def test_finite_proton_mass_reduces_binding():
    g = e_h_system(PROTON_MASS).coulomb_strength(0)
    mu = PROTON_MASS / (PROTON_MASS + 1)
    assert -g * g / 4 == pytest.approx(-0.5 * mu, rel=1e-12)


def test_channel_momentum():
    assert channel_momentum(-0.3, -0.5) == pytest.approx(math.sqrt(0.2))
    q = channel_momentum(-0.2, -0.125)
    assert isinstance(q, complex) and q.imag > 0


@settings(max_examples=40, deadline=None)
@given(masses, masses, masses, charges, charges, charges, st.integers(0, 2), st.integers(0, 2))
def test_rotation_is_orthogonal_and_composes(m0, m1, m2, z0, z1, z2, a, b):
    s = build_system([(m0, z0), (m1, z1), (m2, z2)])
    R = s.rotation(a, b)
    assert np.allclose(R @ R.T, np.eye(2), atol=1e-10)
    c = 3 - a - b if a != b else (a + 1) % 3
    assert np.allclose(s.rotation(b, c) @ R, s.rotation(a, c), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(masses, masses, masses)
def test_kinetic_form_is_invariant(m0, m1, m2):
    # |x|^2 + |y|^2 equals sum m_i r_i^2 * 2/m in the centre-of-mass frame
    s = build_system([(m0, 1.0), (m1, -1.0), (m2, 1.0)])
    rng = np.random.default_rng(1)
    xy = rng.normal(size=(2, 3))
    r = s._inverse(0) @ xy
    assert np.allclose(s.masses @ r, 0.0, atol=1e-9)
    lhs = np.sum(xy**2)
    rhs = 2 * np.sum(s.masses[:, None] * r**2)
    assert lhs == pytest.approx(rhs, rel=1e-9)
