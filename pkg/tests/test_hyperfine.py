from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfsgates.hyperfine import (
    FieldOrientation,
    NuclearSpecies,
    absorption_matrices,
    clebsch_gordan,
    coupling_vector,
    enumerate_transitions,
    m_values,
    spherical_components,
    zeeman_detuning,
)
from nfsgates.rotation import EulerAngles
from oracles import brute_force_cg


@pytest.mark.parametrize("j1,j2", [(0.5, 1), (1, 1), (1.5, 1), (0.5, 0.5), (2, 1)])
def test_clebsch_gordan_matches_brute_force(j1, j2):
    oracle = brute_force_cg(j1, j2)
    for (m1, m2, j, m), expected in oracle.items():
        assert clebsch_gordan(j1, m1, j2, m2, j, m) == pytest.approx(expected, abs=1e-12)


def test_clebsch_gordan_selection_rules():
    assert clebsch_gordan(0.5, 0.5, 1, 0, 1.5, -0.5) == 0.0  # m1 + m2 != m
    assert clebsch_gordan(0.5, 0.5, 1, 1, 2.5, 1.5) == 0.0  # triangle
    assert clebsch_gordan(0.5, 0.5, 1, 0, 1.5, 0.5) == pytest.approx(np.sqrt(2 / 3))


def test_line_weights_follow_3_2_1_pattern():
    lines = enumerate_transitions(NuclearSpecies())
    assert len(lines) == 6
    weights = {(l.m_ground, l.m_excited): l.weight for l in lines}
    # outer lines 3, middle 2, inner 1 (in quarters)
    expected = {
        (-0.5, -1.5): 0.75, (0.5, 1.5): 0.75,
        (-0.5, -0.5): 0.5, (0.5, 0.5): 0.5,
        (-0.5, 0.5): 0.25, (0.5, -0.5): 0.25,
    }
    for key, w in expected.items():
        assert weights[key] == pytest.approx(w, abs=1e-14)


@given(st.sampled_from([(0.5, 1.5), (1.5, 0.5), (1.0, 1.0), (0.5, 0.5), (2.0, 1.0)]))
def test_weights_sum_to_one_per_polarization(spins):
    sp = NuclearSpecies(spin_ground=spins[0], spin_excited=spins[1])
    lines = enumerate_transitions(sp)
    for k in range(2):
        total = sum(l.weight * abs(l.coupling[k]) ** 2 for l in lines)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_couplings_for_field_along_z():
    assert np.allclose(coupling_vector(0), [1, 0])
    assert np.allclose(coupling_vector(1), [0, 1 / np.sqrt(2)])
    assert np.allclose(coupling_vector(-1), [0, -1 / np.sqrt(2)])
    with pytest.raises(ValueError):
        coupling_vector(2)
    for line in enumerate_transitions(NuclearSpecies()):
        assert np.allclose(line.coupling, coupling_vector(line.delta_m))


def test_spherical_components():
    v = spherical_components([1.0, 0.0, 0.0])
    assert v[1] == pytest.approx(-1 / np.sqrt(2))
    assert v[-1] == pytest.approx(1 / np.sqrt(2))
    assert spherical_components([0, 0, 2.0])[0] == 2.0


def test_detuning_values_and_symmetry():
    sp = NuclearSpecies(hyperfine_field=33.0)
    # independent evaluation from the nuclear magneton in SI units
    mu_n, hbar = 5.0507837393e-27, 1.054571817e-34
    unit = mu_n * 33.0 / hbar * 1e-9
    for mg in (-0.5, 0.5):
        for me in (-1.5, -0.5, 0.5, 1.5):
            d = zeeman_detuning(sp, mg, me)
            assert isinstance(d, float)
            assert d == pytest.approx(-(sp.g_excited * me - sp.g_ground * mg) * unit, rel=1e-9)
            assert d == pytest.approx(-zeeman_detuning(sp, -mg, -me), abs=1e-15)
    outer = zeeman_detuning(sp, 0.5, 1.5)
    assert abs(outer) == pytest.approx(0.3878, abs=2e-4)
    with pytest.raises(ValueError):
        zeeman_detuning(sp, 0.3, 0.5)


def test_zero_field_degenerate():
    sp = NuclearSpecies(hyperfine_field=0.0)
    assert all(l.detuning == 0.0 for l in enumerate_transitions(sp))


def test_species_validation():
    with pytest.raises(ValueError):
        NuclearSpecies(mean_lifetime=0.0)
    with pytest.raises(ValueError):
        NuclearSpecies(spin_ground=0.5, spin_excited=2.5)
    with pytest.raises(ValueError):
        NuclearSpecies(spin_ground=0.3)
    assert NuclearSpecies().natural_width == pytest.approx(1 / 141.0)


def test_field_orientation():
    assert FieldOrientation().frame == EulerAngles(0.0, 0.0, 0.0)
    o = FieldOrientation((1.0, 0.0, 0.0))
    assert o.frame.beta == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        FieldOrientation((1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        FieldOrientation((1.0, 0.0, 0.0), EulerAngles(0, 0, 0))


def test_absorption_matrix_shape_and_static_selection():
    v = absorption_matrices(NuclearSpecies())
    assert v.shape == (2, 4, 2)
    # sigma only drives Delta m = 0, pi only Delta m = +-1
    me, mg = m_values(1.5), m_values(0.5)
    for e, g in itertools.product(range(4), range(2)):
        dm = me[e] - mg[g]
        if abs(dm) > 1e-9:
            assert v[0, e, g] == 0
        else:
            assert v[1, e, g] == 0
