import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exvdw.atomic import (C, EPS0, EA0, HBAR, AtomicSpecies, PoleProximityError,
                          PopulationState, SpeciesError, evolve_populations,
                          free_space_decay_rate, load_species, polarizability,
                          rate_matrix, two_level)

from conftest import three_level


def _record(**extra):
    rec = {
        "levels": [{"label": "g", "energy_J": 0.0},
                   {"label": "e", "energy_J": HBAR * 2.37e15}],
        "transitions": [{"upper": "e", "lower": "g", "dipole_Cm": 2.99e-29}],
    }
    rec.update(extra)
    return rec


# --- loading and validation ------------------------------------------------

def test_load_fills_rate_from_free_space_formula():
    sp = load_species(_record())
    hand = 2.37e15**3 * 2.99e-29**2 / (3 * math.pi * EPS0 * HBAR * C**3)
    assert sp.rates[1, 0] == pytest.approx(hand, rel=1e-14)
    assert sp.total_rate(0) == 0.0


def test_load_keeps_explicit_rate():
    rec = _record()
    rec["transitions"][0]["rate_per_s"] = 1.0e7
    assert load_species(rec).rates[1, 0] == 1.0e7


def test_unit_conversions():
    rec = {
        "levels": [{"label": "g", "energy_eV": 0.0}, {"label": "e", "energy_eV": 1.5}],
        "transitions": [{"upper": "e", "lower": "g", "dipole_D": [0.0, 3.0, 4.0]}],
        "position_nm": [1.0, 2.0, 3.0],
    }
    sp = load_species(rec)
    from scipy import constants as sc
    assert sp.energies[1] == pytest.approx(1.5 * sc.eV, rel=1e-15)
    assert np.linalg.norm(sp.dipoles[1, 0]) == pytest.approx(5.0 * 1e-21 / sc.c, rel=1e-14)
    np.testing.assert_allclose(sp.position, [1e-9, 2e-9, 3e-9])
    sp2 = load_species({"levels": rec["levels"],
                        "transitions": [{"upper": "e", "lower": "g", "dipole_ea0": 2.0}]})
    np.testing.assert_allclose(sp2.dipoles[0, 1], [0, 0, 2 * EA0])


def test_single_level_species():
    sp = load_species({"levels": [{"label": "g", "energy_J": 0.0}]})
    assert sp.n_levels == 1
    assert sp.total_rate(0) == 0.0
    assert sp.downward_transitions() == []


@pytest.mark.parametrize("mutate, message", [
    (lambda r: r["transitions"].append(
        {"upper": "g", "lower": "e", "dipole_Cm": 1.0e-29}), "asymmetric"),
    (lambda r: r["levels"].append({"label": "g", "energy_J": 1e-18}), "duplicate"),
    (lambda r: r["levels"].__setitem__(1, {"label": "e", "energy_J": -1e-19}), "increasing"),
    (lambda r: r["transitions"][0].__setitem__("rate_per_s", -1.0), "negative"),
    (lambda r: r.__setitem__("colour", "red"), "unknown"),
    (lambda r: r["transitions"][0].__setitem__("dipole_D", 1.0), "exactly one"),
])
def test_load_rejects_bad_records(mutate, message):
    rec = _record()
    mutate(rec)
    with pytest.raises(SpeciesError, match=message):
        load_species(rec)


def test_constructor_rejects_asymmetric_and_diagonal_dipoles():
    d = np.zeros((2, 2, 3))
    d[1, 0] = [0, 0, 1e-29]
    with pytest.raises(SpeciesError):
        AtomicSpecies(("g", "e"), [0.0, 1e-19], d, np.zeros((2, 2)))
    d[0, 1] = d[1, 0]
    d[0, 0] = [1e-30, 0, 0]
    with pytest.raises(SpeciesError):
        AtomicSpecies(("g", "e"), [0.0, 1e-19], d, np.zeros((2, 2)))


def test_population_state_validation():
    with pytest.raises(ValueError):
        PopulationState([0.5, 0.6])
    with pytest.raises(ValueError):
        PopulationState([1.2, -0.2])
    PopulationState([0.5, 0.5 + 5e-13])


# --- decay rate ---------------------------------------------------------------

def test_decay_rate_against_arbitrary_precision():
    mp.mp.dps = 40
    w, d = mp.mpf("2.37e15"), mp.mpf("2.99e-29")
    ref = w**3 * d**2 / (3 * mp.pi * mp.mpf(EPS0) * mp.mpf(HBAR) * mp.mpf(C) ** 3)
    assert free_space_decay_rate(2.37e15, 2.99e-29) == pytest.approx(float(ref), rel=1e-14)


def test_decay_rate_power_laws():
    g = free_space_decay_rate(2e15, [0, 0, 1e-29])
    assert free_space_decay_rate(2e15, [0, 0, 2e-29]) == pytest.approx(4 * g, rel=1e-14)
    assert free_space_decay_rate(4e15, [0, 0, 1e-29]) == pytest.approx(8 * g, rel=1e-14)
    assert free_space_decay_rate(2e15, 0.0) == 0.0
    with pytest.raises(ValueError):
        free_space_decay_rate(0.0, 1e-29)


# --- populations ----------------------------------------------------------------

def test_evolution_identity_and_backwards_error():
    sp = three_level()
    p0 = PopulationState([0.2, 0.3, 0.5], t=1e-9)
    assert evolve_populations(sp, p0, 1e-9) is p0
    with pytest.raises(ValueError):
        evolve_populations(sp, p0, 0.0)


def test_two_level_exponential_decay():
    sp = two_level(2.37e15, 2.99e-29)
    gam = sp.rates[1, 0]
    for t in np.linspace(0, 5 / gam, 11)[1:]:
        p = evolve_populations(sp, PopulationState([0.0, 1.0]), t).probabilities
        assert p[1] == pytest.approx(math.exp(-gam * t), rel=1e-13)
        assert p[0] == pytest.approx(1 - math.exp(-gam * t), rel=1e-13)


def _rk4(M, p0, t, steps):
    h = t / steps
    p = np.array(p0, dtype=float)
    for _ in range(steps):
        k1 = M @ p
        k2 = M @ (p + 0.5 * h * k1)
        k3 = M @ (p + 0.5 * h * k2)
        k4 = M @ (p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def test_three_level_cascade_closed_form_and_rk4():
    sp = three_level(rates=(2.0e7, 5.0e7))
    g1, g2 = 2.0e7, 5.0e7
    t = 3.0e-8
    p = evolve_populations(sp, PopulationState([0, 0, 1.0]), t).probabilities
    hand = g2 * (math.exp(-g1 * t) - math.exp(-g2 * t)) / (g2 - g1)
    assert p[1] == pytest.approx(hand, rel=1e-12)
    steps = int(round(g2 * t / 1e-4))
    ref = _rk4(rate_matrix(sp), [0, 0, 1.0], t, steps)
    np.testing.assert_allclose(p, ref, rtol=1e-8)


def test_degenerate_rates_use_secular_solution():
    gam = 3.0e7
    sp = three_level(rates=(gam, gam * (1 + 1e-12)))
    t = 4.0e-8
    p = evolve_populations(sp, PopulationState([0, 0, 1.0]), t).probabilities
    assert np.all(np.isfinite(p))
    assert p[1] == pytest.approx(gam * t * math.exp(-gam * t), rel=1e-9)
    ref = _rk4(rate_matrix(sp), [0, 0, 1.0], t, int(round(gam * t / 1e-4)))
    np.testing.assert_allclose(p, ref, rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3).filter(lambda v: sum(v) > 0.1),
       st.floats(1e6, 1e8), st.floats(1e6, 1e8), st.floats(0.0, 2e-7))
def test_population_conservation(weights, r1, r2, t):
    sp = three_level(rates=(r1, r2))
    w = np.array(weights) / sum(weights)
    w[-1] = 1.0 - w[:-1].sum()
    p = evolve_populations(sp, PopulationState(np.clip(w, 0, 1)), t).probabilities
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all((p >= 0) & (p <= 1))


@settings(max_examples=40, deadline=None)
@given(st.floats(1e13, 1e16), st.floats(1e-31, 1e-28))
def test_excited_population_strictly_decreasing(omega, d):
    sp = two_level(omega, d)
    gam = sp.rates[1, 0]
    ts = np.linspace(0, 20 / gam, 30)
    p = [evolve_populations(sp, PopulationState([0, 1.0]), t).probabilities[1] for t in ts]
    assert np.all(np.diff(p) < 0)


# --- polarizability -------------------------------------------------------------

def test_static_ground_polarizability():
    w0 = 2.37e15
    d = np.array([1.0, -2.0, 0.5]) * 1e-29
    sp = two_level(w0, d)
    a = polarizability(sp, PopulationState([1.0, 0.0]), 0.0)
    np.testing.assert_allclose(a, 2 * np.outer(d, d) / (HBAR * w0), rtol=1e-14)


def test_imaginary_frequency_two_level():
    w0, xi = 2.37e15, 1.3e15
    d = np.array([0.3, 0.0, 1.0]) * 1e-29
    sp = two_level(w0, d)
    a = polarizability(sp, PopulationState([1.0, 0.0]), 1j * xi)
    assert np.max(np.abs(a.imag)) == 0.0
    np.testing.assert_allclose(a.real, 2 * np.outer(d, d) * w0 / (HBAR * (w0**2 + xi**2)),
                               rtol=1e-14)


def test_isotropic_flag_equals_three_orthogonal_dipoles():
    w0, xi = 2.37e15, 0.7e15
    mag = 2.99e-29
    iso = two_level(w0, mag, isotropic=True)
    pops = PopulationState([1.0, 0.0])
    a_iso = polarizability(iso, pops, 1j * xi)
    # degenerate sublevel sum done by hand: one oriented atom per axis, a third weight each
    total = sum(polarizability(two_level(w0, mag * e), pops, 1j * xi)
                for e in np.eye(3)) / 3.0
    np.testing.assert_allclose(a_iso, total, rtol=1e-14)
    np.testing.assert_allclose(a_iso, a_iso[0, 0] * np.eye(3), rtol=1e-14)


def test_excited_polarizability_sign_flips():
    sp = two_level(2.0e15, [0, 0, 1e-29])
    a_g = polarizability(sp, PopulationState([1.0, 0.0]), 1j * 1e15)
    a_e = polarizability(sp, PopulationState([0.0, 1.0]), 1j * 1e15)
    np.testing.assert_allclose(a_e, -a_g, rtol=1e-14)


def test_pole_proximity_rejected():
    sp = two_level(2.0e15, [0, 0, 1e-29])
    with pytest.raises(PoleProximityError):
        polarizability(sp, PopulationState([1.0, 0.0]), 2.0e15 * (1 + 1e-8))
    polarizability(sp, PopulationState([1.0, 0.0]), 2.0e15 * (1 + 1e-4))


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 1e17), st.floats(0.0, 1.0))
def test_crossing_relations_and_positivity(xi, p_excited):
    sp = three_level()
    pops = PopulationState([1.0 - p_excited, 0.0, p_excited])
    a = polarizability(sp, pops, 1j * xi)
    assert np.all(a.imag == 0)
    np.testing.assert_allclose(a, a.T, rtol=1e-14, atol=0)
    ground = polarizability(sp, PopulationState([1.0, 0, 0]), 1j * xi).real
    assert np.min(np.linalg.eigvalsh(ground)) >= -1e-14 * np.max(np.abs(ground))


@settings(max_examples=80, deadline=None)
@given(st.floats(-5e15, 5e15), st.floats(1e12, 3e15))
def test_reflection_relation(re, im):
    sp = three_level()
    pops = PopulationState([0.3, 0.3, 0.4])
    w = complex(re, im)
    np.testing.assert_allclose(polarizability(sp, pops, -np.conj(w)),
                               np.conj(polarizability(sp, pops, w)), rtol=1e-12, atol=0)
