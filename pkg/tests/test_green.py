import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exvdw.atomic import C, PopulationState, polarizability
from exvdw.green import (FREE_SPACE, MU0, DiluteBody, born_scattering_green,
                         free_space_green, green, lattice_body, radial_functions)

from conftest import cs_like, three_level


def mp_green(r_a, r_b, omega, dps=40):
    """Closed-form free-space tensor in arbitrary precision."""
    with mp.workdps(dps):
        sep = [mp.mpf(float(a)) - mp.mpf(float(b)) for a, b in zip(r_a, r_b)]
        rho = mp.sqrt(sum(s * s for s in sep))
        e = [s / rho for s in sep]
        w = mp.mpc(complex(omega))
        c = mp.mpf(C)
        u = c / (w * rho)
        pref = mp.exp(1j * w * rho / c) / (4 * mp.pi * rho)
        p = 1 + 1j * u - u**2
        q = 1 + 3j * u - 3 * u**2
        out = np.empty((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                out[i, j] = complex(pref * (p * (i == j) - q * e[i] * e[j]))
        return out


def random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


# --- free-space tensor ---------------------------------------------------------

def test_arbitrary_precision_oracle_at_one_micron(rng):
    rho = 1e-6
    omega = 2 * math.pi * C / rho
    for _ in range(5):
        r_a = rng.normal(size=3) * 1e-6
        r_b = r_a - rho * random_direction(rng)
        assert rel(free_space_green(r_a, r_b, omega).value, mp_green(r_a, r_b, omega)) < 1e-12


@pytest.mark.parametrize("x", [1e-6, 1e-4, 1e-2, 0.049, 0.051, 0.3, 3.0, 30.0])
@pytest.mark.parametrize("kind", ["real", "imag"])
def test_oracle_across_series_radius(x, kind):
    rho = 2e-7
    omega = x * C / rho * (1 if kind == "real" else 1j)
    r_a, r_b = np.zeros(3), rho * np.array([0.6, 0.0, 0.8])
    got = free_space_green(r_a, r_b, omega).value
    ref = mp_green(r_a, r_b, omega)
    assert rel(got, ref) < 1e-12
    if kind == "real":
        # the radiative (imaginary) part is tiny at small x; check it separately
        assert np.max(np.abs(got.imag - ref.imag)) <= 1e-10 * np.max(np.abs(ref.imag))


def test_series_matches_closed_form_at_small_argument():
    z = 1j * 1e-4
    series = radial_functions(z)
    closed = radial_functions(z, series_radius=0.0)
    for s, c in zip(series, closed):
        assert abs(s - c) <= 1e-8 * abs(c)


def test_axial_symmetry():
    g = free_space_green([0, 0, 3e-7], [0, 0, 0], 1.7e15).value
    assert np.count_nonzero(g - np.diag(np.diag(g))) == 0
    assert g[0, 0] == g[1, 1]
    assert g[0, 0] != g[2, 2]


def test_imaginary_frequency_real_with_decay_factor():
    rho, xi = 4e-7, 3e15
    g = free_space_green([rho, 0, 0], [0, 0, 0], 1j * xi).value
    assert np.all(g.imag == 0)
    u = C / (xi * rho)
    lead = math.exp(-xi * rho / C) / (4 * math.pi * rho)
    assert g.real[1, 1] == pytest.approx(lead * (1 + u + u**2), rel=1e-13)
    assert g.real[0, 0] == pytest.approx(lead * (1 + u + u**2 - 1 - 3 * u - 3 * u**2), rel=1e-13)


def test_coincident_points_and_zero_frequency_rejected():
    with pytest.raises(ValueError):
        free_space_green([1, 2, 3], [1, 2, 3], 1e15)
    with pytest.raises(ValueError):
        free_space_green([0, 0, 0], [0, 0, 1e-7], 0.0)


def test_far_field_decay_along_imaginary_axis():
    r_a, r_b = np.zeros(3), np.array([0, 2e-7, 1e-7])
    vals = [np.max(np.abs(xi**2 * free_space_green(r_a, r_b, 1j * xi).value))
            for xi in (1e16, 1e17, 1e18)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-100 * vals[0]


def _random_config(rng):
    rho = 10 ** rng.uniform(-9, -5)
    r_a = rng.normal(size=3) * 1e-6
    r_b = r_a + rho * random_direction(rng)
    x = 10 ** rng.uniform(-3, 2)
    omega = x * C / rho
    return r_a, r_b, omega


def test_reciprocity_and_schwarz_on_random_configurations(rng):
    worst_recip = worst_schwarz = 0.0
    for _ in range(1000):
        r_a, r_b, omega = _random_config(rng)
        w = omega * np.exp(1j * rng.uniform(0, math.pi))  # upper half plane
        g_ab = free_space_green(r_a, r_b, w).value
        g_ba = free_space_green(r_b, r_a, w).value
        worst_recip = max(worst_recip, rel(g_ab.T, g_ba))
        g_im = free_space_green(r_a, r_b, 1j * omega).value
        worst_schwarz = max(worst_schwarz, np.max(np.abs(g_im.imag)) / np.max(np.abs(g_im)))
    assert worst_recip <= 1e-12
    assert worst_schwarz <= 1e-14


def fd_gradient(fun, r, h):
    """Fourth-order central differences of a tensor-valued fun(r)."""
    out = []
    for l in range(3):
        e = np.zeros(3)
        e[l] = h
        out.append((-fun(r + 2 * e) + 8 * fun(r + e) - 8 * fun(r - e) + fun(r - 2 * e))
                   / (12 * h))
    return np.stack(out)


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for i in range(1000):
        r_a, r_b, omega = _random_config(rng)
        w = omega if i % 2 else 1j * omega
        rho = np.linalg.norm(r_a - r_b)
        analytic = free_space_green(r_a, r_b, w).gradient
        numeric = fd_gradient(lambda r: free_space_green(r, r_b, w).value, r_a, 1e-5 * rho)
        worst = max(worst, rel(analytic, numeric))
    assert worst <= 1e-7


# --- Born scattering tensor ------------------------------------------------------

@pytest.fixture
def body():
    sp = cs_like(isotropic=False)
    pts = np.array([[1e-7, 0, 0], [0, 2e-7, 5e-8], [-1e-7, -1e-7, 1e-7]])
    return DiluteBody(pts, [0.5, 1.5, 2.0], sp)


def test_empty_body_gives_zero():
    empty = DiluteBody(np.zeros((0, 3)), np.zeros(0), cs_like())
    g = born_scattering_green(empty, [0, 0, 0], [1e-7, 0, 0], 1e15)
    assert np.all(g.value == 0) and np.all(g.gradient == 0)


def test_single_point_is_one_term():
    sp = cs_like(isotropic=False)
    b = np.array([5e-8, 1e-7, -3e-8])
    body = DiluteBody(b[None, :], [0.7], sp)
    r, rp, w = np.array([0, 0, 0.0]), np.array([1e-7, 0, 2e-8]), 1.1e15
    alpha = polarizability(sp, PopulationState([1.0, 0.0]), w)
    expect = MU0 * w**2 * 0.7 * (free_space_green(r, b, w).value @ alpha
                                 @ free_space_green(b, rp, w).value)
    assert rel(born_scattering_green(body, r, rp, w).value, expect) < 1e-14


def test_mirror_symmetric_pair():
    sp = cs_like(isotropic=True)
    r, rp = np.array([-1e-7, 0, 0]), np.array([1e-7, 0, 0])
    b1 = np.array([-4e-8, 6e-8, 3e-8])
    S = np.diag([-1.0, 1.0, 1.0])
    b2 = S @ b1
    body = DiluteBody(np.stack([b1, b2]), [1.0, 1.0], sp)
    w = 1.3e15
    g = born_scattering_green(body, r, rp, w).value
    term = lambda b: (free_space_green(r, b, w).value
                      @ polarizability(sp, PopulationState([1.0, 0.0]), w)
                      @ free_space_green(b, rp, w).value)
    brute = MU0 * w**2 * (term(b1) + term(b2))
    assert rel(g, brute) < 1e-14
    assert rel(g, S @ g.T @ S) < 1e-13


def test_linearity_and_partition_additivity(body):
    r, rp, w = np.zeros(3), np.array([0, 0, 3e-7]), 0.9e15
    g = born_scattering_green(body, r, rp, w)
    g3 = born_scattering_green(body.scaled(3.0), r, rp, w)
    assert rel(g3.value, 3 * g.value) < 1e-14
    mask = np.array([True, False, True])
    parts = (born_scattering_green(body.subset(mask), r, rp, w)
             + born_scattering_green(body.subset(~mask), r, rp, w))
    assert rel(parts.value, g.value) < 1e-14
    assert rel(parts.gradient, g.gradient) < 1e-14


def test_total_tensor_reciprocity_with_body(body, rng):
    for _ in range(50):
        r = rng.normal(size=3) * 3e-7
        rp = rng.normal(size=3) * 3e-7
        w = rng.uniform(0.2, 3) * 1e15 * np.exp(1j * rng.uniform(0, math.pi / 2))
        assert rel(green(body, r, rp, w).value.T, green(body, rp, r, w).value) < 1e-12


def test_born_gradient_and_schwarz(body):
    r, rp = np.array([2e-7, -1e-7, 0.0]), np.array([0, 0, 3e-7])
    for w in (1.2e15, 1j * 0.8e15):
        g = born_scattering_green(body, r, rp, w)
        numeric = fd_gradient(lambda x: born_scattering_green(body, x, rp, w).value, r,
                              1e-5 * 1e-7)
        assert rel(g.gradient, numeric) < 1e-7
    gi = born_scattering_green(body, r, rp, 1j * 0.8e15).value
    assert np.max(np.abs(gi.imag)) <= 1e-14 * np.max(np.abs(gi))


def test_free_space_dispatch():
    a, b, w = [0, 0, 0], [1e-7, 2e-7, 0], 1.5e15
    assert np.array_equal(green(FREE_SPACE, a, b, w).value, free_space_green(a, b, w).value)


def test_batched_frequencies_match_scalar_calls():
    a, b = np.zeros(3), np.array([1e-7, 2e-7, 0])
    ws = np.array([1e13, 1e15j, 2e15 + 1e14j])
    batch = free_space_green(a, b, ws)
    for i, w in enumerate(ws):
        np.testing.assert_array_equal(batch.value[i], free_space_green(a, b, w).value)


def test_lattice_geometry():
    body = lattice_body(three_level(), (2, 3, 4), 1e-8, [1e-7, 0, 0], 2e25)
    assert body.points.shape == (24, 3)
    np.testing.assert_allclose(body.points.mean(axis=0), [1e-7, 0, 0], atol=1e-22)
    np.testing.assert_allclose(body.weights, 2e25 * 1e-24)


def test_body_validation():
    with pytest.raises(ValueError):
        DiluteBody([[0, 0, 0]], [-1.0], cs_like())
    with pytest.raises(ValueError):
        DiluteBody([[0, 0, 0], [0, 0, 0]], [1.0, 1.0], cs_like())


@settings(max_examples=100, deadline=None)
@given(st.floats(-8.0, -5.0), st.floats(-3.0, 2.0), st.floats(0.0, math.pi))
def test_reciprocity_property(log_rho, log_x, phase):
    rho = 10**log_rho
    sep = rho * np.array([math.sin(phase), 0.3, math.cos(phase)])
    w = 10**log_x * C / rho * np.exp(1j * phase)
    g1 = free_space_green(sep, np.zeros(3), w).value
    g2 = free_space_green(np.zeros(3), sep, w).value
    assert rel(g1.T, g2) <= 1e-12
