"""Dyadic Green tensors of the electromagnetic field.

Convention: the field of a point dipole d at r' is E(r) = mu0 omega^2 G(r, r', omega) d,
so the free-space tensor has units 1/m and its near field reduces to the
static dipole field. Gradients are taken with respect to the first argument
and stored as ``gradient[..., l, i, j] = d G_ij / d r_l``.

All evaluators broadcast over an array of frequencies; a scalar frequency
returns unbatched arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants as sc

from .atomic import (AtomicSpecies, PopulationState, evolve_populations, ground_state,
                     polarizability)

C = sc.c
MU0 = sc.mu_0

# |i omega rho / c| below which the Laurent series replaces the closed form
SERIES_RADIUS = 0.05
_SERIES_TERMS = 18

# e^z * sum_j c_j z^j for the four radial functions, keyed by power j
_A = {0: 1.0, -1: -1.0, -2: 1.0}                 # e^z (1 - 1/z + 1/z^2)
_B = {0: 1.0, -1: -3.0, -2: 3.0}                 # e^z (1 - 3/z + 3/z^2)
_DA = {1: 1.0, 0: -2.0, -1: 3.0, -2: -3.0}       # z a'(z) - a(z)
_DB = {1: 1.0, 0: -4.0, -1: 9.0, -2: -9.0}       # z b'(z) - b(z)


def _series_coefficients(c: dict, n_terms: int) -> tuple[int, np.ndarray]:
    lo = min(c)
    out = np.zeros(n_terms)
    for i in range(n_terms):
        m = lo + i
        out[i] = sum(cj / math.factorial(m - j) for j, cj in c.items() if m - j >= 0)
    return lo, out


_SERIES = {name: _series_coefficients(c, _SERIES_TERMS)
           for name, c in (("a", _A), ("b", _B), ("da", _DA), ("db", _DB))}


def _closed(c: dict, z, ez):
    return ez * sum(cj * z**j for j, cj in c.items())


def _laurent(name: str, z):
    lo, coeffs = _SERIES[name]
    acc = np.zeros_like(z)
    for cm in coeffs[::-1]:
        acc = acc * z + cm
    return acc * z**lo


def radial_functions(z, series_radius: float = SERIES_RADIUS):
    """The scalar functions a, b and their radial derivatives at z = i omega rho / c.

    G = [a I - b e e] / (4 pi rho); d(a / rho)/d rho = da / rho^2, same for b.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("free-space Green tensor is singular at zero frequency")
    small = np.abs(z) < series_radius
    out = []
    with np.errstate(over="ignore", invalid="ignore"):
        ez = np.exp(z)
        for name, c in (("a", _A), ("b", _B), ("da", _DA), ("db", _DB)):
            val = _closed(c, z, ez)
            if np.any(small):
                val = np.where(small, _laurent(name, np.where(small, z, 1.0)), val)
            # e^z underflows before the polynomial overflows; clean the 0*inf cases
            val = np.where(ez == 0, 0.0, val)
            out.append(val)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GreenSample:
    value: np.ndarray
    gradient: np.ndarray

    def swapped(self) -> "GreenSample":
        """Tensor with arguments exchanged, differentiated w.r.t. the same point.

        For reciprocal media G(r', r) = G(r, r')^T, hence the gradient of the
        swapped tensor with respect to the (now second) argument is the
        index-transposed gradient.
        """
        return GreenSample(np.swapaxes(self.value, -1, -2),
                           np.swapaxes(self.gradient, -1, -2))

    def __add__(self, other: "GreenSample") -> "GreenSample":
        return GreenSample(self.value + other.value, self.gradient + other.gradient)


def _g0_batch(sep: np.ndarray, omega: np.ndarray, with_gradient: bool = True):
    """Free-space tensor for separations ``sep`` (P, 3) and frequencies (M,).

    Returns value (M, P, 3, 3) and gradient (M, P, 3, 3, 3).
    """
    sep = np.atleast_2d(np.asarray(sep, dtype=float))
    rho = np.linalg.norm(sep, axis=-1)
    if np.any(rho == 0) or np.any(rho < 1e-15):
        raise ValueError("Green tensor evaluated at coincident points")
    e = sep / rho[:, None]
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    z = 1j * omega[:, None] * rho[None, :] / C
    a, b, da, db = radial_functions(z)
    eye = np.eye(3)
    ee = e[:, :, None] * e[:, None, :]
    pref = 1.0 / (4 * math.pi * rho)
    val = (a * pref)[..., None, None] * eye - (b * pref)[..., None, None] * ee
    if not with_gradient:
        return val, None
    pref2 = pref / rho
    # d G_ij / d r_l = phi' e_l d_ij - psi' e_l e_i e_j
    #                  - psi (d_il e_j + d_jl e_i - 2 e_i e_j e_l) / rho
    e_d = e[:, :, None, None] * eye[None, None, :, :]             # e_l d_ij
    eee = e[:, :, None, None] * ee[:, None, :, :]                  # e_l e_i e_j
    sym = (eye[None, :, :, None] * e[:, None, None, :]             # d_il e_j
           + eye[None, :, None, :] * e[:, None, :, None]           # d_jl e_i
           - 2 * eee)
    grad = ((da * pref2)[..., None, None, None] * e_d
            - (db * pref2)[..., None, None, None] * eee
            - (b * pref2)[..., None, None, None] * sym)
    return val, grad


def free_space_green(r_a, r_b, omega) -> GreenSample:
    """G0(r_a, r_b, omega) and its gradient with respect to r_a."""
    sep = np.asarray(r_a, dtype=float) - np.asarray(r_b, dtype=float)
    scalar = np.ndim(omega) == 0
    val, grad = _g0_batch(sep[None, :], omega)
    val, grad = val[:, 0], grad[:, 0]
    if scalar:
        val, grad = val[0], grad[0]
    return GreenSample(val, grad)


class FreeSpace:
    """Vacuum environment; the scattering part of the Green tensor vanishes."""

    def __repr__(self):
        return "FreeSpace()"


FREE_SPACE = FreeSpace()


@dataclass(frozen=True, eq=False)
class DiluteBody:
    """A dilute body discretised into weighted ground-state atoms.

    ``weights`` are eta * dV, the (dimensionless) number of body atoms each
    point stands for.
    """

    points: np.ndarray
    weights: np.ndarray
    species: AtomicSpecies
    initial: PopulationState | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.size:
            raise ValueError("one weight per body point required")
        if np.any(w <= 0):
            raise ValueError("body weights must be positive")
        if pts.shape[0] != np.unique(pts, axis=0).shape[0]:
            raise ValueError("body points must be distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.initial is None:
            object.__setattr__(self, "initial", ground_state(self.species))

    def polarizability(self, omega, t: float = 0.0) -> np.ndarray:
        pops = evolve_populations(self.species, self.initial, max(t, self.initial.t))
        return polarizability(self.species, pops, omega)

    def scaled(self, factor: float) -> "DiluteBody":
        return DiluteBody(self.points, self.weights * factor, self.species, self.initial)

    def subset(self, mask) -> "DiluteBody":
        mask = np.asarray(mask)
        return DiluteBody(self.points[mask], self.weights[mask], self.species, self.initial)


def lattice_body(species: AtomicSpecies, shape: Sequence[int], spacing: float,
                 center, number_density: float) -> DiluteBody:
    """Rectangular lattice of body points; each carries eta * spacing^3 atoms."""
    nx, ny, nz = (int(s) for s in shape)
    if min(nx, ny, nz) < 1 or spacing <= 0 or number_density <= 0:
        raise ValueError("lattice needs positive shape, spacing and density")
    axes = [(np.arange(k) - (k - 1) / 2.0) * spacing for k in (nx, ny, nz)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    grid = grid + np.asarray(center, dtype=float)
    w = np.full(grid.shape[0], number_density * spacing**3)
    return DiluteBody(grid, w, species)


def born_scattering_green(body: DiluteBody, r, r_prime, omega, t: float = 0.0) -> GreenSample:
    """Leading Born term mu0 w^2 sum_b eta_b G0(r, r_b) alpha_b G0(r_b, r').

    Only the explicit dependence on ``r`` is differentiated; body atoms are fixed.
    """
    r = np.asarray(r, dtype=float)
    r_prime = np.asarray(r_prime, dtype=float)
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    if body.points.shape[0] == 0:
        z = np.zeros(omega.shape + (3, 3), dtype=complex)
        zg = np.zeros(omega.shape + (3, 3, 3), dtype=complex)
        return GreenSample(z[0], zg[0]) if scalar else GreenSample(z, zg)
    left, dleft = _g0_batch(r[None, :] - body.points, omega)           # G0(r, r_b)
    right, _ = _g0_batch(body.points - r_prime[None, :], omega, False)  # G0(r_b, r')
    alpha = body.polarizability(omega, t)                               # (M, 3, 3)
    w = body.weights
    pref = MU0 * omega**2
    ar = np.einsum("mjk,mpkl->mpjl", alpha, right)
    val = pref[:, None, None] * np.einsum("p,mpij,mpjl->mil", w, left, ar)
    grad = pref[:, None, None, None] * np.einsum("p,mpqij,mpjl->mqil", w, dleft, ar)
    if scalar:
        val, grad = val[0], grad[0]
    return GreenSample(val, grad)


def green(env, r, r_prime, omega, t: float = 0.0) -> GreenSample:
    """Total tensor G0 + G1 for the given environment."""
    g = free_space_green(r, r_prime, omega)
    if isinstance(env, FreeSpace) or env is None:
        return g
    if isinstance(env, DiluteBody):
        return g + born_scattering_green(env, r, r_prime, omega, t)
    raise TypeError(f"unsupported environment {env!r}")


__all__ = [
    "GreenSample", "FreeSpace", "FREE_SPACE", "DiluteBody", "lattice_body",
    "free_space_green", "born_scattering_green", "green", "radial_functions",
    "SERIES_RADIUS", "MU0",
]
