"""Atomic level schemes, spontaneous-decay cascades and polarizabilities.

All quantities are SI: energies in J, dipoles in C m, frequencies in rad/s,
rates in 1/s. Unit conversion of user input happens in :func:`load_species`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import constants as sc

HBAR = sc.hbar
EPS0 = sc.epsilon_0
C = sc.c
DEBYE = 1e-21 / sc.c  # C m
EA0 = sc.e * sc.physical_constants["Bohr radius"][0]  # atomic unit of dipole, C m

_ENERGY_UNITS = {"energy_J": 1.0, "energy_eV": sc.eV}
_DIPOLE_UNITS = {"dipole_Cm": 1.0, "dipole_D": DEBYE, "dipole_ea0": EA0}
_LENGTH_UNITS = {"position_m": 1.0, "position_nm": 1e-9}

POLE_TOLERANCE = 1e-6
DEGENERATE_RATE_TOLERANCE = 1e-9


class SpeciesError(ValueError):
    """Invalid level-scheme data."""


class PoleProximityError(ValueError):
    """A real frequency lies on (or too close to) an atomic resonance."""


@dataclass(frozen=True, eq=False)
class AtomicSpecies:
    """Level scheme of one atom.

    ``dipoles[m, n]`` is the real transition dipole d_mn, ``rates[m, n]`` the
    partial decay rate m -> n (only m > n may be nonzero). With
    ``isotropic=True`` every dipole enters through its orientation average
    (|d|^2 / 3) times the identity, which is how degenerate magnetic sublevels
    of a real atom are represented without breaking level ordering.
    """

    labels: tuple[str, ...]
    energies: np.ndarray
    dipoles: np.ndarray
    rates: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    isotropic: bool = False

    def __post_init__(self):
        labels = tuple(self.labels)
        energies = np.asarray(self.energies, dtype=float).reshape(-1)
        n = energies.size
        dipoles = np.asarray(self.dipoles, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        position = np.asarray(self.position, dtype=float).reshape(3)
        if n == 0:
            raise SpeciesError("species needs at least one level")
        if len(labels) != n:
            raise SpeciesError("one label per level required")
        if len(set(labels)) != n:
            raise SpeciesError(f"duplicate level labels in {labels}")
        if np.any(np.diff(energies) <= 0):
            raise SpeciesError("level energies must be strictly increasing")
        if dipoles.shape != (n, n, 3):
            raise SpeciesError(f"dipole array must have shape {(n, n, 3)}")
        if np.any(dipoles[np.arange(n), np.arange(n)] != 0.0):
            raise SpeciesError("diagonal dipoles d_nn must vanish")
        if not np.array_equal(dipoles, dipoles.transpose(1, 0, 2)):
            raise SpeciesError("dipole map must satisfy d_mn = d_nm")
        if rates.shape != (n, n):
            raise SpeciesError(f"rate array must have shape {(n, n)}")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise SpeciesError("decay rates must be finite and nonnegative")
        if np.any(np.triu(rates) != 0):
            raise SpeciesError("only downward rates (m > n) are allowed")
        for name, value in (("labels", labels), ("energies", energies),
                            ("dipoles", dipoles), ("rates", rates),
                            ("position", position)):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_levels(self) -> int:
        return self.energies.size

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise SpeciesError(f"unknown level label {label!r}") from None

    def frequency(self, m: int, n: int) -> float:
        """Transition frequency omega_mn = (E_m - E_n) / hbar."""
        return (self.energies[m] - self.energies[n]) / HBAR

    def dyad(self, m: int, n: int) -> np.ndarray:
        d = self.dipoles[m, n]
        if self.isotropic:
            return np.eye(3) * (d @ d) / 3.0
        return np.outer(d, d)

    def total_rate(self, n: int) -> float:
        return float(self.rates[n].sum())

    @property
    def total_rates(self) -> np.ndarray:
        return self.rates.sum(axis=1)

    def moved(self, position) -> "AtomicSpecies":
        return AtomicSpecies(self.labels, self.energies, self.dipoles,
                             self.rates, np.asarray(position, dtype=float),
                             self.isotropic)

    def downward_transitions(self):
        """(upper, lower) pairs with nonzero dipole, upper > lower."""
        n = self.n_levels
        return [(m, k) for m in range(n) for k in range(m)
                if np.any(self.dipoles[m, k] != 0.0)]


@dataclass(frozen=True, eq=False)
class PopulationState:
    probabilities: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("populations must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"populations must sum to 1 (got {p.sum()!r})")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def pure(cls, n_levels: int, level: int, t: float = 0.0) -> "PopulationState":
        p = np.zeros(n_levels)
        p[level] = 1.0
        return cls(p, t)


def ground_state(species: AtomicSpecies, t: float = 0.0) -> PopulationState:
    return PopulationState.pure(species.n_levels, 0, t)


def free_space_decay_rate(omega: float, dipole) -> float:
    """Spontaneous emission rate omega^3 |d|^2 / (3 pi eps0 hbar c^3)."""
    if not omega > 0:
        raise ValueError(f"transition frequency must be positive, got {omega!r}")
    d = np.asarray(dipole, dtype=float)
    d2 = float(d @ d) if d.ndim else float(d) ** 2
    return omega**3 * d2 / (3.0 * math.pi * EPS0 * HBAR * C**3)


def _one_unit(record: Mapping, units: Mapping[str, float], what: str, required=True):
    keys = [k for k in units if k in record]
    if len(keys) > 1:
        raise SpeciesError(f"{what}: give exactly one of {sorted(units)}")
    if not keys:
        if required:
            raise SpeciesError(f"{what}: missing one of {sorted(units)}")
        return None
    return keys[0], units[keys[0]]


def _dipole_vector(value, scale: float) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        return np.array([0.0, 0.0, float(v)]) * scale
    if v.shape != (3,):
        raise SpeciesError(f"dipole must be a scalar or 3-vector, got {value!r}")
    return v * scale


def load_species(record: Mapping) -> AtomicSpecies:
    """Build a validated species from a unit-suffixed level-scheme record.

    Record layout::

        {"levels": [{"label": "g", "energy_eV": 0.0}, ...],
         "transitions": [{"upper": "e", "lower": "g", "dipole_D": [0, 0, 3.0],
                          "rate_per_s": 3.6e7}],          # rate optional
         "isotropic": true,                                # optional
         "position_nm": [0, 0, 0]}                         # optional

    Missing downward rates are filled with :func:`free_space_decay_rate`.
    """
    allowed = {"levels", "transitions", "isotropic"} | set(_LENGTH_UNITS)
    unknown = set(record) - allowed
    if unknown:
        raise SpeciesError(f"unknown species keys: {sorted(unknown)}")
    levels = record.get("levels")
    if not levels:
        raise SpeciesError("species record needs a nonempty 'levels' list")
    labels, energies = [], []
    for lv in levels:
        extra = set(lv) - ({"label"} | set(_ENERGY_UNITS))
        if extra:
            raise SpeciesError(f"unknown level keys: {sorted(extra)}")
        key, scale = _one_unit(lv, _ENERGY_UNITS, f"level {lv.get('label')!r}")
        labels.append(str(lv["label"]))
        energies.append(float(lv[key]) * scale)
    if len(set(labels)) != len(labels):
        raise SpeciesError(f"duplicate level labels in {labels}")
    n = len(labels)
    lookup = {lab: i for i, lab in enumerate(labels)}
    dipoles = np.zeros((n, n, 3))
    seen = np.zeros((n, n), dtype=bool)
    explicit = {}
    for tr in record.get("transitions", ()):
        extra = set(tr) - ({"upper", "lower", "rate_per_s"} | set(_DIPOLE_UNITS))
        if extra:
            raise SpeciesError(f"unknown transition keys: {sorted(extra)}")
        try:
            m, k = lookup[tr["upper"]], lookup[tr["lower"]]
        except KeyError as exc:
            raise SpeciesError(f"transition references unknown level {exc}") from None
        if m == k:
            raise SpeciesError("a transition needs two distinct levels")
        key, scale = _one_unit(tr, _DIPOLE_UNITS, f"transition {m}->{k}")
        d = _dipole_vector(tr[key], scale)
        # a pair given twice must agree in both directions
        if seen[m, k] and not np.array_equal(dipoles[m, k], d):
            raise SpeciesError(f"asymmetric dipole data for levels {m}, {k}")
        dipoles[m, k] = dipoles[k, m] = d
        seen[m, k] = seen[k, m] = True
        if "rate_per_s" in tr:
            hi, lo = max(m, k), min(m, k)
            rate = float(tr["rate_per_s"])
            if rate < 0:
                raise SpeciesError(f"negative decay rate for {hi}->{lo}")
            explicit[hi, lo] = rate
    energies = np.asarray(energies)
    if np.any(np.diff(energies) <= 0):
        raise SpeciesError("level energies must be strictly increasing")
    rates = np.zeros((n, n))
    for m in range(n):
        for k in range(m):
            if (m, k) in explicit:
                rates[m, k] = explicit[m, k]
            elif np.any(dipoles[m, k] != 0):
                rates[m, k] = free_space_decay_rate(
                    (energies[m] - energies[k]) / HBAR, dipoles[m, k])
    pos = _one_unit(record, _LENGTH_UNITS, "position", required=False)
    position = np.zeros(3) if pos is None else np.asarray(record[pos[0]], float) * pos[1]
    return AtomicSpecies(tuple(labels), energies, dipoles, rates, position,
                         bool(record.get("isotropic", False)))


def two_level(omega: float, dipole, rate: float | None = None, position=(0, 0, 0),
              isotropic: bool = False) -> AtomicSpecies:
    """Convenience constructor for a ground/excited pair in SI units."""
    d = _dipole_vector(dipole, 1.0)
    dipoles = np.zeros((2, 2, 3))
    dipoles[0, 1] = dipoles[1, 0] = d
    rates = np.zeros((2, 2))
    rates[1, 0] = free_space_decay_rate(omega, d) if rate is None else rate
    return AtomicSpecies(("g", "e"), np.array([0.0, HBAR * omega]), dipoles,
                         rates, np.asarray(position, float), isotropic)


# --- population dynamics -------------------------------------------------

def _cluster_rates(gammas: np.ndarray) -> np.ndarray:
    """Map nearly equal decay rates onto one representative value."""
    reps: list[float] = []
    out = np.empty_like(gammas)
    for i, g in enumerate(gammas):
        for r in reps:
            if g == r or abs(g - r) < DEGENERATE_RATE_TOLERANCE * max(g, r):
                out[i] = r
                break
        else:
            reps.append(g)
            out[i] = g
    return out


def _add(terms: dict, rate: float, coeffs):
    poly = terms.setdefault(rate, np.zeros(0))
    size = max(poly.size, len(coeffs))
    new = np.zeros(size)
    new[:poly.size] += poly
    new[:len(coeffs)] += coeffs
    terms[rate] = new


def cascade_solution(species: AtomicSpecies, p0) -> list[dict]:
    """Closed-form solution of dp_n/dt = -G_n p_n + sum_{m>n} G_{m->n} p_m.

    Returns, per level, a mapping ``rate -> polynomial coefficients`` so that
    p_n(t) = sum_rate sum_q c_q t^q exp(-rate t). Equal rates produce the
    secular t^q exp(-rate t) terms instead of a divergent eigen-solution.
    """
    gam = _cluster_rates(species.total_rates)
    n = species.n_levels
    sol: list[dict] = [dict() for _ in range(n)]
    for lvl in range(n - 1, -1, -1):
        g = gam[lvl]
        terms: dict = {}
        if p0[lvl] != 0.0:
            _add(terms, g, [p0[lvl]])
        for m in range(lvl + 1, n):
            feed = species.rates[m, lvl]
            if feed == 0.0:
                continue
            for lam, poly in sol[m].items():
                for q, c in enumerate(poly):
                    if c == 0.0:
                        continue
                    c = c * feed
                    if lam == g:
                        coeffs = np.zeros(q + 2)
                        coeffs[q + 1] = c / (q + 1)
                        _add(terms, g, coeffs)
                        continue
                    # int_0^t s^q e^{delta s} ds, delta = g - lam
                    delta = g - lam
                    coeffs = np.zeros(q + 1)
                    for i in range(q + 1):
                        coeffs[q - i] = c * (-1) ** i * math.factorial(q) / (
                            math.factorial(q - i) * delta ** (i + 1))
                    _add(terms, lam, coeffs)
                    _add(terms, g, [-c * (-1) ** q * math.factorial(q) / delta ** (q + 1)])
        sol[lvl] = terms
    return sol


def evolve_populations(species: AtomicSpecies, initial: PopulationState,
                       t: float) -> PopulationState:
    """Populations at time ``t`` after free spontaneous decay from ``initial``."""
    dt = t - initial.t
    if dt < 0:
        raise ValueError(f"cannot evolve backwards in time ({t} < {initial.t})")
    if dt == 0:
        return initial
    p0 = initial.probabilities
    p = np.empty_like(p0)
    for lvl, terms in enumerate(cascade_solution(species, p0)):
        val = 0.0
        for rate, poly in terms.items():
            val += np.polynomial.polynomial.polyval(dt, poly) * math.exp(-rate * dt)
        p[lvl] = val
    p = np.clip(p, 0.0, 1.0)
    return PopulationState(p, t)


# --- polarizability ----------------------------------------------------------

def _check_pole(species: AtomicSpecies, n: int, k: int, omega, tol: float):
    if np.iscomplexobj(omega):
        omega = np.asarray(omega)
        real = omega.imag == 0
        if not np.any(real):
            return
        omega = omega.real[real]
    w_kn = abs(species.frequency(k, n))
    gap = np.min(np.abs(np.abs(np.asarray(omega, dtype=float)) - w_kn))
    if gap <= tol * w_kn:
        raise PoleProximityError(
            f"real frequency within {tol:g} (relative) of the {k}<->{n} "
            f"transition at {w_kn:.6e} rad/s")


def polarizability_terms(species: AtomicSpecies, pops: PopulationState, omega,
                         pole_tolerance: float = POLE_TOLERANCE):
    """Per-transition pieces of the state-resolved polarizability.

    Yields ``((n, k), alpha_nk)`` with alpha_nk of shape omega.shape + (3, 3);
    their sum is :func:`polarizability`.
    """
    omega = np.asarray(omega)
    for n, pn in enumerate(pops.probabilities):
        if pn == 0.0:
            continue
        for k in range(species.n_levels):
            if k == n or not np.any(species.dipoles[n, k] != 0.0):
                continue
            _check_pole(species, n, k, omega, pole_tolerance)
            w = species.frequency(k, n)
            weight = pn * (1.0 / (w + omega) + 1.0 / (w - omega)) / HBAR
            yield (n, k), weight[..., None, None] * species.dyad(n, k)


def polarizability(species: AtomicSpecies, pops: PopulationState, omega,
                   pole_tolerance: float = POLE_TOLERANCE) -> np.ndarray:
    """alpha(omega) = 1/hbar sum_n p_n sum_k d_kn d_nk [1/(w_kn + w) + 1/(w_kn - w)]."""
    omega = np.asarray(omega)
    out = np.zeros(omega.shape + (3, 3), dtype=np.result_type(omega, float))
    for _, term in polarizability_terms(species, pops, omega, pole_tolerance):
        out = out + term
    return out


def rate_matrix(species: AtomicSpecies) -> np.ndarray:
    """Generator M of dp/dt = M p (lower-triangular in the decay direction)."""
    m = species.rates.T.copy()
    m[np.diag_indices_from(m)] = -species.total_rates
    return m


__all__ = [
    "AtomicSpecies", "PopulationState", "SpeciesError", "PoleProximityError",
    "load_species", "two_level", "free_space_decay_rate", "evolve_populations",
    "ground_state", "polarizability", "polarizability_terms", "rate_matrix",
    "cascade_solution", "DEBYE", "EA0", "HBAR", "EPS0", "C",
]
