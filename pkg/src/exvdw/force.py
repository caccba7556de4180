"""Van der Waals force between two (possibly excited) atoms.

The force on atom A splits into a non-resonant part, an integral over
imaginary frequencies of the two polarizabilities coupled by the Green
tensor, and a resonant part evaluated at the real downward transition
frequencies of either atom. Forces on B come from swapping the roles of the
atoms; they are not -F_A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc

from .atomic import (AtomicSpecies, PopulationState, PoleProximityError,
                     evolve_populations, polarizability, polarizability_terms)
from .green import FREE_SPACE, DiluteBody, GreenSample, green
from .quadrature import QuadratureError, gauss_kronrod

HBAR = sc.hbar
MU0 = sc.mu_0
EPS0 = sc.epsilon_0
C = sc.c


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_subdivisions: int = 4000
    scale: float | None = None

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("quadrature tolerance must be positive")


@dataclass(frozen=True, eq=False)
class Contribution:
    """Force on ``on`` from one transition ``(upper, lower)`` of atom ``owner``."""

    on: str
    kind: str  # "resonant" or "nonresonant"
    owner: str
    transition: tuple[int, int]
    force: np.ndarray


@dataclass(frozen=True, eq=False)
class NonresonantResult:
    force: np.ndarray
    error: float
    contributions: list[Contribution]


@dataclass(frozen=True, eq=False)
class ForceBreakdown:
    on_A_resonant: np.ndarray
    on_A_nonresonant: np.ndarray
    on_B_resonant: np.ndarray
    on_B_nonresonant: np.ndarray
    per_transition: list[Contribution]
    t: float
    quad_error: float = 0.0

    @property
    def on_A(self) -> np.ndarray:
        return self.on_A_resonant + self.on_A_nonresonant

    @property
    def on_B(self) -> np.ndarray:
        return self.on_B_resonant + self.on_B_nonresonant

    def summed(self, on: str, kind: str) -> np.ndarray:
        vecs = [c.force for c in self.per_transition if c.on == on and c.kind == kind]
        return np.sum(vecs, axis=0) if vecs else np.zeros(3)


def _separation(A: AtomicSpecies, B: AtomicSpecies):
    sep = A.position - B.position
    r = float(np.linalg.norm(sep))
    if r == 0.0:
        raise ValueError("atoms A and B are at the same position")
    return sep / r, r


def _check_body(env, *atoms):
    if isinstance(env, DiluteBody):
        for atom in atoms:
            if np.any(np.all(env.points == atom.position, axis=1)):
                raise ValueError("atom coincides with a body point")


def _pair_gradient(D, g: GreenSample, M):
    """grad_A Tr[D G(A,B) M G(B,A)] with G(B,A) = G(A,B)^T; batch axes allowed."""
    G, dG = g.value, g.gradient
    G2 = np.swapaxes(G, -1, -2)
    dG2 = np.swapaxes(dG, -1, -2)
    first = np.einsum("...ij,...ljk,...km,...mi->...l", D, dG, M, G2)
    second = np.einsum("...ij,...jk,...km,...lmi->...l", D, G, M, dG2)
    return first + second


def _frequency_breakpoints(A, B, r, xi0):
    scales = [C / r]
    for atom in (A, B):
        scales += [abs(atom.frequency(m, k)) for m, k in atom.downward_transitions()]
    xs = np.array(sorted(set(scales)))
    xs = np.concatenate([xs * f for f in (1e-2, 1e-1, 1.0, 1e1, 1e2)])
    s = xs / (xs + xi0)
    return np.concatenate([[0.0], np.unique(s), [1.0]])


def nonresonant_detailed(A: AtomicSpecies, B: AtomicSpecies, popsA: PopulationState,
                         popsB: PopulationState, env=FREE_SPACE,
                         quad: QuadratureSpec = QuadratureSpec(), t: float = 0.0,
                         on: str = "A", owner: str = "A") -> NonresonantResult:
    """Non-resonant force on A with a per-transition split over A's terms.

    F = hbar mu0^2 / (2 pi) int_0^inf dxi xi^4 grad_A Tr[alpha_A G_AB alpha_B G_BA],
    all at imaginary frequency i xi. The half line is mapped onto [0, 1) by
    xi = xi0 s / (1 - s).
    """
    e_r, r = _separation(A, B)
    _check_body(env, A, B)
    keys = [key for key, _ in polarizability_terms(A, popsA, np.array([1.0j]))]
    if not keys:
        return NonresonantResult(np.zeros(3), 0.0, [])
    w_max = max([abs(atom.frequency(m, k)) for atom in (A, B)
                 for m, k in atom.downward_transitions()] or [C / r])
    xi0 = quad.scale or max(C / r, w_max)
    pref = HBAR * MU0**2 / (2 * math.pi)

    def integrand(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros((s.size, len(keys), 3))
        ok = s < 1.0
        if not np.any(ok):
            return out
        ss = s[ok]
        xi = xi0 * ss / (1.0 - ss)
        jac = xi0 / (1.0 - ss) ** 2
        w = 1j * xi
        g = green(env, A.position, B.position, w, t)
        alpha_b = polarizability(B, popsB, w)
        terms = dict(polarizability_terms(A, popsA, w))
        for i, key in enumerate(keys):
            grad = _pair_gradient(terms[key], g, alpha_b)
            out[ok, i, :] = (pref * (xi**4 * jac))[:, None] * grad.real
        return out

    res = gauss_kronrod(integrand, _frequency_breakpoints(A, B, r, xi0),
                        rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                        max_panels=quad.max_subdivisions)
    per = res.value
    contribs = [Contribution(on, "nonresonant", owner, key, per[i])
                for i, key in enumerate(keys)]
    return NonresonantResult(per.sum(axis=0), res.error, contribs)


def nonresonant_force(A, B, popsA, popsB, env=FREE_SPACE,
                      quad: QuadratureSpec = QuadratureSpec(), t: float = 0.0) -> np.ndarray:
    return nonresonant_detailed(A, B, popsA, popsB, env, quad, t).force


def resonant_contributions(A: AtomicSpecies, B: AtomicSpecies, popsA: PopulationState,
                           popsB: PopulationState, env=FREE_SPACE, t: float = 0.0,
                           on: str = "A", partner: str = "B") -> list[Contribution]:
    """Resonant force on A, one entry per contributing downward transition.

    Oscillating channel (A's own transitions n -> k):
        mu0^2 p_n w^4 grad_A Re{d_nk G_AB alpha_B(w) G_BA d_kn}
    Monotonic channel (B's transitions l -> p):
        mu0^2 p_l w^4 grad_A {d_lp G_BA alpha_A(w) G*_AB d_pl}
    """
    _separation(A, B)
    _check_body(env, A, B)
    out = []
    pa, pb = popsA.probabilities, popsB.probabilities
    for n, k in A.downward_transitions():
        if pa[n] == 0.0:
            continue
        w = A.frequency(n, k)
        alpha_b = polarizability(B, popsB, w)
        g = green(env, A.position, B.position, w, t)
        grad = _pair_gradient(A.dyad(n, k), g, alpha_b)
        out.append(Contribution(on, "resonant", on, (n, k),
                                MU0**2 * pa[n] * w**4 * grad.real))
    for l, p in B.downward_transitions():
        if pb[l] == 0.0:
            continue
        w = B.frequency(l, p)
        alpha_a = polarizability(A, popsA, w)
        g = green(env, A.position, B.position, w, t)
        # Tr[D G_BA alpha_A G*_AB], both factors differentiated w.r.t. r_A
        gs = g.swapped()
        G, dG = gs.value, gs.gradient
        G2, dG2 = np.conj(g.value), np.conj(g.gradient)
        D = B.dyad(l, p)
        grad = (np.einsum("ij,ljk,km,mi->l", D, dG, alpha_a, G2)
                + np.einsum("ij,jk,km,lmi->l", D, G, alpha_a, dG2))
        out.append(Contribution(on, "resonant", partner, (l, p),
                                MU0**2 * pb[l] * w**4 * grad.real))
    return out


def resonant_force(A, B, popsA, popsB, env=FREE_SPACE, t: float = 0.0) -> np.ndarray:
    contribs = resonant_contributions(A, B, popsA, popsB, env, t)
    return np.sum([c.force for c in contribs], axis=0) if contribs else np.zeros(3)


def _isotropic_scalar(species, pops, w):
    return float(np.real(np.trace(polarizability(species, pops, w)))) / 3.0


def oscillating_bracket(x):
    return ((9 - 16 * x**2 + 3 * x**4) * np.cos(2 * x)
            + (18 * x - 8 * x**3 + x**5) * np.sin(2 * x))


def monotonic_bracket(y):
    return 9 + 2 * y**2 + y**4


def closed_form_resonant_free_space(A: AtomicSpecies, B: AtomicSpecies,
                                    popsA: PopulationState, popsB: PopulationState) -> np.ndarray:
    """Resonant force on A for isotropic atoms in vacuum, in closed form.

    -e_r / (12 pi^2 eps0^2 r^7) [sum_A p_n |d_nk|^2 alpha_B(w_nk) osc(r w_nk / c)
                                 + sum_B p_l |d_lp|^2 alpha_A(w_lp) mono(r w_lp / c)]
    """
    if not (A.isotropic and B.isotropic):
        raise ValueError("closed form requires isotropic species")
    e_r, r = _separation(A, B)
    total = 0.0
    for n, k in A.downward_transitions():
        pn = popsA.probabilities[n]
        if pn == 0.0:
            continue
        w = A.frequency(n, k)
        d2 = float(A.dipoles[n, k] @ A.dipoles[n, k])
        total += pn * d2 * _isotropic_scalar(B, popsB, w) * oscillating_bracket(r * w / C)
    for l, p in B.downward_transitions():
        pl = popsB.probabilities[l]
        if pl == 0.0:
            continue
        w = B.frequency(l, p)
        d2 = float(B.dipoles[l, p] @ B.dipoles[l, p])
        total += pl * d2 * _isotropic_scalar(A, popsA, w) * monotonic_bracket(r * w / C)
    return -total / (12 * math.pi**2 * EPS0**2 * r**7) * e_r


def nonretarded_force(A: AtomicSpecies, B: AtomicSpecies, popsA: PopulationState,
                      popsB: PopulationState, rel_tol: float = 1e-12) -> np.ndarray:
    """Short-distance force on A for isotropic atoms.

    -e_r / (4 pi^2 eps0^2 r^7) sum_{n,l} p_n p_l sum_{k,p}
        |d_nk|^2 |d_pl|^2 / (E_k - E_n + E_p - E_l)
    """
    e_r, r = _separation(A, B)
    total = 0.0
    for n, pn in enumerate(popsA.probabilities):
        if pn == 0.0:
            continue
        for l, pl in enumerate(popsB.probabilities):
            if pl == 0.0:
                continue
            for k in range(A.n_levels):
                da = A.dipoles[n, k] @ A.dipoles[n, k]
                if da == 0.0:
                    continue
                for p in range(B.n_levels):
                    db = B.dipoles[p, l] @ B.dipoles[p, l]
                    if db == 0.0:
                        continue
                    ea = A.energies[k] - A.energies[n]
                    eb = B.energies[p] - B.energies[l]
                    den = ea + eb
                    if abs(den) <= rel_tol * (abs(ea) + abs(eb)):
                        raise PoleProximityError(
                            f"vanishing energy denominator for A {n}->{k}, B {l}->{p}")
                    total += pn * pl * da * db / den
    return -total / (4 * math.pi**2 * EPS0**2 * r**7) * e_r


def total_force(A: AtomicSpecies, B: AtomicSpecies, initA: PopulationState,
                initB: PopulationState, env=FREE_SPACE, t: float = 0.0,
                quad: QuadratureSpec = QuadratureSpec()) -> ForceBreakdown:
    """Full breakdown on both atoms at time ``t`` (populations decayed from the initial states)."""
    popsA = evolve_populations(A, initA, t)
    popsB = evolve_populations(B, initB, t)
    nr_a = nonresonant_detailed(A, B, popsA, popsB, env, quad, t, on="A", owner="A")
    nr_b = nonresonant_detailed(B, A, popsB, popsA, env, quad, t, on="B", owner="B")
    res_a = resonant_contributions(A, B, popsA, popsB, env, t, on="A", partner="B")
    res_b = resonant_contributions(B, A, popsB, popsA, env, t, on="B", partner="A")

    def vsum(cs):
        return np.sum([c.force for c in cs], axis=0) if cs else np.zeros(3)

    return ForceBreakdown(
        on_A_resonant=vsum(res_a), on_A_nonresonant=nr_a.force,
        on_B_resonant=vsum(res_b), on_B_nonresonant=nr_b.force,
        per_transition=res_a + nr_a.contributions + res_b + nr_b.contributions,
        t=t, quad_error=max(nr_a.error, nr_b.error))


__all__ = [
    "QuadratureSpec", "Contribution", "ForceBreakdown", "NonresonantResult",
    "nonresonant_force", "nonresonant_detailed", "resonant_force",
    "resonant_contributions", "closed_form_resonant_free_space", "nonretarded_force",
    "total_force", "oscillating_bracket", "monotonic_bracket", "QuadratureError",
]
