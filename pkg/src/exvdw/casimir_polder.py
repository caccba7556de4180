"""Resonant Casimir-Polder force on an excited atom near a dilute body.

Two independent routes to the same number: the single-atom formula with the
Born scattering tensor of the body, and the weighted sum of two-atom
oscillating resonant forces from the body atoms.
"""

from __future__ import annotations

import numpy as np
from scipy import constants as sc

from .atomic import AtomicSpecies, PopulationState, evolve_populations
from .force import resonant_contributions
from .green import FREE_SPACE, DiluteBody, born_scattering_green

MU0 = sc.mu_0


def _require_outside(atom: AtomicSpecies, body: DiluteBody):
    if np.any(np.all(body.points == atom.position, axis=1)):
        raise ValueError("atom coincides with a body point")


def single_atom_cp_resonant(A: AtomicSpecies, pops: PopulationState, body: DiluteBody,
                            t: float = 0.0) -> np.ndarray:
    """mu0 sum_n p_n sum_{k<n} w^2 grad_A Re{d_nk G1(r_A, r_A, w) d_kn}.

    r_A sits in both slots of G1. Reciprocity makes the second-slot derivative
    equal to the first-slot one at coincidence, so the gradient is twice the
    first-slot gradient of the Born tensor.
    """
    _require_outside(A, body)
    force = np.zeros(3)
    if body.points.shape[0] == 0:
        return force
    for n, k in A.downward_transitions():
        pn = pops.probabilities[n]
        if pn == 0.0:
            continue
        w = A.frequency(n, k)
        g1 = born_scattering_green(body, A.position, A.position, w, t)
        D = A.dyad(n, k)
        grad = 2.0 * np.einsum("ij,lji->l", D, g1.gradient).real
        force += MU0 * pn * w**2 * grad
    return force


def pairwise_cp_channels(A: AtomicSpecies, pops: PopulationState, body: DiluteBody,
                         t: float = 0.0) -> dict[str, np.ndarray]:
    """Weighted sums of the two resonant channels over all body atoms.

    Each body point is treated as a free-space partner atom; returns the
    oscillating (A's transitions) and monotonic (body transitions) totals.
    """
    _require_outside(A, body)
    body_pops = evolve_populations(body.species, body.initial, max(t, body.initial.t))
    osc = np.zeros((body.points.shape[0], 3))
    mono = np.zeros((body.points.shape[0], 3))
    for i, (point, weight) in enumerate(zip(body.points, body.weights)):
        partner = body.species.moved(point)
        for c in resonant_contributions(A, partner, pops, body_pops, FREE_SPACE, t):
            target = osc if c.owner == "A" else mono
            target[i] += weight * c.force
    return {"oscillating": osc.sum(axis=0), "monotonic": mono.sum(axis=0)}


def pairwise_cp_sum(A: AtomicSpecies, pops: PopulationState, body: DiluteBody,
                    t: float = 0.0) -> np.ndarray:
    """Sum over body atoms of the oscillating two-atom resonant force on A."""
    return pairwise_cp_channels(A, pops, body, t)["oscillating"]


__all__ = ["single_atom_cp_resonant", "pairwise_cp_sum", "pairwise_cp_channels"]
