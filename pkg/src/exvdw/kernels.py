"""Frequency-domain kernel algebra behind the two-atom force.

Time integration of the Markov-approximated dynamics leaves sixteen energy
denominators. They combine into the f1/f2 functions, whose conjugate sum g1
feeds the non-resonant (Wick-rotated) force and whose imaginary part g2
collapses to a delta function at the partner's downward transition.

Notation: ``wa`` = omega_kn^A, ``wb`` = omega_pl^B, line widths
``eps_a`` = (Gamma_k + Gamma_n)/2, ``eps_b`` likewise, ``eps`` is the photon
damping. Shifted frequencies are wa_pm = wa +- i eps_a etc.; every array field
broadcasts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .atomic import PoleProximityError

POLE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class KernelParams:
    omega: complex | np.ndarray
    omega_prime: complex | np.ndarray
    wa: float | np.ndarray
    wb: float | np.ndarray
    eps_a: float | np.ndarray = 0.0
    eps_b: float | np.ndarray = 0.0
    eps: float | np.ndarray = 0.0

    def __post_init__(self):
        for name in ("eps_a", "eps_b", "eps"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be nonnegative")

    @property
    def wa_p(self):
        return self.wa + 1j * np.asarray(self.eps_a)

    @property
    def wa_m(self):
        return self.wa - 1j * np.asarray(self.eps_a)

    @property
    def wb_p(self):
        return self.wb + 1j * np.asarray(self.eps_b)

    @property
    def wb_m(self):
        return self.wb - 1j * np.asarray(self.eps_b)

    @property
    def om_m(self):
        return self.omega - 1j * np.asarray(self.eps)

    @property
    def om_p(self):
        return self.omega + 1j * np.asarray(self.eps)

    def scale(self):
        """Characteristic frequency used to judge pole proximity."""
        vals = np.broadcast_arrays(*(np.abs(np.asarray(x)) for x in
                                     (self.omega, self.omega_prime, self.wa, self.wb)))
        return np.maximum.reduce(vals)


def energy_denominators(p: KernelParams) -> np.ndarray:
    """D_1 .. D_16 stacked along the first axis (index 0 holds D_1)."""
    w, wp = p.om_m, np.asarray(p.omega_prime, dtype=complex)
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    d = [
        (w + am) * (wp + bm) * (am + bm),
        (w + am) * (wp + bp) * (am - bp),
        (w - ap) * (wp + bm) * (ap - bm),
        (w - ap) * (wp + bp) * (ap + bp),
        (w + am) * (wp + am) * (am + bm),
        -(w - ap) * (wp + ap) * (ap - bm),
        -(w + am) * (wp + am) * (am - bp),
        (w - ap) * (wp + ap) * (ap + bp),
        (w + wp) * (w + am) * (wp + bm),
        (w - wp) * (w + am) * (wp + bp),
        -(w + wp) * (w - ap) * (wp + bm),
        -(w - wp) * (w - ap) * (wp + bp),
        (w + wp) * (w + am) * (w + bm),
        -(w - wp) * (w + am) * (w + bm),
        -(w + wp) * (w - ap) * (w + bm),
        (w - wp) * (w - ap) * (w + bm),
    ]
    return np.stack(np.broadcast_arrays(*d))


def inverse_denominators(p: KernelParams) -> np.ndarray:
    """1/D_i; an exact pole gives a non-finite entry instead of raising."""
    d = energy_denominators(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(d == 0, np.inf + 0j, 1.0 / np.where(d == 0, 1.0, d))


def _guard(values, scale, power, what):
    bad = np.abs(values) < POLE_THRESHOLD * np.asarray(scale) ** power
    if np.any(bad):
        raise PoleProximityError(f"{what}: evaluation point too close to a pole")


def f1(p: KernelParams, xi):
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    scale = np.maximum(p.scale(), np.abs(xi))
    _guard(np.stack(np.broadcast_arrays(xi + ap, xi + bm, ap + bp, am + bm)), scale, 1, "f1")
    return (1.0 / ((ap + bp) * (xi + ap))
            + 1.0 / ((am + bm) * (xi + bm))
            + 1.0 / ((xi + ap) * (xi + bm)))


def f2(p: KernelParams, xi):
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    scale = np.maximum(p.scale(), np.abs(xi))
    _guard(np.stack(np.broadcast_arrays(xi - ap, xi + am, xi + bm, ap + bp, am + bm)),
           scale, 1, "f2")
    return (1.0 / ((ap + bp) * (xi - ap))
            + 1.0 / ((am + bm) * (xi + am))
            + (1.0 / (xi + am) - 1.0 / (xi - ap)) / (xi + bm))


def g1(p: KernelParams, w):
    """Expanded form of f1*(w) + f2*(w) (analytic in w)."""
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    scale = np.maximum(p.scale(), np.abs(w))
    _guard(np.stack(np.broadcast_arrays(w + bp, w + ap, w + am, w - am)), scale, 1, "g1")
    return (1.0 / (w + bp) * (1.0 / (w + ap) + 1.0 / (w + am) - 1.0 / (w - am))
            + 1.0 / (ap + bp) * (1.0 / (w + ap) + 1.0 / (w + bp))
            + 1.0 / (am + bm) * (1.0 / (w + am) + 1.0 / (w - am)))


def g2(p: KernelParams, w):
    """Expanded form of Im[f1(w) + f2(w)] for real w."""
    ap, bm = p.wa_p, p.wb_m
    scale = np.maximum(p.scale(), np.abs(w))
    _guard(np.stack(np.broadcast_arrays(ap + w, ap - w, w + bm)), scale, 1, "g2")
    return 2.0 * np.real(1.0 / (ap + w) + 1.0 / (ap - w)) * np.imag(1.0 / (w + bm))


class SpectralKernels(NamedTuple):
    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


def spectral_kernels(p: KernelParams, xi) -> SpectralKernels:
    """f1, f2, g1 and g2 evaluated at the same frequency ``xi``.

    g2 is a real-axis quantity; for complex ``xi`` it is the literal
    Im[f1 + f2] rather than the expanded product form.
    """
    xi = np.asarray(xi)
    a, b = f1(p, xi), f2(p, xi)
    if np.iscomplexobj(xi) and np.any(np.imag(xi) != 0):
        h = np.imag(a + b)
    else:
        h = g2(p, xi)
    return SpectralKernels(a, b, g1(p, xi), h)


def combined_denominator_sum(p: KernelParams):
    """Right-hand side of the combination identity for sum_i 1/D_i + c.c.

    f1(w')(1/(w^- + w') + 1/(w^+ - w')) + f2(w^-)(1/(w' + w^-) + 1/(w' - w^-)) + c.c.
    """
    wm, wpl = p.om_m, p.om_p
    wq = np.asarray(p.omega_prime, dtype=complex)
    scale = p.scale()
    _guard(np.stack(np.broadcast_arrays(wm + wq, wpl - wq, wq - wm)), scale, 1,
           "combined denominator")
    val = (f1(p, wq) * (1.0 / (wm + wq) + 1.0 / (wpl - wq))
           + f2(p, wm) * (1.0 / (wq + wm) + 1.0 / (wq - wm)))
    return val + np.conj(val)


def direct_denominator_sum(p: KernelParams):
    """sum_i 1/D_i + c.c. by brute-force summation of the table."""
    inv = inverse_denominators(p)
    s = inv.sum(axis=0)
    return s + np.conj(s)


def partial_identities(p: KernelParams) -> dict:
    """Pairs (grouped 1/D sum, closed form) for the combinable subsets."""
    inv = inverse_denominators(p)
    w, wq = p.om_m, np.asarray(p.omega_prime, dtype=complex)
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    return {
        "D2+D7+D10": (inv[1] + inv[6] + inv[9],
                      1.0 / ((w - wq) * (wq + am) * (wq + bp))),
        "D3+D6+D11": (inv[2] + inv[5] + inv[10],
                      1.0 / ((w + wq) * (wq + ap) * (wq + bm))),
        "D1+D9": (inv[0] + inv[8],
                  1.0 / ((w + wq) * (am + bm)) * (1.0 / (w + am) + 1.0 / (wq + bm))),
        "D4+D12": (inv[3] + inv[11],
                   1.0 / ((wq - w) * (ap + bp)) * (1.0 / (w - ap) - 1.0 / (wq + bp))),
        "D5": (inv[4],
               1.0 / ((w - wq) * (am + bm)) * (1.0 / (wq + am) - 1.0 / (w + am))),
        "D8": (inv[7],
               1.0 / ((w + wq) * (ap + bp)) * (1.0 / (wq + ap) + 1.0 / (w - ap))),
    }


def g1_zero_width_limit(p: KernelParams, w):
    """Factored small-linewidth form of g1 (keeps eps_a, eps_b to leading order)."""
    wa, wb = p.wa, p.wb
    ea, eb = np.asarray(p.eps_a), np.asarray(p.eps_b)
    return (4 * (w - wa) * (w + wa) / (((w + wa) ** 2 + ea**2) * (w - wa + 1j * ea))
            * (w + wa + wb) / ((w + wb + 1j * eb) * (wa + wb)))


def g2_delta_weight(p: KernelParams):
    """Weight of delta(w - w_lp) that g2 tends to as eps_b -> 0 (w_lp = -wb)."""
    ap, w_lp = p.wa_p, -np.asarray(p.wb)
    return 2 * math.pi * np.real(1.0 / (ap + w_lp) + 1.0 / (ap - w_lp))


def wick_kernel(p: KernelParams, xi):
    """[g1(i xi) + g1*(-i xi)] / 2, the imaginary-axis weight of the F1 term."""
    xi = np.asarray(xi, dtype=float)
    return 0.5 * (g1(p, 1j * xi) + np.conj(g1(p, np.conj(-1j * xi))))


def random_params(rng: np.random.Generator, count: int, eps_range=(1e-6, 1e-2),
                  ratio_range=(1e-3, 1e3)) -> KernelParams:
    """Random real-frequency parameter sets with widely separated scales.

    |wa| = 1, |wb| log-uniform over ``ratio_range``, random signs, line widths
    log-uniform in ``eps_range`` times the respective transition frequency and
    photon frequencies spread over the same scales.
    """
    wa = rng.choice([-1.0, 1.0], count)
    wb = rng.choice([-1.0, 1.0], count) * np.exp(rng.uniform(*np.log(ratio_range), count))
    lo, hi = np.log(eps_range)
    eps_a = np.abs(wa) * np.exp(rng.uniform(lo, hi, count))
    eps_b = np.abs(wb) * np.exp(rng.uniform(lo, hi, count))
    span = np.maximum(np.abs(wa), np.abs(wb))
    omega = rng.uniform(-2, 2, count) * span
    omega_prime = rng.uniform(-2, 2, count) * span
    return KernelParams(omega, omega_prime, wa, wb, eps_a, eps_b, 0.0)


def f_term_scale(p: KernelParams, xi):
    """Sum of |terms| of f1 and f2; the scale on which their rounding error lives."""
    ap, am, bp, bm = p.wa_p, p.wa_m, p.wb_p, p.wb_m
    terms = [1 / ((ap + bp) * (xi + ap)), 1 / ((am + bm) * (xi + bm)),
             1 / ((xi + ap) * (xi + bm)), 1 / ((ap + bp) * (xi - ap)),
             1 / ((am + bm) * (xi + am)), 1 / ((xi + am) * (xi + bm)),
             1 / ((xi - ap) * (xi + bm))]
    return sum(np.abs(t) for t in terms)


def identity_report(count: int = 1000, seed: int = 0) -> dict[str, float]:
    """Largest relative deviation of every kernel identity over random samples.

    Deviations are normalised by the magnitude of the summed terms (for the
    denominator identities, sum_i |1/D_i|), which is the scale at which
    floating-point rounding enters.
    """
    rng = np.random.default_rng(seed)
    p = random_params(rng, count)
    inv = inverse_denominators(p)
    scale = 2 * np.abs(inv).sum(axis=0)
    out = {"sum_1/D_i+cc": float(np.max(np.abs(direct_denominator_sum(p)
                                                 - combined_denominator_sum(p)) / scale))}
    for name, (lhs, rhs) in partial_identities(p).items():
        out[name] = float(np.max(np.abs(lhs - rhs) / np.abs(inv).sum(axis=0)))
    w = p.omega
    a, b = f1(p, w), f2(p, w)
    ker = spectral_kernels(p, w)
    conj_sum = np.conj(f1(p, np.conj(w))) + np.conj(f2(p, np.conj(w)))
    mag = f_term_scale(p, w)
    out["g1=f1*+f2*"] = float(np.max(np.abs(ker.g1 - conj_sum) / mag))
    out["g2=Im(f1+f2)"] = float(np.max(np.abs(ker.g2 - np.imag(a + b)) / mag))
    # the factored limit drops O(eps / distance-to-pole) terms, so sample
    # photon frequencies a finite distance from every pole and from the zero
    # of g1 at w = -(wa + wb), where a relative error is meaningless
    span = np.maximum(np.abs(p.wa), np.abs(p.wb))
    poles = np.stack([p.wa, -p.wa, p.wb, -p.wb, -(p.wa + p.wb)])
    w = rng.uniform(-2, 2, count) * span
    near = np.any(np.abs(w - poles) < 5e-2 * span, axis=0)
    while np.any(near):
        w[near] = rng.uniform(-2, 2, near.sum()) * span[near]
        near = np.any(np.abs(w - poles) < 5e-2 * span, axis=0)
    narrow = KernelParams(w, p.omega_prime, p.wa, p.wb,
                          1e-8 * np.abs(p.wa), 1e-8 * np.abs(p.wb))
    ref = g1(narrow, w)
    out["g1_zero_width"] = float(np.max(np.abs(g1_zero_width_limit(narrow, w) - ref)
                                        / np.abs(ref)))
    return out


# tolerances the identities are held to
IDENTITY_TOLERANCES = {
    "sum_1/D_i+cc": 1e-12, "D2+D7+D10": 1e-12, "D3+D6+D11": 1e-12, "D1+D9": 1e-12,
    "D4+D12": 1e-12, "D5": 1e-12, "D8": 1e-12, "g1=f1*+f2*": 1e-13,
    "g2=Im(f1+f2)": 1e-13, "g1_zero_width": 1e-5,
}


__all__ = [
    "random_params", "identity_report", "f_term_scale", "IDENTITY_TOLERANCES",
    "KernelParams", "energy_denominators", "inverse_denominators",
    "combined_denominator_sum", "direct_denominator_sum", "partial_identities",
    "spectral_kernels", "SpectralKernels", "f1", "f2", "g1", "g2",
    "g1_zero_width_limit", "g2_delta_weight", "wick_kernel",
]
