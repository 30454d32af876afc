"""Closed-form predictions validating the Monte-Carlo machinery.

β-moments of the heterodyne outcome, the Villain-approximation mean
sharpness, squeezing scaling laws and the reflection-phase argument for why
probing the ancilla frequency would reveal non-modular information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, i1e

from .errors import QuadratureFailure
from .hilbert import squeezing_from_sharpness

__all__ = [
    "SpecialFunctionBudget",
    "expected_squeezing",
    "mean_abs_beta",
    "mean_beta_sq",
    "reflection_phase",
    "theta3_abs",
    "villain_delta",
    "villain_mean_sharpness",
]


@dataclass(frozen=True)
class SpecialFunctionBudget:
    """Numerical budget for the special functions used here.

    The q-parameter of the theta function is below e^{−π} ≈ 0.043, so sums
    beyond |n| = 5 are far under double precision; the scaled Bessel
    evaluations are good to machine precision.
    """

    bessel_rel_tol: float = 1e-14
    theta_terms: int = 5

    def __post_init__(self):
        if self.bessel_rel_tol > 1e-10:
            raise ValueError("bessel_rel_tol must be <= 1e-10")
        if self.theta_terms < 5:
            raise ValueError("theta_terms must be >= 5")


def mean_abs_beta(alpha: float) -> float:
    """⟨|β|⟩ of the heterodyne outcome for a coherent ancilla of amplitude α.

    (√π/2)·e^{−α²/2}[I₀(α²/2) + α²(I₀(α²/2) + I₁(α²/2))], evaluated with
    exponentially scaled Bessel functions so the cancelling exponentials
    never overflow.  Independent of the target input state.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x = alpha * alpha / 2
    return (math.sqrt(math.pi) / 2) * (i0e(x) + alpha * alpha * (i0e(x) + i1e(x)))


def mean_beta_sq(alpha: float) -> float:
    """⟨|β|²⟩ = 1 + α², exactly."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return 1.0 + alpha * alpha


def theta3_abs(phi: np.ndarray, concentration: float, terms: int = 5) -> np.ndarray:
    """|θ₃(iπ − φ/2, e^{−π−1/(2K)})| with the exponential growth of the
    negative-n terms folded analytically into the summand."""
    b = math.pi + 1.0 / (2.0 * concentration)
    total = np.zeros(np.shape(phi), dtype=complex)
    for n in range(-terms, terms + 1):
        # q^{n²} e^{2inz} at z = iπ − φ/2  →  e^{−b n² − 2πn − inφ}
        total += math.exp(-b * n * n - 2 * math.pi * n) * np.exp(-1j * n * np.asarray(phi))
    return np.abs(total)


def _gauss_panels(f, lo: float, hi: float, abs_tol: float, max_depth: int = 12) -> float:
    """Adaptive panel quadrature: split until GL-32 and GL-64 agree."""
    x32, w32 = np.polynomial.legendre.leggauss(32)
    x64, w64 = np.polynomial.legendre.leggauss(64)

    def panel(a, b, depth):
        mid = (a + b) / 2
        half = (b - a) / 2
        c32 = half * float(w32 @ f(mid + half * x32))
        c64 = half * float(w64 @ f(mid + half * x64))
        if abs(c64 - c32) <= abs_tol * max(1.0, (b - a) / (hi - lo)):
            return c64
        if depth >= max_depth:
            raise QuadratureFailure(
                f"panel [{a}, {b}] did not converge to {abs_tol}")
        return panel(a, mid, depth + 1) + panel(mid, b, depth + 1)

    return panel(lo, hi, 0)


def villain_mean_sharpness(alpha: float, beta_cut: float | None = None,
                           budget: SpecialFunctionBudget | None = None,
                           abs_tol: float = 1e-8) -> float:
    """Mean sharpness ⟨|Tr S_q ρ_β|⟩ for vacuum input via the periodic-
    Gaussian (Villain) replacement of exp(K cos x).

    Radial integral over |β| from the cut (default 1/α) to α + 6; the
    angular integral of |θ₃(iπ − φ/2, e^{−π − 1/(2K)})| is done per radius.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    budget = budget or SpecialFunctionBudget()
    cut = beta_cut if beta_cut is not None else 1.0 / alpha

    def radial(rs):
        rs = np.atleast_1d(rs)
        out = np.empty(len(rs))
        for i, r in enumerate(rs):
            k = 2 * alpha * r
            ang = _gauss_panels(lambda ph: theta3_abs(ph, k, budget.theta_terms),
                                -math.pi, math.pi, abs_tol)
            out[i] = r * math.exp(-((alpha - r) ** 2)) * math.exp(-math.pi) / math.sqrt(2 * k) * ang
        return out

    val = _gauss_panels(radial, cut, alpha + 6.0, abs_tol)
    return val / (math.pi * math.sqrt(math.pi))


def villain_delta(alpha: float, **kwargs) -> float:
    """Effective squeezing implied by the Villain mean sharpness."""
    return squeezing_from_sharpness(villain_mean_sharpness(alpha, **kwargs))


def expected_squeezing(alpha: float) -> tuple[float, float]:
    """(estimate, lower_bound) for the mean Δ_q at ancilla amplitude α:
    1/√(4πα²) from ⟨|β|⟩ ≈ α, and 1/√(4πα√(1+α²)) from ⟨|β|²⟩ = 1+α²."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    estimate = 1.0 / math.sqrt(4 * math.pi * alpha * alpha)
    lower = 1.0 / math.sqrt(4 * math.pi * alpha * math.sqrt(1 + alpha * alpha))
    return estimate, lower


def reflection_phase(q_t: float, omega: float, kappa: float, omega_a: float,
                     g: float) -> float:
    """Phase of the field reflected off the driven ancilla oscillator while
    the photon-pressure coupling shifts its frequency by g·q_T.

    arg[(κ/2 + iΔ)/(κ/2 − iΔ)] with Δ = ω_A + g·q_T − ω; equals
    2·arctan(2Δ/κ), monotone and non-periodic in q_T — which is why a
    steady-state probe would reveal direct rather than modular information.
    """
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    det = omega_a + g * q_t - omega
    z = (kappa / 2 + 1j * det) / (kappa / 2 - 1j * det)
    return float(np.angle(z))
