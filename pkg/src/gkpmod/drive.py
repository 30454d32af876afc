"""Parametric flux-drive synthesis and flux-noise echo analysis.

The coupling needs sin(x_ext(t)) = (1−δ) + δ·cos(ω_T t) =: s(t).  Together
with x_ext(0) = π/2 and continuity this fixes the waveform uniquely up to
an overall branch sign:

    x_ext,±(t) = π/2 ± (−1)^⌊ω_T t/2π⌋ · (π/2 − arcsin(s(t))).

(The admissible solutions of sin x = s alternate between x = arcsin s and
x = π − arcsin s each half-period; the floor factor switches between them
continuously.)  At δ = 1 this is a triangle wave of period 4π/ω_T whose
Fourier coefficients fall off as the inverse square of the harmonic number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DriveSpec",
    "Waveform",
    "exact_waveform",
    "flux_noise_prefactor",
    "fourier_coeffs",
    "harmonic_frequencies",
    "synthesis_error",
]


@dataclass(frozen=True)
class DriveSpec:
    delta: float
    omega_t: float                      # rad/s
    branch: str = "+"
    n_harmonics: int | str = "exact"

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.branch not in ("+", "-"):
            raise ValueError("branch must be '+' or '-'")

    @property
    def sign(self) -> float:
        return 1.0 if self.branch == "+" else -1.0

    @property
    def period(self) -> float:
        return 4 * math.pi / self.omega_t


@dataclass(frozen=True)
class Waveform:
    times: np.ndarray
    values: np.ndarray
    defect: float     # max |sin(x_ext) − s| over the samples

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _target(spec: DriveSpec, times: np.ndarray) -> np.ndarray:
    return (1 - spec.delta) + spec.delta * np.cos(spec.omega_t * times)


def exact_waveform(spec: DriveSpec, times) -> Waveform:
    """Evaluate x_ext,±(t) on the given (sorted) sample times."""
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be sorted")
    s = np.clip(_target(spec, t), -1.0, 1.0)
    k = np.floor(spec.omega_t * t / (2 * math.pi)).astype(int)
    x = math.pi / 2 + spec.sign * ((-1.0) ** k) * (math.pi / 2 - np.arcsin(s))
    defect = float(np.max(np.abs(np.sin(x) - _target(spec, t)))) if len(t) else 0.0
    return Waveform(t, x, defect)


def harmonic_frequencies(spec: DriveSpec, n_terms: int) -> np.ndarray:
    """Drive harmonics sit at the odd half-multiples (2n+1)·ω_T/2."""
    return (2 * np.arange(n_terms) + 1) * spec.omega_t / 2


def fourier_coeffs(spec: DriveSpec, n_terms: int) -> np.ndarray:
    """Coefficients b_n of x_ext,±(t) = π/2 ± Σ b_n sin((2n+1)ω_T t/2).

    For δ = 1 the closed triangle-wave form (8/π)(−1)ⁿ/(2n+1)² is returned;
    otherwise the exact waveform is projected numerically over one full
    period 4π/ω_T (over which every retained harmonic closes).
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    n = np.arange(n_terms)
    if spec.delta == 1.0:
        return (8 / math.pi) * (-1.0) ** n / (2 * n + 1) ** 2
    period = spec.period
    m = 1 << 14
    t = np.linspace(0.0, period, m + 1)
    x = exact_waveform(DriveSpec(spec.delta, spec.omega_t, "+"), t).values - math.pi / 2
    out = np.empty(n_terms)
    for i in range(n_terms):
        basis = np.sin((2 * i + 1) * spec.omega_t * t / 2)
        out[i] = 2.0 / period * np.trapezoid(x * basis, t)
    return out


def _reconstruction(spec: DriveSpec, t: np.ndarray, coeffs: np.ndarray,
                    droop: np.ndarray | None = None) -> np.ndarray:
    freqs = harmonic_frequencies(spec, len(coeffs))
    acc = np.full_like(t, math.pi / 2)
    scale = coeffs if droop is None else coeffs * droop
    for b, w in zip(scale, freqs):
        acc = acc + spec.sign * b * np.sin(w * t)
    return acc


def synthesis_error(spec: DriveSpec, n_harmonics: int | str,
                    sample_rate: float) -> float:
    """Relative AWG synthesis error over one drive period.

    The generator plays the first harmonics of the drive, capped at the
    Nyquist frequency of ``sample_rate``, through an uncorrected zero-order
    hold whose sinc droop attenuates each harmonic.  The figure of merit is
    the rms deviation from the exact waveform relative to its peak-to-peak
    range, i.e. truncation plus droop; an infinite rate with all harmonics
    reconstructs exactly.
    """
    if sample_rate <= spec.omega_t / math.pi:
        raise ValueError("sample rate below the drive fundamental")
    if math.isinf(sample_rate):
        if n_harmonics == "exact":
            return 0.0          # full series through an ideal DAC: exact
        n_keep = max(int(n_harmonics), 1)
    else:
        nyq = sample_rate / 2
        n_below = int(np.floor((2 * nyq / (spec.omega_t / (2 * math.pi)) - 1) / 2)) + 1
        n_keep = n_below if n_harmonics == "exact" else min(int(n_harmonics), n_below)
        n_keep = max(n_keep, 1)
    coeffs = fourier_coeffs(spec, n_keep)
    freqs = harmonic_frequencies(spec, n_keep)
    droop = np.sinc(freqs / (2 * math.pi) / sample_rate) if math.isfinite(sample_rate) \
        else np.ones_like(freqs)
    m = 1 << 13
    t = np.linspace(0.0, spec.period, m + 1)
    exact = exact_waveform(spec, t).values
    rec = _reconstruction(spec, t, coeffs, droop)
    rng = exact.max() - exact.min()
    return float(np.sqrt(np.mean((exact - rec) ** 2)) / rng)


def flux_noise_prefactor(spec: DriveSpec, epsilon: float, times,
                         branch_schedule=None):
    """sin(x_ext,±(t) + ε): the coupling prefactor under a static flux offset.

        cos(ε)·s(t) ± (−1)^⌊ω_T t/2π⌋ √(1 − s(t)²)·sin(ε)

    Returns (values, spurious_avg).  The plain resonant average of the
    sin(ε) term vanishes for any δ because consecutive half-periods carry
    opposite signs; what does not echo out is the half-period-sign-weighted
    component, the leading non-cancelling quadrature rotation:

        spurious_avg = (2/T_total) ∫ (−1)^⌊ω_T t/2π⌋ S(t) e^{iω_T t} dt.

    It vanishes at δ = 1 (each half-period's resonant integral is already
    zero), is finite for a fixed branch at δ < 1, and is restored to zero by
    alternating the branch per drive period (``branch_schedule``: a sequence
    of ±1 indexed by drive period, overriding ``spec.branch``).
    """
    if abs(epsilon) >= 0.3:
        raise ValueError("flux offset outside the small-offset regime")
    t = np.asarray(times, dtype=float)
    s = np.clip(_target(spec, t), -1.0, 1.0)
    k = np.floor(spec.omega_t * t / (2 * math.pi)).astype(int)
    if branch_schedule is None:
        sign = spec.sign * np.ones_like(t)
    else:
        sched = np.asarray(branch_schedule, dtype=float)
        period_idx = np.floor(t / spec.period).astype(int)
        sign = sched[np.clip(period_idx, 0, len(sched) - 1)]
    spurious = sign * ((-1.0) ** k) * np.sqrt(np.maximum(1 - s * s, 0.0)) * math.sin(epsilon)
    values = math.cos(epsilon) * s + spurious
    if len(t) > 1:
        total = t[-1] - t[0]
        weight = ((-1.0) ** k) * np.exp(1j * spec.omega_t * t)
        avg = complex(2.0 * np.trapezoid(spurious * weight, t) / total)
    else:
        avg = 0j
    return values, avg
