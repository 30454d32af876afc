"""Noise channels and systematic-error unitaries.

Ancilla photon loss during the coupling splits the measurement into a
no-loss branch (damped amplitude) and a single-loss branch whose feedback
dephasing randomizes the S_p eigenvalue; readout loss only rescales the
effective amplitude; the leading third-order circuit nonlinearity deforms
the per-ancilla-level target unitaries; a static flux offset rotates the
coupled quadrature, echoed out by the drive's sign flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import hilbert
from .errors import RegimeError, TruncationError, ZeroProbability
from .hilbert import DensityOperator, FockSpace, StateVector, unitary_from_hermitian
from .modular import SQRT_2PI, AncillaPrep, MeasurementEngine, get_engine

__all__ = [
    "CubicParams",
    "LossParams",
    "cubic_factorized_approx",
    "cubic_measurement_engine",
    "cubic_unitary",
    "flux_offset_coupling",
    "lossy_average_state",
    "lossy_measurement",
    "lossy_mean_sharpness_terms",
    "net_quadrature_rotation",
    "readout_loss",
    "sample_lossy_outcome",
]

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class LossParams:
    """gamma = κ_c·t_coupl; eta_eff = readout efficiency.

    ``exponent_convention`` selects the damping of the no-loss branch: the
    source text uses α·e^{−γ} while standard amplitude damping would give
    α·e^{−γ/2}; both are available, "gamma" is the default.
    """

    gamma: float
    eta_eff: float = 1.0
    exponent_convention: str = "gamma"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0 < self.eta_eff <= 1:
            raise ValueError("eta_eff must lie in (0, 1]")
        if self.exponent_convention not in ("gamma", "gamma_half"):
            raise ValueError("exponent_convention must be 'gamma' or 'gamma_half'")

    def damped_alpha(self, alpha: complex) -> complex:
        e = self.gamma if self.exponent_convention == "gamma" else self.gamma / 2
        return alpha * math.exp(-e)

    def single_loss_probability(self, alpha: complex) -> float:
        return abs(alpha) ** 2 * self.gamma


def _check_regime(prep: AncillaPrep, loss: LossParams):
    if loss.gamma * prep.mean_photons >= 0.5:
        raise RegimeError(
            f"single-loss expansion invalid: gamma*|alpha|^2 = "
            f"{loss.gamma * prep.mean_photons:.3g} >= 0.5")


# --------------------------------------------------------------------------
# photon loss during the coupling
# --------------------------------------------------------------------------

def dephasing_kernel(space: FockSpace) -> np.ndarray:
    """Time-averaged feedback dephasing in the q̂ eigenbasis.

    (1/T)∫₀ᵀ e^{−i√2·g·(q−q′)t} dt with √2·g·T = 2√π has the closed form
    e^{−i√π(q−q′)}·sinc(√π(q−q′)) per matrix element; no time grid needed.
    """
    vals, _, _ = hilbert.position_eigensystem(space)
    d = SQRT_PI * (vals[:, None] - vals[None, :])
    return np.exp(-1j * d) * np.sinc(d / math.pi)


def _dephase(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    _, vecs, _ = hilbert.position_eigensystem(space)
    rho_q = vecs.conj().T @ rho @ vecs
    rho_q *= dephasing_kernel(space)
    return vecs @ rho_q @ vecs.conj().T


def _as_density_matrix(rho_in) -> tuple[np.ndarray, FockSpace]:
    if isinstance(rho_in, StateVector):
        return np.outer(rho_in.amplitudes, rho_in.amplitudes.conj()), rho_in.space
    if isinstance(rho_in, DensityOperator):
        return np.asarray(rho_in.matrix), rho_in.space
    raise TypeError(f"expected StateVector or DensityOperator, got {type(rho_in)}")


def _loss_branches(rho_in, prep: AncillaPrep, loss: LossParams):
    """(weight, engine, branch density matrix) for the two loss branches.

    The counter-displacement is a classical drive calibrated to the nominal
    amplitude, so the damped branch keeps the undamped shift |α|²/2.
    """
    rho, space = _as_density_matrix(rho_in)
    p1 = loss.single_loss_probability(prep.alpha)
    damped = AncillaPrep(loss.damped_alpha(prep.alpha), prep.counter_displacement_on,
                         counter_shift_override=prep.counter_shift)
    eng0 = get_engine(damped, space)
    eng1 = get_engine(prep, space)
    return [(1.0 - p1, eng0, rho), (p1, eng1, _dephase(rho, space))]


def _branch_density(eng: MeasurementEngine, rho: np.ndarray, beta: complex) -> float:
    m = eng.operator_matrix(beta)
    return float(np.real(np.trace(m @ rho @ m.conj().T)))


def lossy_measurement(rho_in, prep: AncillaPrep, beta: complex, loss: LossParams,
                      mode="average") -> tuple[DensityOperator, float]:
    """Post-measurement state under ancilla photon loss, given outcome β.

    no-loss branch: M_β at the damped amplitude; single-loss branch: M_β at
    the full amplitude applied to the time-averaged feedback-dephased state;
    branch weights (1 − α²γ, α²γ).  ``mode`` is either "average" (apply the
    full two-branch map) or a numpy Generator, in which case one branch is
    sampled with the posterior branch probabilities at this β.
    Returns (normalized state, outcome density).
    """
    _check_regime(prep, loss)
    branches = _loss_branches(rho_in, prep, loss)
    densities = [w * _branch_density(eng, rho, beta) for (w, eng, rho) in branches]
    total = float(sum(densities))
    if total < 1e-300:
        raise ZeroProbability(f"outcome density {total} below floor at beta={beta}")
    space = branches[0][1].space
    if mode == "average":
        out = np.zeros((space.dim, space.dim), dtype=complex)
        for (w, eng, rho) in branches:
            m = eng.operator_matrix(beta)
            out += w * (m @ rho @ m.conj().T)
    else:
        rng: np.random.Generator = mode
        idx = int(rng.random() > densities[0] / total)
        _, eng, rho = branches[idx]
        m = eng.operator_matrix(beta)
        out = m @ rho @ m.conj().T
    out = out / np.real(np.trace(out))
    out = (out + out.conj().T) / 2
    return DensityOperator(out, space), total


def sample_lossy_outcome(rho_in, prep: AncillaPrep, loss: LossParams,
                         rng: np.random.Generator) -> complex:
    """Draw β from the lossy outcome density (branch-then-ancestral)."""
    _check_regime(prep, loss)
    rho, space = _as_density_matrix(rho_in)
    p1 = loss.single_loss_probability(prep.alpha)
    vals, vecs, _ = hilbert.position_eigensystem(space)
    diag = np.real(np.diag(vecs.conj().T @ rho @ vecs))
    diag = np.maximum(diag, 0)
    diag /= diag.sum()
    # feedback dephasing does not touch the diagonal in the q̂ eigenbasis
    alpha = prep.alpha if rng.random() < p1 else loss.damped_alpha(prep.alpha)
    k = rng.choice(space.dim, p=diag)
    mu = alpha * np.exp(1j * 2 * SQRT_PI * vals[k])
    return complex(mu + (rng.normal() + 1j * rng.normal()) / math.sqrt(2))


def lossy_sharpness_evaluator(rho_in, prep: AncillaPrep, loss: LossParams,
                              observable: str = "S_p"):
    """Return f(β) -> (Tr O ρ̃_β, P(β)) for the two-branch lossy map, with
    ρ̃_β the unnormalized conditional state.  All dim-sized contractions are
    done once per (state, loss) pair; each evaluation is O(n_kraus²)."""
    _check_regime(prep, loss)
    branches = _loss_branches(rho_in, prep, loss)
    space = branches[0][1].space
    obs = hilbert.build_operator(observable, space).matrix
    tables = []
    for (w, eng, rho) in branches:
        us = eng.unitaries
        urho = np.stack([u @ rho for u in us])           # (n, dim, dim)
        b = np.einsum("ij,njk->nik", obs, urho)
        d = np.stack(us)
        # Y[n, m] = Tr(U_m† O U_n ρ) = Σ_{ji} U_m*[j,i]·(O U_n ρ)[j,i]
        y = np.einsum("mji,nji->nm", d.conj(), b)
        g = np.einsum("mji,nji->nm", d.conj(), urho)
        tables.append((w, eng, y, g))

    def evaluate(beta: complex):
        num = 0j
        den = 0.0
        for (w, eng, y, g) in tables:
            cc = eng.kraus_coefficients(beta)
            pref = eng.prefactor(beta) ** 2
            num += w * pref * complex(cc @ y @ cc.conj())
            den += w * pref * float(np.real(cc @ g @ cc.conj()))
        return num, den

    return evaluate


def lossy_average_state(rho_in, prep: AncillaPrep, loss: LossParams) -> DensityOperator:
    """β-integrated output ρ̄ = ∫dβ ρ̃_β of the lossy measurement (each
    branch integrates to a Poisson mixture over the per-level unitaries)."""
    _check_regime(prep, loss)
    branches = _loss_branches(rho_in, prep, loss)
    space = branches[0][1].space
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for (w, eng, rho) in branches:
        out += w * eng.averaged_channel_apply(rho)
    out = (out + out.conj().T) / 2
    return DensityOperator(out / np.real(np.trace(out)), space)


def lossy_mean_sharpness_terms(rho_in, prep: AncillaPrep, loss: LossParams):
    """(no-loss, single-loss) contributions to ∫dβ Tr S_p ρ̃_β, computed
    deterministically from the β-integrated branch channels.  The
    single-loss term vanishes: the dephasing kernel is exactly zero at
    q − q′ = ±2√π, which is the full randomization of the S_p eigenvalue."""
    _check_regime(prep, loss)
    branches = _loss_branches(rho_in, prep, loss)
    space = branches[0][1].space
    s_p = hilbert.build_operator("S_p", space).matrix
    out = []
    for (w, eng, rho) in branches:
        out.append(w * complex(np.trace(s_p @ eng.averaged_channel_apply(rho))))
    return tuple(out)


# --------------------------------------------------------------------------
# readout loss
# --------------------------------------------------------------------------

def readout_loss(prep: AncillaPrep, eta_eff: float) -> AncillaPrep:
    """Loss in the measurement chain maps α → √η_eff·α and nothing else: the
    measurement-strength part weakens while the channel keeps commuting with
    S_p (asserted as a property in the tests)."""
    if not 0 < eta_eff <= 1:
        raise ValueError("eta_eff must lie in (0, 1]")
    return AncillaPrep(prep.alpha * math.sqrt(eta_eff), prep.counter_displacement_on)


# --------------------------------------------------------------------------
# third-order nonlinearity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicParams:
    """strength_ratio = ξ_T²/ξ_A²; epsilon3 = √π·ratio/(3√2)."""

    strength_ratio: float
    corrected_drive: bool = False

    def __post_init__(self):
        if self.strength_ratio < 0 or self.strength_ratio > 0.05:
            raise RegimeError("strength_ratio must lie in [0, 0.05]")

    @property
    def epsilon3(self) -> float:
        return SQRT_PI * self.strength_ratio / (3 * math.sqrt(2))


@lru_cache(maxsize=8)
def _cubic_pieces(dim: int):
    a = hilbert.annihilation(FockSpace(dim))
    q = hilbert.build_operator("q", FockSpace(dim)).matrix
    q3 = q @ q @ q
    b3 = np.linalg.matrix_power(a.astype(complex), 3)
    return q, q3, b3 + b3.conj().T, b3


def cubic_unitary(prep: AncillaPrep, cubic: CubicParams, target_space: FockSpace,
                  ancilla_cutoff: int) -> list[np.ndarray]:
    """Per-ancilla-level target unitaries including the third-order term.

    Uncorrected drive:  exp(i[2√π n q̂ + ε₃(2√2 q̂³ − b³ − (b†)³)]);
    corrected (two-tone) drive:  exp(i[2√π n q̂ + 2√2 ε₃ q̂³]).
    The counter-displacement Z^{−n̄} is applied after the interaction as in
    the ideal path.  Truncation amplifies cubic exponentials; the defect of
    each unitary on the lower half-space is monitored.
    """
    q, q3, cub, _ = _cubic_pieces(target_space.dim)
    eps = cubic.epsilon3
    counter = hilbert.displacement(
        target_space, -1j * prep.counter_shift * SQRT_2PI)
    out = []
    for n in range(ancilla_cutoff):
        h = 2 * SQRT_PI * n * q + eps * 2 * math.sqrt(2) * q3
        if not cubic.corrected_drive:
            h = h - eps * cub
        u = unitary_from_hermitian(h) @ counter
        out.append(u)
    defect = np.abs(out[-1].conj().T @ out[-1] - np.eye(target_space.dim))
    worst = float(defect[: target_space.dim // 2, : target_space.dim // 2].max())
    if worst > 1e-6:
        raise TruncationError(
            f"cubic unitary defect {worst:.3g} on the lower half-space",
            leakage=worst, threshold=1e-6)
    return out


def cubic_measurement_engine(prep: AncillaPrep, cubic: CubicParams,
                             target_space: FockSpace,
                             ancilla_cutoff: int = 20) -> MeasurementEngine:
    """Measurement engine whose Kraus sum uses the cubic-deformed unitaries."""
    us = cubic_unitary(prep, cubic, target_space, ancilla_cutoff)
    return MeasurementEngine(prep, target_space, ancilla_cutoff=ancilla_cutoff,
                             unitaries=us)


def cubic_factorized_approx(cubic: CubicParams, n: int,
                            target_space: FockSpace) -> np.ndarray:
    """Factorized form of the uncorrected cubic unitary at ancilla level n:

        S_q^n · exp(i2√2εq̂³) · exp(−iε(b³+(b†)³)) · exp((3√π ε/√2)·n·((b†)²−b²))

    keeping the leading interaction commutator and dropping O(ε²) terms;
    used only as a cross-check against cubic_unitary.
    """
    q, q3, cub, b3 = _cubic_pieces(target_space.dim)
    eps = cubic.epsilon3
    b2 = hilbert.annihilation(target_space).astype(complex)
    b2 = b2 @ b2
    u_pp = unitary_from_hermitian(2 * SQRT_PI * n * q)
    u_q3 = unitary_from_hermitian(eps * 2 * math.sqrt(2) * q3)
    u_b3 = unitary_from_hermitian(-eps * cub)
    # exp(c(b†²−b²)) with real c is exp(iH) for H = −i·c·(b†²−b²), Hermitian
    c = 3 * SQRT_PI * eps / math.sqrt(2) * n
    u_sq = unitary_from_hermitian(-1j * c * (b2.conj().T - b2))
    return u_pp @ u_q3 @ u_b3 @ u_sq


# --------------------------------------------------------------------------
# flux offset
# --------------------------------------------------------------------------

def flux_offset_coupling(epsilon: float, half_period_index: int,
                         branch: str = "+") -> tuple[float, float, float]:
    """Instantaneous coupled quadrature under a static flux offset ε.

    Returns (cos ε, sin ε, sign): the coupling is to
    cos(ε)·q̂ − sign·sin(ε)·p̂ with sign = ±(−1)^k flipping every drive
    half-period k, which is the echo that protects the measured quadrature.
    """
    if abs(epsilon) >= 0.3:
        raise ValueError("flux offset outside the small-offset regime")
    s = (1.0 if branch == "+" else -1.0) * (-1.0) ** half_period_index
    return math.cos(epsilon), math.sin(epsilon), s


def net_quadrature_rotation(epsilon: float, n_half_periods: int,
                            branch: str = "+") -> float:
    """Net quadrature rotation after N half-periods: the per-half-period
    rotations ±ε alternate, so even N cancels exactly and odd N leaves one
    half-period's worth ε/N of average rotation."""
    if n_half_periods < 1:
        raise ValueError("need at least one half-period")
    total = sum(flux_offset_coupling(epsilon, k, branch)[2]
                for k in range(n_half_periods))
    return epsilon * total / n_half_periods
