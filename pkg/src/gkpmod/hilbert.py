"""Truncated Fock-space substrate.

States, operators, phase-space functions and the effective-squeezing
estimator.  Everything lives in a fixed Fock cutoff ``dim``; truncation
leakage is computed and attached to constructed states rather than silently
accepted.

Conventions: ``q = (a + a†)/√2``, ``p = i(a† − a)/√2`` so ``[q, p] = iI``;
displacements ``D(γ) = exp(γa† − γ*a)``.  The grid-state stabilizers are the
displacements ``S_q = D(i√(2π))``, ``S_p = D(√(2π))``, and the logical
shifts are their half-steps ``Z = D(i√(π/2))``, ``X = D(√(π/2))``: a real
displacement argument c translates q by √2·c, an imaginary one ic
translates p by √2·c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import poisson

from .errors import TruncationError

__all__ = [
    "FockSpace",
    "StateVector",
    "DensityOperator",
    "OperatorHandle",
    "SqueezingReport",
    "build_operator",
    "displacement",
    "effective_squeezing",
    "make_coherent",
    "make_gkp_approx",
    "make_squeezed_vacuum",
    "phase_space",
    "position_eigensystem",
    "squeezing_from_sharpness",
    "unitary_from_hermitian",
    "vacuum",
]

# Default rejection threshold for state construction, see make_* below.
STATE_LEAK_THRESHOLD = 1e-8
NORM_TOL = 1e-10

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2 * math.pi)

#: displacement arguments realizing stabilizers and logicals (assertion of
#: these identities against directly exponentiated quadratures is part of
#: the test suite, not an assumption).
DISPLACEMENT_ARGUMENT = {
    "S_q": 1j * SQRT_2PI,
    "S_p": SQRT_2PI,
    "Z": 1j * math.sqrt(math.pi / 2),
    "X": math.sqrt(math.pi / 2),
}


@dataclass(frozen=True)
class FockSpace:
    """Truncated oscillator Hilbert space with ``dim`` retained Fock levels."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"FockSpace needs dim >= 2, got {self.dim}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state.  ``leakage`` is the estimated probability weight
    lost to the truncation, reported separately from the (re)normalized
    amplitudes."""

    amplitudes: np.ndarray
    space: FockSpace
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError("amplitude vector does not match the space")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state not normalized: |psi| = {norm}")
        if abs(norm - 1.0) > NORM_TOL:
            amps = amps / norm
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.space)

    def mean_photons(self) -> float:
        n = np.arange(self.space.dim)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state; Hermitian, unit trace, PSD within tolerance."""

    matrix: np.ndarray
    space: FockSpace
    eig_floor: float = -1e-9

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError("matrix does not match the space")
        if np.abs(m - m.conj().T).max() > 1e-8:
            raise ValueError("density matrix not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-6:
            raise ValueError(f"trace {tr} != 1")
        if abs(tr - 1.0) > NORM_TOL:
            m = m / tr
        w = np.linalg.eigvalsh(m)
        if w.min() < self.eig_floor:
            raise ValueError(f"density matrix not PSD: min eigenvalue {w.min()}")
        object.__setattr__(self, "matrix", _readonly(m))

    def mean_photons(self) -> float:
        n = np.arange(self.space.dim)
        return float(np.real(np.sum(n * np.diag(self.matrix))))


@dataclass(frozen=True)
class OperatorHandle:
    """A dim×dim matrix with a semantic label."""

    matrix: np.ndarray
    label: str
    space: FockSpace
    parameter: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(np.asarray(self.matrix, dtype=complex)))

    def unitarity_defect(self, levels: int | None = None) -> float:
        """max |U†U − I| restricted to the lowest ``levels`` Fock levels.

        This is the truncation diagnostic for unitaries built on a finite
        space; it is reported, never silently accepted.
        """
        k = levels if levels is not None else self.space.dim // 2
        g = self.matrix.conj().T @ self.matrix
        return float(np.abs(g[:k, :k] - np.eye(self.space.dim)[:k, :k]).max())


@dataclass(frozen=True)
class SqueezingReport:
    """Effective squeezing of both stabilizers plus the raw expectations."""

    delta_q: float
    delta_p: float
    mean_photons: float
    s_q_expectation: complex
    s_p_expectation: complex
    q_degenerate: bool = False
    p_degenerate: bool = False


# --------------------------------------------------------------------------
# ladder operators and cached eigensystems
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _ladder(dim: int) -> np.ndarray:
    return _readonly(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1))


def annihilation(space: FockSpace) -> np.ndarray:
    return _ladder(space.dim)


def _q_matrix(dim: int) -> np.ndarray:
    a = _ladder(dim)
    return (a + a.conj().T) / math.sqrt(2)


def _p_matrix(dim: int) -> np.ndarray:
    a = _ladder(dim)
    return 1j * (a.conj().T - a) / math.sqrt(2)


@lru_cache(maxsize=None)
def position_eigensystem(space: FockSpace):
    """Eigenvalues and eigenvectors of the truncated position operator.

    Eigenvectors beyond |q| > 0.8·√(2·dim) approach the truncation edge and
    are unreliable there; the returned ``trust`` mask flags the safe range.
    """
    from scipy.linalg import eigh_tridiagonal

    dim = space.dim
    off = np.sqrt(np.arange(1, dim, dtype=float) / 2.0)
    vals, vecs = eigh_tridiagonal(np.zeros(dim), off)
    trust = np.abs(vals) <= 0.8 * math.sqrt(2 * dim)
    return _readonly(vals), _readonly(vecs.astype(complex)), _readonly(trust)


def unitary_from_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(iH) for Hermitian H, evaluated exactly via eigendecomposition.

    All unitaries in this package are exponentials of (anti-)Hermitian
    truncated generators; evaluating the matrix function through eigh keeps
    a single code path and leaves the truncation defect directly measurable.
    """
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


@lru_cache(maxsize=None)
def _displacement_cached(dim: int, gamma: complex) -> np.ndarray:
    a = _ladder(dim)
    h = -1j * (gamma * a.conj().T - np.conj(gamma) * a)
    return _readonly(unitary_from_hermitian(h))


def displacement(space: FockSpace, gamma: complex) -> np.ndarray:
    """Matrix of D(γ) = exp(γa† − γ*a) on the truncated space."""
    return _displacement_cached(space.dim, complex(gamma))


@lru_cache(maxsize=None)
def _labeled_cached(dim: int, label: str) -> np.ndarray:
    a = _ladder(dim)
    ad = a.conj().T
    if label == "a":
        return a
    if label == "a_dag":
        return _readonly(ad)
    if label == "n":
        return _readonly(np.diag(np.arange(dim, dtype=float)).astype(complex))
    if label == "q":
        return _readonly(_q_matrix(dim))
    if label == "p":
        return _readonly(_p_matrix(dim))
    if label == "parity":
        return _readonly(np.diag((-1.0) ** np.arange(dim)).astype(complex))
    if label in DISPLACEMENT_ARGUMENT:
        return _displacement_cached(dim, DISPLACEMENT_ARGUMENT[label])
    raise ValueError(f"unknown operator label {label!r}")


def build_operator(label: str, space: FockSpace, parameter: complex | None = None) -> OperatorHandle:
    """Construct a named operator on ``space``.

    Labels: a, a_dag, n, q, p, parity, S_q, S_p, X, Z, and D (requires
    ``parameter`` = γ).
    """
    if label == "D":
        if parameter is None:
            raise ValueError("displacement needs the parameter γ")
        return OperatorHandle(displacement(space, parameter), "D", space, complex(parameter))
    return OperatorHandle(_labeled_cached(space.dim, label), label, space)


# --------------------------------------------------------------------------
# state constructors
# --------------------------------------------------------------------------

def vacuum(space: FockSpace) -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps, space, leakage=0.0)


def coherent_tail(alpha: complex, dim: int) -> float:
    """Poisson weight of the Fock levels n >= dim for a coherent state."""
    lam = abs(alpha) ** 2
    if lam == 0:
        return 0.0
    return float(poisson.sf(dim - 1, lam))


def make_coherent(alpha: complex, space: FockSpace,
                  leak_threshold: float = STATE_LEAK_THRESHOLD) -> StateVector:
    """Coherent state |α⟩ with amplitudes e^{−|α|²/2}αⁿ/√n!, renormalized."""
    leak = coherent_tail(alpha, space.dim)
    if leak > leak_threshold:
        raise TruncationError(
            f"coherent state |alpha|^2={abs(alpha)**2:.4g} needs more than "
            f"{space.dim} Fock levels (leakage {leak:.3g})",
            leakage=leak, threshold=leak_threshold)
    n = np.arange(space.dim)
    if alpha == 0:
        return vacuum(space)
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in range(space.dim)])
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    amps /= np.linalg.norm(amps)
    return StateVector(amps, space, leakage=leak)


def squeezed_tail(delta: float, dim: int) -> float:
    """Fock weight beyond the cutoff for a Δ-squeezed vacuum (analytic)."""
    r = abs(math.log(delta))
    if r == 0:
        return 0.0
    th = math.tanh(r)
    # |c_{2m}|^2 = (2m)!/(2^m m!)^2 tanh^{2m} r / cosh r
    total = 0.0
    m = (dim + 1) // 2
    while True:
        logw = (math.lgamma(2 * m + 1) - 2 * (m * math.log(2) + math.lgamma(m + 1))
                + 2 * m * math.log(th) - math.log(math.cosh(r)))
        w = math.exp(logw)
        total += w
        if w < 1e-18 * max(total, 1e-300):
            break
        m += 1
    return total


def make_squeezed_vacuum(delta: float, space: FockSpace,
                         leak_threshold: float = STATE_LEAK_THRESHOLD) -> StateVector:
    """Squeezed vacuum with Var(q) = δ²/2, built by exponentiating the
    squeezing generator (z/2)(a² − a†²) with z = ln(1/δ)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    leak = squeezed_tail(delta, space.dim)
    if leak > leak_threshold:
        raise TruncationError(
            f"squeezing delta={delta} not representable at dim={space.dim} "
            f"(leakage {leak:.3g})", leakage=leak, threshold=leak_threshold)
    if delta == 1.0:
        return vacuum(space)
    a = _ladder(space.dim)
    z = math.log(1.0 / delta)
    h = -1j * (z / 2) * (a @ a - a.conj().T @ a.conj().T)
    s = unitary_from_hermitian(h)
    return StateVector(s @ vacuum(space).amplitudes, space, leakage=leak)


def tail_occupancy(amps: np.ndarray, frac: float = 0.1) -> float:
    """Probability weight in the top ``frac`` of the retained Fock levels."""
    k = max(1, int(len(amps) * frac))
    return float(np.sum(np.abs(amps[-k:]) ** 2))


def make_gkp_approx(delta: float, logical: str, space: FockSpace,
                    leak_threshold: float = STATE_LEAK_THRESHOLD,
                    weight_cutoff: float = 1e-8) -> StateVector:
    """Approximate grid-state codeword with Gaussian envelope width 1/δ.

    Built as the envelope-weighted sum of position-displaced δ-squeezed
    peaks: peaks at even (odd) multiples of √π for logical 0 (1), at all
    multiples for ±, with alternating signs for −.  The k-sum runs until the
    envelope weight drops below ``weight_cutoff``.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if logical not in ("0", "1", "+", "-"):
        raise ValueError(f"logical must be one of 0,1,+,-; got {logical!r}")
    peak = make_squeezed_vacuum(delta, space, leak_threshold=1.0).amplitudes
    if logical == "0":
        positions = lambda k: 2 * k * SQRT_PI
        sign = lambda k: 1.0
    elif logical == "1":
        positions = lambda k: (2 * k + 1) * SQRT_PI
        sign = lambda k: 1.0
    else:
        positions = lambda k: k * SQRT_PI
        sign = (lambda k: 1.0) if logical == "+" else (lambda k: (-1.0) ** k)
    out = np.zeros(space.dim, dtype=complex)
    k = 0
    while True:
        hit = False
        for kk in ([0] if k == 0 else [k, -k]):
            x = positions(kk)
            w = math.exp(-((delta * x) ** 2) / 2)
            if w >= weight_cutoff:
                out += sign(kk) * w * (displacement(space, x / math.sqrt(2)) @ peak)
                hit = True
        if not hit and k > 0:
            break
        k += 1
    out /= np.linalg.norm(out)
    leak = tail_occupancy(out)
    if leak > leak_threshold:
        raise TruncationError(
            f"GKP state delta={delta} logical={logical} leaks {leak:.3g} into "
            f"the top Fock band at dim={space.dim}",
            leakage=leak, threshold=leak_threshold)
    return StateVector(out, space, leakage=leak)


# --------------------------------------------------------------------------
# effective squeezing
# --------------------------------------------------------------------------

def squeezing_from_sharpness(sharpness: float) -> float:
    """Circular-statistics width √((1/2π)·ln(1/s²)) of a sharpness s=|Tr Sρ|."""
    return math.sqrt(math.log(1.0 / sharpness**2) / (2 * math.pi))


def _as_matrix(state) -> tuple[np.ndarray, FockSpace, bool]:
    if isinstance(state, StateVector):
        return state.amplitudes, state.space, True
    if isinstance(state, DensityOperator):
        return state.matrix, state.space, False
    raise TypeError(f"expected StateVector or DensityOperator, got {type(state)}")


def effective_squeezing(rho, sharpness_floor: float = 1e-13) -> SqueezingReport:
    """Effective squeezing parameters of a state.

    Δ_s = √((1/2π)·ln(1/|Tr S_s ρ|²)) for s ∈ {q, p}.  When a sharpness
    falls below ``sharpness_floor`` the corresponding Δ would diverge; the
    report is flagged degenerate (Δ set to inf) instead of being discarded.
    """
    mat, space, pure = _as_matrix(rho)
    s_q = _labeled_cached(space.dim, "S_q")
    s_p = _labeled_cached(space.dim, "S_p")
    nvec = np.arange(space.dim)
    if pure:
        eq = complex(mat.conj() @ (s_q @ mat))
        ep = complex(mat.conj() @ (s_p @ mat))
        nbar = float(np.sum(nvec * np.abs(mat) ** 2))
    else:
        eq = complex(np.trace(s_q @ mat))
        ep = complex(np.trace(s_p @ mat))
        nbar = float(np.real(np.sum(nvec * np.diag(mat))))
    degq = abs(eq) < sharpness_floor
    degp = abs(ep) < sharpness_floor
    dq = math.inf if degq else squeezing_from_sharpness(min(abs(eq), 1.0))
    dp = math.inf if degp else squeezing_from_sharpness(min(abs(ep), 1.0))
    return SqueezingReport(dq, dp, nbar, eq, ep, degq, degp)


# --------------------------------------------------------------------------
# phase-space functions
# --------------------------------------------------------------------------

def _hermite_functions(x: np.ndarray, dim: int) -> np.ndarray:
    """Matrix phi[k, n] of oscillator eigenfunctions at points x[k].

    Three-term recurrence; stable because the functions are bounded and the
    classically forbidden region underflows to zero harmlessly.
    """
    phi = np.zeros((len(x), dim))
    phi[:, 0] = np.pi ** -0.25 * np.exp(-x**2 / 2)
    if dim > 1:
        phi[:, 1] = math.sqrt(2.0) * x * phi[:, 0]
    for n in range(1, dim - 1):
        phi[:, n + 1] = (math.sqrt(2.0 / (n + 1)) * x * phi[:, n]
                         - math.sqrt(n / (n + 1.0)) * phi[:, n - 1])
    return phi


def _pure_components(rho) -> list[tuple[float, np.ndarray]]:
    mat, space, pure = _as_matrix(rho)
    if pure:
        return [(1.0, mat)]
    w, v = np.linalg.eigh(mat)
    comps = [(float(lam), v[:, i]) for i, lam in enumerate(w) if lam > 1e-12]
    comps.sort(key=lambda t: -t[0])
    return comps


def _occupied_levels(rho) -> int:
    mat, space, pure = _as_matrix(rho)
    occ = np.abs(mat) ** 2 if pure else np.abs(np.diag(mat))
    above = np.nonzero(occ > 1e-13)[0]
    return int(above[-1]) + 1 if len(above) else 1


def _wigner(rho, q_grid: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """W(q, p) normalized so that ∬ W dq dp = 1; vacuum peaks at 1/π."""
    _, space, _ = _as_matrix(rho)
    half = math.sqrt(2.0 * _occupied_levels(rho)) + 4.0
    ny = max(801, 2 * int(half / 0.02) + 1)
    y = np.linspace(-half, half, ny)
    dy = y[1] - y[0]
    kernel = np.exp(2j * np.outer(y, p_grid))  # (ny, np)
    out = np.zeros((len(q_grid), len(p_grid)))
    for lam, psi in _pure_components(rho):
        for i, qv in enumerate(q_grid):
            f_plus = _hermite_functions(qv + y, space.dim) @ psi
            f_minus = _hermite_functions(qv - y, space.dim) @ psi
            integrand = np.conj(f_plus) * f_minus
            out[i] += lam * np.real(integrand @ kernel) * dy / math.pi
    return out


def _husimi(rho, q_grid: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """Q(β) = ⟨β|ρ|β⟩/π evaluated at β = (q + ip)/√2; ∫Q d²β = 1."""
    _, space, _ = _as_matrix(rho)
    qq, pp = np.meshgrid(q_grid, p_grid, indexing="ij")
    beta = (qq + 1j * pp) / math.sqrt(2)
    flat = beta.ravel()
    n = np.arange(space.dim)
    lg = np.array([math.lgamma(k + 1) for k in range(space.dim)])
    mag = np.abs(flat)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), -np.inf)
        log_coeff = (-np.outer(mag**2, np.ones(space.dim)) / 2
                     + np.outer(logmag, n) - lg / 2)
        log_coeff = np.where(np.isnan(log_coeff), -np.inf, log_coeff)
    coeff = np.exp(log_coeff) * np.exp(-1j * np.outer(np.angle(flat), n))
    coeff[mag == 0] = 0.0
    coeff[mag == 0, 0] = 1.0
    out = np.zeros(flat.shape)
    for lam, psi in _pure_components(rho):
        out += lam * np.abs(coeff @ psi) ** 2 / math.pi
    return out.reshape(beta.shape)


def phase_space(rho, q_grid, p_grid, kind: str = "wigner") -> np.ndarray:
    """Evaluate a phase-space function on a rectangular (q, p) lattice.

    Returns an array indexed [i_q, i_p].  ``wigner`` is normalized against
    dq dp, ``husimi`` against d²β = dq dp / 2.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    p_grid = np.asarray(p_grid, dtype=float)
    if kind == "wigner":
        return _wigner(rho, q_grid, p_grid)
    if kind == "husimi":
        return _husimi(rho, q_grid, p_grid)
    raise ValueError(f"unknown phase-space kind {kind!r}")
