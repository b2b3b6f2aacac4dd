"""Phonon spectral densities, the non-secular Redfield tensor and Lindblad channels.

Superoperators act on row-major vectorized density matrices:
vec(A @ rho @ B) = (A kron B^T) @ vec(rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import NetworkConfig, build_hamiltonian
from .units import UnitSystem

# One-sided transform convention: rate(omega) = RATE_PREFACTOR * S(omega).
# Pinned by requiring the J3 tensor to equal a pure-dephasing Lindbladian
# with gamma = RATE_PREFACTOR * lambda_ph.
RATE_PREFACTOR = np.pi


@dataclass(frozen=True)
class SpectralDensity:
    """Phonon noise kernel; kind selects the functional form.

    J1: super-Ohmic with Gaussian cutoff and Bose-Einstein occupation,
        S(w) = lam * (|w|/wc)^3 exp(-(w/wc)^2) * [n_BE(|w|, T) + step(w)].
    J2: flat zero-temperature, S(w) = lam * step(w).
    J3: flat infinite-temperature (pure dephasing), S(w) = lam.
    """

    kind: str
    lam: float
    omega_c: float | None = None
    T_ph: float | None = None
    units: UnitSystem = field(default=UnitSystem())

    def __post_init__(self):
        if self.kind not in ("J1", "J2", "J3"):
            raise ConfigError(f"unknown spectral density kind {self.kind!r}")
        if self.lam < 0:
            raise ConfigError("lambda_ph must be non-negative")
        if self.kind == "J1":
            if self.omega_c is None or not self.omega_c > 0:
                raise ConfigError("J1 requires omega_c > 0")
            if self.T_ph is None or not self.T_ph > 0:
                raise ConfigError("J1 requires T_ph > 0")

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "SpectralDensity":
        return cls(
            kind=config.spectral_kind,
            lam=config.lambda_ph,
            omega_c=config.omega_c,
            T_ph=config.T_ph,
            units=config.units,
        )


def noise_kernel(sd: SpectralDensity, omega) -> np.ndarray | float:
    """Non-negative noise weight S(omega); vectorized over omega."""
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if not np.all(np.isfinite(w)):
        raise ConfigError("noise_kernel: omega must be finite")
    step = (w > 0).astype(float)
    if sd.kind == "J3":
        out = np.full_like(w, sd.lam)
    elif sd.kind == "J2":
        out = sd.lam * step
    else:
        aw = np.abs(w)
        x = aw / sd.omega_c
        prefac = sd.lam * x**3 * np.exp(-(x**2))
        kT = sd.units.kB * sd.T_ph
        n_be = np.zeros_like(w)
        nz = aw > 0
        with np.errstate(over="ignore"):
            expm1 = np.expm1(aw[nz] / kT)
        n_be[nz] = 1.0 / expm1
        out = prefac * (n_be + step)
    return float(out[0]) if scalar else out


# -- superoperator helpers ----------------------------------------------------


def spre(A: np.ndarray) -> np.ndarray:
    """Left multiplication: vec(A rho)."""
    d = A.shape[0]
    return np.kron(A, np.eye(d))


def spost(A: np.ndarray) -> np.ndarray:
    """Right multiplication: vec(rho A)."""
    d = A.shape[0]
    return np.kron(np.eye(d), A.T)


def lindblad_dissipator(L: np.ndarray) -> np.ndarray:
    """Superoperator for L rho L^dag - (1/2){L^dag L, rho}."""
    Ld = L.conj().T
    LdL = Ld @ L
    return spre(L) @ spost(Ld) - 0.5 * spre(LdL) - 0.5 * spost(LdL)


def coupling_operators(config: NetworkConfig) -> list[np.ndarray]:
    """Site projectors |i><i| through which the phonon bath couples."""
    d = config.index.dim
    ops = []
    for i in config.index.sites:
        A = np.zeros((d, d), dtype=complex)
        A[i, i] = 1.0
        ops.append(A)
    return ops


def _ordered_eigh(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with a deterministic sign convention."""
    eps, U = np.linalg.eigh(H)
    for k in range(U.shape[1]):
        col = U[:, k]
        j = int(np.argmax(np.abs(col)))
        if col[j].real < 0 or (col[j].real == 0 and col[j].imag < 0):
            U[:, k] = -col
    return eps, U


def redfield_tensor(H: np.ndarray, coupling_ops, sd: SpectralDensity) -> np.ndarray:
    """Full non-secular Redfield superoperator in the site basis.

    Built in the eigenbasis of H with one-sided rates
    Gamma(w) = RATE_PREFACTOR * S(w); Lamb-shift (imaginary) parts dropped.
    Degenerate eigenvalues are fine (no secular binning).
    """
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ConfigError("redfield_tensor: Hamiltonian must be Hermitian")
    d = H.shape[0]
    eps, U = _ordered_eigh(H)
    # gamma[i, j] = rate evaluated at eps_j - eps_i
    gaps = eps[None, :] - eps[:, None]
    gamma = RATE_PREFACTOR * noise_kernel(sd, gaps.ravel()).reshape(d, d)
    R = np.zeros((d * d, d * d), dtype=complex)
    for A in coupling_ops:
        At = U.conj().T @ A @ U
        Lam_t = gamma * At
        Lam = U @ Lam_t @ U.conj().T
        Lamd = Lam.conj().T
        R += 0.5 * (
            spre(Lam) @ spost(A)
            + spre(A) @ spost(Lamd)
            - spre(A @ Lam)
            - spost(Lamd @ A)
        )
    return R


# -- full generator -----------------------------------------------------------


@dataclass(frozen=True)
class Generator:
    """Dense Liouvillian on vectorized density matrices, plus build metadata."""

    matrix: np.ndarray  # (d^2, d^2), energy units
    config: NetworkConfig
    mode: str  # "transient" | "steady"
    channels: tuple[str, ...]
    hamiltonian_gaps: float  # max |eps_a - eps_b| over system eigenvalues

    @property
    def dim(self) -> int:
        return self.config.index.dim


def build_generator(config: NetworkConfig, mode: str = "transient") -> Generator:
    """Assemble the master-equation generator.

    transient: coherent + Redfield + decay channels + sink->trap extraction.
    steady: additionally injects ground->source at Gamma_inj and re-routes
    extraction sink->ground so a nontrivial stationary state exists.
    """
    if mode not in ("transient", "steady"):
        raise ConfigError(f"unknown mode {mode!r}")
    idx = config.index
    d = idx.dim
    H = build_hamiltonian(config)
    G = -1j * (spre(H) - spost(H))
    channels = ["coherent"]

    if config.lambda_ph > 0:
        sd = SpectralDensity.from_config(config)
        G = G + redfield_tensor(H, coupling_operators(config), sd)
        channels.append("redfield")

    u = config.units
    for i in idx.sites:
        rate = u.rate_from_lifetime(config.sites[i - 1].lifetime)
        if rate > 0:
            L = np.zeros((d, d), dtype=complex)
            L[idx.ground, i] = np.sqrt(rate)
            G = G + lindblad_dissipator(L)
    channels.append("decay")

    sink = config.sink_index
    if config.Gamma_trap > 0:
        L = np.zeros((d, d), dtype=complex)
        target = idx.ground if mode == "steady" else idx.trap
        L[target, sink] = np.sqrt(config.Gamma_trap)
        G = G + lindblad_dissipator(L)
        channels.append("extraction" if mode == "steady" else "trap")

    if mode == "steady" and config.Gamma_inj > 0:
        L = np.zeros((d, d), dtype=complex)
        L[config.source_index, idx.ground] = np.sqrt(config.Gamma_inj)
        G = G + lindblad_dissipator(L)
        channels.append("injection")

    # Populations only feel gaps inside the single-excitation block; the
    # 2 eV ground-site splitting never enters occupied coherences.
    site_eps = np.linalg.eigvalsh(H[1 : idx.trap, 1 : idx.trap])
    max_gap = float(np.max(site_eps) - np.min(site_eps)) if config.N > 1 else 0.0
    return Generator(
        matrix=G,
        config=config,
        mode=mode,
        channels=tuple(channels),
        hamiltonian_gaps=max_gap,
    )
