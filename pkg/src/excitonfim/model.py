"""Network description, geometry and the system Hamiltonian.

Basis-state layout (dimension d = N + 2):

    index 0      : ground state (exciton lost / not yet injected)
    index 1..N   : site-basis single-excitation states
    index N + 1  : trap state (successful extraction)

Ground and trap couple to the sites only through incoherent channels, never
through the Hamiltonian.

Spherical convention: positions are stored as (r, theta, phi) relative to
site 1 (pinned at the origin), with theta the polar angle from +z and phi
the azimuth from +x.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, GeometryError
from .units import UnitSystem

SPECTRAL_KINDS = ("J1", "J2", "J3")

# Default transport parameters (energies eV, lifetimes ns, temperature K).
DEFAULT_SITE_ENERGY = 2.0
DEFAULT_LIFETIME_NS = 10.0
DEFAULT_T_PH = 300.0
DEFAULT_LAMBDA_PH = 0.01
DEFAULT_GAMMA_TRAP = 0.001
DEFAULT_GAMMA_INJ = 0.0001
# Dipole constant giving ~80 meV at 1 nm and ~10 meV at 2 nm separation.
DEFAULT_J = 0.08
# Gaussian cutoff for the structured (J1) spectral density.
DEFAULT_OMEGA_C = 0.1


@dataclass(frozen=True)
class SiteSpec:
    """One network site: on-site energy, decay lifetime and position."""

    energy: float  # energy units (eV by default)
    lifetime: float  # ns
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)  # (r nm, theta rad, phi rad)

    def validate(self, index: int) -> None:
        if not self.energy > 0:
            raise ConfigError(f"site {index}: energy must be positive")
        if not self.lifetime > 0:
            raise ConfigError(f"site {index}: lifetime must be positive")
        if index >= 2 and not self.position[0] > 0:
            raise ConfigError(f"site {index}: radial coordinate must be positive")


@dataclass(frozen=True)
class HilbertIndex:
    """Basis-state enumeration for an N-site network."""

    N: int

    @property
    def ground(self) -> int:
        return 0

    @property
    def trap(self) -> int:
        return self.N + 1

    @property
    def dim(self) -> int:
        return self.N + 2

    def site(self, i: int) -> int:
        if not 1 <= i <= self.N:
            raise ConfigError(f"site index {i} out of range 1..{self.N}")
        return i

    @property
    def sites(self) -> range:
        return range(1, self.N + 1)


@dataclass(frozen=True)
class NetworkConfig:
    """Full physical description of a transport network."""

    sites: tuple[SiteSpec, ...]
    J: float = DEFAULT_J  # energy * nm^3
    Gamma_trap: float = DEFAULT_GAMMA_TRAP
    Gamma_inj: float = 0.0
    lambda_ph: float = DEFAULT_LAMBDA_PH
    T_ph: float = DEFAULT_T_PH
    spectral_kind: str = "J1"
    omega_c: float = DEFAULT_OMEGA_C
    source_index: int = 1
    sink_index: int = -1  # -1 means N
    units: UnitSystem = field(default=UnitSystem())

    def __post_init__(self):
        if isinstance(self.sites, list):
            object.__setattr__(self, "sites", tuple(self.sites))
        if self.sink_index == -1:
            object.__setattr__(self, "sink_index", self.N)
        self.validate()

    @property
    def N(self) -> int:
        return len(self.sites)

    @property
    def index(self) -> HilbertIndex:
        return HilbertIndex(self.N)

    def validate(self) -> None:
        if self.N < 1:
            raise ConfigError("need at least one site")
        for i, s in enumerate(self.sites, start=1):
            s.validate(i)
        for name in ("J", "Gamma_trap", "Gamma_inj", "lambda_ph"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.spectral_kind not in SPECTRAL_KINDS:
            raise ConfigError(f"spectral_kind must be one of {SPECTRAL_KINDS}")
        if self.spectral_kind == "J1":
            if not self.omega_c > 0:
                raise ConfigError("spectral_kind=J1 requires omega_c > 0")
            if not self.T_ph > 0:
                raise ConfigError("spectral_kind=J1 requires T_ph > 0")
        if not 1 <= self.source_index <= self.N:
            raise ConfigError("source_index out of range")
        if not 1 <= self.sink_index <= self.N:
            raise ConfigError("sink_index out of range")

    def positions_cartesian(self) -> np.ndarray:
        """(N, 3) Cartesian positions in nm."""
        return np.array([to_cartesian(s) for s in self.sites])

    # -- JSON round trip ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "sites": [
                {"energy": s.energy, "lifetime": s.lifetime, "position": list(s.position)}
                for s in self.sites
            ],
            "J": self.J,
            "Gamma_trap": self.Gamma_trap,
            "Gamma_inj": self.Gamma_inj,
            "lambda_ph": self.lambda_ph,
            "T_ph": self.T_ph,
            "spectral_kind": self.spectral_kind,
            "omega_c": self.omega_c,
            "source_index": self.source_index,
            "sink_index": self.sink_index,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {
            "sites", "J", "Gamma_trap", "Gamma_inj", "lambda_ph", "T_ph",
            "spectral_kind", "omega_c", "source_index", "sink_index", "N",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sites = tuple(
            SiteSpec(s["energy"], s["lifetime"], tuple(s.get("position", (0, 0, 0))))
            for s in data["sites"]
        )
        if "N" in data and data["N"] != len(sites):
            raise ConfigError("N does not match number of sites")
        kwargs = {k: v for k, v in data.items() if k not in ("sites", "N")}
        return cls(sites=sites, **kwargs)

    @classmethod
    def from_json(cls, path) -> "NetworkConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# -- geometry ---------------------------------------------------------------


def to_cartesian(site: SiteSpec) -> np.ndarray:
    """Spherical (r, theta, phi) -> Cartesian (x, y, z), nm."""
    r, theta, phi = site.position
    st = math.sin(theta)
    return np.array([r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta)])


def cartesian_to_spherical(xyz) -> tuple[float, float, float]:
    """Cartesian (nm) -> (r, theta, phi) with theta from +z, phi from +x."""
    x, y, z = float(xyz[0]), float(xyz[1]), float(xyz[2])
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return (0.0, 0.0, 0.0)
    theta = math.acos(max(-1.0, min(1.0, z / r)))
    phi = math.atan2(y, x)
    return (r, theta, phi)


def dipole_coupling(pos_i, pos_j, J: float) -> float:
    """Isotropic point-dipole coupling J / |r_i - r_j|^3 (energy units)."""
    dist = float(np.linalg.norm(np.asarray(pos_i) - np.asarray(pos_j)))
    if dist <= 0.0:
        raise GeometryError("degenerate geometry: coincident site positions")
    return J / dist**3


def build_hamiltonian(config: NetworkConfig) -> np.ndarray:
    """(d, d) Hermitian system Hamiltonian; ground/trap rows stay zero."""
    idx = config.index
    d = idx.dim
    H = np.zeros((d, d), dtype=complex)
    pos = config.positions_cartesian()
    for i in idx.sites:
        H[i, i] = config.sites[i - 1].energy
    for i in idx.sites:
        for j in idx.sites:
            if j <= i:
                continue
            V = dipole_coupling(pos[i - 1], pos[j - 1], config.J)
            H[i, j] = V
            H[j, i] = V
    return H


def nn_coupling_stats(config: NetworkConfig) -> tuple[float, float]:
    """(mean, max) |V| over nearest-neighbour pairs.

    For each site the nearest other site (Euclidean) defines a pair; pairs are
    deduplicated before averaging.
    """
    if config.N < 2:
        raise ConfigError("nn_coupling_stats needs N >= 2")
    pos = config.positions_cartesian()
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    pairs = set()
    for i in range(config.N):
        j = int(np.argmin(dist[i]))
        pairs.add((min(i, j), max(i, j)))
    couplings = [abs(dipole_coupling(pos[i], pos[j], config.J)) for i, j in sorted(pairs)]
    return float(np.mean(couplings)), float(np.max(couplings))


# -- stock geometries --------------------------------------------------------


def _sites_from_cartesian(positions, energies, lifetimes) -> tuple[SiteSpec, ...]:
    """Build SiteSpecs from Cartesian nm positions; site 1 must sit at origin."""
    positions = np.asarray(positions, dtype=float)
    shifted = positions - positions[0]
    return tuple(
        SiteSpec(e, tau, cartesian_to_spherical(p))
        for e, tau, p in zip(energies, lifetimes, shifted)
    )


def chain_config(n_sites: int, spacing_nm: float, **overrides) -> NetworkConfig:
    """Degenerate linear chain along +x with the given nearest-neighbour spacing."""
    positions = [(k * spacing_nm, 0.0, 0.0) for k in range(n_sites)]
    energies = [overrides.pop("site_energy", DEFAULT_SITE_ENERGY)] * n_sites
    lifetimes = [overrides.pop("lifetime", DEFAULT_LIFETIME_NS)] * n_sites
    return NetworkConfig(sites=_sites_from_cartesian(positions, energies, lifetimes), **overrides)


def square_config(side_nm: float = 1.0, **overrides) -> NetworkConfig:
    """Four sites on a square of the given side length, source and sink on a diagonal."""
    positions = [
        (0.0, 0.0, 0.0),
        (side_nm, 0.0, 0.0),
        (0.0, side_nm, 0.0),
        (side_nm, side_nm, 0.0),
    ]
    energies = [overrides.pop("site_energy", DEFAULT_SITE_ENERGY)] * 4
    lifetimes = [overrides.pop("lifetime", DEFAULT_LIFETIME_NS)] * 4
    return NetworkConfig(sites=_sites_from_cartesian(positions, energies, lifetimes), **overrides)


def config_with(config: NetworkConfig, **changes) -> NetworkConfig:
    """Functional update of a NetworkConfig."""
    return replace(config, **changes)
