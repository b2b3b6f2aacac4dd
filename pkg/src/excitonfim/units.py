"""Physical constants and unit bookkeeping.

Internally, energies are expressed in a single energy unit (eV by default)
and times in nanoseconds.  Setting hbar = 1 makes the natural internal time
unit hbar/energy_unit; all rate <-> lifetime conversions go through here so
that lifetimes can stay in ns while generator entries stay in energy units.
"""

from dataclasses import dataclass

HBAR_EV_S = 6.582119569e-16  # eV * s
KB_EV_PER_K = 8.617333262e-5  # eV / K


@dataclass(frozen=True)
class UnitSystem:
    """Energy-unit scale relative to eV (1.0 = eV, 1e-3 = meV)."""

    energy_unit_eV: float = 1.0

    @property
    def hbar_unit_ns(self) -> float:
        """hbar in (energy unit) * ns."""
        return HBAR_EV_S / 1e-9 / self.energy_unit_eV

    @property
    def kB(self) -> float:
        """Boltzmann constant in (energy unit) / K."""
        return KB_EV_PER_K / self.energy_unit_eV

    def rate_from_lifetime(self, tau_ns: float) -> float:
        """Decay rate in energy units for a lifetime in ns."""
        return self.hbar_unit_ns / tau_ns

    def lifetime_from_rate(self, rate: float) -> float:
        """Lifetime in ns for a rate in energy units."""
        return self.hbar_unit_ns / rate

    def rate_per_ns(self, rate_energy: float) -> float:
        """Convert a rate in energy units to events per ns."""
        return rate_energy / self.hbar_unit_ns


EV = UnitSystem(1.0)
