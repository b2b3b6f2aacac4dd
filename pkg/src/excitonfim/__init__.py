"""Exciton transport on small molecular networks with Fisher-information
sensitivity analysis."""

from .dynamics import (
    ArrivalDistribution,
    Trajectory,
    arrival_moments,
    arrival_time_distribution,
    evolve,
    loss_time_distribution,
    steady_state,
)
from .ensemble import (
    EnsembleResult,
    EnsembleSpec,
    apply_disorder,
    random_geometry,
    run_ensemble,
    sweep_chain,
)
from .environment import (
    Generator,
    SpectralDensity,
    build_generator,
    coupling_operators,
    lindblad_dissipator,
    noise_kernel,
    redfield_tensor,
    spost,
    spre,
)
from .errors import (
    ConfigError,
    ExcitonError,
    GeometryError,
    IntegrationError,
    NumericError,
    SteadyStateError,
    TransportError,
)
from .infogeom import (
    FimResult,
    ParameterVector,
    fim,
    importance_by_group,
    perturb,
    scalar_sensitivity,
    sloppiness_metrics,
)
from .model import (
    HilbertIndex,
    NetworkConfig,
    SiteSpec,
    build_hamiltonian,
    cartesian_to_spherical,
    chain_config,
    config_with,
    dipole_coupling,
    nn_coupling_stats,
    square_config,
    to_cartesian,
)
from .units import HBAR_EV_S, KB_EV_PER_K, UnitSystem

__version__ = "0.1.0"
