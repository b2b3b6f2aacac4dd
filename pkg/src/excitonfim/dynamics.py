"""Time evolution, transport-time distributions and steady states.

Evolution uses the eigendecomposition of the (dense, tiny) Liouvillian, so a
whole trajectory costs one d^2 x d^2 eigensolve plus matrix products on the
output grid; a matrix-exponential stepping fallback covers defective or
ill-conditioned generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .environment import Generator
from .errors import IntegrationError, SteadyStateError, TransportError
from .model import NetworkConfig

DEFAULT_T_MAX_NS = 50.0
DEFAULT_COMPLETION_EPS = 1e-4
DEFAULT_MAX_POINTS = 200_000
MIN_GRID_POINTS = 2001
_EIG_COND_LIMIT = 1e10
_TRACE_TOL = 1e-6


@dataclass(frozen=True)
class Trajectory:
    """One evolution: time grid (ns) plus populations and diagnostics."""

    times_ns: np.ndarray
    site_pops: np.ndarray  # (nt, N)
    ground_pop: np.ndarray
    trap_pop: np.ndarray
    completed: bool
    completion_ns: float | None
    trace_error: float
    min_rho_eig: float
    config: NetworkConfig
    mode: str
    states: np.ndarray | None = None  # (nt, d*d) vectorized rho, if requested

    @property
    def leak(self) -> np.ndarray:
        """Probability still in transit: 1 - P_ground - P_trap."""
        return 1.0 - self.ground_pop - self.trap_pop


@dataclass(frozen=True)
class ArrivalDistribution:
    """Normalized flux density (per ns) into trap (arrival) or ground (loss)."""

    times_ns: np.ndarray
    density: np.ndarray
    p_total: float  # P_max for arrival, P_loss for loss
    kind: str  # "arrival" | "loss"


class _Propagated:
    """Spectral representation exp(G t) rho0 with cheap evaluation at any t."""

    def __init__(self, gen: Generator, rho0_vec: np.ndarray):
        if not np.all(np.isfinite(gen.matrix)):
            raise IntegrationError("integration failure: non-finite generator entries")
        u = gen.config.units
        self.gen = gen
        self.G_ns = gen.matrix / u.hbar_unit_ns  # rates per ns
        self.rho0 = rho0_vec
        d = gen.dim
        self.diag_idx = np.arange(d) * d + np.arange(d)
        self.ok = True
        try:
            w, V = scipy.linalg.eig(self.G_ns)
            cond = np.linalg.cond(V)
            if not np.isfinite(cond) or cond > _EIG_COND_LIMIT:
                self.ok = False
            else:
                self.w = w
                self.V = V
                self.c = scipy.linalg.solve(V, rho0_vec)
                self.Vdiag = V[self.diag_idx, :]
        except np.linalg.LinAlgError:
            self.ok = False

    def states_at(self, t_ns: np.ndarray) -> np.ndarray:
        """(nt, d*d) vectorized states."""
        t_ns = np.atleast_1d(np.asarray(t_ns, dtype=float))
        out = np.empty((t_ns.size, self.rho0.size), dtype=complex)
        for lo in range(0, t_ns.size, 20_000):
            chunk = t_ns[lo : lo + 20_000]
            E = np.exp(np.multiply.outer(self.w, chunk)) * self.c[:, None]
            out[lo : lo + chunk.size] = (self.V @ E).T
        return out

    def diag_at(self, t_ns: np.ndarray) -> np.ndarray:
        """(nt, d) real diagonal populations."""
        t_ns = np.atleast_1d(np.asarray(t_ns, dtype=float))
        out = np.empty((t_ns.size, self.diag_idx.size))
        for lo in range(0, t_ns.size, 50_000):
            chunk = t_ns[lo : lo + 50_000]
            E = np.exp(np.multiply.outer(self.w, chunk)) * self.c[:, None]
            out[lo : lo + chunk.size] = (self.Vdiag @ E).T.real
        return out


def _expm_grid_states(gen: Generator, rho0_vec: np.ndarray, times_ns: np.ndarray) -> np.ndarray:
    """Exact uniform-grid stepping via one matrix exponential (fallback path)."""
    u = gen.config.units
    if times_ns.size < 2:
        return rho0_vec[None, :].astype(complex)
    dt = times_ns[1] - times_ns[0]
    if not np.allclose(np.diff(times_ns), dt, rtol=1e-9, atol=0.0):
        raise IntegrationError("integration failure: fallback requires a uniform grid")
    P = scipy.linalg.expm(gen.matrix / u.hbar_unit_ns * dt)
    out = np.empty((times_ns.size, rho0_vec.size), dtype=complex)
    v = rho0_vec.astype(complex)
    out[0] = v
    for k in range(1, times_ns.size):
        v = P @ v
        out[k] = v
    return out


def default_rho0(config: NetworkConfig) -> np.ndarray:
    """|source><source| as a vectorized density matrix."""
    d = config.index.dim
    rho = np.zeros((d, d), dtype=complex)
    s = config.source_index
    rho[s, s] = 1.0
    return rho.reshape(-1)


def make_grid(
    gen: Generator,
    t_end_ns: float,
    max_points: int = DEFAULT_MAX_POINTS,
) -> np.ndarray:
    """Uniform output grid: dt = min(pi*hbar/(20*max_gap), t_end/2000), capped."""
    u = gen.config.units
    if gen.hamiltonian_gaps > 0:
        dt_coh = np.pi * u.hbar_unit_ns / (20.0 * gen.hamiltonian_gaps)
    else:
        dt_coh = np.inf
    dt = min(dt_coh, t_end_ns / 2000.0)
    n = int(np.ceil(t_end_ns / dt)) + 1
    n = max(MIN_GRID_POINTS, min(n, max_points))
    return np.linspace(0.0, t_end_ns, n)


def _find_completion(
    prop: _Propagated, idx_ground: int, idx_trap: int, t_max_ns: float, eps: float
) -> float | None:
    """First time at which 1 - P_ground - P_trap < eps, or None.

    The in-transit probability is monotone non-increasing in transient mode,
    so a coarse bracket plus bisection is exact enough.
    """

    def leak(t):
        p = prop.diag_at(np.asarray([t]))[0]
        return 1.0 - p[idx_ground] - p[idx_trap]

    if leak(t_max_ns) >= eps:
        return None
    probes = np.geomspace(max(t_max_ns * 1e-9, 1e-12), t_max_ns, 512)
    leaks = prop.diag_at(probes)
    vals = 1.0 - leaks[:, idx_ground] - leaks[:, idx_trap]
    below = np.nonzero(vals < eps)[0]
    first = int(below[0]) if below.size else len(probes) - 1
    lo = 0.0 if first == 0 else probes[first - 1]
    hi = probes[first]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if leak(mid) < eps:
            hi = mid
        else:
            lo = mid
    return hi


def completion_time(
    gen: Generator,
    rho0: np.ndarray | None = None,
    t_max_ns: float = DEFAULT_T_MAX_NS,
    eps: float = DEFAULT_COMPLETION_EPS,
) -> float | None:
    """Completion time only (no trajectory); None if not complete by t_max."""
    config = gen.config
    idx = config.index
    rho0_vec = default_rho0(config) if rho0 is None else np.asarray(rho0, complex).reshape(-1)
    prop = _Propagated(gen, rho0_vec)
    if not prop.ok:
        traj = evolve(gen, rho0=rho0, t_max_ns=t_max_ns, eps=eps, positivity_samples=0)
        return traj.completion_ns if traj.completed else None
    return _find_completion(prop, idx.ground, idx.trap, t_max_ns, eps)


def evolve(
    gen: Generator,
    rho0: np.ndarray | None = None,
    t_max_ns: float = DEFAULT_T_MAX_NS,
    eps: float = DEFAULT_COMPLETION_EPS,
    grid_ns: np.ndarray | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
    store_states: bool = False,
    positivity_samples: int = 64,
) -> Trajectory:
    """Integrate d rho / dt = G rho and record populations.

    Without an explicit grid the evolution runs to completion (in-transit
    probability below eps) or t_max_ns, on the grid from make_grid.
    """
    config = gen.config
    idx = config.index
    if rho0 is None:
        rho0_vec = default_rho0(config)
    else:
        rho0 = np.asarray(rho0, dtype=complex)
        rho0_vec = rho0.reshape(-1) if rho0.ndim == 2 else rho0
        rho_m = rho0_vec.reshape(idx.dim, idx.dim)
        if not np.allclose(rho_m, rho_m.conj().T, atol=1e-10):
            raise IntegrationError("initial state must be Hermitian")
        if abs(np.trace(rho_m).real - 1.0) > 1e-10:
            raise IntegrationError("initial state must have unit trace")

    prop = _Propagated(gen, rho0_vec)
    completion = None
    use_fallback = not prop.ok

    if grid_ns is None:
        if prop.ok:
            completion = _find_completion(prop, idx.ground, idx.trap, t_max_ns, eps)
        t_end = completion if completion is not None else t_max_ns
        grid = make_grid(gen, t_end, max_points=max_points)
    else:
        grid = np.asarray(grid_ns, dtype=float)

    states = None
    if not use_fallback:
        pops = prop.diag_at(grid)
        trace_err = float(np.max(np.abs(pops.sum(axis=1) - 1.0)))
        if trace_err > _TRACE_TOL or not np.all(np.isfinite(pops)):
            use_fallback = True
        elif store_states or positivity_samples > 0:
            n_samp = min(positivity_samples, grid.size) if not store_states else grid.size
            samp_idx = (
                np.linspace(0, grid.size - 1, n_samp).astype(int)
                if not store_states
                else np.arange(grid.size)
            )
            states_samp = prop.states_at(grid[samp_idx])
            if store_states:
                states = states_samp

    if use_fallback:
        states_full = _expm_grid_states(gen, rho0_vec, grid)
        pops = states_full[:, prop.diag_idx].real
        trace_err = float(np.max(np.abs(pops.sum(axis=1) - 1.0)))
        if trace_err > _TRACE_TOL or not np.all(np.isfinite(pops)):
            raise IntegrationError("integration failure: trace drift beyond tolerance")
        if store_states:
            states = states_full
        n_samp = min(positivity_samples, grid.size)
        samp_idx = np.linspace(0, grid.size - 1, n_samp).astype(int)
        states_samp = states_full[samp_idx]

    min_eig = 0.0
    if positivity_samples > 0 or store_states:
        d = idx.dim
        mats = states_samp.reshape(-1, d, d)
        herm = 0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2)))
        min_eig = float(np.min(np.linalg.eigvalsh(herm)))

    if grid_ns is not None and completion is None and prop.ok and gen.mode == "transient":
        # Completion metadata is still useful when an external grid is imposed.
        completion = _find_completion(prop, idx.ground, idx.trap, float(grid[-1]), eps)

    leak_end = 1.0 - pops[-1, idx.ground] - pops[-1, idx.trap]
    # The bisected completion time can leave the grid-end leak a rounding
    # error above eps; a found completion time is authoritative.
    completed = completion is not None or bool(leak_end < eps)
    if completed and completion is None:
        completion = float(grid[-1])

    return Trajectory(
        times_ns=grid,
        site_pops=pops[:, 1 : idx.trap],
        ground_pop=pops[:, idx.ground],
        trap_pop=pops[:, idx.trap],
        completed=completed,
        completion_ns=completion,
        trace_error=trace_err,
        min_rho_eig=min_eig,
        config=config,
        mode=gen.mode,
        states=states,
    )


# -- distributions ------------------------------------------------------------

_P_FLOOR = 1e-10


def arrival_time_distribution(traj: Trajectory) -> ArrivalDistribution:
    """f(t) = Gamma_trap * rho_sink(t) / P_max, using the exact flux identity."""
    config = traj.config
    p_max = float(traj.trap_pop[-1])
    if config.Gamma_trap <= 0 or p_max < _P_FLOOR:
        raise TransportError("no successful transport")
    rate_ns = config.units.rate_per_ns(config.Gamma_trap)
    sink = traj.site_pops[:, config.sink_index - 1]
    return ArrivalDistribution(
        times_ns=traj.times_ns,
        density=rate_ns * sink / p_max,
        p_total=p_max,
        kind="arrival",
    )


def loss_time_distribution(traj: Trajectory) -> ArrivalDistribution:
    """f(t) = sum_i rho_ii(t) / tau_i / P_loss (flux into ground)."""
    config = traj.config
    p_loss = float(traj.ground_pop[-1])
    if p_loss < _P_FLOOR:
        raise TransportError("no recombination loss")
    inv_tau = np.array([1.0 / s.lifetime for s in config.sites])  # per ns
    flux = traj.site_pops @ inv_tau
    return ArrivalDistribution(
        times_ns=traj.times_ns,
        density=flux / p_loss,
        p_total=p_loss,
        kind="loss",
    )


def arrival_moments(dist: ArrivalDistribution) -> tuple[float, float]:
    """Trapezoidal (mean, variance) of the transport-time distribution."""
    t = dist.times_ns
    f = dist.density
    norm = np.trapezoid(f, t)
    mean = np.trapezoid(t * f, t) / norm
    second = np.trapezoid(t * t * f, t) / norm
    return float(mean), float(second - mean * mean)


# -- steady state --------------------------------------------------------------


def steady_state(gen: Generator) -> tuple[np.ndarray, float]:
    """Stationary state and steady-state current I_ss = Gamma_trap * rho_sink.

    Solves G rho = 0 with trace(rho) = 1 on the trap-free subspace (steady
    mode re-routes extraction sink -> ground, leaving the trap inert).
    """
    if gen.mode != "steady":
        raise SteadyStateError("steady_state requires a steady-mode generator")
    config = gen.config
    idx = config.index
    d = idx.dim
    keep = [i * d + j for i in range(d) for j in range(d) if i != idx.trap and j != idx.trap]
    keep = np.asarray(keep)
    Gsub = gen.matrix[np.ix_(keep, keep)]

    sv = np.linalg.svd(Gsub, compute_uv=False)
    null_count = int(np.sum(sv < 1e-10 * sv[0]))
    if null_count > 1:
        raise SteadyStateError("non-unique steady state")

    dd = d - 1
    trace_row = np.zeros(keep.size, dtype=complex)
    trace_row[np.arange(dd) * dd + np.arange(dd)] = 1.0
    A = np.vstack([Gsub, trace_row])
    b = np.zeros(keep.size + 1, dtype=complex)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(A, b, rcond=None)

    rho_vec = np.zeros(d * d, dtype=complex)
    rho_vec[keep] = x
    residual = float(np.linalg.norm(gen.matrix @ rho_vec))
    if residual > 1e-10:
        raise SteadyStateError(f"steady-state residual too large: {residual:.3e}")
    rho = rho_vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    i_ss = float(config.Gamma_trap * rho[config.sink_index, config.sink_index].real)
    return rho, i_ss


# -- CSV export -----------------------------------------------------------------


def trajectory_to_csv(
    traj: Trajectory,
    path,
    arrival: ArrivalDistribution | None = None,
    loss: ArrivalDistribution | None = None,
) -> None:
    """Write time_ns, per-site, ground and trap populations (plus f columns)."""
    n_sites = traj.site_pops.shape[1]
    header = ["time_ns"] + [f"site_{i}" for i in range(1, n_sites + 1)] + ["ground", "trap"]
    cols = [traj.times_ns] + [traj.site_pops[:, i] for i in range(n_sites)]
    cols += [traj.ground_pop, traj.trap_pop]
    if arrival is not None:
        header.append("f_arrival")
        cols.append(arrival.density)
    if loss is not None:
        header.append("f_loss")
        cols.append(loss.density)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
