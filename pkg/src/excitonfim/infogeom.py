"""Log-parametrization, numerical gradients, FIM assembly and sloppiness metrics.

The parameter vector follows the fixed order
{E_1..E_N, tau_1..tau_N, (r_1i, theta_1i, phi_1i) for i = 2..N,
 Gamma_trap, lambda_ph, T_ph};
all entries are log-transformed except the angles, which stay linear, so the
FIM measures relative parameter changes throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    arrival_time_distribution,
    evolve,
    loss_time_distribution,
    make_grid,
    steady_state,
)
from .environment import build_generator
from .errors import ConfigError, TransportError
from .model import NetworkConfig, SiteSpec

DEFAULT_STEP = 1e-4
DEFAULT_NOISE_FLOOR = 1e-8
NULL_THRESHOLD = 1e-10  # relative to lambda_max
_ISS_FLOOR = 1e-18

GROUP_ENERGY = "energy"
GROUP_LIFETIME = "lifetime"
GROUP_POSITION = "position"
GROUP_ENVIRONMENT = "environment"


@dataclass(frozen=True)
class ParameterVector:
    """Ordered model parameters with log/linear flags and group tags."""

    labels: tuple[str, ...]
    values: np.ndarray
    log_flags: np.ndarray  # True -> log-transformed
    groups: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "ParameterVector":
        labels: list[str] = []
        values: list[float] = []
        logf: list[bool] = []
        groups: list[str] = []
        n = config.N
        for i in range(1, n + 1):
            labels.append(f"E{i}")
            values.append(config.sites[i - 1].energy)
            logf.append(True)
            groups.append(GROUP_ENERGY)
        for i in range(1, n + 1):
            labels.append(f"t{i}")
            values.append(config.sites[i - 1].lifetime)
            logf.append(True)
            groups.append(GROUP_LIFETIME)
        for i in range(2, n + 1):
            r, th, ph = config.sites[i - 1].position
            labels += [f"r1{i}", f"a1{i}", f"p1{i}"]
            values += [r, th, ph]
            logf += [True, False, False]
            groups += [GROUP_POSITION] * 3
        labels += ["G_trap", "lam", "T"]
        values += [config.Gamma_trap, config.lambda_ph, config.T_ph]
        logf += [True, True, True]
        groups += [GROUP_ENVIRONMENT] * 3
        return cls(
            labels=tuple(labels),
            values=np.asarray(values, dtype=float),
            log_flags=np.asarray(logf, dtype=bool),
            groups=tuple(groups),
        )

    def to_config(self, template: NetworkConfig, values: np.ndarray | None = None) -> NetworkConfig:
        """Rebuild a NetworkConfig from parameter values, keeping the rest of
        the template (J, spectral kind, omega_c, injection, indices, units)."""
        v = self.values if values is None else np.asarray(values, dtype=float)
        n = template.N
        energies = v[0:n]
        lifetimes = v[n : 2 * n]
        sites = [SiteSpec(energies[0], lifetimes[0], (0.0, 0.0, 0.0))]
        for i in range(2, n + 1):
            base = 2 * n + 3 * (i - 2)
            sites.append(
                SiteSpec(
                    energies[i - 1],
                    lifetimes[i - 1],
                    (v[base], v[base + 1], v[base + 2]),
                )
            )
        g_trap, lam, t_ph = v[-3], v[-2], v[-1]
        return replace(
            template,
            sites=tuple(sites),
            Gamma_trap=g_trap,
            lambda_ph=lam,
            T_ph=t_ph,
        )


def perturb(config: NetworkConfig, mu: int, h: float) -> NetworkConfig:
    """Relative (log entries) or additive (angles) single-parameter nudge."""
    pv = ParameterVector.from_config(config)
    if not 0 <= mu < len(pv):
        raise ConfigError(f"parameter index {mu} out of range")
    v = pv.values.copy()
    if pv.log_flags[mu]:
        v[mu] *= math.exp(h)
    else:
        v[mu] += h
    return pv.to_config(config, v)


@dataclass(frozen=True)
class FimResult:
    """FIM with sorted eigenpairs, importance profile and run diagnostics."""

    matrix: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns match eigenvalues
    importances: np.ndarray  # P(theta_mu), sums to 1
    labels: tuple[str, ...]
    groups: tuple[str, ...]
    diagnostics: dict

    def to_json(self, path=None) -> str:
        payload = {
            "labels": list(self.labels),
            "groups": list(self.groups),
            "matrix": self.matrix.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),
            "importances": self.importances.tolist(),
            "diagnostics": self.diagnostics,
        }
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def spectrum_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,eigenvalue\n")
            for k, lam in enumerate(self.eigenvalues):
                fh.write(f"{k},{float(lam)!r}\n")

    def importance_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("label,group,importance\n")
            for lab, grp, p in zip(self.labels, self.groups, self.importances):
                fh.write(f"{lab},{grp},{float(p)!r}\n")

    def matrix_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("label," + ",".join(self.labels) + "\n")
            for lab, row in zip(self.labels, self.matrix):
                fh.write(lab + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _distribution_values(config: NetworkConfig, kind: str, grid_ns: np.ndarray) -> np.ndarray:
    gen = build_generator(config, "transient")
    traj = evolve(gen, grid_ns=grid_ns, positivity_samples=0)
    if kind == "arrival":
        return arrival_time_distribution(traj).density
    if kind == "loss":
        return loss_time_distribution(traj).density
    raise ConfigError(f"unknown distribution kind {kind!r}")


def distribution_gradient(
    config: NetworkConfig,
    kind: str,
    grid_ns: np.ndarray,
    h: float = DEFAULT_STEP,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference rows d f / d theta_tilde_mu on a shared time grid.

    Returns (D, f_base) with D of shape (n_params, n_grid).
    """
    f_base = _distribution_values(config, kind, grid_ns)
    pv = ParameterVector.from_config(config)
    D = np.empty((len(pv), grid_ns.size))
    for mu in range(len(pv)):
        try:
            f_plus = _distribution_values(perturb(config, mu, +h), kind, grid_ns)
            f_minus = _distribution_values(perturb(config, mu, -h), kind, grid_ns)
        except Exception as exc:
            raise TransportError(
                f"perturbed run failed for parameter {pv.labels[mu]} (index {mu}): {exc}"
            ) from exc
        D[mu] = (f_plus - f_minus) / (2.0 * h)
    return D, f_base


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def gram_matrices(
    D: np.ndarray, f_base: np.ndarray, weights: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """FIM quadrature in both equivalent forms (integral and expectation).

    integral:    sum_t w (1/f) (df_mu)(df_nu)
    expectation: sum_t w f (dlnf_mu)(dlnf_nu)
    """
    Dm = D[:, mask]
    fm = f_base[mask]
    wm = weights[mask]
    integral = (Dm * (wm / fm)) @ Dm.T
    dlnf = Dm / fm
    expectation = (dlnf * (wm * fm)) @ dlnf.T
    return integral, expectation


def _sorted_eig(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eigs, vecs = np.linalg.eigh(g)
    order = np.argsort(eigs)[::-1]
    eigs = eigs[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        j = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[j, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return eigs, vecs


def importance_profile(eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    """P(theta_mu) = sum_i lambda_i |e_i . theta_mu|, normalized to sum to 1."""
    lam = np.clip(eigenvalues, 0.0, None)
    raw = np.abs(eigenvectors) @ lam
    total = raw.sum()
    if total <= 0:
        raise TransportError("FIM has no positive eigenvalues")
    return raw / total


def fim(
    config: NetworkConfig,
    kind: str = "arrival",
    h: float = DEFAULT_STEP,
    eta: float = DEFAULT_NOISE_FLOOR,
    t_max_ns: float = 50.0,
    eps: float = 1e-4,
    max_points: int | None = None,
) -> FimResult:
    """Fisher Information Matrix of the arrival- or loss-time distribution."""
    gen = build_generator(config, "transient")
    base = evolve(gen, t_max_ns=t_max_ns, eps=eps, positivity_samples=0)
    if not base.completed or base.completion_ns is None:
        raise TransportError("base model did not complete; cannot form FIM")
    kwargs = {} if max_points is None else {"max_points": max_points}
    grid = make_grid(gen, 1.1 * base.completion_ns, **kwargs)

    D, f_base = distribution_gradient(config, kind, grid, h=h)
    weights = _trapezoid_weights(grid)
    mask = f_base >= eta * float(np.max(f_base))
    if not np.any(mask):
        raise TransportError("distribution too noisy: all grid points cut")
    g, _ = gram_matrices(D, f_base, weights, mask)
    g = 0.5 * (g + g.T)
    eigs, vecs = _sorted_eig(g)
    pv = ParameterVector.from_config(config)
    total_mass = float(np.sum(weights * f_base))
    cut_mass = float(np.sum(weights[~mask] * f_base[~mask]))
    return FimResult(
        matrix=g,
        eigenvalues=eigs,
        eigenvectors=vecs,
        importances=importance_profile(eigs, vecs),
        labels=pv.labels,
        groups=pv.groups,
        diagnostics={
            "kind": kind,
            "h": h,
            "eta": eta,
            "n_grid": int(grid.size),
            "n_masked_out": int(np.sum(~mask)),
            "cut_mass_fraction": cut_mass / total_mass if total_mass > 0 else 0.0,
            "completion_ns": float(base.completion_ns),
            "grid_end_ns": float(grid[-1]),
        },
    )


def _steady_current(config: NetworkConfig) -> float:
    gen = build_generator(config, "steady")
    _, i_ss = steady_state(gen)
    return i_ss


def scalar_sensitivity(config: NetworkConfig, h: float = DEFAULT_STEP) -> FimResult:
    """Rank-1 sensitivity matrix of the steady-state current I_ss.

    g = grad(I_ss) grad(I_ss)^T in log parameters; the importance profile is
    the normalized absolute gradient direction.
    """
    if not config.Gamma_inj > 0:
        raise ConfigError("scalar_sensitivity requires Gamma_inj > 0")
    i_base = _steady_current(config)
    if abs(i_base) < _ISS_FLOOR:
        raise TransportError("steady-state current below floor")
    pv = ParameterVector.from_config(config)
    grad = np.empty(len(pv))
    for mu in range(len(pv)):
        ip = _steady_current(perturb(config, mu, +h))
        im = _steady_current(perturb(config, mu, -h))
        grad[mu] = (ip - im) / (2.0 * h)
    g = np.outer(grad, grad)
    eigs, vecs = _sorted_eig(g)
    raw = np.abs(grad)
    importances = raw / raw.sum()
    return FimResult(
        matrix=g,
        eigenvalues=eigs,
        eigenvectors=vecs,
        importances=importances,
        labels=pv.labels,
        groups=pv.groups,
        diagnostics={"kind": "steady", "h": h, "I_ss": i_base, "grad_norm": float(np.linalg.norm(grad))},
    )


def importance_by_group(result: FimResult) -> dict[str, dict]:
    """Totals plus per-parameter breakdown (with min/max) for each group tag."""
    out: dict[str, dict] = {}
    for grp in dict.fromkeys(result.groups):
        sel = [k for k, g in enumerate(result.groups) if g == grp]
        per = {result.labels[k]: float(result.importances[k]) for k in sel}
        vals = list(per.values())
        out[grp] = {
            "total": float(sum(vals)),
            "per_parameter": per,
            "min": float(min(vals)),
            "max": float(max(vals)),
        }
    return out


def sloppiness_metrics(result: FimResult) -> tuple[float, np.ndarray]:
    """Decade span of the spectrum above the structural-null threshold."""
    lam_max = float(result.eigenvalues[0])
    if lam_max <= 0:
        raise TransportError("FIM has no positive eigenvalues")
    above = result.eigenvalues[result.eigenvalues > NULL_THRESHOLD * lam_max]
    span = math.log10(lam_max / float(above[-1]))
    return span, result.eigenvalues.copy()
