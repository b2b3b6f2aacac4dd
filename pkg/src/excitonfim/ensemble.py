"""Randomized network generation, disorder, ensemble statistics and sweeps.

Reproducibility: per-sample RNG substreams come from a counter-based Philox
generator keyed on (seed, sample index), so serial and parallel schedules
produce identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import completion_time
from .environment import build_generator
from .errors import ConfigError, ExcitonError, GeometryError
from .infogeom import FimResult, ParameterVector, fim, importance_by_group, scalar_sensitivity
from .model import (
    DEFAULT_GAMMA_INJ,
    NetworkConfig,
    SiteSpec,
    _sites_from_cartesian,
    chain_config,
    nn_coupling_stats,
    square_config,
)

_MAX_REJECTIONS = 10_000
FOM_KINDS = ("arrival", "loss", "steady")


@dataclass(frozen=True)
class EnsembleSpec:
    """Randomized-ensemble description (radii in nm, filter in ns)."""

    radius_nm: float
    n_sites: int
    samples: int
    seed: int
    disorder: float = 0.1
    min_spacing_nm: float = 0.5
    completion_filter_ns: float = 1.0
    kind: str = "arrival"

    def __post_init__(self):
        if self.radius_nm <= self.min_spacing_nm / 2:
            raise ConfigError("sphere radius must exceed half the minimum spacing")
        if self.samples < 1:
            raise ConfigError("sample count must be at least 1")
        if self.n_sites < 2:
            raise ConfigError("need at least source and sink")
        if self.kind not in FOM_KINDS:
            raise ConfigError(f"kind must be one of {FOM_KINDS}")
        if self.disorder < 0:
            raise ConfigError("disorder fraction must be non-negative")

    def to_dict(self) -> dict:
        return {
            "radius_nm": self.radius_nm,
            "n_sites": self.n_sites,
            "samples": self.samples,
            "seed": self.seed,
            "disorder": self.disorder,
            "min_spacing_nm": self.min_spacing_nm,
            "completion_filter_ns": self.completion_filter_ns,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class EnsembleResult:
    """Aggregated importance statistics over retained samples."""

    spec: EnsembleSpec
    labels: tuple[str, ...]
    groups: tuple[str, ...]
    sample_indices: tuple[int, ...]  # retained samples
    profiles: np.ndarray  # (n_retained, n_params)
    nn_couplings: np.ndarray  # mean NN coupling per retained sample
    n_filtered: int
    n_failed: int
    geometry_rejections: int

    @property
    def mean_importance(self) -> np.ndarray:
        return self.profiles.mean(axis=0)

    @property
    def var_importance(self) -> np.ndarray:
        return self.profiles.var(axis=0)

    @property
    def mean_nn_coupling(self) -> float:
        return float(self.nn_couplings.mean())

    def group_means(self) -> dict[str, float]:
        out: dict[str, float] = {}
        mean = self.mean_importance
        for grp in dict.fromkeys(self.groups):
            out[grp] = float(sum(mean[k] for k, g in enumerate(self.groups) if g == grp))
        return out

    def summary_csv(self, path) -> None:
        mean = self.mean_importance
        var = self.var_importance
        with open(path, "w") as fh:
            fh.write("label,group,mean_importance,var_importance\n")
            for k, (lab, grp) in enumerate(zip(self.labels, self.groups)):
                fh.write(f"{lab},{grp},{float(mean[k])!r},{float(var[k])!r}\n")

    def samples_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("sample,nn_coupling," + ",".join(self.labels) + "\n")
            for row_idx, s in enumerate(self.sample_indices):
                vals = ",".join(repr(float(v)) for v in self.profiles[row_idx])
                fh.write(f"{s},{float(self.nn_couplings[row_idx])!r},{vals}\n")

    def sidecar_json(self, path, extra: dict | None = None) -> None:
        payload = {
            "spec": self.spec.to_dict(),
            "n_retained": len(self.sample_indices),
            "n_filtered": self.n_filtered,
            "n_failed": self.n_failed,
            "geometry_rejections": self.geometry_rejections,
            "mean_nn_coupling": self.mean_nn_coupling,
            "group_means": self.group_means(),
        }
        if extra:
            payload.update(extra)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based substream for one sample."""
    key = np.array([seed, sample_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_geometry(spec: EnsembleSpec, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Cartesian site positions (nm) with source at the origin.

    Source and sink start at the sphere poles (-r,0,0) and (r,0,0);
    intermediate sites are uniform in the ball. On any pairwise-spacing
    violation all intermediate sites are redrawn. Returns (positions,
    rejection count); positions are shifted so site 1 sits at the origin.
    """
    r = spec.radius_nm
    n = spec.n_sites
    rejections = 0
    while True:
        pos = np.zeros((n, 3))
        pos[0] = (-r, 0.0, 0.0)
        pos[-1] = (r, 0.0, 0.0)
        if n > 2:
            m = n - 2
            direction = rng.normal(size=(m, 3))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = r * rng.random(m) ** (1.0 / 3.0)
            pos[1:-1] = direction * radius[:, None]
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        iu = np.triu_indices(n, k=1)
        if np.min(dist[iu]) >= spec.min_spacing_nm:
            return pos - pos[0], rejections
        rejections += 1
        if rejections >= _MAX_REJECTIONS:
            raise GeometryError("infeasible spec: spacing constraint never satisfied")


def apply_disorder(
    config: NetworkConfig, fraction: float, rng: np.random.Generator
) -> NetworkConfig:
    """Multiply non-positional parameters by (1 + fraction * N(0,1)).

    Affects energies, lifetimes, Gamma_trap, lambda_ph and T_ph; positions are
    left to the geometry draw. Entries driven non-positive are resampled.
    """
    if fraction == 0.0:
        return config

    def jiggle(value: float) -> float:
        while True:
            out = value * (1.0 + fraction * rng.standard_normal())
            if out > 0:
                return out

    sites = tuple(
        SiteSpec(jiggle(s.energy), jiggle(s.lifetime), s.position) for s in config.sites
    )
    return replace(
        config,
        sites=sites,
        Gamma_trap=jiggle(config.Gamma_trap),
        lambda_ph=jiggle(config.lambda_ph),
        T_ph=jiggle(config.T_ph),
    )


def _sample_importance(config: NetworkConfig, kind: str, fim_kwargs: dict) -> FimResult:
    if kind == "steady":
        cfg = config if config.Gamma_inj > 0 else replace(config, Gamma_inj=DEFAULT_GAMMA_INJ)
        return scalar_sensitivity(cfg, h=fim_kwargs.get("h", 1e-4))
    return fim(config, kind=kind, **fim_kwargs)


def run_ensemble(
    spec: EnsembleSpec,
    template: NetworkConfig | None = None,
    fim_kwargs: dict | None = None,
) -> EnsembleResult:
    """Generate, filter and analyse one seeded ensemble.

    The template supplies non-geometric parameters (J, spectral kind, rates);
    its site count is replaced by the spec's geometry.
    """
    if template is None:
        template = chain_config(spec.n_sites, 1.0)
    fim_kwargs = dict(fim_kwargs or {})

    labels: tuple[str, ...] | None = None
    groups: tuple[str, ...] | None = None
    kept_idx: list[int] = []
    profiles: list[np.ndarray] = []
    nn_means: list[float] = []
    n_filtered = 0
    n_failed = 0
    total_rejections = 0

    for k in range(spec.samples):
        rng = sample_rng(spec.seed, k)
        try:
            positions, rejections = random_geometry(spec, rng)
            total_rejections += rejections
            energies = [s.energy for s in template.sites[: spec.n_sites]]
            lifetimes = [s.lifetime for s in template.sites[: spec.n_sites]]
            if len(energies) < spec.n_sites:
                energies += [template.sites[0].energy] * (spec.n_sites - len(energies))
                lifetimes += [template.sites[0].lifetime] * (spec.n_sites - len(lifetimes))
            config = replace(
                template,
                sites=_sites_from_cartesian(positions, energies, lifetimes),
                sink_index=spec.n_sites,
                source_index=1,
            )
            config = apply_disorder(config, spec.disorder, rng)

            gen = build_generator(config, "transient")
            t_done = completion_time(gen, t_max_ns=spec.completion_filter_ns)
            if t_done is None or t_done >= spec.completion_filter_ns:
                n_filtered += 1
                continue

            result = _sample_importance(config, spec.kind, fim_kwargs)
            if labels is None:
                labels, groups = result.labels, result.groups
            kept_idx.append(k)
            profiles.append(result.importances)
            nn_means.append(nn_coupling_stats(config)[0])
        except ExcitonError:
            n_failed += 1

    if not profiles:
        raise ExcitonError("ensemble produced no retained samples")
    return EnsembleResult(
        spec=spec,
        labels=labels,
        groups=groups,
        sample_indices=tuple(kept_idx),
        profiles=np.vstack(profiles),
        nn_couplings=np.asarray(nn_means),
        n_filtered=n_filtered,
        n_failed=n_failed,
        geometry_rejections=total_rejections,
    )


# -- parameter sweeps -----------------------------------------------------------

SWEEP_MODES = ("spacing", "sites_fixed_nn", "sites_fixed_span", "lambda")


def _chain_for_sweep(mode: str, value, n_sites: int, spacing_nm: float, span_nm: float, kwargs: dict):
    if mode == "spacing":
        return chain_config(n_sites, float(value), **kwargs)
    if mode == "sites_fixed_nn":
        return chain_config(int(value), spacing_nm, **kwargs)
    if mode == "sites_fixed_span":
        n = int(value)
        return chain_config(n, span_nm / (n - 1), **kwargs)
    if mode == "lambda":
        return chain_config(n_sites, spacing_nm, **{**kwargs, "lambda_ph": float(value)})
    raise ConfigError(f"unknown sweep mode {mode!r}")


def sweep_chain(
    values,
    mode: str = "spacing",
    n_sites: int = 4,
    spacing_nm: float = 3.0,
    span_nm: float = 5.0,
    kind: str = "arrival",
    config_kwargs: dict | None = None,
    fim_kwargs: dict | None = None,
    n_top_eigenvalues: int = 5,
) -> list[dict]:
    """Importance profiles along a degenerate-chain parameter sweep.

    Modes: "spacing" sweeps the NN spacing; "sites_fixed_nn" and
    "sites_fixed_span" sweep the site count at fixed NN or source-sink
    distance; "lambda" sweeps the phonon coupling strength on a fixed chain
    (reporting the largest FIM eigenvalues).
    """
    if mode not in SWEEP_MODES:
        raise ConfigError(f"sweep mode must be one of {SWEEP_MODES}")
    config_kwargs = dict(config_kwargs or {})
    fim_kwargs = dict(fim_kwargs or {})
    rows: list[dict] = []
    for value in values:
        config = _chain_for_sweep(mode, value, n_sites, spacing_nm, span_nm, config_kwargs)
        result = _sample_importance(config, kind, fim_kwargs)
        by_group = importance_by_group(result)
        row: dict = {
            "sweep_value": float(value),
            "nn_coupling": nn_coupling_stats(config)[0],
        }
        for i in range(n_top_eigenvalues):
            row[f"eig_{i + 1}"] = (
                float(result.eigenvalues[i]) if i < result.eigenvalues.size else 0.0
            )
        for grp, stats in by_group.items():
            row[f"{grp}_total"] = stats["total"]
            row[f"{grp}_min"] = stats["min"]
            row[f"{grp}_max"] = stats["max"]
        for lab, p in zip(result.labels, result.importances):
            row[f"P_{lab}"] = float(p)
        rows.append(row)
    return rows


def sweep_rows_to_csv(rows: list[dict], path) -> None:
    header = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row.get(k, 0.0))) for k in header) + "\n")


# -- bundled geometries for the importance-grid preset ---------------------------


def preset_geometries(J: float | None = None) -> dict[str, NetworkConfig]:
    """The three documented four-site geometries: chain, square and one seeded
    random arrangement (Philox key (7, 0), sphere radius 1.5 nm)."""
    kwargs = {} if J is None else {"J": J}
    spec = EnsembleSpec(radius_nm=1.5, n_sites=4, samples=1, seed=7)
    rng = sample_rng(7, 0)
    positions, _ = random_geometry(spec, rng)
    random_cfg = NetworkConfig(
        sites=_sites_from_cartesian(
            positions, [2.0, 2.0, 2.0, 2.0], [10.0, 10.0, 10.0, 10.0]
        ),
        **kwargs,
    )
    return {
        "chain": chain_config(4, 3.0, **kwargs),
        "square": square_config(1.0, **kwargs),
        "random": random_cfg,
    }
