"""Command-line front end.

Subcommands: simulate | fim | sweep | ensemble | steady.
Every run writes manifest.json with the fully resolved inputs so it can be
reproduced bit-identically. Exit codes: 0 ok, 2 config error, 3 numeric error.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import replace

import click
import numpy as np

from . import __version__
from .dynamics import (
    arrival_time_distribution,
    evolve,
    loss_time_distribution,
    steady_state,
    trajectory_to_csv,
)
from .ensemble import (
    EnsembleSpec,
    preset_geometries,
    run_ensemble,
    sweep_chain,
    sweep_rows_to_csv,
)
from .environment import build_generator
from .errors import ConfigError, ExcitonError
from .infogeom import fim, importance_by_group, scalar_sensitivity, sloppiness_metrics
from .model import DEFAULT_GAMMA_INJ, NetworkConfig, square_config

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _load_config(path: str | None, overrides: tuple[str, ...]) -> NetworkConfig:
    if path is None:
        config = square_config(1.0)
    else:
        config = NetworkConfig.from_json(path)
    if overrides:
        data = config.to_dict()
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, raw = item.split("=", 1)
            _apply_override(data, key.strip(), raw.strip())
        config = NetworkConfig.from_dict(data)
    return config


def _apply_override(data: dict, dotted: str, raw: str) -> None:
    parts = dotted.split(".")
    node = data
    for p in parts[:-1]:
        if isinstance(node, list):
            node = node[int(p)]
        elif p in node:
            node = node[p]
        else:
            raise ConfigError(f"unknown config key {dotted!r}")
    leaf = parts[-1]
    if isinstance(node, list):
        idx = int(leaf)
        node[idx] = json.loads(raw)
        return
    if leaf not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    try:
        node[leaf] = json.loads(raw)
    except json.JSONDecodeError:
        node[leaf] = raw


def _write_manifest(out_dir: str, command: str, config: NetworkConfig | None, extra: dict) -> None:
    payload = {
        "tool": "excitonfim",
        "version": __version__,
        "command": command,
    }
    if config is not None:
        payload["config"] = config.to_dict()
    payload.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run(func):
    try:
        func()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except ExcitonError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


@click.group()
@click.version_option(__version__)
def main():
    """Exciton transport simulation and parameter-sensitivity analysis."""


config_opt = click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                          help="NetworkConfig JSON (default: 1 nm square network).")
out_opt = click.option("--out", "out_dir", type=click.Path(), required=True,
                       help="Output directory (created if missing).")
set_opt = click.option("--set", "overrides", multiple=True,
                       help="Override config entries, e.g. --set lambda_ph=0.1 "
                            "or --set sites.0.energy=2.1 (repeatable).")


@main.command()
@config_opt
@out_opt
@set_opt
@click.option("--t-max", "t_max_ns", type=float, default=50.0, show_default=True)
def simulate(config_path, out_dir, overrides, t_max_ns):
    """Evolve the network and write populations plus transport distributions."""

    def body():
        config = _load_config(config_path, overrides)
        os.makedirs(out_dir, exist_ok=True)
        gen = build_generator(config, "transient")
        traj = evolve(gen, t_max_ns=t_max_ns)
        arrival = loss = None
        notes = {}
        try:
            arrival = arrival_time_distribution(traj)
        except ExcitonError as exc:
            notes["arrival"] = str(exc)
        try:
            loss = loss_time_distribution(traj)
        except ExcitonError as exc:
            notes["loss"] = str(exc)
        trajectory_to_csv(traj, os.path.join(out_dir, "trajectory.csv"), arrival, loss)
        _write_manifest(out_dir, "simulate", config, {
            "t_max_ns": t_max_ns,
            "completed": traj.completed,
            "completion_ns": traj.completion_ns,
            "notes": notes,
        })
        click.echo(f"simulate: completed={traj.completed} completion_ns={traj.completion_ns}")

    _run(body)


@main.command(name="fim")
@config_opt
@out_opt
@set_opt
@click.option("--kind", type=click.Choice(["arrival", "loss", "steady"]), default="arrival",
              show_default=True)
@click.option("--t-max", "t_max_ns", type=float, default=50.0, show_default=True)
def fim_cmd(config_path, out_dir, overrides, kind, t_max_ns):
    """Fisher information matrix, spectrum and importance profile."""

    def body():
        config = _load_config(config_path, overrides)
        os.makedirs(out_dir, exist_ok=True)
        if kind == "steady":
            if config.Gamma_inj <= 0:
                config_local = replace(config, Gamma_inj=DEFAULT_GAMMA_INJ)
            else:
                config_local = config
            result = scalar_sensitivity(config_local)
        else:
            config_local = config
            result = fim(config_local, kind=kind, t_max_ns=t_max_ns)
        result.to_json(os.path.join(out_dir, "fim.json"))
        result.spectrum_csv(os.path.join(out_dir, "spectrum.csv"))
        result.importance_csv(os.path.join(out_dir, "importance.csv"))
        result.matrix_csv(os.path.join(out_dir, "matrix.csv"))
        span, _ = sloppiness_metrics(result)
        _write_manifest(out_dir, "fim", config_local, {
            "kind": kind,
            "t_max_ns": t_max_ns,
            "spectrum_span_decades": span,
            "group_importance": {g: s["total"] for g, s in importance_by_group(result).items()},
        })
        click.echo(f"fim: kind={kind} span={span:.2f} decades")

    _run(body)


@main.command()
@config_opt
@out_opt
@set_opt
def steady(config_path, out_dir, overrides):
    """Steady state with injection: stationary populations and I_ss."""

    def body():
        config = _load_config(config_path, overrides)
        if config.Gamma_inj <= 0:
            config_local = replace(config, Gamma_inj=DEFAULT_GAMMA_INJ)
        else:
            config_local = config
        os.makedirs(out_dir, exist_ok=True)
        gen = build_generator(config_local, "steady")
        rho, i_ss = steady_state(gen)
        d = config_local.index.dim
        payload = {
            "I_ss": i_ss,
            "populations": [float(rho[i, i].real) for i in range(d)],
            "residual": float(np.linalg.norm(gen.matrix @ rho.reshape(-1))),
        }
        with open(os.path.join(out_dir, "steady.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        _write_manifest(out_dir, "steady", config_local, {"I_ss": i_ss})
        click.echo(f"steady: I_ss={i_ss:.6e}")

    _run(body)


@main.command()
@config_opt
@out_opt
@set_opt
@click.option("--mode", type=click.Choice(["spacing", "sites_fixed_nn", "sites_fixed_span",
                                           "lambda"]), default="spacing", show_default=True)
@click.option("--values", default=None,
              help="Comma-separated sweep values (spacings nm, site counts, or lambda_ph).")
@click.option("--kind", type=click.Choice(["arrival", "loss", "steady"]), default="arrival",
              show_default=True)
@click.option("--spectrum", type=click.Choice(["J1", "J2", "J3"]), default=None,
              help="Override the spectral density kind.")
@click.option("--sites", "n_sites", type=int, default=4, show_default=True)
@click.option("--spacing", "spacing_nm", type=float, default=3.0, show_default=True)
@click.option("--span", "span_nm", type=float, default=5.0, show_default=True)
@click.option("--t-max", "t_max_ns", type=float, default=150.0, show_default=True)
@click.option("--preset", type=click.Choice(["importance-grid"]), default=None,
              help="Run the bundled three-geometry / three-spectrum importance grid instead.")
def sweep(config_path, out_dir, overrides, mode, values, kind, spectrum, n_sites,
          spacing_nm, span_nm, t_max_ns, preset):
    """Chain parameter sweeps, or the bundled importance-grid preset."""

    def body():
        os.makedirs(out_dir, exist_ok=True)
        if preset == "importance-grid":
            _importance_grid(out_dir, t_max_ns)
            return
        if values is None:
            raise ConfigError("--values is required unless --preset is given")
        vals = [float(v) for v in values.split(",")]
        config = _load_config(config_path, overrides)
        config_kwargs = {
            "J": config.J,
            "Gamma_trap": config.Gamma_trap,
            "Gamma_inj": config.Gamma_inj,
            "lambda_ph": config.lambda_ph,
            "T_ph": config.T_ph,
            "spectral_kind": spectrum or config.spectral_kind,
            "omega_c": config.omega_c,
        }
        rows = sweep_chain(
            vals,
            mode=mode,
            n_sites=n_sites,
            spacing_nm=spacing_nm,
            span_nm=span_nm,
            kind=kind,
            config_kwargs=config_kwargs,
            fim_kwargs={"t_max_ns": t_max_ns},
        )
        sweep_rows_to_csv(rows, os.path.join(out_dir, "sweep.csv"))
        _write_manifest(out_dir, "sweep", config, {
            "mode": mode,
            "values": vals,
            "kind": kind,
            "spectrum": spectrum or config.spectral_kind,
            "n_sites": n_sites,
            "spacing_nm": spacing_nm,
            "span_nm": span_nm,
            "t_max_ns": t_max_ns,
        })
        click.echo(f"sweep: {len(rows)} points -> {out_dir}/sweep.csv")

    _run(body)


def _importance_grid(out_dir: str, t_max_ns: float) -> None:
    """Importance profiles for chain/square/random geometries under all three
    spectral densities at weak (1e-3) and stronger (1e-1) phonon coupling."""
    geometries = preset_geometries()
    rows = []
    for geo_name, base in geometries.items():
        for kind in ("J1", "J2", "J3"):
            for lam in (1e-3, 1e-1):
                config = replace(base, spectral_kind=kind, lambda_ph=lam)
                result = fim(config, kind="arrival", t_max_ns=t_max_ns)
                row = {
                    "geometry": geo_name,
                    "spectrum": kind,
                    "lambda_ph": lam,
                }
                for lab, p in zip(result.labels, result.importances):
                    row[f"P_{lab}"] = float(p)
                for grp, stats in importance_by_group(result).items():
                    row[f"{grp}_total"] = stats["total"]
                rows.append(row)
    header = list(rows[0].keys())
    with open(os.path.join(out_dir, "importance_grid.csv"), "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                str(row[k]) if isinstance(row[k], str) else repr(float(row[k]))
                for k in header
            ) + "\n")
    _write_manifest(out_dir, "sweep --preset importance-grid", None, {
        "geometries": sorted(geometries),
        "spectra": ["J1", "J2", "J3"],
        "lambda_values": [1e-3, 1e-1],
        "t_max_ns": t_max_ns,
    })
    click.echo(f"sweep preset: {len(rows)} rows -> {out_dir}/importance_grid.csv")


@main.command()
@config_opt
@out_opt
@set_opt
@click.option("--radius", "radius_nm", type=float, default=3.0, show_default=True)
@click.option("--sites", "n_sites", type=int, default=4, show_default=True)
@click.option("--samples", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kind", type=click.Choice(["arrival", "loss", "steady"]), default="arrival",
              show_default=True)
@click.option("--disorder", type=float, default=0.1, show_default=True)
@click.option("--filter-ns", "filter_ns", type=float, default=1.0, show_default=True)
def ensemble(config_path, out_dir, overrides, radius_nm, n_sites, samples, seed, kind,
             disorder, filter_ns):
    """Randomized-geometry ensemble statistics of parameter importance."""

    def body():
        template = _load_config(config_path, overrides)
        spec = EnsembleSpec(
            radius_nm=radius_nm,
            n_sites=n_sites,
            samples=samples,
            seed=seed,
            disorder=disorder,
            completion_filter_ns=filter_ns,
            kind=kind,
        )
        os.makedirs(out_dir, exist_ok=True)
        result = run_ensemble(spec, template=template)
        result.samples_csv(os.path.join(out_dir, "ensemble.csv"))
        result.summary_csv(os.path.join(out_dir, "summary.csv"))
        result.sidecar_json(os.path.join(out_dir, "ensemble.json"))
        _write_manifest(out_dir, "ensemble", template, {"spec": spec.to_dict()})
        click.echo(
            f"ensemble: retained {len(result.sample_indices)}/{samples}"
            f" (filtered {result.n_filtered}, failed {result.n_failed})"
        )

    _run(body)


if __name__ == "__main__":
    main()
