"""Command-line front end.

Every subcommand writes its tables into ``--out-dir`` together with a
``<subcommand>.manifest.json`` that records the resolved parameters, the
level-scheme checksum, the seed, the package version and checksums of every
file written. Frequencies are MHz detunings from the reference transition;
``kappa`` and ``gamma`` are half widths (HWHM) and the factor 2 pi is dropped
throughout, so ``kappa = 2 pi x 4 MHz`` is entered as ``--kappa 4``.

Errors are reported on stderr as one line of JSON and give a nonzero exit
code: 2 usage, 1 bad input, 3 no magic-frequency root, 4 fit did not
converge.
"""
from __future__ import annotations

import datetime as _dt
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, kernels
from .angular import coupling_table
from .atom import ZeemanDistribution, default_levels_path, file_checksum, load_level_scheme, zeeman_average
from .ensemble import (
    RNG_ALGORITHM,
    UniformBox,
    effective_atom_number,
    read_cloud_csv,
    sample_cloud,
    spatial_factor,
    write_cloud_csv,
)
from .exceptions import CavmagicError, NoRootError
from .fitting import fit_dip, fit_maxima_trace, fit_prefactor, write_fit_json
from .polariton import (
    MAXIMA_THRESHOLD,
    CavityDriveParams,
    coherent_photon_number,
    dip_half_width,
    find_magic_frequency,
    map_2d,
    plateau_level,
    read_trace_csv,
    undefined_band,
    write_map_csv,
    write_trace_csv,
)
from .scattering import DriveParams, averaged_spectrum
from .spectrum import Spectrum, read_spectrum_csv, write_spectrum_csv

EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_NO_ROOT = 3
EXIT_NOT_CONVERGED = 4


class RunFailed(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    if not start < stop:
        raise click.UsageError(f"--from ({start}) must be below --to ({stop})")
    if not step > 0:
        raise click.UsageError("--step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _uniform_grid(start: float, step: float, n: int, name: str) -> np.ndarray:
    if n < 1 or not step > 0:
        raise click.UsageError(f"{name} grid needs a positive step and at least one point")
    return start + step * np.arange(n)


class Run:
    """Collects outputs of one invocation and writes the manifest."""

    def __init__(self, subcommand: str, out_dir, levels, dist: str, seed: int | None, params: dict):
        self.subcommand = subcommand
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.levels_path = Path(levels) if levels else default_levels_path()
        self.scheme = load_level_scheme(self.levels_path)
        self.dist_text = dist
        self.seed = seed
        self.params = params
        self.outputs: dict[str, str] = {}

    def strengths(self):
        table = coupling_table(self.scheme)
        dist = ZeemanDistribution.parse(self.dist_text, self.scheme.ground_F)
        return table, dist, zeeman_average(table, dist)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def written(self, path: Path) -> Path:
        self.outputs[path.name] = file_checksum(path)
        return path

    def write_json(self, name: str, doc: dict) -> Path:
        path = self.path(name)
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return self.written(path)

    def finish(self) -> Path:
        manifest = {
            "subcommand": self.subcommand,
            "params": self.params,
            "levels_path": str(self.levels_path),
            "levels_sha256": self.scheme.checksum,
            "distribution": self.dist_text,
            "seed": self.seed,
            "version": __version__,
            "backend": kernels.BACKEND,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "argv": _invocation_args(),
            "outputs": self.outputs,
        }
        path = self.path(f"{self.subcommand.replace(' ', '_')}.manifest.json")
        path.write_text(json.dumps(manifest, indent=2) + "\n")
        return path


def _invocation_args() -> list[str]:
    ctx = click.get_current_context(silent=True)
    obj = ctx.find_root().obj if ctx is not None else None
    return list(obj["argv"]) if isinstance(obj, dict) and "argv" in obj else sys.argv[1:]


def common_options(func):
    func = click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True,
                        help="Directory for all outputs.")(func)
    func = click.option("--seed", type=int, default=None, help="RNG seed (recorded in the manifest).")(func)
    func = click.option("--dist", default="uniform", show_default=True,
                        help="Ground Zeeman populations: 'uniform' or 'm=2:0.5,m=-2:0.5'.")(func)
    func = click.option("--levels", type=click.Path(dir_okay=False), default=None,
                        help="Level-scheme YAML (default: bundled 87Rb D2 data).")(func)
    return func


def cavity_options(func):
    func = click.option("--delta-c", type=float, default=0.0, show_default=True, help="Drive-cavity detuning (MHz).")(func)
    func = click.option("--g", "g", type=float, default=0.33, show_default=True, help="Single-atom coupling (MHz).")(func)
    func = click.option("--kappa", type=float, default=4.0, show_default=True, help="Cavity HWHM (MHz).")(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="cavmagic")
def cli():
    """Scattering spectra, magic frequencies and polariton maps of a driven atom-cavity system."""


@cli.command()
@click.option("--from", "start", type=float, default=-700.0, show_default=True)
@click.option("--to", "stop", type=float, default=100.0, show_default=True)
@click.option("--step", type=float, default=1.0, show_default=True)
@click.option("--prefactor", type=float, default=1.0, show_default=True)
@click.option("--eta-plus", type=float, default=1.0, show_default=True)
@click.option("--eta-minus", type=float, default=1.0, show_default=True)
@common_options
def spectrum(start, stop, step, prefactor, eta_plus, eta_minus, levels, dist, seed, out_dir):
    """Averaged single-atom scattering rates into both cavity polarizations."""
    grid = _grid(start, stop, step)
    run = Run("spectrum", out_dir, levels, dist, seed,
              {"from": start, "to": stop, "step": step, "prefactor": prefactor,
               "eta_plus": eta_plus, "eta_minus": eta_minus})
    table, zdist, _ = run.strengths()
    spec = averaged_spectrum(zdist, grid, run.scheme, table, DriveParams(eta_plus, eta_minus, prefactor))
    run.written(write_spectrum_csv(spec, run.path("spectrum.csv")))
    run.finish()


def _magic(run, params):
    _, _, strengths = run.strengths()
    try:
        return strengths, find_magic_frequency(strengths, run.scheme, params)
    except NoRootError as exc:
        raise RunFailed("NoRootError", str(exc), EXIT_NO_ROOT) from exc


@cli.command()
@cavity_options
@click.option("--neff", type=float, default=6.0e4, show_default=True, help="Effective atom number.")
@common_options
def magic(kappa, g, delta_c, neff, levels, dist, seed, out_dir):
    """Magic frequency, slope p1, kappa_eff and the |P| minimum (JSON)."""
    params = CavityDriveParams(kappa=kappa, g=g, delta_c=delta_c, n_eff=neff)
    run = Run("magic", out_dir, levels, dist, seed, {"kappa": kappa, "g": g, "delta_c": delta_c, "neff": neff})
    _, mf = _magic(run, params)
    doc = mf.as_dict()
    run.write_json("magic.json", doc)
    run.finish()
    click.echo(json.dumps(doc))


@cli.command()
@cavity_options
@click.option("--neff", type=float, default=6.0e4, show_default=True)
@click.option("--eta", type=float, default=1.0, show_default=True)
@click.option("--spatial-factor", type=float, default=1.0, show_default=True)
@click.option("--offset", type=float, default=0.0, show_default=True, help="Rigid shift of the model (MHz).")
@click.option("--from", "start", type=float, default=-260.0, show_default=True)
@click.option("--to", "stop", type=float, default=-120.0, show_default=True)
@click.option("--step", type=float, default=0.25, show_default=True)
@common_options
def dip(kappa, g, delta_c, neff, eta, spatial_factor, offset, start, stop, step, levels, dist, seed, out_dir):
    """Coherent y-mode photon number across the dip (spectrum CSV, rate_z = 0)."""
    grid = _grid(start, stop, step)
    params = CavityDriveParams(kappa=kappa, g=g, delta_c=delta_c, n_eff=neff, eta=eta, spatial_factor=spatial_factor)
    run = Run("dip", out_dir, levels, dist, seed,
              {"kappa": kappa, "g": g, "delta_c": delta_c, "neff": neff, "eta": eta,
               "spatial_factor": spatial_factor, "offset": offset, "from": start, "to": stop, "step": step})
    strengths, mf = _magic(run, params)
    y = coherent_photon_number(grid, params, strengths, run.scheme, freq_offset=offset)
    spec = Spectrum(grid, y, np.zeros_like(y), metadata={"model": "collective"})
    run.written(write_spectrum_csv(spec, run.path("dip.csv")))
    doc = mf.as_dict()
    doc["offset"] = offset
    doc["plateau"] = plateau_level(params)
    if delta_c == 0.0 and neff > 0:
        left, right = dip_half_width(params, strengths, run.scheme, mf)
        doc["half_depth_width"] = right - left
    run.write_json("dip.json", doc)
    run.finish()


@cli.command("map")
@cavity_options
@click.option("--neff", type=float, default=3.0e4, show_default=True)
@click.option("--offset", type=float, default=0.0, show_default=True)
@click.option("--drive-from", type=float, default=-285.0, show_default=True)
@click.option("--drive-step", type=float, default=0.5, show_default=True)
@click.option("--drive-n", type=int, default=400, show_default=True)
@click.option("--cavity-from", type=float, default=-285.0, show_default=True)
@click.option("--cavity-step", type=float, default=1.0, show_default=True)
@click.option("--cavity-n", type=int, default=200, show_default=True)
@click.option("--threshold", type=float, default=MAXIMA_THRESHOLD, show_default=True,
              help="(peak - median)/median below which a maximum is undefined.")
@common_options
def map_cmd(kappa, g, delta_c, neff, offset, drive_from, drive_step, drive_n, cavity_from, cavity_step,
            cavity_n, threshold, levels, dist, seed, out_dir):
    """Photon number over drive x cavity frequency plus the maxima trace."""
    drive = _uniform_grid(drive_from, drive_step, drive_n, "drive")
    cavity = _uniform_grid(cavity_from, cavity_step, cavity_n, "cavity")
    params = CavityDriveParams(kappa=kappa, g=g, n_eff=neff)
    run = Run("map", out_dir, levels, dist, seed,
              {"kappa": kappa, "g": g, "neff": neff, "offset": offset, "drive_from": drive_from,
               "drive_step": drive_step, "drive_n": drive_n, "cavity_from": cavity_from,
               "cavity_step": cavity_step, "cavity_n": cavity_n, "threshold": threshold})
    strengths, mf = _magic(run, params)
    pmap = map_2d(drive, cavity, params, strengths, run.scheme, freq_offset=offset, threshold=threshold)
    run.written(write_map_csv(pmap, run.path("map.csv")))
    run.written(write_trace_csv(pmap, run.path("trace.csv")))
    band = undefined_band(pmap, mf.omega_star + offset)
    run.write_json("map.json", {"omega_star": mf.omega_star, "offset": offset,
                                "undefined_band": list(band) if band else None})
    run.finish()


@cli.group()
def fit():
    """Fit model curves to measured data."""


def _check_converged(result):
    if not result.converged:
        raise RunFailed("FitNotConverged", f"{result.metadata.get('fit')} fit did not converge", EXIT_NOT_CONVERGED)


@fit.command("prefactor")
@click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True)
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--window", nargs=2, type=float, default=None, help="Detuning range LO HI (MHz).")
@click.option("--channel", type=click.Choice(["y", "z"]), default="y", show_default=True)
@common_options
def fit_prefactor_cmd(model_path, data_path, window, channel, levels, dist, seed, out_dir):
    """Single multiplicative factor between a model and a measured spectrum."""
    run = Run("fit prefactor", out_dir, levels, dist, seed,
              {"model": model_path, "data": data_path, "window": list(window) if window else None,
               "channel": channel})
    result = fit_prefactor(read_spectrum_csv(model_path), read_spectrum_csv(data_path), window, channel)
    run.written(write_fit_json(result, run.path("fit_prefactor.json"), {"model": model_path, "data": data_path}))
    run.finish()
    _check_converged(result)


@fit.command("dip")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@cavity_options
@click.option("--neff-bounds", nargs=2, type=float, default=(1.0e2, 1.0e7), show_default=True)
@click.option("--offset-bound", type=float, default=15.0, show_default=True, help="|offset| limit (MHz).")
@click.option("--channel", type=click.Choice(["y", "z"]), default="y", show_default=True)
@common_options
def fit_dip_cmd(data_path, kappa, g, delta_c, neff_bounds, offset_bound, channel, levels, dist, seed, out_dir):
    """Prefactor, effective atom number and frequency offset of a measured dip."""
    run = Run("fit dip", out_dir, levels, dist, seed,
              {"data": data_path, "kappa": kappa, "g": g, "delta_c": delta_c,
               "neff_bounds": list(neff_bounds), "offset_bound": offset_bound, "channel": channel})
    _, _, strengths = run.strengths()
    fixed = CavityDriveParams(kappa=kappa, g=g, delta_c=delta_c)
    bounds = {"n_eff": tuple(neff_bounds), "freq_offset_mhz": (-offset_bound, offset_bound)}
    result = fit_dip(read_spectrum_csv(data_path), fixed, strengths, run.scheme, bounds, channel=channel)
    run.written(write_fit_json(result, run.path("fit_dip.json"), {"data": data_path}))
    run.finish()
    _check_converged(result)


@fit.command("trace")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), required=True)
@cavity_options
@click.option("--offset", type=float, default=0.0, show_default=True)
@click.option("--neff-bounds", nargs=2, type=float, default=(1.0e2, 1.0e7), show_default=True)
@common_options
def fit_trace_cmd(trace_path, kappa, g, delta_c, offset, neff_bounds, levels, dist, seed, out_dir):
    """Effective atom number from a measured maxima trace."""
    run = Run("fit trace", out_dir, levels, dist, seed,
              {"trace": trace_path, "kappa": kappa, "g": g, "offset": offset, "neff_bounds": list(neff_bounds)})
    _, _, strengths = run.strengths()
    drive, cav, ok = read_trace_csv(trace_path)
    fixed = CavityDriveParams(kappa=kappa, g=g, delta_c=delta_c)
    result = fit_maxima_trace(drive, cav, ok, fixed, strengths, run.scheme, tuple(neff_bounds), freq_offset=offset)
    run.written(write_fit_json(result, run.path("fit_trace.json"), {"trace": trace_path}))
    run.finish()
    _check_converged(result)


@cli.command()
@click.option("--n", "n_atoms", type=int, default=None, help="Number of atoms to sample.")
@click.option("--cloud", "cloud_path", type=click.Path(dir_okay=False), default=None,
              help="Evaluate an existing phase_x_rad,phase_z_rad CSV instead of sampling.")
@click.option("--extent-x", type=float, default=100.0, show_default=True, help="Box size (wavelengths).")
@click.option("--extent-z", type=float, default=100.0, show_default=True, help="Box size (wavelengths).")
@common_options
def ensemble(n_atoms, cloud_path, extent_x, extent_z, levels, dist, seed, out_dir):
    """Sample a cloud and report N_eff and the spatial factor."""
    if (n_atoms is None) == (cloud_path is None):
        raise click.UsageError("give exactly one of --n or --cloud")
    seed = 0 if seed is None and cloud_path is None else seed
    run = Run("ensemble", out_dir, levels, dist, seed,
              {"n": n_atoms, "cloud": cloud_path, "extent_x": extent_x, "extent_z": extent_z,
               "rng": RNG_ALGORITHM})
    if cloud_path is not None:
        cloud = read_cloud_csv(cloud_path)
    else:
        cloud = sample_cloud(n_atoms, UniformBox(extent_x, extent_z), seed)
        run.written(write_cloud_csv(cloud, run.path("cloud.csv")))
    doc = {"n": len(cloud), "n_eff": effective_atom_number(cloud), "spatial_factor": spatial_factor(cloud),
           "seed": cloud.seed, "rng": cloud.rng, "geometry": cloud.geometry}
    run.write_json("ensemble.json", doc)
    run.finish()


def _fail(kind: str, message: str, code: int) -> int:
    click.echo(json.dumps({"error": kind, "message": message, "exit_code": code}), err=True)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=argv, prog_name="cavmagic", standalone_mode=False, obj={"argv": argv})
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return _fail("Aborted", "aborted", EXIT_INPUT)
    except click.ClickException as exc:
        code = exc.exit_code if exc.exit_code else EXIT_USAGE
        return _fail(type(exc).__name__, exc.format_message(), code)
    except RunFailed as exc:
        return _fail(exc.kind, str(exc), exc.code)
    except (CavmagicError, ValueError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INPUT)
    return 0


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
