"""Least-squares fits of model curves to measured spectra and maxima traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .atom import AveragedStrengths, LevelScheme, file_checksum
from .exceptions import FitError
from .polariton import (
    MAXIMA_THRESHOLD,
    CavityDriveParams,
    coherent_photon_number,

    find_magic_frequency,
    map_2d,
)
from .spectrum import Spectrum

__all__ = [
    "FitResult",
    "NEFF_STARTS",
    "fit_prefactor",
    "fit_dip",
    "fit_maxima_trace",
    "write_fit_json",
]

#: multi-start grid for the effective atom number
NEFF_STARTS = (1.0e3, 1.0e4, 1.0e5)
_XTOL = 1e-8
_MAXITER = 10_000


@dataclass
class FitResult:
    parameters: dict[str, float]
    residual: float
    n_points: int
    converged: bool
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")

    def __getitem__(self, name: str) -> float:
        return self.parameters[name]


def _weights(sigma, n):
    if sigma is None:
        return np.ones(n), "unweighted"
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise FitError("sigma must be positive for inverse-variance weighting")
    return 1.0 / sigma ** 2, "inverse-variance"


def fit_prefactor(model: Spectrum, data: Spectrum, window: tuple[float, float] | None = None,
                  channel: str = "y") -> FitResult:
    """Best single scale factor ``a`` with ``data ~ a * model`` on one channel.

    Closed form ``a = sum(w d m) / sum(w m^2)``; the model is linearly
    interpolated onto the data points inside ``window``. Calibrate on one
    channel and window (e.g. the far-red y channel) and apply the result to
    both channels with :meth:`Spectrum.scaled`.
    """
    lo, hi = window if window is not None else (-np.inf, np.inf)
    x = data.detuning
    sel = (x >= lo) & (x <= hi) & (x >= model.detuning[0]) & (x <= model.detuning[-1])
    if not np.any(sel):
        raise FitError("model and data do not overlap inside the fit window")
    d = data.channel(channel)[sel]
    m = np.interp(x[sel], model.detuning, model.channel(channel))
    sig = data.sigma(channel)
    w, weighting = _weights(None if sig is None else sig[sel], d.size)
    mm = float(np.sum(w * m * m))
    if mm == 0:
        raise FitError("model is identically zero inside the fit window")
    a = float(np.sum(w * d * m)) / mm
    resid = float(np.sum(w * (d - a * m) ** 2))
    if sig is not None:
        stderr = float(np.sqrt(1.0 / mm))
    else:
        dof = max(d.size - 1, 1)
        stderr = float(np.sqrt(resid / dof / mm))
    return FitResult(
        {"prefactor": a},
        resid,
        int(d.size),
        True,
        {"fit": "prefactor", "channel": channel, "window": [float(lo), float(hi)],
         "weighting": weighting, "prefactor_stderr": stderr},
    )


def _profiled(d, w, m):
    mm = float(np.sum(w * m * m))
    if not np.isfinite(mm) or mm == 0:
        return 0.0, float(np.sum(w * d * d))
    a = float(np.sum(w * d * m)) / mm
    return a, float(np.sum(w * (d - a * m) ** 2))


def fit_dip(data: Spectrum, fixed: CavityDriveParams, strengths: AveragedStrengths, scheme: LevelScheme,
            bounds: dict | None = None, starts=NEFF_STARTS, channel: str = "y") -> FitResult:
    """Fit ``prefactor * |a_y|^2(w - freq_offset; n_eff)`` to a measured dip.

    ``fixed`` supplies kappa, g and delta_c; its n_eff, eta and spatial
    factor are ignored (they are absorbed in ``n_eff`` and ``prefactor``).
    The linear prefactor is eliminated in closed form; ``(log n_eff,
    freq_offset)`` are searched with bounded Nelder-Mead from each entry of
    ``starts``. The offset start aligns the model minimum with the lowest
    data point. Non-convergence is reported via ``converged``, never raised.
    """
    bounds = dict(bounds or {})
    n_lo, n_hi = bounds.get("n_eff", (1.0e2, 1.0e7))
    o_lo, o_hi = bounds.get("freq_offset_mhz", (-15.0, 15.0))
    if not 0 < n_lo < n_hi:
        raise FitError("n_eff bounds must be positive and increasing")
    x = data.detuning
    d = data.channel(channel)
    w, weighting = _weights(data.sigma(channel), d.size)
    norm = float(np.sum(w * d * d)) or 1.0
    base = fixed.replace(eta=1.0, spatial_factor=1.0)
    mf = find_magic_frequency(strengths, scheme)
    offset0 = float(np.clip(x[np.argmin(d)] - mf.pol_min, o_lo, o_hi))

    def model(theta):
        n = float(np.exp(theta[0]))
        return coherent_photon_number(x, base.replace(n_eff=n), strengths, scheme, freq_offset=theta[1])

    def objective(theta):
        return _profiled(d, w, model(theta))[1] / norm

    best = None
    for start in sorted(starts):
        theta0 = np.array([np.log(np.clip(start, n_lo, n_hi)), offset0])
        res = optimize.minimize(
            objective, theta0, method="Nelder-Mead",
            bounds=[(np.log(n_lo), np.log(n_hi)), (o_lo, o_hi)],
            options={"xatol": _XTOL, "fatol": 1e-15, "maxiter": _MAXITER, "maxfev": 2 * _MAXITER},
        )
        cand = (float(res.fun), float(np.exp(res.x[0])), res)
        if best is None or cand[0] < best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            best = cand
    res = best[2]
    a, resid = _profiled(d, w, model(res.x))
    return FitResult(
        {"prefactor": a, "n_eff": float(np.exp(res.x[0])), "freq_offset_mhz": float(res.x[1])},
        resid,
        int(d.size),
        bool(res.success),
        {"fit": "dip", "channel": channel, "weighting": weighting, "starts": list(starts),
         "iterations": int(res.nit), "kappa": fixed.kappa, "g": fixed.g, "delta_c": fixed.delta_c},
    )


def fit_maxima_trace(drive, cavity_at_max, defined, fixed: CavityDriveParams, strengths: AveragedStrengths,
                     scheme: LevelScheme, bounds: tuple[float, float] = (1.0e2, 1.0e7),
                     freq_offset: float = 0.0, starts=NEFF_STARTS, cavity_step: float = 0.5,
                     margin: float = 40.0, threshold: float = MAXIMA_THRESHOLD) -> FitResult:
    """Fit ``n_eff`` to a measured maxima trace ``cavity_at_max(drive)``.

    The model trace is built exactly like the measured one (see
    :func:`map_2d`) on the full ``drive`` grid, so medians and the
    definedness rule match. Residuals are taken at drive points defined in
    the data; a point the model leaves undefined costs ``margin`` MHz.
    ``log n_eff`` is scanned on a coarse grid that includes ``starts`` and the
    best cell is polished with a bounded Brent search.
    """
    drive = np.asarray(drive, dtype=float)
    cav = np.asarray(cavity_at_max, dtype=float)
    defined = np.asarray(defined, dtype=bool)
    if not (drive.shape == cav.shape == defined.shape):
        raise FitError("drive, cavity_at_max and defined must have the same length")
    sel = defined & np.isfinite(cav)
    if sel.sum() < 5:
        raise FitError(f"need at least 5 defined maxima, got {int(sel.sum())}")
    n_lo, n_hi = bounds
    if not 0 < n_lo < n_hi:
        raise FitError("n_eff bounds must be positive and increasing")
    target = cav[sel]
    cav_grid = np.arange(target.min() - margin, target.max() + margin + cavity_step, cavity_step)

    def residuals(log_n):
        params = fixed.replace(n_eff=float(np.exp(log_n)))
        pm = map_2d(drive, cav_grid, params, strengths, scheme, freq_offset=freq_offset, threshold=threshold)
        model = pm.trace_cavity[sel]
        return np.where(np.isfinite(model), model - target, margin)

    def objective(log_n):
        r = residuals(log_n)
        return float(np.sum(r * r))

    lo, hi = np.log(n_lo), np.log(n_hi)
    scan = np.union1d(np.linspace(lo, hi, 41), np.log(np.clip(starts, n_lo, n_hi)))
    values = np.array([objective(t) for t in scan])
    k = int(np.argmin(values))
    a, b = scan[max(k - 1, 0)], scan[min(k + 1, scan.size - 1)]
    res = optimize.minimize_scalar(objective, bounds=(a, b), method="bounded",
                                   options={"xatol": _XTOL, "maxiter": 500})
    log_n, resid = (float(res.x), float(res.fun)) if res.fun <= values[k] else (float(scan[k]), float(values[k]))
    return FitResult(
        {"n_eff": float(np.exp(log_n))},
        resid,
        int(sel.sum()),
        bool(res.success),
        {"fit": "trace", "weighting": "unweighted", "starts": list(starts), "freq_offset": freq_offset,
         "kappa": fixed.kappa, "g": fixed.g, "evaluations": int(scan.size + res.nfev)},
    )


def write_fit_json(result: FitResult, path, inputs: dict | None = None) -> Path:
    """Flat JSON: parameter values, residual, convergence and input checksums."""
    doc = {"fit": result.metadata.get("fit", "")}
    doc.update({k: float(v) for k, v in result.parameters.items()})
    doc["residual"] = float(result.residual)
    doc["n_points"] = int(result.n_points)
    doc["converged"] = bool(result.converged)
    doc["weighting"] = result.metadata.get("weighting", "")
    for name, p in (inputs or {}).items():
        doc[f"sha256_{name}"] = file_checksum(p)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path
