"""Collective mean-field response of the driven ensemble in the y-polarized mode.

The atoms enter only through the Zeeman-averaged polarizability::

    P(w) = -i sum_F' <c_F'^2> / (w - w_F' + i gamma_F')

and the coherent intracavity photon number is::

    |a_y|^2 = eta^2 g^2 S |P|^2 / |i Delta_c - kappa + g^2 N_eff P|^2

All frequencies are MHz detunings from the reference transition. The
*magic frequency* is the zero of the gamma-free real function
``R(w) = sum <c^2>/(w - w_F')`` between the two upper levels; near it
``P ~ i p1 delta`` with ``p1 = -R'(w*) > 0``, which gives the quadratic dip
``delta^2 / (kappa_eff^2 + delta^2)`` with ``kappa_eff = kappa/(g^2 N_eff p1)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import optimize

from . import kernels
from .atom import AveragedStrengths, LevelScheme
from .exceptions import DataFormatError, NoRootError

__all__ = [
    "CavityDriveParams",
    "MagicFrequency",
    "PolaritonMap",
    "MAXIMA_THRESHOLD",
    "polarizability",
    "real_response",
    "coherent_photon_number",
    "plateau_level",
    "find_magic_frequency",
    "dip_shape_approx",
    "dip_half_width",
    "map_2d",
    "ridge_positions",
    "undefined_band",
    "write_map_csv",
    "write_trace_csv",
    "read_trace_csv",
]

#: ``(peak - median) / median`` below which a drive-scan maximum is "undefined".
MAXIMA_THRESHOLD = 0.5
TRACE_COLUMNS = ["drive_mhz", "cavity_at_max_mhz", "defined"]


@dataclass(frozen=True)
class CavityDriveParams:
    """Cavity and drive parameters; frequencies in MHz (HWHM for ``kappa``)."""

    kappa: float = 4.0
    g: float = 0.33
    delta_c: float = 0.0
    n_eff: float = 6.0e4
    eta: float = 1.0
    spatial_factor: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.n_eff < 0 or self.eta < 0 or self.spatial_factor < 0:
            raise ValueError("n_eff, eta and spatial_factor must be non-negative")

    @property
    def collective_coupling(self) -> float:
        """``g^2 N_eff`` in MHz^2."""
        return self.g * self.g * self.n_eff

    def replace(self, **changes) -> "CavityDriveParams":
        return replace(self, **changes)


def _strength_vector(strengths: AveragedStrengths, scheme: LevelScheme) -> np.ndarray:
    if tuple(strengths.levels) != scheme.excited_F:
        raise ValueError("averaged strengths do not match the level scheme")
    return np.asarray(strengths.values, dtype=float)


def polarizability(detuning, strengths: AveragedStrengths, scheme: LevelScheme):
    """Complex collective polarizability (1/MHz) at one or many detunings."""
    c2 = _strength_vector(strengths, scheme)
    w = np.asarray(detuning, dtype=float)
    acc = np.zeros(w.shape, dtype=complex)
    for k, lvl in enumerate(scheme.levels):
        acc = acc + c2[k] / (w - lvl.offset_mhz + 1j * lvl.gamma_mhz)
    out = -1j * acc
    return out if out.ndim else complex(out)


def real_response(detuning, strengths: AveragedStrengths, scheme: LevelScheme, derivative: int = 0):
    """Gamma-free ``R(w) = sum <c^2>/(w - w_F')`` or its first derivative."""
    c2 = _strength_vector(strengths, scheme)
    w = np.asarray(detuning, dtype=float)
    acc = np.zeros(w.shape)
    for k, lvl in enumerate(scheme.levels):
        d = w - lvl.offset_mhz
        acc = acc + (c2[k] / d if derivative == 0 else -c2[k] / (d * d))
    return acc if acc.ndim else float(acc)


def coherent_photon_number(detuning, params: CavityDriveParams, strengths: AveragedStrengths,
                           scheme: LevelScheme, freq_offset: float = 0.0):
    """``|a_y|^2`` at drive detuning(s); the atomic response is evaluated at
    ``detuning - freq_offset`` (a rigid shift of the model curve)."""
    w = np.asarray(detuning, dtype=float)
    p = polarizability(w - freq_offset, strengths, scheme)
    den = 1j * params.delta_c - params.kappa + params.collective_coupling * p
    num = params.eta ** 2 * params.g ** 2 * params.spatial_factor * np.abs(p) ** 2
    out = num / np.abs(den) ** 2
    return out if np.ndim(out) else float(out)


def plateau_level(params: CavityDriveParams) -> float:
    """Saturation value ``eta^2 g^2 S / (g^2 N_eff)^2`` the dip rises to for
    ``|delta| >> kappa_eff``."""
    if params.n_eff == 0:
        return float("inf")
    return params.eta ** 2 * params.g ** 2 * params.spatial_factor / params.collective_coupling ** 2


@dataclass(frozen=True)
class MagicFrequency:
    omega_star: float
    p1: float
    kappa_eff: float
    pol_min: float
    bracket: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "omega_star": self.omega_star,
            "p1": self.p1,
            "kappa_eff": self.kappa_eff,
            "pol_min": self.pol_min,
        }


def _default_bracket(strengths: AveragedStrengths, scheme: LevelScheme) -> tuple[float, float]:
    c2 = _strength_vector(strengths, scheme)
    active = [lvl for lvl, v in zip(scheme.levels, c2) if v > 0]
    ref = scheme.levels[scheme.reference_index]
    below = [lvl for lvl in active if lvl.offset_mhz < ref.offset_mhz]
    if len(active) < 2 or not below or ref not in active:
        raise NoRootError("need the reference level and a lower level with nonzero strength")
    return (below[-1].offset_mhz, ref.offset_mhz)


def find_magic_frequency(strengths: AveragedStrengths, scheme: LevelScheme,
                         params: CavityDriveParams | None = None,
                         bracket: tuple[float, float] | None = None,
                         xtol: float = 1e-6) -> MagicFrequency:
    """Zero of the gamma-free polarizability between the reference level and
    the next lower one, by bisection to ``xtol`` MHz."""
    lo, hi = bracket if bracket is not None else _default_bracket(strengths, scheme)
    if not hi > lo:
        raise NoRootError(f"empty bracket ({lo}, {hi})")
    eps = 1e-9 * (hi - lo)
    a, b = lo + eps, hi - eps
    fa, fb = real_response(a, strengths, scheme), real_response(b, strengths, scheme)
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        raise NoRootError(f"polarizability has no sign change in ({lo}, {hi})")
    root = optimize.bisect(lambda w: real_response(w, strengths, scheme), a, b, xtol=xtol, maxiter=200)
    p1 = -real_response(root, strengths, scheme, derivative=1)
    if params is not None and params.n_eff > 0:
        kappa_eff = params.kappa / (params.collective_coupling * p1)
    else:
        kappa_eff = float("inf")
    res = optimize.minimize_scalar(
        lambda w: abs(polarizability(w, strengths, scheme)),
        bounds=(max(a, root - 0.25 * (hi - lo)), min(b, root + 0.25 * (hi - lo))),
        method="bounded",
        options={"xatol": xtol},
    )
    return MagicFrequency(float(root), float(p1), float(kappa_eff), float(res.x), (lo, hi))


def dip_shape_approx(delta, mf: MagicFrequency):
    """Quadratic dip ``delta^2 / (kappa_eff^2 + delta^2)`` (plateau-normalized)."""
    d = np.asarray(delta, dtype=float)
    out = d * d / (mf.kappa_eff ** 2 + d * d)
    return out if out.ndim else float(out)


def dip_half_width(params: CavityDriveParams, strengths: AveragedStrengths, scheme: LevelScheme,
                   mf: MagicFrequency | None = None, max_span: float = 200.0) -> tuple[float, float]:
    """Full width of the region around ``w*`` below half depth.

    Half depth is the midpoint between the photon number at the minimum and
    the plateau. Returns ``(left_offset, right_offset)`` from ``w*``; the
    width is their difference.
    """
    mf = mf or find_magic_frequency(strengths, scheme, params)
    plateau = plateau_level(params)
    floor = coherent_photon_number(mf.pol_min, params, strengths, scheme)
    level = 0.5 * (floor + plateau)

    def f(w):
        return coherent_photon_number(w, params, strengths, scheme) - level

    lo, hi = mf.bracket
    edges = []
    for sign, limit in ((-1, lo), (1, hi)):
        reach = min(max_span, 0.95 * abs(limit - mf.pol_min))
        grid = mf.pol_min + sign * np.linspace(0.0, reach, 4001)
        vals = f(grid)
        above = np.nonzero(vals > 0)[0]
        if above.size == 0:
            raise NoRootError("dip never reaches half depth inside the bracket")
        k = above[0]
        edges.append(optimize.brentq(f, min(grid[k - 1], grid[k]), max(grid[k - 1], grid[k]), xtol=1e-9)
                     - mf.omega_star)
    return edges[0], edges[1]


def _check_grid(grid, name: str) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DataFormatError(f"{name} grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0):
        raise DataFormatError(f"{name} grid must be strictly increasing")
    return grid


@dataclass
class PolaritonMap:
    """Coherent photon number over (drive, cavity) and its maxima traces.

    ``intensity[i, j]`` is evaluated at drive ``drive[i]`` with cavity
    detuning ``drive[i] - cavity[j]``.

    ``column_peak`` is the cavity frequency maximizing each drive column.
    The ridge is the drive-scan maximum for each cavity frequency (the
    measured quantity): the interior local maximum along the drive axis
    nearest to the ``w = w_c`` diagonal, refined by a parabola through the
    three grid points. It is *defined* when ``(peak - median)/median`` of that
    cavity row reaches ``threshold``. ``trace_cavity``/``trace_defined``
    re-express the ridge per drive frequency by interpolating between
    neighbouring defined ridge points.
    """

    drive: np.ndarray
    cavity: np.ndarray
    intensity: np.ndarray
    column_peak: np.ndarray
    ridge_drive: np.ndarray
    ridge_metric: np.ndarray
    ridge_defined: np.ndarray
    trace_cavity: np.ndarray
    trace_defined: np.ndarray
    threshold: float = MAXIMA_THRESHOLD
    metadata: dict = field(default_factory=dict)


def _parabolic_refine(M, idx, drive):
    pos = np.full(idx.shape, np.nan)
    ok = idx > 0
    j = np.nonzero(ok)[0]
    i = idx[ok]
    y0, y1, y2 = M[i - 1, j], M[i, j], M[i + 1, j]
    denom = y0 - 2.0 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom < 0, 0.5 * (y0 - y2) / denom, 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    left, mid, right = drive[i - 1], drive[i], drive[i + 1]
    step = np.where(shift < 0, mid - left, right - mid)
    pos[ok] = mid + shift * step
    return pos


def _trace_from_ridge(drive, cavity, ridge_drive, ridge_defined, max_jump):
    n_d = drive.size
    trace = np.full(n_d, np.nan)
    best_dist = np.full(n_d, np.inf)
    for j in range(cavity.size - 1):
        if not (ridge_defined[j] and ridge_defined[j + 1]):
            continue
        a, b = ridge_drive[j], ridge_drive[j + 1]
        if abs(b - a) > max_jump:
            continue
        lo, hi = min(a, b), max(a, b)
        sel = np.nonzero((drive >= lo) & (drive <= hi))[0]
        if sel.size == 0:
            continue
        if hi > lo:
            frac = (drive[sel] - a) / (b - a)
            cav = cavity[j] + frac * (cavity[j + 1] - cavity[j])
        else:
            cav = np.full(sel.size, 0.5 * (cavity[j] + cavity[j + 1]))
        dist = np.abs(cav - drive[sel])
        better = dist < best_dist[sel]
        trace[sel[better]] = cav[better]
        best_dist[sel[better]] = dist[better]
    return trace, np.isfinite(trace)


def map_2d(drive_grid, cavity_grid, params: CavityDriveParams, strengths: AveragedStrengths,
           scheme: LevelScheme, freq_offset: float = 0.0,
           threshold: float = MAXIMA_THRESHOLD) -> PolaritonMap:
    """Photon number over drive x cavity frequencies with maxima traces.

    ``params.delta_c`` is ignored: the cavity detuning is set by the grids.
    ``freq_offset`` rigidly shifts the atomic response (see
    :func:`coherent_photon_number`).
    """
    drive = _check_grid(drive_grid, "drive")
    cavity = _check_grid(cavity_grid, "cavity")
    p = polarizability(drive - freq_offset, strengths, scheme)
    p = np.atleast_1d(p)
    scale = params.eta ** 2 * params.g ** 2 * params.spatial_factor
    M = kernels.photon_map(drive, cavity, p.real, p.imag, params.kappa, params.collective_coupling, scale)
    column_peak = cavity[np.argmax(M, axis=1)]
    medians = np.median(M, axis=0)
    idx, metric = kernels.ridge_scan(M, drive, cavity, medians)
    idx = np.asarray(idx, dtype=np.int64)
    metric = np.asarray(metric, dtype=float)
    ridge = _parabolic_refine(M, idx, drive)
    defined = (idx > 0) & (metric >= threshold)
    step_c = float(np.max(np.abs(np.diff(cavity)))) if cavity.size > 1 else 0.0
    step_d = float(np.max(np.abs(np.diff(drive)))) if drive.size > 1 else 0.0
    trace, trace_ok = _trace_from_ridge(drive, cavity, ridge, defined, 3.0 * step_c + step_d)
    meta = {
        "kappa": params.kappa,
        "g": params.g,
        "n_eff": params.n_eff,
        "freq_offset": freq_offset,
        "threshold": threshold,
        "backend": kernels.BACKEND,
    }
    return PolaritonMap(drive, cavity, M, column_peak, ridge, metric, defined, trace, trace_ok, threshold, meta)


def undefined_band(pmap: PolaritonMap, center: float) -> tuple[float, float] | None:
    """Drive interval of undefined maxima containing (or nearest to) ``center``.

    Returns the first and last drive values of the contiguous run of
    undefined trace points, or ``None`` when every point is defined.
    """
    undefined = ~pmap.trace_defined
    if not np.any(undefined):
        return None
    cand = np.nonzero(undefined)[0]
    start = cand[np.argmin(np.abs(pmap.drive[cand] - center))]
    lo = start
    while lo > 0 and undefined[lo - 1]:
        lo -= 1
    hi = start
    while hi < undefined.size - 1 and undefined[hi + 1]:
        hi += 1
    return float(pmap.drive[lo]), float(pmap.drive[hi])


def ridge_positions(cavity_values, params: CavityDriveParams, strengths: AveragedStrengths,
                    scheme: LevelScheme, drive_grid, freq_offset: float = 0.0,
                    threshold: float = MAXIMA_THRESHOLD):
    """Drive-scan maxima for explicit cavity frequencies.

    The grid maximum (same rule as :func:`map_2d`) is polished by a
    golden-section search on the analytic photon number between the two
    neighbouring grid points. Returns ``(drive_at_max, metric, defined)``;
    ``drive_at_max`` is NaN where the scan has no interior maximum.
    """
    cavity = np.atleast_1d(np.asarray(cavity_values, dtype=float))
    drive = _check_grid(drive_grid, "drive")
    p = np.atleast_1d(polarizability(drive - freq_offset, strengths, scheme))
    scale = params.eta ** 2 * params.g ** 2 * params.spatial_factor
    M = kernels.photon_map(drive, cavity, p.real, p.imag, params.kappa, params.collective_coupling, scale)
    medians = np.median(M, axis=0)
    idx, metric = kernels.ridge_scan(M, drive, cavity, medians)
    idx = np.asarray(idx, dtype=np.int64)
    metric = np.asarray(metric, dtype=float)
    out = np.full(cavity.size, np.nan)
    ok = idx > 0
    if np.any(ok):
        wc = cavity[ok]

        def f(w):
            pw = polarizability(w - freq_offset, strengths, scheme)
            den = 1j * (w - wc) - params.kappa + params.collective_coupling * pw
            return np.abs(pw) ** 2 / np.abs(den) ** 2

        out[ok] = _golden_max(f, drive[idx[ok] - 1], drive[idx[ok] + 1])
    defined = ok & (metric >= threshold)
    return out, metric, defined


_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a, b, tol: float = 1e-9, max_iter: int = 200):
    """Vectorized golden-section maximization of ``f`` on ``[a, b]``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.all(b - a < tol):
            break
        left = fc > fd
        # keep [a, d] where f(c) > f(d), else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - _INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + _INV_PHI * (b - a))
        c, d = new_c, new_d
        fc_new = np.where(left, f(c), fd)
        fd_new = np.where(left, fc, f(d))
        fc, fd = fc_new, fd_new
    return 0.5 * (a + b)


def write_map_csv(pmap: PolaritonMap, path) -> Path:
    """Matrix CSV: first row ``drive_mhz\\cavity_mhz`` then the cavity grid;
    each further row is a drive frequency followed by its photon numbers."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["drive_mhz\\cavity_mhz"] + [repr(float(c)) for c in pmap.cavity])
        for w, row in zip(pmap.drive, pmap.intensity):
            writer.writerow([repr(float(w))] + [repr(float(v)) for v in row])
    return path


def write_trace_csv(pmap: PolaritonMap, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for w, c, ok in zip(pmap.drive, pmap.trace_cavity, pmap.trace_defined):
            writer.writerow([repr(float(w)), repr(float(c)) if ok else "nan", int(bool(ok))])
    return path


def read_trace_csv(path):
    """Return ``(drive, cavity_at_max, defined)`` arrays from a maxima-trace CSV."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = [h.strip() for h in next(reader, [])]
    if header != TRACE_COLUMNS:
        raise DataFormatError(f"{path}: header must be {','.join(TRACE_COLUMNS)}, got {','.join(header)}")
    drive, cav, ok = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3 or row[2].strip() not in ("0", "1"):
            raise DataFormatError(f"{path}:{lineno}: expected drive,cavity,defined(0|1)")
        try:
            drive.append(float(row[0]))
            cav.append(float(row[1]))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        ok.append(row[2].strip() == "1")
    if not drive:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(drive), np.array(cav), np.array(ok, dtype=bool)
