"""Single-atom two-photon scattering into the two cavity polarizations.

A drive photon (sigma+ or sigma-, amplitudes ``eta_plus``/``eta_minus``)
excites ``|F, m> -> |F', m +- 1>``; the cavity photon is emitted into the
z-polarized mode (pi coupling, ``m' -> m'``) or the y-polarized mode
(sigma couplings ``m' -> m' -+ 1`` with weight ``i/sqrt(2)``). The amplitude
for ending in ``|F, m + dm>`` sums over every excited ``F', m'``::

    S = sum  <m+dm; 1|H_cav|F' m'> <F' m'|H_drive|m> / (w - w_F' + i gamma_F')

Atomic positions, the cavity mode function and ``g`` are absorbed into the
overall ``prefactor``. Rates are ``W = sum_dm |S|^2`` and are averaged over
the ground-state populations incoherently.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .angular import TransitionTable, coupling_table
from .atom import LevelScheme, ZeemanDistribution
from .exceptions import DataFormatError
from .spectrum import Spectrum

__all__ = [
    "DriveParams",
    "DELTA_M",
    "allowed_channels",
    "path_coefficients",
    "amplitude",
    "rate",
    "averaged_spectrum",
]

DELTA_M = (-2, -1, 0, 1, 2)
POLARIZATIONS = ("y", "z")
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class DriveParams:
    eta_plus: float = 1.0
    eta_minus: float = 1.0
    prefactor: float = 1.0

    def __post_init__(self):
        if self.eta_plus < 0 or self.eta_minus < 0:
            raise ValueError("drive amplitudes must be non-negative")


def allowed_channels(pol: str) -> tuple[int, ...]:
    """Sublevel changes that can populate a polarization."""
    return (-1, 1) if pol == "z" else (-2, 0, 2)


def _drive_element(table, fp, m, mp, drive: DriveParams) -> complex:
    q = mp - m
    if q == 1:
        return -1j * drive.eta_plus * table.coefficient(fp, m, mp)
    if q == -1:
        return -1j * drive.eta_minus * table.coefficient(fp, m, mp)
    return 0.0


def _cavity_element(table, fp, m_final, mp, pol: str) -> complex:
    if pol == "z":
        return 1j * table.coefficient(fp, m_final, mp) if mp == m_final else 0.0
    if abs(mp - m_final) == 1:
        return 1j * (1j * _INV_SQRT2) * table.coefficient(fp, m_final, mp)
    return 0.0


def path_coefficients(m, delta_m: int, pol: str, table: TransitionTable,
                      drive: DriveParams | None = None) -> np.ndarray:
    """Numerators ``K[F']`` of the amplitude, one per excited level of ``table``."""
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be 'y' or 'z', got {pol!r}")
    drive = drive or DriveParams()
    m = Fraction(m)
    F = table.ground_F
    m_final = m + delta_m
    out = np.zeros(len(table.excited_F), dtype=complex)
    if abs(m) > F or abs(m_final) > F:
        return out
    for k, fp in enumerate(table.excited_F):
        acc = 0.0j
        for q in (-1, 1):
            mp = m + q
            if abs(mp) > fp:
                continue
            acc += _cavity_element(table, fp, m_final, mp, pol) * _drive_element(table, fp, m, mp, drive)
        out[k] = acc
    return out


def _resolvent(detuning, scheme: LevelScheme):
    w = np.asarray(detuning, dtype=float)
    return [1.0 / (w - lvl.offset_mhz + 1j * lvl.gamma_mhz) for lvl in scheme.levels]


def _check_alignment(scheme: LevelScheme, table: TransitionTable):
    if tuple(table.excited_F) != scheme.excited_F or table.ground_F != scheme.ground_F:
        raise ValueError("transition table does not belong to this level scheme")


def _evaluate(coeffs: np.ndarray, resolvent) -> np.ndarray:
    # explicit level-by-level accumulation keeps every grid point bit-identical
    # no matter how the grid is partitioned
    acc = coeffs[0] * resolvent[0]
    for k in range(1, len(resolvent)):
        acc = acc + coeffs[k] * resolvent[k]
    return acc


def amplitude(m, delta_m: int, pol: str, detuning, scheme: LevelScheme,
              table: TransitionTable | None = None, drive: DriveParams | None = None):
    """Scattering amplitude ``S^{dm}_{m; pol}`` at one or many detunings (MHz).

    Channels forbidden by the coupling structure (e.g. ``dm = 0`` into the
    z mode) and out-of-range final states return an exact zero.
    """
    table = table or coupling_table(scheme)
    _check_alignment(scheme, table)
    coeffs = path_coefficients(m, delta_m, pol, table, drive)
    res = _evaluate(coeffs, _resolvent(detuning, scheme))
    return res if np.ndim(res) else complex(res)


def rate(m, pol: str, detuning, scheme: LevelScheme,
         table: TransitionTable | None = None, drive: DriveParams | None = None):
    """``W_{m; pol} = sum over dm of |S|^2`` (arbitrary units, prefactor not applied)."""
    table = table or coupling_table(scheme)
    _check_alignment(scheme, table)
    res = _resolvent(detuning, scheme)
    total = 0.0
    for dm in DELTA_M:
        coeffs = path_coefficients(m, dm, pol, table, drive)
        if not np.any(coeffs):
            continue
        s = _evaluate(coeffs, res)
        total = total + (s.real * s.real + s.imag * s.imag)
    if np.ndim(total) == 0 and np.ndim(detuning):
        total = np.zeros(np.shape(detuning))
    return total if np.ndim(total) else float(total)


def averaged_spectrum(dist: ZeemanDistribution, grid, scheme: LevelScheme,
                      table: TransitionTable | None = None,
                      drive: DriveParams | None = None) -> Spectrum:
    """Population-averaged rates ``sum_m p_m W_{m; y(z)}`` times ``drive.prefactor``.

    Different atoms add as rates (incoherent sum), including the Rayleigh
    part.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DataFormatError("detuning grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0):
        raise DataFormatError("detuning grid must be strictly increasing")
    table = table or coupling_table(scheme)
    _check_alignment(scheme, table)
    if dist.F != table.ground_F:
        raise ValueError(f"distribution is for F={dist.F}, scheme ground level is F={table.ground_F}")
    drive = drive or DriveParams()
    rates = {"y": np.zeros_like(grid), "z": np.zeros_like(grid)}
    for pol in POLARIZATIONS:
        for m, p in dist.populations.items():
            if p:
                rates[pol] = rates[pol] + p * rate(m, pol, grid, scheme, table, drive)
    meta = {
        "model": "perturbative",
        "distribution": repr(dist),
        "eta_plus": drive.eta_plus,
        "eta_minus": drive.eta_minus,
        "prefactor": drive.prefactor,
    }
    return Spectrum(grid, drive.prefactor * rates["y"], drive.prefactor * rates["z"], metadata=meta)
