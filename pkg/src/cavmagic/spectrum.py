"""Polarization-resolved spectra and their CSV representation.

CSV layout (one row per grid point, ``.`` decimal point)::

    detuning_mhz,rate_y,rate_z[,sigma_y,sigma_z]
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError

__all__ = ["Spectrum", "read_spectrum_csv", "write_spectrum_csv", "format_float"]

BASE_COLUMNS = ["detuning_mhz", "rate_y", "rate_z"]
SIGMA_COLUMNS = ["sigma_y", "sigma_z"]


def format_float(x: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(x))


@dataclass
class Spectrum:
    detuning: np.ndarray
    rate_y: np.ndarray
    rate_z: np.ndarray
    sigma_y: np.ndarray | None = None
    sigma_z: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detuning = np.asarray(self.detuning, dtype=float)
        self.rate_y = np.asarray(self.rate_y, dtype=float)
        self.rate_z = np.asarray(self.rate_z, dtype=float)
        n = self.detuning.size
        if n == 0:
            raise DataFormatError("spectrum is empty")
        if np.any(np.diff(self.detuning) <= 0):
            raise DataFormatError("detuning grid must be strictly increasing")
        for name in ("rate_y", "rate_z", "sigma_y", "sigma_z"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            setattr(self, name, arr)
            if arr.shape != (n,):
                raise DataFormatError(f"{name} has length {arr.size}, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise DataFormatError(f"{name} contains non-finite values")
            if np.any(arr < 0):
                raise DataFormatError(f"{name} contains negative values")
        if (self.sigma_y is None) != (self.sigma_z is None):
            raise DataFormatError("sigma_y and sigma_z must be given together")

    def __len__(self) -> int:
        return self.detuning.size

    def channel(self, pol: str) -> np.ndarray:
        if pol not in ("y", "z"):
            raise ValueError(f"polarization must be 'y' or 'z', got {pol!r}")
        return self.rate_y if pol == "y" else self.rate_z

    def sigma(self, pol: str) -> np.ndarray | None:
        return self.sigma_y if pol == "y" else self.sigma_z

    def scaled(self, factor: float) -> "Spectrum":
        return Spectrum(self.detuning, self.rate_y * factor, self.rate_z * factor,
                        None if self.sigma_y is None else self.sigma_y * abs(factor),
                        None if self.sigma_z is None else self.sigma_z * abs(factor),
                        dict(self.metadata))


def write_spectrum_csv(spec: Spectrum, path) -> Path:
    path = Path(path)
    with_sigma = spec.sigma_y is not None
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BASE_COLUMNS + (SIGMA_COLUMNS if with_sigma else []))
        for k in range(len(spec)):
            row = [spec.detuning[k], spec.rate_y[k], spec.rate_z[k]]
            if with_sigma:
                row += [spec.sigma_y[k], spec.sigma_z[k]]
            writer.writerow([format_float(v) for v in row])
    return path


def read_spectrum_csv(path) -> Spectrum:
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header not in (BASE_COLUMNS, BASE_COLUMNS + SIGMA_COLUMNS):
            raise DataFormatError(
                f"{path}: header must be {','.join(BASE_COLUMNS)}[,{','.join(SIGMA_COLUMNS)}], got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    data = np.array(rows)
    sig = (data[:, 3], data[:, 4]) if data.shape[1] == 5 else (None, None)
    return Spectrum(data[:, 0], data[:, 1], data[:, 2], *sig, metadata={"source": str(path)})
