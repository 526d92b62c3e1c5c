"""Atom positions and the geometric factors of a cloud inside the cavity.

Positions are stored directly as the two phases ``k_c x`` (cavity standing
wave) and ``k z`` (drive) in radians. Only these phases enter the model, so
a slight mismatch of the two wavelengths plays no role.

    N_eff = sum_a cos^2(k_c x_a)
    S     = |sum_a cos(k_c x_a) cos(k z_a)|^2
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .exceptions import DataFormatError

__all__ = [
    "RNG_ALGORITHM",
    "UniformBox",
    "ExplicitPhases",
    "AtomCloud",
    "sample_cloud",
    "effective_atom_number",
    "spatial_factor",
    "ensemble_spatial_mean",
    "write_cloud_csv",
    "read_cloud_csv",
]

RNG_ALGORITHM = "numpy.random.Philox"
CSV_COLUMNS = ["phase_x_rad", "phase_z_rad"]
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class UniformBox:
    """Box of ``extent_x`` by ``extent_z`` wavelengths, corner at the origin.

    For boxes spanning many wavelengths both phases are effectively uniform
    on ``[0, 2 pi)``.
    """

    extent_x: float = 100.0
    extent_z: float = 100.0

    def __post_init__(self):
        if not (self.extent_x > 0 and self.extent_z > 0):
            raise ValueError("box extents must be positive")

    def describe(self) -> dict:
        return {"kind": "uniform_box", "extent_x_wavelengths": self.extent_x,
                "extent_z_wavelengths": self.extent_z}


@dataclass(frozen=True)
class ExplicitPhases:
    phase_x: tuple[float, ...]
    phase_z: tuple[float, ...]

    def describe(self) -> dict:
        return {"kind": "explicit", "n": len(self.phase_x)}


@dataclass
class AtomCloud:
    phase_x: np.ndarray
    phase_z: np.ndarray
    seed: int | None = None
    geometry: dict = field(default_factory=dict)
    rng: str = RNG_ALGORITHM

    def __post_init__(self):
        self.phase_x = np.ascontiguousarray(self.phase_x, dtype=np.float64).ravel()
        self.phase_z = np.ascontiguousarray(self.phase_z, dtype=np.float64).ravel()
        if self.phase_x.size == 0:
            raise ValueError("an atom cloud needs at least one atom")
        if self.phase_x.shape != self.phase_z.shape:
            raise ValueError("phase_x and phase_z must have the same length")
        if not (np.all(np.isfinite(self.phase_x)) and np.all(np.isfinite(self.phase_z))):
            raise ValueError("atom phases must be finite")

    def __len__(self) -> int:
        return self.phase_x.size

    def metadata(self) -> dict:
        return {"n": len(self), "seed": self.seed, "rng": self.rng, "geometry": self.geometry}


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def sample_cloud(n: int, geometry=None, seed: int = 0) -> AtomCloud:
    """Draw ``n`` atoms; deterministic for a given ``(n, geometry, seed)``.

    ``geometry`` is a :class:`UniformBox` (default) or
    :class:`ExplicitPhases`; for explicit phases ``n`` must match and no
    random numbers are drawn.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"atom number must be a positive integer, got {n!r}")
    n = int(n)
    geometry = UniformBox() if geometry is None else geometry
    if isinstance(geometry, ExplicitPhases):
        if len(geometry.phase_x) != n:
            raise ValueError(f"explicit geometry has {len(geometry.phase_x)} atoms, n={n}")
        return AtomCloud(np.array(geometry.phase_x), np.array(geometry.phase_z), seed, geometry.describe())
    if not isinstance(geometry, UniformBox):
        raise TypeError(f"unsupported geometry {type(geometry).__name__}")
    rng = _generator(seed)
    x = rng.uniform(0.0, geometry.extent_x, n)
    z = rng.uniform(0.0, geometry.extent_z, n)
    # phase = 2 pi * (position in wavelengths), wrapped
    return AtomCloud(np.mod(TWO_PI * x, TWO_PI), np.mod(TWO_PI * z, TWO_PI), seed, geometry.describe())


def effective_atom_number(cloud: AtomCloud, chunk: int = 1 << 16) -> float:
    return kernels.cloud_sums(cloud.phase_x, cloud.phase_z, chunk)[0]


def spatial_factor(cloud: AtomCloud, chunk: int = 1 << 16) -> float:
    amp = kernels.cloud_sums(cloud.phase_x, cloud.phase_z, chunk)[1]
    return amp * amp


def ensemble_spatial_mean(n: int, seeds, geometry=None) -> tuple[float, float]:
    """Mean of the spatial factor over clouds drawn with ``seeds``, and its standard error."""
    values = np.array([spatial_factor(sample_cloud(n, geometry, s)) for s in seeds])
    if values.size < 2:
        return float(values.mean()), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def write_cloud_csv(cloud: AtomCloud, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for x, z in zip(cloud.phase_x, cloud.phase_z):
            writer.writerow([repr(float(x)), repr(float(z))])
    return path


def read_cloud_csv(path) -> AtomCloud:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = [h.strip() for h in next(reader, [])]
    if header != CSV_COLUMNS:
        raise DataFormatError(f"{path}: header must be {','.join(CSV_COLUMNS)}, got {','.join(header)}")
    xs, zs = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            xs.append(float(row[0]))
            zs.append(float(row[1]))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    try:
        return AtomCloud(np.array(xs), np.array(zs), None, {"kind": "explicit", "source": str(path)})
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
