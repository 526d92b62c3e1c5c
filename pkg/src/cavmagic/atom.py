"""Level schemes, Zeeman-sublevel populations and averaged coupling strengths."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .angular import HalfInteger, TransitionTable
from .exceptions import DistributionError, LevelSchemeError

__all__ = [
    "ExcitedLevel",
    "LevelScheme",
    "ZeemanDistribution",
    "AveragedStrengths",
    "default_levels_path",
    "load_level_scheme",
    "level_scheme_from_dict",
    "file_checksum",
    "zeeman_average",
    "AVERAGING_CONVENTIONS",
]

AVERAGING_CONVENTIONS = ("sigma", "pi", "total")
_NORM_TOL = 1e-12


def _half(value, what: str) -> Fraction:
    try:
        return HalfInteger.of(value).value
    except (ValueError, TypeError) as exc:
        raise LevelSchemeError(f"{what}: {value!r} is not an integer or half-integer") from exc


@dataclass(frozen=True)
class ExcitedLevel:
    label: str
    F: Fraction
    offset_mhz: float
    gamma_mhz: float


@dataclass(frozen=True)
class LevelScheme:
    """Ground level ``F`` plus excited hyperfine levels of one optical line.

    Offsets and linewidths are in MHz (HWHM) relative to the reference
    transition; ``levels`` are kept sorted by offset.
    """

    name: str
    ground_F: Fraction
    J: Fraction
    J_prime: Fraction
    I: Fraction
    levels: tuple[ExcitedLevel, ...]
    reference: str
    checksum: str | None = None

    def __post_init__(self):
        if not self.levels:
            raise LevelSchemeError("level scheme has no excited levels")
        seen = set()
        for lvl in self.levels:
            if lvl.F in seen:
                raise LevelSchemeError(f"duplicate excited level F'={lvl.F}")
            seen.add(lvl.F)
            if not np.isfinite(lvl.gamma_mhz) or lvl.gamma_mhz <= 0:
                raise LevelSchemeError(f"level {lvl.label}: linewidth must be positive, got {lvl.gamma_mhz}")
            if not np.isfinite(lvl.offset_mhz):
                raise LevelSchemeError(f"level {lvl.label}: offset is not finite")
        ordered = tuple(sorted(self.levels, key=lambda lvl: lvl.offset_mhz))
        offsets = [lvl.offset_mhz for lvl in ordered]
        if len(set(offsets)) != len(offsets):
            raise LevelSchemeError("excited level offsets must be distinct")
        object.__setattr__(self, "levels", ordered)
        ref = [lvl for lvl in ordered if lvl.label == self.reference]
        if not ref:
            raise LevelSchemeError(f"reference level {self.reference!r} not among the levels")
        if ref[0].offset_mhz != 0.0:
            raise LevelSchemeError(f"reference level {self.reference!r} must have offset 0")

    @property
    def offsets(self) -> np.ndarray:
        return np.array([lvl.offset_mhz for lvl in self.levels])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([lvl.gamma_mhz for lvl in self.levels])

    @property
    def excited_F(self) -> tuple[Fraction, ...]:
        return tuple(lvl.F for lvl in self.levels)

    @property
    def reference_index(self) -> int:
        return next(i for i, lvl in enumerate(self.levels) if lvl.label == self.reference)

    def level(self, F) -> ExcitedLevel:
        F = Fraction(F)
        for lvl in self.levels:
            if lvl.F == F:
                return lvl
        raise KeyError(f"no excited level F'={F}")

    def with_levels(self, labels) -> "LevelScheme":
        """Sub-scheme keeping only the named levels (reference must stay)."""
        keep = tuple(lvl for lvl in self.levels if lvl.label in set(labels))
        return LevelScheme(self.name, self.ground_F, self.J, self.J_prime, self.I, keep, self.reference)


def default_levels_path() -> Path:
    return Path(str(resources.files("cavmagic") / "data" / "rb87_d2.yaml"))


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def level_scheme_from_dict(doc: Mapping, checksum: str | None = None) -> LevelScheme:
    if not isinstance(doc, Mapping):
        raise LevelSchemeError("level-scheme document must be a mapping")
    for key in ("ground_F", "J", "J_prime", "I", "levels", "reference"):
        if key not in doc:
            raise LevelSchemeError(f"level-scheme document is missing {key!r}")
    raw_levels = doc["levels"]
    if not isinstance(raw_levels, list) or not raw_levels:
        raise LevelSchemeError("'levels' must be a non-empty list")
    levels = []
    for i, entry in enumerate(raw_levels):
        if not isinstance(entry, Mapping):
            raise LevelSchemeError(f"level #{i} must be a mapping")
        label = str(entry.get("label", f"F'={entry.get('F', '?')}"))
        for key in ("F", "offset_mhz", "gamma_mhz"):
            if key not in entry:
                raise LevelSchemeError(f"level {label}: missing {key!r}")
        try:
            offset = float(entry["offset_mhz"])
            gamma = float(entry["gamma_mhz"])
        except (TypeError, ValueError) as exc:
            raise LevelSchemeError(f"level {label}: frequencies must be numbers") from exc
        levels.append(ExcitedLevel(label, _half(entry["F"], f"level {label} F"), offset, gamma))
    return LevelScheme(
        name=str(doc.get("name", "unnamed")),
        ground_F=_half(doc["ground_F"], "ground_F"),
        J=_half(doc["J"], "J"),
        J_prime=_half(doc["J_prime"], "J_prime"),
        I=_half(doc["I"], "I"),
        levels=tuple(levels),
        reference=str(doc["reference"]),
        checksum=checksum,
    )


def load_level_scheme(path=None) -> LevelScheme:
    """Load a YAML level-scheme document; ``None`` loads the bundled 87Rb D2 data."""
    path = Path(path) if path is not None else default_levels_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise LevelSchemeError(f"cannot read level scheme {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise LevelSchemeError(f"{path}: not valid YAML: {exc}") from exc
    return level_scheme_from_dict(doc, checksum=file_checksum(path))


class ZeemanDistribution:
    """Normalized populations ``p_m`` over the ground sublevels ``m = -F..F``."""

    def __init__(self, F, populations: Mapping):
        self.F = HalfInteger.of(F).value
        ms = [Fraction(tm, 2) for tm in range(-int(2 * self.F), int(2 * self.F) + 1, 2)]
        pops = {m: 0.0 for m in ms}
        for m, p in populations.items():
            try:
                key = HalfInteger.of(m).value
            except ValueError as exc:
                raise DistributionError(f"bad sublevel label {m!r}") from exc
            if key not in pops:
                raise DistributionError(f"m={key} is outside -{self.F}..{self.F}")
            p = float(p)
            if not np.isfinite(p) or p < 0:
                raise DistributionError(f"population of m={key} must be non-negative, got {p}")
            pops[key] = p
        total = sum(pops.values())
        if abs(total - 1.0) > _NORM_TOL:
            raise DistributionError(f"populations sum to {total!r}, not 1")
        self.populations: dict[Fraction, float] = pops

    @classmethod
    def uniform(cls, F) -> "ZeemanDistribution":
        F = HalfInteger.of(F).value
        n = int(2 * F) + 1
        ms = [Fraction(tm, 2) for tm in range(-int(2 * F), int(2 * F) + 1, 2)]
        return cls(F, {m: 1.0 / n for m in ms})

    @classmethod
    def delta(cls, F, m) -> "ZeemanDistribution":
        return cls(F, {m: 1.0})

    @classmethod
    def parse(cls, text: str, F) -> "ZeemanDistribution":
        """Parse ``uniform`` or ``m=2:0.5,m=-2:0.5`` (the ``m=`` prefix is optional)."""
        text = text.strip()
        if text.lower() == "uniform":
            return cls.uniform(F)
        pops = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            if ":" not in item:
                raise DistributionError(f"cannot parse distribution item {item!r}; expected m=<m>:<p>")
            label, p = item.split(":", 1)
            label = label.strip()
            if label.startswith("m="):
                label = label[2:]
            try:
                key = HalfInteger.of(label).value
                pops[key] = pops.get(key, 0.0) + float(p)
            except ValueError as exc:
                raise DistributionError(f"cannot parse distribution item {item!r}") from exc
        if not pops:
            raise DistributionError("empty distribution")
        return cls(F, pops)

    @property
    def sublevels(self) -> list[Fraction]:
        return list(self.populations)

    def as_array(self) -> np.ndarray:
        return np.array(list(self.populations.values()))

    def mirrored(self) -> "ZeemanDistribution":
        return ZeemanDistribution(self.F, {-m: p for m, p in self.populations.items()})

    def __repr__(self) -> str:
        body = ", ".join(f"{m}: {p:.6g}" for m, p in self.populations.items() if p)
        return f"ZeemanDistribution(F={self.F}, {{{body}}})"


@dataclass(frozen=True)
class AveragedStrengths:
    """Zeeman-averaged ``<c^2>`` per excited level, aligned with ``levels``."""

    levels: tuple[Fraction, ...]
    values: np.ndarray
    convention: str = "sigma"

    def __getitem__(self, F) -> float:
        return float(self.values[self.levels.index(Fraction(F))])

    def scaled(self, factor: float) -> "AveragedStrengths":
        return AveragedStrengths(self.levels, self.values * factor, self.convention)

    def as_dict(self) -> dict[str, float]:
        return {str(F): float(v) for F, v in zip(self.levels, self.values)}


def zeeman_average(
    table: TransitionTable,
    dist: ZeemanDistribution,
    levels=None,
    convention: str = "sigma",
) -> AveragedStrengths:
    """Population-weighted squared couplings entering the collective polarizability.

    ``sigma`` (default) averages the two circular couplings that feed the
    y-polarized cavity mode, ``sum_m p_m (c[m,m-1]**2 + c[m,m+1]**2) / 2``.
    ``pi`` uses ``c[m,m]**2`` and ``total`` uses ``sum_m' c[m,m']**2 / 3``.
    For a uniform distribution all three coincide; they differ for polarized
    samples.
    """
    if dist.F != table.ground_F:
        raise DistributionError(f"distribution is for F={dist.F}, table for F={table.ground_F}")
    if convention not in AVERAGING_CONVENTIONS:
        raise ValueError(f"unknown averaging convention {convention!r}")
    total = sum(dist.populations.values())
    if abs(total - 1.0) > _NORM_TOL:
        raise DistributionError(f"populations sum to {total!r}, not 1")
    levels = tuple(Fraction(F) for F in (levels if levels is not None else table.excited_F))
    values = np.zeros(len(levels))
    for k, fp in enumerate(levels):
        acc = 0.0
        for m, p in dist.populations.items():
            if not p:
                continue
            if convention == "sigma":
                s = 0.5 * (table.coefficient(fp, m, m - 1) ** 2 + table.coefficient(fp, m, m + 1) ** 2)
            elif convention == "pi":
                s = table.coefficient(fp, m, m) ** 2
            else:
                s = sum(table.coefficient(fp, m, m + q) ** 2 for q in (-1, 0, 1)) / 3.0
            acc += p * s
        values[k] = acc
    return AveragedStrengths(levels, values, convention)
