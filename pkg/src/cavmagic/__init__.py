"""Magic-frequency suppression of photon scattering in a driven atom-cavity system.

Angular-momentum algebra, Zeeman-averaged couplings of a hyperfine ground
level, single-atom Raman/Rayleigh scattering into two cavity polarizations,
the collective polariton response of an ensemble, cloud geometry, and fits
of all of these to measured spectra.
"""
from importlib import metadata as _metadata

from .angular import TransitionTable, clebsch_gordan, coupling_table, wigner3j, wigner6j
from .atom import (
    AveragedStrengths,
    LevelScheme,
    ZeemanDistribution,
    load_level_scheme,
    zeeman_average,
)
from .ensemble import AtomCloud, effective_atom_number, sample_cloud, spatial_factor
from .exceptions import CavmagicError, NoRootError
from .fitting import FitResult, fit_dip, fit_maxima_trace, fit_prefactor
from .polariton import (
    CavityDriveParams,
    MagicFrequency,
    coherent_photon_number,
    find_magic_frequency,
    map_2d,
    polarizability,
)
from .scattering import DriveParams, averaged_spectrum
from .spectrum import Spectrum, read_spectrum_csv, write_spectrum_csv

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "__version__",
    "AtomCloud",
    "AveragedStrengths",
    "CavmagicError",
    "CavityDriveParams",
    "DriveParams",
    "FitResult",
    "LevelScheme",
    "MagicFrequency",
    "NoRootError",
    "Spectrum",
    "TransitionTable",
    "ZeemanDistribution",
    "averaged_spectrum",
    "clebsch_gordan",
    "coherent_photon_number",
    "coupling_table",
    "effective_atom_number",
    "find_magic_frequency",
    "fit_dip",
    "fit_maxima_trace",
    "fit_prefactor",
    "load_level_scheme",
    "map_2d",
    "polarizability",
    "read_spectrum_csv",
    "sample_cloud",
    "spatial_factor",
    "wigner3j",
    "wigner6j",
    "write_spectrum_csv",
    "zeeman_average",
]
