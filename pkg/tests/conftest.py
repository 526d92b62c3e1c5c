import numpy as np
import pytest

from cavmagic.angular import coupling_table
from cavmagic.atom import ZeemanDistribution, load_level_scheme, zeeman_average
from cavmagic.polariton import CavityDriveParams, find_magic_frequency


@pytest.fixture(scope="session")
def scheme():
    return load_level_scheme()


@pytest.fixture(scope="session")
def table(scheme):
    return coupling_table(scheme)


@pytest.fixture(scope="session")
def uniform(scheme):
    return ZeemanDistribution.uniform(scheme.ground_F)


@pytest.fixture(scope="session")
def strengths(table, uniform):
    return zeeman_average(table, uniform)


@pytest.fixture(scope="session")
def fig3_params():
    return CavityDriveParams(kappa=4.0, g=0.33, delta_c=0.0, n_eff=6.0e4)


@pytest.fixture(scope="session")
def magic(strengths, scheme, fig3_params):
    return find_magic_frequency(strengths, scheme, fig3_params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_scheme(path, levels, ground_F=2, reference="F'=3"):
    """Write a minimal level-scheme YAML with ``levels = [(F, offset, gamma), ...]``."""
    lines = [
        "name: test",
        f'reference: "{reference}"',
        f"ground_F: {ground_F}",
        "J: 1/2",
        "J_prime: 3/2",
        "I: 3/2",
        "levels:",
    ]
    for F, off, gam in levels:
        lines += [f'  - label: "F\'={F}"', f"    F: {F}", f"    offset_mhz: {off}", f"    gamma_mhz: {gam}"]
    path.write_text("\n".join(lines) + "\n")
    return path
