import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavmagic.exceptions import FitError
from cavmagic.fitting import FitResult, fit_dip, fit_maxima_trace, fit_prefactor, write_fit_json
from cavmagic.polariton import CavityDriveParams, coherent_photon_number, dip_half_width, find_magic_frequency, map_2d
from cavmagic.scattering import averaged_spectrum
from cavmagic.spectrum import Spectrum, write_spectrum_csv


@pytest.fixture(scope="module")
def model_spectrum():
    from cavmagic.angular import coupling_table
    from cavmagic.atom import ZeemanDistribution, load_level_scheme

    s = load_level_scheme()
    return averaged_spectrum(ZeemanDistribution.uniform(2), np.arange(-700.0, 101.0, 2.0), s, coupling_table(s))


def dip_data(strengths, scheme, n_eff=6e4, offset=7.0, scale=2.5e9, noise=0.0, rng=None):
    x = np.arange(-240.0, -140.0, 0.5)
    y = scale * coherent_photon_number(x, CavityDriveParams(n_eff=n_eff), strengths, scheme, freq_offset=offset)
    if noise:
        y = y * (1 + noise * rng.standard_normal(x.size))
        y = np.clip(y, 0, None)
    return Spectrum(x, y, np.zeros_like(y))


# -- prefactor --------------------------------------------------------------------

def test_prefactor_exact(model_spectrum):
    data = model_spectrum.scaled(3.0)
    r = fit_prefactor(model_spectrum, data)
    assert r["prefactor"] == pytest.approx(3.0, rel=1e-14)
    assert r.residual == pytest.approx(0.0, abs=1e-25)
    assert r.converged


def test_prefactor_far_red_then_both_channels(model_spectrum):
    data = model_spectrum.scaled(42.0)
    r = fit_prefactor(model_spectrum, data, window=(-700.0, -550.0), channel="y")
    calibrated = model_spectrum.scaled(r["prefactor"])
    assert calibrated.rate_z == pytest.approx(data.rate_z, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_prefactor_scale_equivariant(lam):
    x = np.linspace(0, 1, 30)
    model = Spectrum(x, 1 + x, 2 - x)
    data = Spectrum(x, 2 + np.sin(9 * x), 1 + x * x)
    a = fit_prefactor(model, data)
    b = fit_prefactor(model, data.scaled(lam))
    assert b["prefactor"] == pytest.approx(lam * a["prefactor"], rel=1e-12)
    assert b.residual == pytest.approx(lam ** 2 * a.residual, rel=1e-10)


def test_prefactor_unbiased_with_known_sigma(model_spectrum):
    rng = np.random.default_rng(2024)
    sigma = 0.05 * model_spectrum.rate_y.max() * np.ones(len(model_spectrum))
    est, err = [], []
    for _ in range(100):
        noisy = model_spectrum.rate_y * 3.0 + sigma * rng.standard_normal(sigma.size)
        data = Spectrum(model_spectrum.detuning, np.abs(noisy), model_spectrum.rate_z, sigma, sigma)
        r = fit_prefactor(model_spectrum, data)
        est.append(r["prefactor"])
        err.append(r.metadata["prefactor_stderr"])
        assert r.metadata["weighting"] == "inverse-variance"
    # bias of the mean over 100 trials within 2 standard errors of that mean
    assert abs(np.mean(est) - 3.0) < 2 * np.mean(err) / np.sqrt(100) + 0.01


def test_prefactor_interpolates_model():
    model = Spectrum([0.0, 1.0, 2.0], [0.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    data = Spectrum([0.5, 1.5], [5.0, 15.0], [1.0, 1.0])
    assert fit_prefactor(model, data)["prefactor"] == pytest.approx(5.0)


def test_prefactor_no_overlap(model_spectrum):
    data = Spectrum([500.0, 600.0], [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(FitError):
        fit_prefactor(model_spectrum, data)


# -- dip ---------------------------------------------------------------------------------

def test_dip_noiseless_round_trip(strengths, scheme):
    r = fit_dip(dip_data(strengths, scheme), CavityDriveParams(), strengths, scheme)
    assert r.converged
    assert r["n_eff"] == pytest.approx(6e4, rel=1e-2)
    assert r["freq_offset_mhz"] == pytest.approx(7.0, abs=0.05)
    assert r["prefactor"] == pytest.approx(2.5e9, rel=1e-2)
    assert r.metadata["starts"] == [1e3, 1e4, 1e5]


def test_dip_noisy_round_trip(strengths, scheme):
    rng = np.random.default_rng(7)
    fits = [fit_dip(dip_data(strengths, scheme, noise=0.05, rng=rng), CavityDriveParams(), strengths, scheme)
            for _ in range(10)]
    assert np.median([f["n_eff"] for f in fits]) == pytest.approx(6e4, rel=0.2)


def test_dip_fit_is_deterministic(strengths, scheme):
    data = dip_data(strengths, scheme, n_eff=2e4, offset=-3.0)
    a = fit_dip(data, CavityDriveParams(), strengths, scheme)
    b = fit_dip(data, CavityDriveParams(), strengths, scheme)
    assert a.parameters == b.parameters


def test_dip_ordering_larger_n_narrower(strengths, scheme):
    widths = []
    for n in (2e4, 6e4):
        r = fit_dip(dip_data(strengths, scheme, n_eff=n), CavityDriveParams(), strengths, scheme)
        p = CavityDriveParams(n_eff=r["n_eff"])
        left, right = dip_half_width(p, strengths, scheme)
        widths.append(right - left)
    assert widths[1] < widths[0]


def test_dip_fit_weighted(strengths, scheme):
    d = dip_data(strengths, scheme)
    sig = 0.01 * d.rate_y + 1.0
    r = fit_dip(Spectrum(d.detuning, d.rate_y, d.rate_z, sig, sig), CavityDriveParams(), strengths, scheme)
    assert r.metadata["weighting"] == "inverse-variance"
    assert r["n_eff"] == pytest.approx(6e4, rel=1e-2)


def test_dip_bad_bounds(strengths, scheme):
    with pytest.raises(FitError):
        fit_dip(dip_data(strengths, scheme), CavityDriveParams(), strengths, scheme, bounds={"n_eff": (0.0, 1e5)})


def test_dip_nonconvergence_is_reported(strengths, scheme, monkeypatch):
    import cavmagic.fitting as fitting

    monkeypatch.setattr(fitting, "_MAXITER", 3)
    r = fit_dip(dip_data(strengths, scheme), CavityDriveParams(), strengths, scheme)
    assert r.converged is False


# -- maxima trace ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def trace_case():
    from cavmagic.angular import coupling_table
    from cavmagic.atom import ZeemanDistribution, load_level_scheme, zeeman_average

    s = load_level_scheme()
    a = zeeman_average(coupling_table(s), ZeemanDistribution.uniform(2))
    off = -185.0 - find_magic_frequency(a, s).omega_star
    return s, a, off


def _trace(trace_case, params):
    s, a, off = trace_case
    pm = map_2d(-285 + 0.5 * np.arange(400), -285 + np.arange(200), params, a, s, freq_offset=off)
    return pm.drive, pm.trace_cavity, pm.trace_defined


def test_trace_round_trip(trace_case):
    s, a, off = trace_case
    p = CavityDriveParams(n_eff=3e4)
    r = fit_maxima_trace(*_trace(trace_case, p), p, a, s, freq_offset=off)
    assert r.converged
    assert r["n_eff"] == pytest.approx(3e4, rel=0.05)


def test_trace_fit_scales_with_coupling(trace_case):
    # the trace only knows g^2 n_eff: refitting with g -> sqrt(2) g halves n_eff
    s, a, off = trace_case
    p = CavityDriveParams(n_eff=3e4)
    data = _trace(trace_case, p)
    r1 = fit_maxima_trace(*data, p, a, s, freq_offset=off)
    r2 = fit_maxima_trace(*data, p.replace(g=p.g * np.sqrt(2.0)), a, s, freq_offset=off)
    assert r2["n_eff"] / r1["n_eff"] == pytest.approx(0.5, rel=0.02)


def test_trace_too_few_points(trace_case):
    s, a, off = trace_case
    d = np.arange(4.0)
    with pytest.raises(FitError):
        fit_maxima_trace(d, d, np.ones(4, bool), CavityDriveParams(), a, s)


# -- output -------------------------------------------------------------------------------

def test_fit_json(tmp_path, model_spectrum):
    path = write_spectrum_csv(model_spectrum, tmp_path / "m.csv")
    r = fit_prefactor(model_spectrum, model_spectrum.scaled(2.0))
    out = write_fit_json(r, tmp_path / "fit.json", {"data": path})
    doc = json.loads(out.read_text())
    assert doc["prefactor"] == pytest.approx(2.0)
    assert doc["converged"] is True and doc["weighting"] == "unweighted"
    assert len(doc["sha256_data"]) == 64
    assert all(not isinstance(v, (dict, list)) for v in doc.values())


def test_fit_result_rejects_negative_residual():
    with pytest.raises(ValueError):
        FitResult({}, -1.0, 0, True)
