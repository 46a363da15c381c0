"""Crossing rates, activated channel and lifetimes."""

import math

import numpy as np
import pytest

from nvisc.gridfn import GridFunction, integrate
from nvisc.psb import PsbModel
from nvisc.rates import (
    HighTempParams,
    LevelSpacings,
    PhononCoupling,
    RateResult,
    SpinOrbitParams,
    e12_a1_ratio,
    gamma_a1,
    gamma_e12_finiteT,
    gamma_e12_lowT,
    gamma_e12_spectral,
    gamma_ht,
    isc_average,
    lifetime,
)
from nvisc.units import MEV_TO_MHZ, rate_mev_to_mhz


def smooth_density(step=0.25, span=200.0):
    # acoustic-band mixture, tapered at both support edges
    xs = np.arange(0.0, span + step / 2, step)
    vals = np.zeros_like(xs)
    for w, c, s in ((0.3, 45.0, 14.0), (0.4, 65.0, 10.0), (0.2, 92.0, 14.0),
                    (0.1, 120.0, 13.0)):
        vals += w * np.exp(-0.5 * ((xs - c) / s) ** 2)
    vals *= 1.0 - np.exp(-((xs / 15.0) ** 2))
    vals *= 1.0 - np.exp(-(((span - xs) / 15.0) ** 2))
    vals[0] = vals[-1] = 0.0
    g = GridFunction(0.0, step, vals)
    return g.scaled(1.0 / integrate(g))


@pytest.fixture(scope="module")
def model():
    return PsbModel.from_one_phonon(smooth_density(), 3.49)


@pytest.fixture(scope="module")
def f0(model):
    return model.calibrated_overlap(0.0)


@pytest.fixture(scope="module")
def so():
    return SpinOrbitParams.from_ghz(5.33, 1.2, (1.0, 1.4))


@pytest.fixture(scope="module")
def pc():
    return PhononCoupling(44.0, 85.0, (41.6, 46.4))


@pytest.fixture(scope="module")
def ls():
    return LevelSpacings(392.0, 1190.0)


# ---------------------------------------------------------------------------
# direct crossing


def test_gamma_a1_matches_closed_form(so, f0):
    res = gamma_a1(so, f0, 392.0)
    lp = so.lambda_perp
    expected = rate_mev_to_mhz(4.0 * math.pi * lp * lp * f0.sample(392.0))
    assert res.value_mhz == pytest.approx(expected, rel=1e-12)


def test_gamma_a1_band_is_ratio_squared(so, f0):
    res = gamma_a1(so, f0, 392.0)
    assert res.band_mhz[0] == pytest.approx(res.value_mhz * (1.0 / 1.2) ** 2,
                                            rel=1e-12)
    assert res.band_mhz[1] == pytest.approx(res.value_mhz * (1.4 / 1.2) ** 2,
                                            rel=1e-12)


def test_gamma_a1_outside_support(so, f0):
    res = gamma_a1(so, f0, 6000.0)
    assert res.value_mhz == 0.0
    assert res.band_mhz == (0.0, 0.0)
    assert res.note


def test_gamma_a1_quadratic_in_coupling(so, f0):
    doubled = SpinOrbitParams(2.0 * so.lambda_par, so.ratio_perp, so.ratio_band)
    assert gamma_a1(doubled, f0, 392.0).value_mhz == pytest.approx(
        4.0 * gamma_a1(so, f0, 392.0).value_mhz, rel=1e-12)


def test_gamma_a1_rejects_nonpositive_gap(so, f0):
    with pytest.raises(ValueError):
        gamma_a1(so, f0, 0.0)


# ---------------------------------------------------------------------------
# assisted crossing, T = 0


def test_ratio_flag_off_is_infinite_spacing_limit(pc, f0):
    # with the second singlet pushed to infinity the interference weight
    # degenerates to the plain one
    on = e12_a1_ratio(pc, f0, LevelSpacings(392.0, math.inf),
                      include_singlet_path=True)
    off = e12_a1_ratio(pc, f0, LevelSpacings(392.0, 1190.0),
                       include_singlet_path=False)
    assert on == pytest.approx(off, rel=1e-12)


def test_ratio_interference_reduces(pc, f0, ls):
    on = e12_a1_ratio(pc, f0, ls, include_singlet_path=True)
    off = e12_a1_ratio(pc, f0, ls, include_singlet_path=False)
    assert on < off
    assert 0.05 < 1.0 - on / off < 0.25


def test_ratio_undefined_outside_support(pc, f0):
    with pytest.raises(ValueError, match="undefined"):
        e12_a1_ratio(pc, f0, LevelSpacings(6000.0))


def test_lowT_equals_ratio_times_direct(so, pc, f0, ls):
    ratio = e12_a1_ratio(pc, f0, ls)
    assert gamma_e12_lowT(so, pc, f0, ls).value_mhz == pytest.approx(
        ratio * gamma_a1(so, f0, ls.delta).value_mhz, rel=1e-10)


def test_lowT_scales_as_coupling_squared_times_eta(so, pc, f0, ls):
    base = gamma_e12_lowT(so, pc, f0, ls).value_mhz
    doubled_so = SpinOrbitParams(2.0 * so.lambda_par, so.ratio_perp,
                                 so.ratio_band)
    assert gamma_e12_lowT(doubled_so, pc, f0, ls).value_mhz == pytest.approx(
        4.0 * base, rel=1e-12)
    doubled_eta = PhononCoupling(2.0 * pc.eta_mhz, pc.omega_mev,
                                 (2.0 * 41.6, 2.0 * 46.4))
    assert gamma_e12_lowT(so, doubled_eta, f0, ls).value_mhz == pytest.approx(
        2.0 * base, rel=1e-12)


def test_lowT_band_extremes(so, pc, f0, ls):
    res = gamma_e12_lowT(so, pc, f0, ls)
    assert res.band_mhz[0] == pytest.approx(
        res.value_mhz * (1.0 / 1.2) ** 2 * (41.6 / 44.0), rel=1e-12)
    assert res.band_mhz[1] == pytest.approx(
        res.value_mhz * (1.4 / 1.2) ** 2 * (46.4 / 44.0), rel=1e-12)


def test_lowT_monotone_in_cutoff(so, pc, f0, ls):
    vals = [gamma_e12_lowT(so, pc.with_omega(om), f0, ls).value_mhz
            for om in (40.0, 85.0, 130.0)]
    assert vals[0] < vals[1] < vals[2]


# ---------------------------------------------------------------------------
# assisted crossing, finite T


def test_finiteT_zero_kelvin_limit(so, pc, model, f0, ls):
    cold = gamma_e12_finiteT(so, pc, model, ls, 0.0).value_mhz
    assert cold == pytest.approx(gamma_e12_lowT(so, pc, f0, ls).value_mhz,
                                 rel=1e-9)


def test_spectral_integrates_to_rate(so, pc, model, ls):
    spec = gamma_e12_spectral(so, pc, model, ls, 5.0)
    assert integrate(spec) == pytest.approx(
        gamma_e12_finiteT(so, pc, model, ls, 5.0).value_mhz, rel=1e-12)


def test_spectral_absorption_frozen_at_zero_kelvin(so, pc, model, ls):
    spec = gamma_e12_spectral(so, pc, model, ls, 0.0, branch="absorption")
    assert np.all(spec.values == 0.0)


def test_spectral_branches_sum(so, pc, model, ls):
    em = gamma_e12_spectral(so, pc, model, ls, 5.0, branch="emission")
    ab = gamma_e12_spectral(so, pc, model, ls, 5.0, branch="absorption")
    both = gamma_e12_spectral(so, pc, model, ls, 5.0, branch="both")
    assert np.allclose(em.values + ab.values, both.values, rtol=1e-12,
                       atol=1e-15)


def test_spectral_emission_dominates_cold(so, pc, model, ls):
    em = integrate(gamma_e12_spectral(so, pc, model, ls, 5.0,
                                      branch="emission"))
    ab = integrate(gamma_e12_spectral(so, pc, model, ls, 5.0,
                                      branch="absorption"))
    assert em > 10.0 * ab


def test_spectral_rejects_unknown_branch(so, pc, model, ls):
    with pytest.raises(ValueError):
        gamma_e12_spectral(so, pc, model, ls, 5.0, branch="updown")


def test_finiteT_grows_when_warm(so, pc, model, ls):
    cold = gamma_e12_finiteT(so, pc, model, ls, 0.0).value_mhz
    warm = gamma_e12_finiteT(so, pc, model, ls, 150.0).value_mhz
    assert warm > cold


# ---------------------------------------------------------------------------
# averaging, activated channel, lifetimes


def test_isc_average_arithmetic():
    res = isc_average(RateResult(16.0, (12.0, 20.0)),
                      RateResult(8.0, (6.0, 10.0)))
    assert res.value_mhz == pytest.approx(8.0, rel=1e-15)
    assert res.band_mhz[0] == pytest.approx(6.0, rel=1e-15)
    assert res.band_mhz[1] == pytest.approx(10.0, rel=1e-15)


def test_gamma_ht_oracle_700K():
    # 5.8e7 * exp(-0.94 eV / kT(700 K)) = 9.90206; times 13.2 MHz
    res = gamma_ht(HighTempParams(5.8e7, 0.94),
                   RateResult(13.2, (12.7, 13.7)), 700.0)
    assert res.value_mhz == pytest.approx(130.70722196034853, rel=1e-9)
    assert res.band_mhz[0] == pytest.approx(res.value_mhz * 12.7 / 13.2,
                                            rel=1e-12)


def test_gamma_ht_monotone_and_frozen_at_zero():
    ht = HighTempParams(5.8e7, 0.94)
    g_rad = RateResult(13.2)
    assert gamma_ht(ht, g_rad, 0.0).value_mhz == 0.0
    assert (gamma_ht(ht, g_rad, 400.0).value_mhz
            < gamma_ht(ht, g_rad, 550.0).value_mhz
            < gamma_ht(ht, g_rad, 700.0).value_mhz)


def test_lifetime_oracles():
    zero = RateResult(0.0)
    assert lifetime(RateResult(13.2), zero, zero, 0.0, "ms0") == pytest.approx(
        12.05719265847692, rel=1e-12)
    assert lifetime(RateResult(13.2), RateResult(8.0), zero, 0.0,
                    "ms1") == pytest.approx(7.507308636410158, rel=1e-12)


def test_lifetime_epsilon_weighting():
    g_rad = RateResult(13.2)
    g_isc = RateResult(8.0)
    g_ht = RateResult(2.0)
    # shelf class ignores epsilon entirely
    assert lifetime(g_rad, g_isc, g_ht, 0.0, "ms0") == lifetime(
        g_rad, g_isc, g_ht, 1.0, "ms0")
    # split pair picks up epsilon * activated rate
    t_half = lifetime(g_rad, g_isc, g_ht, 0.5, "ms1")
    assert t_half == pytest.approx(1e3 / (2.0 * math.pi * (13.2 + 8.0 + 1.0)),
                                   rel=1e-12)
    assert (lifetime(g_rad, g_isc, g_ht, 1.0, "ms1") < t_half
            < lifetime(g_rad, g_isc, g_ht, 0.0, "ms1"))


def test_lifetime_rejects_vanishing_rates_and_bad_class():
    zero = RateResult(0.0)
    with pytest.raises(ValueError, match="vanish"):
        lifetime(zero, zero, zero, 0.0, "ms0")
    with pytest.raises(ValueError, match="spin class"):
        lifetime(RateResult(13.2), zero, zero, 0.0, "ms2")


# ---------------------------------------------------------------------------
# parameter validation


def test_spin_orbit_validation():
    with pytest.raises(ValueError):
        SpinOrbitParams(-1.0, 1.2, (1.0, 1.4))
    with pytest.raises(ValueError):
        SpinOrbitParams(0.022, 1.5, (1.0, 1.4))


def test_phonon_coupling_validation():
    with pytest.raises(ValueError):
        PhononCoupling(0.0, 85.0)
    with pytest.raises(ValueError):
        PhononCoupling(44.0, -1.0)
    with pytest.raises(ValueError):
        PhononCoupling(44.0, 85.0, (45.0, 46.0))


def test_level_spacings_validation():
    with pytest.raises(ValueError):
        LevelSpacings(0.0)
    with pytest.raises(ValueError):
        LevelSpacings(392.0, -5.0)
    assert LevelSpacings(392.0, math.inf).delta_prime == math.inf


def test_rate_result_validation():
    with pytest.raises(ValueError):
        RateResult(-1.0)
    with pytest.raises(ValueError):
        RateResult(5.0, (6.0, 7.0))
    assert RateResult(5.0, (4.0, 6.0)).scaled(2.0).band_mhz == (8.0, 12.0)


def test_high_temp_params_validation():
    with pytest.raises(ValueError):
        HighTempParams(-1.0, 0.94)
    with pytest.raises(ValueError):
        HighTempParams(5.8e7, 0.0)
    with pytest.raises(ValueError):
        HighTempParams(5.8e7, 0.94, epsilon=-0.1)
