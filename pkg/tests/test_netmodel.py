import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwassoc.exceptions import ConfigurationError
from fwassoc.netmodel import (
    DEFAULT_BANDS,
    BandConfig,
    Deployment,
    HitModel,
    NoiseConfig,
    achievable_rate,
    antenna_gain_db,
    channel_gain,
    expected_log_ho_penalty,
    gain_matrix,
    hit_from_uniform,
    place_deployment,
    sample_hit,
    service_rate,
    sinr,
    sinr_matrix,
)

# 0.8 ln 0.8 + 0.2 ln(1 - 0.9076), evaluated with 30-digit arithmetic
ETA_DEFAULT = -0.6548405011182675


# deployment ---------------------------------------------------------------


def test_single_site_six_stations():
    st_ = place_deployment(1, 500.0, DEFAULT_BANDS)
    assert len(st_) == 6
    assert all(s.position[:2] == (0.0, 0.0) for s in st_)
    for k in range(2):
        assert sorted(s.azimuth for s in st_ if s.band_index == k) == [0.0, 120.0, 240.0]


def test_nineteen_sites_two_bands():
    assert len(place_deployment(19, 500.0, DEFAULT_BANDS)) == 114


def test_seven_site_lattice_neighbour_distance():
    st_ = place_deployment(7, 500.0, DEFAULT_BANDS[:1])
    assert len(st_) == 21
    sites = np.unique(np.array([s.position[:2] for s in st_]), axis=0)
    assert len(sites) == 7
    d = np.hypot(*(sites[:, None] - sites[None]).transpose(2, 0, 1))
    off = d[~np.eye(7, dtype=bool)]
    # nearest-neighbour distance is the ISD for every site
    assert np.allclose(np.sort(d, axis=1)[:, 1], 500.0)
    assert off.min() == pytest.approx(500.0)
    # the centre site has six neighbours at exactly one ISD
    centre = np.argmin(np.hypot(sites[:, 0], sites[:, 1]))
    assert np.sum(np.isclose(d[centre], 500.0)) == 6


def test_deployment_ids_and_triples_unique():
    dep = Deployment.build(19, 500.0)
    assert len({s.id for s in dep.stations}) == dep.n_bs
    assert len({(s.site_id, s.sector_index, s.band_index) for s in dep.stations}) == dep.n_bs
    assert all(s.position[2] == 25.0 for s in dep.stations)


@pytest.mark.parametrize("sites", [0, 2, 3, 37])
def test_unsupported_site_count(sites):
    with pytest.raises(ConfigurationError):
        place_deployment(sites, 500.0, DEFAULT_BANDS)


def test_band_validation():
    with pytest.raises(ConfigurationError):
        BandConfig(3.5e9, 0.0)
    with pytest.raises(ConfigurationError):
        BandConfig(-1.0, 1e6)


def test_noise_power_over_bandwidth():
    n = NoiseConfig()
    assert n.power_dbm(40e6) == pytest.approx(-174 + 10 * math.log10(40e6) + 10)


# channel ------------------------------------------------------------------


def _bs(dep, k=0):
    return dep.stations[k]


def test_channel_gain_deterministic():
    dep = Deployment.build(1, 500.0)
    a = channel_gain(_bs(dep), (120.0, 30.0), 1.5, False, carrier_frequency=3.75e9)
    b = channel_gain(_bs(dep), (120.0, 30.0), 1.5, False, carrier_frequency=3.75e9)
    assert a == b


def test_channel_gain_decreases_with_distance_nlos():
    dep = Deployment.build(1, 500.0)
    for d in (50.0, 100.0, 300.0, 800.0):
        near = channel_gain(_bs(dep), (d, 0.0), 0.0, False, carrier_frequency=3.75e9)
        far = channel_gain(_bs(dep), (2 * d, 0.0), 0.0, False, carrier_frequency=3.75e9)
        assert far < near


def test_front_to_back_attenuation():
    dep = Deployment.build(1, 500.0)
    bs = _bs(dep)  # azimuth 0, pointing along +x
    front = channel_gain(bs, (200.0, 0.0), 0.0, True, carrier_frequency=3.75e9)
    back = channel_gain(bs, (-200.0, 0.0), 0.0, True, carrier_frequency=3.75e9)
    # same distance, pattern difference is the 30 dB front-to-back ratio
    assert 10 * math.log10(front / back) == pytest.approx(30.0, abs=1e-9)
    assert antenna_gain_db(0.0, (0, 0), (1, 0)) - antenna_gain_db(0.0, (0, 0), (-1, 0)) == 30.0


def test_gain_matrix_matches_scalar_channel_gain():
    dep = Deployment.build(7, 500.0)
    rng = np.random.default_rng(3)
    users = rng.uniform(-600, 600, (5, 2))
    shadow = rng.normal(0, 5, (5, dep.n_bs))
    los = rng.random((5, dep.n_sites)) < 0.5
    g = gain_matrix(dep, users, shadow, los)
    for u, j in itertools.product(range(5), range(dep.n_bs)):
        ref = channel_gain(
            dep.stations[j],
            users[u],
            shadow[u, j],
            los[u, dep.site_of[j]],
            carrier_frequency=dep.carriers[j],
        )
        assert g[u, j] == pytest.approx(ref, rel=1e-12)


# SINR ---------------------------------------------------------------------


def _one_band_dep(n_sites=1, n_bands=1):
    return Deployment.build(n_sites, 500.0, DEFAULT_BANDS[:n_bands])


def test_sinr_no_interference():
    dep = _one_band_dep()
    # keep only sector 0's power by zeroing the other sectors' gains
    gains = np.zeros((1, dep.n_bs))
    gains[0, 0] = 1e-12 / dep.tx_watts[0]
    # scale noise to 1e-13 W through the PSD
    psd = 10 * math.log10(1e-13 * 1e3) - 10 * math.log10(dep.bandwidths[0]) - 10.0
    noise = NoiseConfig(psd=psd)
    assert noise.power_watts(dep.bandwidths[0]) == pytest.approx(1e-13)
    assert sinr(0, 0, gains, dep, noise) == pytest.approx(10.0)


def test_sinr_one_equal_interferer_zero_noise():
    dep = _one_band_dep()
    gains = np.zeros((1, dep.n_bs))
    gains[0, :2] = 1e-9
    assert sinr(0, 0, gains, dep, NoiseConfig(psd=-np.inf)) == pytest.approx(1.0)


def _link_budget_sinr(user_xy, serving, dep_sites, isd=500.0):
    """Scalar link budget written out independently of the simulator."""
    c = 299_792_458.0
    h_bs, h_ut = 25.0, 1.5
    band = DEFAULT_BANDS[0]
    fc = band.carrier_frequency / 1e9
    ptx = 10 ** ((band.tx_power - 30) / 10)
    noise = 10 ** ((-174 + 10 * math.log10(band.bandwidth) + 10 - 30) / 10)

    def rx(site_xy, az):
        dx, dy = user_xy[0] - site_xy[0], user_xy[1] - site_xy[1]
        d2 = max(math.hypot(dx, dy), 10.0)
        d3 = math.sqrt(d2**2 + (h_bs - h_ut) ** 2)
        dbp = 4 * (h_bs - 1) * (h_ut - 1) * fc * 1e9 / c
        if d2 <= dbp:
            pl = 28 + 22 * math.log10(d3) + 20 * math.log10(fc)
        else:
            pl = 28 + 40 * math.log10(d3) + 20 * math.log10(fc) - 9 * math.log10(dbp**2 + (h_bs - h_ut) ** 2)
        phi = (math.degrees(math.atan2(dy, dx)) - az + 180) % 360 - 180
        ag = 8 - min(12 * (phi / 65) ** 2, 30)
        return ptx * 10 ** ((-pl + ag) / 10)

    powers = [rx(s, az) for s in dep_sites for az in (0.0, 120.0, 240.0)]
    sig = powers[serving]
    return sig / (sum(powers) - sig + noise)


def test_sinr_link_budget_at_site_centre():
    dep = Deployment.build(19, 500.0, DEFAULT_BANDS[:1])
    user = np.array([[1.0, 0.0]])  # inside the 10 m clamp of site 0
    los = np.ones((1, dep.n_sites), dtype=bool)
    g = gain_matrix(dep, user, np.zeros((1, dep.n_bs)), los)
    s = sinr_matrix(g, dep)
    sites = [tuple(p) for p in dep.site_positions]
    for j in (0, 1, 2, 5):
        assert s[0, j] == pytest.approx(_link_budget_sinr(user[0], j, sites), rel=1e-10)


def test_sinr_matrix_matches_scalar_and_ignores_other_band():
    dep = Deployment.build(7, 500.0)
    rng = np.random.default_rng(0)
    g = rng.lognormal(-25, 2, (4, dep.n_bs))
    s = sinr_matrix(g, dep)
    for u, j in itertools.product(range(4), range(dep.n_bs)):
        assert s[u, j] == pytest.approx(sinr(u, j, g, dep), rel=1e-12)
    g2 = g.copy()
    other = dep.band_of != dep.band_of[0]
    g2[:, other] *= 100.0
    assert np.allclose(sinr_matrix(g2, dep)[:, 0], s[:, 0], rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.01, 10.0))
def test_sinr_monotone_in_gains(seed, factor):
    dep = Deployment.build(1, 500.0, DEFAULT_BANDS[:1])
    rng = np.random.default_rng(seed)
    g = rng.lognormal(-20, 1, (1, dep.n_bs))
    base = sinr(0, 0, g, dep)
    own = g.copy()
    own[0, 0] *= factor
    assert sinr(0, 0, own, dep) > base
    interf = g.copy()
    interf[0, 1] *= factor
    assert sinr(0, 0, interf, dep) < base


def test_sinr_permutation_symmetry_of_interferers():
    dep = Deployment.build(1, 500.0, DEFAULT_BANDS[:1])
    g = np.array([[1e-9, 3e-10, 7e-11]])
    perm = np.array([[1e-9, 7e-11, 3e-10]])
    assert sinr(0, 0, g, dep) == pytest.approx(sinr(0, 0, perm, dep), rel=1e-15)


# rates --------------------------------------------------------------------


def test_achievable_rate_examples():
    assert achievable_rate(10e6, 0.0) == 0.0
    assert achievable_rate(10e6, 3.0) == pytest.approx(20e6)
    assert achievable_rate(DEFAULT_BANDS[0], 1.0) == pytest.approx(40e6)
    with pytest.raises(ValueError):
        achievable_rate(10e6, -0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(1e3, 1e8))
def test_achievable_rate_monotone_and_linear(s1, s2, w):
    lo, hi = sorted((s1, s2))
    assert achievable_rate(w, lo) <= achievable_rate(w, hi)
    assert achievable_rate(2 * w, lo) == pytest.approx(2 * achievable_rate(w, lo))


def test_service_rate_examples():
    assert service_rate(10e6, 2, 20.0, 100.0) == pytest.approx(4e6)
    assert service_rate(7.5e6, 1, 0.0, 100.0) == 7.5e6
    assert service_rate(10e6, 1, 90.76, 100.0) == pytest.approx(0.924e6)
    with pytest.raises(ValueError):
        service_rate(10e6, 0, 0.0)
    with pytest.raises(ValueError):
        service_rate(10e6, 1, 100.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1e9), st.integers(1, 50), st.sampled_from([0.0, 20.0, 90.76]))
def test_service_rate_bounded_by_achievable(c, load, hit):
    r = service_rate(c, load, hit)
    assert r <= c
    assert (r == c) == (load == 1 and hit == 0.0)


# handover interruption ----------------------------------------------------


def test_hit_model_validation():
    with pytest.raises(ConfigurationError):
        HitModel(((0.5, 20.0), (0.4, 90.0)))
    m = HitModel()
    assert m.probabilities.sum() == 1.0


def test_sample_hit_examples():
    m = HitModel()
    rng = np.random.default_rng(0)
    assert sample_hit(m, False, rng) == 0.0
    hit, idx = hit_from_uniform(m, True, 0.5)
    assert float(hit) == 20.0 and int(idx) == 0
    assert float(hit_from_uniform(m, True, 0.85)[0]) == 90.76


def test_sample_hit_distribution():
    m = HitModel()
    rng = np.random.default_rng(12345)
    n = 100_000
    draws = sample_hit(m, np.ones(n, dtype=bool), rng)
    mean = 0.8 * 20.0 + 0.2 * 90.76
    assert mean == pytest.approx(34.152)
    sd = math.sqrt(0.8 * 0.2) * (90.76 - 20.0) / math.sqrt(n)
    assert abs(draws.mean() - mean) <= 3 * sd
    frac = np.mean(draws == 20.0)
    assert abs(frac - 0.8) <= 3 * math.sqrt(0.8 * 0.2 / n)
    assert set(np.unique(draws)) == {20.0, 90.76}


def test_expected_log_ho_penalty():
    assert expected_log_ho_penalty(HitModel(((1.0, 0.0),))) == 0.0
    assert expected_log_ho_penalty(HitModel()) == pytest.approx(ETA_DEFAULT, rel=1e-12)
    assert expected_log_ho_penalty(HitModel(((1.0, 50.0),))) == pytest.approx(math.log(0.5))
    with pytest.raises(ValueError):
        expected_log_ho_penalty(HitModel(((1.0, 100.0),)))
