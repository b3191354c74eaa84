"""Radio environment: hexagonal multi-band deployment, 3GPP UMa channel, SINR
and rate computations, and the handover-interruption model.

Pathloss follows 3GPP TR 38.901 Table 7.4.1-1 (UMa), with ``fc`` in GHz and
distances in metres:

    d_BP'   = 4 (h_BS - 1)(h_UT - 1) fc_Hz / c
    PL1     = 28.0 + 22 log10(d3D) + 20 log10(fc)                 d2D <= d_BP'
    PL2     = 28.0 + 40 log10(d3D) + 20 log10(fc)
              - 9 log10(d_BP'^2 + (h_BS - h_UT)^2)                d2D >  d_BP'
    PL_NLOS = max(PL_LOS, 13.54 + 39.08 log10(d3D) + 20 log10(fc)
                  - 0.6 (h_UT - 1.5))

LOS probability (Table 7.4.2-1, h_UT <= 13 m):

    P_LOS = 1                                                     d2D <= 18
    P_LOS = 18/d2D + exp(-d2D/63) (1 - 18/d2D)                    otherwise

The sector pattern is the parabolic 3GPP horizontal pattern
``A(phi) = -min(12 (phi/phi_3dB)^2, A_m)`` added to a boresight gain.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .exceptions import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0
HEX_RINGS = {1: 0, 7: 1, 19: 2}


@dataclass(frozen=True)
class BandConfig:
    carrier_frequency: float  # Hz
    bandwidth: float  # Hz
    tx_power: float = 46.0  # dBm

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise ConfigurationError("carrier_frequency must be positive")
        if not self.bandwidth > 0:
            raise ConfigurationError("bandwidth must be positive")
        if not np.isfinite(self.tx_power):
            raise ConfigurationError("tx_power must be finite")

    @property
    def tx_power_watts(self):
        return 10.0 ** ((self.tx_power - 30.0) / 10.0)


# Table I: 40 MHz on the 3.75 GHz carrier, 10 MHz on the 750 MHz carrier.
DEFAULT_BANDS = (
    BandConfig(carrier_frequency=3.75e9, bandwidth=40e6, tx_power=46.0),
    BandConfig(carrier_frequency=0.75e9, bandwidth=10e6, tx_power=46.0),
)


@dataclass(frozen=True)
class BaseStation:
    id: int
    site_id: int
    sector_index: int
    band_index: int
    position: tuple  # (x, y, height) in metres
    azimuth: float  # degrees


@dataclass(frozen=True)
class NoiseConfig:
    psd: float = -174.0  # dBm/Hz
    noise_figure: float = 10.0  # dB

    def power_dbm(self, bandwidth):
        return self.psd + 10.0 * np.log10(bandwidth) + self.noise_figure

    def power_watts(self, bandwidth):
        return 10.0 ** ((self.power_dbm(bandwidth) - 30.0) / 10.0)


@dataclass(frozen=True)
class AntennaConfig:
    beamwidth: float = 65.0  # 3 dB beamwidth, degrees
    front_to_back: float = 30.0  # A_m, dB
    max_gain: float = 8.0  # dBi at boresight


@dataclass(frozen=True)
class ShadowingConfig:
    sigma_los: float = 4.0
    sigma_nlos: float = 6.0
    decorrelation: float = 50.0  # metres


@dataclass(frozen=True)
class HitModel:
    """Discrete handover-interruption-time distribution.

    ``outcomes`` are ``(probability, interruption_ms)`` pairs, sampled by
    inverse CDF in the listed order.
    """

    outcomes: tuple = ((0.8, 20.0), (0.2, 90.76))
    slot_ms: float = 100.0

    def __post_init__(self):
        outcomes = tuple((float(p), float(t)) for p, t in self.outcomes)
        object.__setattr__(self, "outcomes", outcomes)
        if not outcomes:
            raise ConfigurationError("HitModel needs at least one outcome")
        probs = np.array([p for p, _ in outcomes])
        if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0, atol=1e-12):
            raise ConfigurationError("HIT outcome probabilities must sum to 1")
        if not self.slot_ms > 0:
            raise ConfigurationError("slot_ms must be positive")
        if any(t < 0 for _, t in outcomes):
            raise ConfigurationError("interruption times must be non-negative")

    @property
    def probabilities(self):
        return np.array([p for p, _ in self.outcomes])

    @property
    def interruptions(self):
        return np.array([t for _, t in self.outcomes])


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle used for user drops and boundary reflection."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax >= self.xmin and self.ymax >= self.ymin):
            raise ConfigurationError("empty region")

    @property
    def centroid(self):
        return np.array([(self.xmin + self.xmax) / 2, (self.ymin + self.ymax) / 2])

    @property
    def size(self):
        return np.array([self.xmax - self.xmin, self.ymax - self.ymin])

    def contains(self, pos, atol=1e-9):
        pos = np.asarray(pos)
        return (
            (pos[..., 0] >= self.xmin - atol)
            & (pos[..., 0] <= self.xmax + atol)
            & (pos[..., 1] >= self.ymin - atol)
            & (pos[..., 1] <= self.ymax + atol)
        )

    def reflect(self, pos):
        """Fold positions back into the rectangle by specular reflection.

        Returns the folded positions and a boolean (..., 2) array marking the
        axes along which an odd number of reflections happened.
        """
        pos = np.array(pos, dtype=np.float64, copy=True)
        flipped = np.zeros(pos.shape, dtype=bool)
        for axis, (lo, hi) in enumerate(((self.xmin, self.xmax), (self.ymin, self.ymax))):
            width = hi - lo
            if width == 0:
                pos[..., axis] = lo
                continue
            u = pos[..., axis] - lo
            n = np.floor(u / width)
            r = u - n * width
            odd = (n.astype(np.int64) % 2) == 1
            pos[..., axis] = lo + np.where(odd, width - r, r)
            flipped[..., axis] = odd
        return pos, flipped


def hex_site_positions(sites, isd):
    """Site centres of a hexagonal lattice with ``sites`` in {1, 7, 19}."""
    if sites not in HEX_RINGS:
        raise ConfigurationError(f"unsupported site count {sites}; use 1, 7 or 19")
    if not isd > 0:
        raise ConfigurationError("inter-site distance must be positive")
    rings = HEX_RINGS[sites]
    cells = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            if max(abs(q), abs(r), abs(q + r)) <= rings:
                ring = max(abs(q), abs(r), abs(q + r))
                x = isd * (q + r / 2.0)
                y = isd * r * np.sqrt(3.0) / 2.0
                ang = np.arctan2(y, x) % (2 * np.pi) if ring else 0.0
                cells.append((ring, round(ang, 12), x, y))
    cells.sort()
    return np.array([(x, y) for _, _, x, y in cells])


def place_deployment(sites, isd, bands, height=25.0):
    """Expand a hexagonal site layout into sector x band base stations.

    Stations are ordered site-major, then band, then sector, so the id of
    (site s, band k, sector m) is ``(s * len(bands) + k) * 3 + m``.
    """
    if not bands:
        raise ConfigurationError("at least one band is required")
    centres = hex_site_positions(sites, isd)
    stations = []
    for s, (x, y) in enumerate(centres):
        for k in range(len(bands)):
            for m in range(3):
                stations.append(
                    BaseStation(
                        id=len(stations),
                        site_id=s,
                        sector_index=m,
                        band_index=k,
                        position=(float(x), float(y), float(height)),
                        azimuth=120.0 * m,
                    )
                )
    return stations


@dataclass
class Deployment:
    """Array view over a list of base stations and their bands."""

    stations: list
    bands: tuple
    isd: float
    antenna: AntennaConfig = field(default_factory=AntennaConfig)

    def __post_init__(self):
        st = self.stations
        self.bands = tuple(self.bands)
        self.positions = np.array([s.position for s in st], dtype=np.float64)
        self.azimuths = np.array([s.azimuth for s in st], dtype=np.float64)
        self.band_of = np.array([s.band_index for s in st], dtype=np.intp)
        self.site_of = np.array([s.site_id for s in st], dtype=np.intp)
        self.n_sites = int(self.site_of.max()) + 1
        self.site_positions = np.zeros((self.n_sites, 2))
        self.site_positions[self.site_of] = self.positions[:, :2]
        self.bandwidths = np.array([self.bands[k].bandwidth for k in self.band_of])
        self.tx_watts = np.array([self.bands[k].tx_power_watts for k in self.band_of])
        self.carriers = np.array([self.bands[k].carrier_frequency for k in self.band_of])
        ids = [s.id for s in st]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("base station ids must be unique")
        triples = {(s.site_id, s.sector_index, s.band_index) for s in st}
        if len(triples) != len(st):
            raise ConfigurationError("duplicate (site, sector, band) triple")

    @classmethod
    def build(cls, sites, isd, bands=DEFAULT_BANDS, height=25.0, antenna=None):
        return cls(
            place_deployment(sites, isd, bands, height),
            bands,
            isd,
            antenna or AntennaConfig(),
        )

    @property
    def n_bs(self):
        return len(self.stations)

    def region(self):
        """Bounding box of the site centres padded by one cell radius."""
        pad = self.isd / np.sqrt(3.0)
        lo = self.site_positions.min(axis=0) - pad
        hi = self.site_positions.max(axis=0) + pad
        return Region(lo[0], hi[0], lo[1], hi[1])


def los_probability(d2d, ue_height=1.5):
    d2d = np.asarray(d2d, dtype=np.float64)
    if ue_height > 13.0:
        raise ConfigurationError("LOS probability implemented for UE height <= 13 m")
    safe = np.maximum(d2d, 18.0)
    p = 18.0 / safe + np.exp(-safe / 63.0) * (1.0 - 18.0 / safe)
    return np.where(d2d <= 18.0, 1.0, p)


def uma_pathloss_db(d2d, fc_hz, los, bs_height=25.0, ue_height=1.5):
    """3GPP TR 38.901 UMa pathloss in dB (vectorised)."""
    d2d = np.asarray(d2d, dtype=np.float64)
    fc_ghz = np.asarray(fc_hz, dtype=np.float64) / 1e9
    d3d = np.sqrt(d2d**2 + (bs_height - ue_height) ** 2)
    d_bp = 4.0 * (bs_height - 1.0) * (ue_height - 1.0) * (fc_ghz * 1e9) / SPEED_OF_LIGHT
    pl1 = 28.0 + 22.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)
    pl2 = (
        28.0
        + 40.0 * np.log10(d3d)
        + 20.0 * np.log10(fc_ghz)
        - 9.0 * np.log10(d_bp**2 + (bs_height - ue_height) ** 2)
    )
    pl_los = np.where(d2d <= d_bp, pl1, pl2)
    pl_nlos = 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(fc_ghz) - 0.6 * (ue_height - 1.5)
    return np.where(los, pl_los, np.maximum(pl_los, pl_nlos))


def antenna_gain_db(azimuth_deg, bs_xy, user_xy, antenna=AntennaConfig()):
    """Horizontal parabolic sector pattern plus boresight gain."""
    delta = np.asarray(user_xy, dtype=np.float64) - np.asarray(bs_xy, dtype=np.float64)
    bearing = np.degrees(np.arctan2(delta[..., 1], delta[..., 0]))
    phi = (bearing - azimuth_deg + 180.0) % 360.0 - 180.0
    att = np.minimum(12.0 * (phi / antenna.beamwidth) ** 2, antenna.front_to_back)
    return antenna.max_gain - att


def channel_gain(
    bs,
    user_position,
    shadowing_db,
    los,
    *,
    carrier_frequency,
    ue_height=1.5,
    min_distance=10.0,
    antenna=AntennaConfig(),
):
    """Linear gain of one link: pathloss, shadowing and antenna pattern."""
    bx, by, bh = bs.position
    ux, uy = float(user_position[0]), float(user_position[1])
    d2d = max(np.hypot(ux - bx, uy - by), min_distance)
    pl = uma_pathloss_db(d2d, carrier_frequency, los, bh, ue_height)
    ag = antenna_gain_db(bs.azimuth, (bx, by), (ux, uy), antenna)
    return float(10.0 ** ((-pl + shadowing_db + ag) / 10.0))


@dataclass
class ChannelState:
    gain: np.ndarray  # (U, B) linear
    shadowing_db: np.ndarray  # (U, B)
    los_state: np.ndarray  # (U, S) bool


def gain_matrix(
    deployment,
    user_xy,
    shadowing_db,
    los_state,
    *,
    ue_height=1.5,
    min_distance=10.0,
):
    """Vectorised :func:`channel_gain` over all (user, BS) pairs."""
    user_xy = np.atleast_2d(np.asarray(user_xy, dtype=np.float64))
    bs_xy = deployment.positions[:, :2]
    delta = user_xy[:, None, :] - bs_xy[None, :, :]
    d2d = np.maximum(np.hypot(delta[..., 0], delta[..., 1]), min_distance)
    los = np.asarray(los_state, dtype=bool)[:, deployment.site_of]
    bs_height = deployment.positions[0, 2]
    pl = uma_pathloss_db(d2d, deployment.carriers[None, :], los, bs_height, ue_height)
    ag = antenna_gain_db(deployment.azimuths[None, :], bs_xy[None], user_xy[:, None], deployment.antenna)
    return 10.0 ** ((-pl + shadowing_db + ag) / 10.0)


class ShadowingField:
    """Spatially consistent shadowing and LOS state per (user, site).

    Each (user, site) pair carries two standard-normal states that evolve as
    an exponentially correlated Gauss-Markov process in travelled distance.
    LOS holds when ``Phi(z_los) < P_LOS(d2D)``; shadowing is
    ``sigma(LOS) * z_shadow`` and is shared by the co-located radios of a site.
    """

    def __init__(self, n_users, n_sites, rng, config=ShadowingConfig()):
        self.config = config
        self.z_shadow = rng.standard_normal((n_users, n_sites))
        self.z_los = rng.standard_normal((n_users, n_sites))

    def advance(self, displacement, rng):
        rho = np.exp(-np.asarray(displacement, dtype=np.float64) / self.config.decorrelation)[:, None]
        scale = np.sqrt(1.0 - rho**2)
        self.z_shadow = rho * self.z_shadow + scale * rng.standard_normal(self.z_shadow.shape)
        self.z_los = rho * self.z_los + scale * rng.standard_normal(self.z_los.shape)

    def state(self, deployment, user_xy, ue_height=1.5, min_distance=10.0):
        user_xy = np.atleast_2d(user_xy)
        delta = user_xy[:, None, :] - deployment.site_positions[None]
        d2d = np.maximum(np.hypot(delta[..., 0], delta[..., 1]), min_distance)
        los = ndtr(self.z_los) < los_probability(d2d, ue_height)
        sigma = np.where(los, self.config.sigma_los, self.config.sigma_nlos)
        shadow_site = sigma * self.z_shadow
        shadow = shadow_site[:, deployment.site_of]
        gain = gain_matrix(
            deployment, user_xy, shadow, los, ue_height=ue_height, min_distance=min_distance
        )
        return ChannelState(gain=gain, shadowing_db=shadow, los_state=los)


def sinr_matrix(gain, deployment, noise=NoiseConfig()):
    """SINR for every (user, BS) pair; interference is same-band only."""
    gain = np.atleast_2d(np.asarray(gain, dtype=np.float64))
    rx = gain * deployment.tx_watts[None, :]
    out = np.empty_like(rx)
    for k in range(len(deployment.bands)):
        idx = np.flatnonzero(deployment.band_of == k)
        rk = rx[:, idx]
        mask = 1.0 - np.eye(len(idx))
        interference = rk @ mask  # column j sums every j' != j
        n_w = noise.power_watts(deployment.bands[k].bandwidth)
        out[:, idx] = rk / (interference + n_w)
    return out


def sinr(user, bs, gains, deployment, noise=NoiseConfig()):
    """Scalar SINR of ``user`` served by ``bs``."""
    g = gains.gain if isinstance(gains, ChannelState) else np.asarray(gains)
    g = np.atleast_2d(g)[user]
    band = deployment.band_of[bs]
    same = np.flatnonzero(deployment.band_of == band)
    others = same[same != bs]
    signal = deployment.tx_watts[bs] * g[bs]
    interference = float(np.sum(deployment.tx_watts[others] * g[others]))
    return signal / (interference + noise.power_watts(deployment.bandwidths[bs]))


def achievable_rate(bandwidth, sinr_value):
    """Shannon rate ``W log2(1 + SINR)`` in bits/s."""
    sinr_value = np.asarray(sinr_value, dtype=np.float64)
    if np.any(sinr_value < 0):
        raise ValueError("sinr must be non-negative")
    bw = bandwidth.bandwidth if isinstance(bandwidth, BandConfig) else bandwidth
    return np.asarray(bw) * np.log2(1.0 + sinr_value)


def service_rate(c, load, hit_ms, slot_ms=100.0):
    """Per-user delivered rate ``(c / load) * (1 - hit / T_s)``."""
    load = np.asarray(load)
    hit_ms = np.asarray(hit_ms, dtype=np.float64)
    if np.any(load < 1):
        raise ValueError("load must be a positive integer for a served user")
    if np.any(hit_ms < 0) or np.any(hit_ms >= slot_ms):
        raise ValueError("hit_ms must lie in [0, slot_ms)")
    return np.asarray(c, dtype=np.float64) / load * (1.0 - hit_ms / slot_ms)


def hit_from_uniform(model, triggered, u):
    """Inverse-CDF mapping of uniform draws to interruption times (ms)."""
    u = np.asarray(u, dtype=np.float64)
    cdf = np.cumsum(model.probabilities)
    cdf[-1] = np.inf  # guards against cumulative round-off
    idx = np.searchsorted(cdf, u, side="right")
    hit = model.interruptions[idx]
    return np.where(np.asarray(triggered, dtype=bool), hit, 0.0), idx


def sample_hit(model, handover_triggered, rng):
    """Interruption time for each user; 0 where no handover was triggered.

    One uniform is consumed per entry whether or not a handover happened so
    that competing policies share the same random stream.
    """
    triggered = np.asarray(handover_triggered, dtype=bool)
    u = rng.random(triggered.shape)
    hit, _ = hit_from_uniform(model, triggered, u)
    return hit if hit.ndim else float(hit)


def expected_log_ho_penalty(model):
    """``eta = E[ln(1 - T_HO / T_s)]`` (natural log, non-positive)."""
    t = model.interruptions
    if np.any(t >= model.slot_ms):
        raise ValueError("every interruption must be shorter than the slot")
    return float(np.sum(model.probabilities * np.log1p(-t / model.slot_ms)))
