"""Array geometry, geometric wideband channel synthesis, radar snapshots, and the
paired radar/comm scenario generator.

The generator stands in for ray tracing: both views share one set of scattering
clusters; the radar view sees the infrastructure-side angles through a
configurable mismatch (a fixed smooth angular warp plus random jitter, gain
perturbation and cluster dropping).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceMatrix, comm_covariance, sample_covariance

SECTOR_EPS = 1e-9  # keep perturbed angles inside the open [-pi/2, pi/2) sector


@dataclass
class UlaConfig:
    """Uniform linear array: element count and spacing in wavelengths."""

    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("array needs at least one element")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")


@dataclass
class PathRay:
    gain: complex
    rel_delay: float
    rel_aoa_shift: float
    rel_aod_shift: float

    def __post_init__(self):
        if self.rel_delay < 0:
            raise ValueError("relative delay must be nonnegative")


@dataclass
class PathCluster:
    mean_delay: float
    mean_aoa: float  # infrastructure-side angle
    mean_aod: float  # vehicle-side angle
    rays: list

    def __post_init__(self):
        if self.mean_delay < 0:
            raise ValueError("cluster delay must be nonnegative")
        if not self.rays:
            raise ValueError("cluster needs at least one ray")
        for ang in (self.mean_aoa, self.mean_aod):
            if not -np.pi / 2 <= ang < np.pi / 2:
                raise ValueError(f"cluster angle {ang} outside [-pi/2, pi/2)")


@dataclass
class PulseConfig:
    """Raised-cosine pulse shaping: rolloff, signaling interval, tap count."""

    rolloff: float = 0.4
    interval: float = 1.0
    num_taps: int = 16

    def __post_init__(self):
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must be in [0, 1]")
        if self.interval <= 0:
            raise ValueError("interval must be positive")
        if self.num_taps < 1:
            raise ValueError("need at least one tap")


@dataclass
class ChannelTaps:
    """Delay-domain channel: taps[d] is the N_v x N_rsu matrix at delay index d."""

    taps: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.taps, dtype=np.complex128)
        if t.ndim != 3:
            raise ValueError(f"expected (D, N_v, N_rsu) taps, got shape {t.shape}")
        self.taps = t

    @property
    def num_taps(self) -> int:
        return self.taps.shape[0]


@dataclass
class ChannelFreq:
    """Frequency-domain channel: response[k] is the N_v x N_rsu matrix at subcarrier k."""

    response: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.response, dtype=np.complex128)
        if r.ndim != 3 or r.shape[0] < 1:
            raise ValueError(f"expected (K, N_v, N_rsu) responses, got shape {r.shape}")
        self.response = r

    @property
    def num_subcarriers(self) -> int:
        return self.response.shape[0]


@dataclass
class RadarSimConfig:
    """Passive radar snapshot simulation parameters.

    The transmitted waveform is idealized to a pure carrier, so the carrier
    frequency and sampling time do not enter the snapshots; the common-distance
    phase they would produce is replaced by an i.i.d. uniform rotation per
    source and sample, which keeps distinct sources incoherent in the sample
    covariance. They are retained so configs document the modeled radar.
    """

    tx_power: float = 1.0
    num_samples: int = 256
    sample_time: float = 1e-7
    carrier: float = 76e9
    noise_power: float = 1e-3

    def __post_init__(self):
        if min(self.tx_power, self.num_samples, self.sample_time, self.carrier) <= 0:
            raise ValueError("radar parameters must be positive")
        if self.noise_power < 0:
            raise ValueError("noise power must be nonnegative")


@dataclass
class MismatchConfig:
    """Radar-vs-comm propagation mismatch knobs.

    The physical mismatch these stand in for splits into a fixed hardware part
    (offset array placement, different carrier, different element patterns) and
    a part that re-randomizes per scene. The fixed part is what a translation
    model can learn to undo, so it is modeled deterministically:

    - angle_bias_std is the RMS amplitude of a smooth, angle-dependent warp
      applied to the infrastructure-side cluster angles seen by the radar.
    - gain_perturb_std is the RMS of the relative ray-gain error; half its
      variance goes to a smooth deterministic gain modulation over angle
      (element-pattern mismatch) and half to i.i.d. per-ray perturbation.

    The remaining knobs are random per draw: per-cluster angle jitter,
    per-cluster dropping from the radar view, and a global angle offset.
    """

    angle_bias_std: float = 0.0
    angle_jitter_std: float = 0.0
    gain_perturb_std: float = 0.0
    cluster_drop_prob: float = 0.0
    global_angle_offset_std: float = 0.0

    def __post_init__(self):
        for name in ("angle_bias_std", "angle_jitter_std", "gain_perturb_std",
                     "global_angle_offset_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.cluster_drop_prob <= 1.0:
            raise ValueError("cluster_drop_prob must be in [0, 1]")


@dataclass
class GeneratorConfig:
    """Priors for the paired-scenario generator."""

    rsu: UlaConfig = field(default_factory=lambda: UlaConfig(64))
    vehicle: UlaConfig = field(default_factory=lambda: UlaConfig(16))
    pulse: PulseConfig = field(default_factory=PulseConfig)
    radar: RadarSimConfig = field(default_factory=RadarSimConfig)
    mismatch: MismatchConfig = field(default_factory=MismatchConfig)
    num_subcarriers: int = 64
    max_clusters: int = 4
    max_rays: int = 5
    ray_angle_spread: float = math.radians(2.0)
    cluster_power_decay_db: float = 6.0
    cluster_delay_spread: float = 8.0  # cluster mean delays uniform on [0, this] * interval
    ray_delay_spread: float = 1.0  # ray delays uniform on [0, this] * interval

    def __post_init__(self):
        if self.num_subcarriers < self.pulse.num_taps:
            raise ValueError("need at least as many subcarriers as delay taps")
        if self.max_clusters < 1 or self.max_rays < 1:
            raise ValueError("cluster/ray counts must be at least 1")
        if self.mismatch.cluster_drop_prob >= 1.0:
            raise ValueError("cluster_drop_prob of 1 would drop every cluster")


@dataclass
class ScenarioSample:
    """One paired draw: shared geometry, comm channel, and both covariances."""

    id: int
    clusters_comm: list
    comm_taps: ChannelTaps
    radar_cov: CovarianceMatrix
    comm_cov: CovarianceMatrix


def steering_vector(cfg: UlaConfig, angle: float) -> np.ndarray:
    """Array response a(theta)[n] = exp(j n 2 pi spacing sin(theta))."""
    n = np.arange(cfg.num_antennas)
    return np.exp(1j * 2.0 * np.pi * cfg.spacing * np.sin(angle) * n)


def raised_cosine(t, rolloff: float, interval: float):
    """Raised-cosine impulse response, vectorized over t.

    p(t) = sinc(t/T) cos(pi b t/T) / (1 - (2 b t/T)^2), with the removable
    singularities at t = 0 (value 1) and t = +-T/(2b) (value (pi/4) sinc(1/(2b)))
    filled in by their limits.
    """
    if interval <= 0:
        raise ValueError("interval must be positive")
    x = np.asarray(t, dtype=np.float64) / interval
    num = np.sinc(x) * np.cos(np.pi * rolloff * x)
    den = 1.0 - (2.0 * rolloff * x) ** 2
    singular = np.isclose(den, 0.0, atol=1e-12)
    den = np.where(singular, 1.0, den)
    out = num / den
    if rolloff > 0:
        limit = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
        out = np.where(singular, limit, out)
    return out if out.ndim else float(out)


def channel_taps(clusters: list, tx: UlaConfig, rx: UlaConfig, pulse: PulseConfig) -> ChannelTaps:
    """Delay-domain wideband channel from cluster/ray geometry.

    H[d] = sum over rays of gain * p(d T - tau_cluster - tau_ray)
           * a_rx(aod) a_tx(aoa)^H,  d = 0 .. D-1,
    with the infrastructure array on the tx side.
    """
    if not clusters:
        raise ValueError("need at least one cluster")
    gains, delays, aoas, aods = [], [], [], []
    for c in clusters:
        for ray in c.rays:
            gains.append(ray.gain)
            delays.append(c.mean_delay + ray.rel_delay)
            aoas.append(c.mean_aoa + ray.rel_aoa_shift)
            aods.append(c.mean_aod + ray.rel_aod_shift)
    gains = np.asarray(gains, dtype=np.complex128)
    delays = np.asarray(delays)
    a_tx = np.stack([steering_vector(tx, a) for a in aoas], axis=1)  # (N_tx, R)
    a_rx = np.stack([steering_vector(rx, a) for a in aods], axis=1)  # (N_rx, R)
    d_grid = np.arange(pulse.num_taps) * pulse.interval
    p = raised_cosine(d_grid[:, None] - delays[None, :], pulse.rolloff, pulse.interval)
    taps = np.einsum("dr,vr,ur->dvu", p * gains[None, :], a_rx, a_tx.conj())
    return ChannelTaps(taps)


def channel_freq_response(taps: ChannelTaps, num_subcarriers: int) -> ChannelFreq:
    """Per-subcarrier channel H[k] = sum_d H[d] exp(-j 2 pi k d / K)."""
    if num_subcarriers < 1:
        raise ValueError("need at least one subcarrier")
    d = taps.num_taps
    k = np.arange(num_subcarriers)
    w = np.exp(-2j * np.pi * np.outer(k, np.arange(d)) / num_subcarriers)
    return ChannelFreq(np.tensordot(w, taps.taps, axes=(1, 0)))


def simulate_radar_snapshots(sources: list, rx: UlaConfig, cfg: RadarSimConfig,
                             rng: np.random.Generator) -> np.ndarray:
    """Snapshot matrix Y (N x I) of narrowband arrivals at the passive array.

    Column i is sum_s sqrt(P) g_s exp(j psi_si) a(theta_s) plus circular Gaussian
    noise with the configured per-antenna power; psi_si are i.i.d. uniform
    rotations standing in for the common-distance carrier phase.
    """
    n, i = rx.num_antennas, cfg.num_samples
    y = np.zeros((n, i), dtype=np.complex128)
    amp = math.sqrt(cfg.tx_power)
    for angle, gain in sources:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=i)
        y += (amp * gain) * np.outer(steering_vector(rx, angle), np.exp(1j * phases))
    if cfg.noise_power > 0:
        sigma = math.sqrt(cfg.noise_power / 2.0)
        y += sigma * (rng.standard_normal((n, i)) + 1j * rng.standard_normal((n, i)))
    return y


def angle_warp(mismatch: MismatchConfig, theta):
    """Fixed smooth angular warp with RMS amplitude angle_bias_std over the sector."""
    return mismatch.angle_bias_std * math.sqrt(2.0) * np.sin(3.0 * np.asarray(theta) + 1.0)


def gain_warp(mismatch: MismatchConfig, theta):
    """Fixed smooth relative gain modulation carrying half the variance budget of
    gain_perturb_std (RMS gain_perturb_std / sqrt(2) over the sector)."""
    return mismatch.gain_perturb_std * np.sin(5.0 * np.asarray(theta) + 2.0)


def _clip_sector(angle: float) -> float:
    return float(np.clip(angle, -np.pi / 2 + SECTOR_EPS, np.pi / 2 - SECTOR_EPS))


def _pulse_energy(total_delay: float, pulse: PulseConfig) -> float:
    """Energy the pulse deposits on the modeled tap grid for one ray delay."""
    d_grid = np.arange(pulse.num_taps) * pulse.interval
    p = raised_cosine(d_grid - total_delay, pulse.rolloff, pulse.interval)
    return float(np.sum(p * p))


def _draw_clusters(gen: GeneratorConfig, rng: np.random.Generator) -> list:
    num_clusters = int(rng.integers(1, gen.max_clusters + 1))
    clusters = []
    for c in range(num_clusters):
        mean_aoa = float(np.arcsin(rng.uniform(-1.0, 1.0)))
        mean_aod = float(np.arcsin(rng.uniform(-1.0, 1.0)))
        mean_delay = rng.uniform(0.0, gen.cluster_delay_spread) * gen.pulse.interval
        num_rays = int(rng.integers(1, gen.max_rays + 1))
        sigma = math.sqrt(10.0 ** (-gen.cluster_power_decay_db * c / 10.0) / num_rays)
        rays = []
        for _ in range(num_rays):
            gain = sigma / math.sqrt(2.0) * complex(rng.standard_normal(), rng.standard_normal())
            rays.append(PathRay(
                gain=gain,
                rel_delay=rng.uniform(0.0, gen.ray_delay_spread) * gen.pulse.interval,
                rel_aoa_shift=rng.normal(0.0, gen.ray_angle_spread),
                rel_aod_shift=rng.normal(0.0, gen.ray_angle_spread),
            ))
        clusters.append(PathCluster(mean_delay=mean_delay, mean_aoa=mean_aoa,
                                    mean_aod=mean_aod, rays=rays))
    return clusters


def _radar_sources(clusters: list, gen: GeneratorConfig, rng: np.random.Generator) -> list:
    """Radar view of the shared clusters: warped/jittered angles, perturbed gains.

    Ray gains carry the pulse energy of the matching comm ray so the zero-
    mismatch radar covariance matches the comm covariance diagonal weights.
    Cluster dropping is redrawn until at least one cluster survives.
    """
    mis = gen.mismatch
    while True:
        keep = [rng.uniform() >= mis.cluster_drop_prob for _ in clusters]
        if any(keep):
            break
    global_offset = rng.normal(0.0, mis.global_angle_offset_std) if mis.global_angle_offset_std > 0 else 0.0
    sources = []
    rnd_gain_std = mis.gain_perturb_std / math.sqrt(2.0)
    for cluster, kept in zip(clusters, keep):
        # draws happen for dropped clusters too, so which draws feed the kept
        # clusters does not depend on the drop pattern
        jitter = rng.normal(0.0, mis.angle_jitter_std) if mis.angle_jitter_std > 0 else 0.0
        base = cluster.mean_aoa + float(angle_warp(mis, cluster.mean_aoa)) + jitter + global_offset
        for ray in cluster.rays:
            factor = 1.0 + (rng.normal(0.0, rnd_gain_std) if mis.gain_perturb_std > 0 else 0.0)
            if not kept:
                continue
            angle = _clip_sector(base + ray.rel_aoa_shift)
            factor *= 1.0 + float(gain_warp(mis, angle))
            energy = _pulse_energy(cluster.mean_delay + ray.rel_delay, gen.pulse)
            sources.append((angle, ray.gain * math.sqrt(energy) * factor))
    return sources


def generate_paired_scenario(gen: GeneratorConfig, rng: np.random.Generator,
                             sample_id: int = 0) -> ScenarioSample:
    """One paired draw: shared clusters, comm channel + covariance, radar covariance.

    Pure function of (gen, rng state): the same seeded generator reproduces the
    sample bit for bit.
    """
    clusters = _draw_clusters(gen, rng)
    taps = channel_taps(clusters, tx=gen.rsu, rx=gen.vehicle, pulse=gen.pulse)
    freq = channel_freq_response(taps, gen.num_subcarriers)
    comm_cov = comm_covariance(freq, gen.vehicle.num_antennas)
    sources = _radar_sources(clusters, gen, rng)
    snapshots = simulate_radar_snapshots(sources, gen.rsu, gen.radar, rng)
    radar_cov = sample_covariance(snapshots)
    return ScenarioSample(id=sample_id, clusters_comm=clusters, comm_taps=taps,
                          radar_cov=radar_cov, comm_cov=comm_cov)
