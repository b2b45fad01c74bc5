"""Phase-quantized beam codebooks, search strategies, spectral efficiency, and the
overhead-aware effective rate."""

import math
from dataclasses import dataclass

import numpy as np

from .covariance import ToeplitzColumn, toeplitz_from_column
from .neuralnet import NetworkParams, aps_net_apply, col_net_apply
from .scenario import ChannelFreq, UlaConfig, steering_vector
from .spectrum import Aps, DftGrid, aps, from_log_scale, similarity, to_log_scale

STRATEGIES = ("exhaustive", "radar_only", "aps_pred", "cov_pred")
DEFAULT_WINDOWS = {"exhaustive": None, "radar_only": 12, "aps_pred": 12, "cov_pred": 2}


class MissingModelError(ValueError):
    """A search strategy needs a trained network that was not supplied."""


@dataclass
class Codebook:
    """Constant-modulus beams with phases quantized to 2^phase_bits levels."""

    codewords: np.ndarray  # (num_beams, N)
    phase_bits: int
    angles: np.ndarray  # nominal pointing angles, ascending


@dataclass
class RateConfig:
    bandwidth: float  # Hz
    tx_power: float  # watts
    noise_power: float  # watts
    symbol_period: float  # seconds
    coherence_time: float  # seconds
    num_subcarriers: int

    def __post_init__(self):
        if min(self.bandwidth, self.tx_power, self.noise_power,
               self.symbol_period, self.coherence_time, self.num_subcarriers) <= 0:
            raise ValueError("rate parameters must be positive")


@dataclass
class SearchResult:
    tx_index: int
    rx_index: int
    spectral_efficiency: float  # bits/s/Hz
    overhead_blocks: int


@dataclass
class RateRow:
    strategy: str
    tx_index: int
    rx_index: int
    overhead_blocks: int
    spectral_efficiency: float
    rate: float  # bits/s
    similarity: float  # windowed overlap of the guiding spectrum vs the true one


@dataclass
class RateReport:
    strategy: str
    mean_rate: float
    mean_similarity: float
    rows: list


def build_codebook(n: int, phase_bits: int, spacing: float = 0.5) -> Codebook:
    """Sector codebook: beam m points at arcsin((2m - n - 1)/n) for m = 1..n, with
    entries (1/sqrt(n)) exp(j zeta) and zeta rounded to the nearest multiple of
    2 pi / 2^phase_bits (exact halfway cases round to the smaller phase)."""
    if n < 2 or phase_bits < 1:
        raise ValueError("need n >= 2 and at least one phase bit")
    m = np.arange(1, n + 1)
    angles = np.arcsin((2.0 * m - n - 1.0) / n)
    cfg = UlaConfig(num_antennas=n, spacing=spacing)
    q = 2.0 * np.pi / (2 ** phase_bits)
    words = np.empty((n, n), dtype=np.complex128)
    for i, ang in enumerate(angles):
        phases = np.mod(np.angle(steering_vector(cfg, ang)), 2.0 * np.pi)
        level = np.ceil(phases / q - 0.5)  # round half down
        words[i] = np.exp(1j * q * level) / math.sqrt(n)
    return Codebook(codewords=words, phase_bits=phase_bits, angles=angles)


def reference_angle(d: Aps, grid: DftGrid) -> float:
    """Grid angle of the strongest spectrum bin (first bin wins ties)."""
    if d.scale != "linear":
        raise ValueError("reference angle is defined on linear-scale spectra")
    return float(grid.angles[int(np.argmax(d.values))])


def candidate_window(cb: Codebook, ref: float, size: int) -> np.ndarray:
    """The `size` beams whose nominal angles are closest to `ref`, ascending.
    Ties in distance go to the lower beam index."""
    if not 1 <= size <= len(cb.angles):
        raise ValueError(f"window size must be in [1, {len(cb.angles)}]")
    order = np.argsort(np.abs(cb.angles - ref), kind="stable")
    return np.sort(order[:size])


def _pair_powers(ch: ChannelFreq, tx_words: np.ndarray, rx_words: np.ndarray) -> np.ndarray:
    """sum_k |w^H H[k] f|^2 for every candidate pair; shape (num_tx, num_rx)."""
    # (K, R, N_rsu) = (R, N_v)* @ (K, N_v, N_rsu), then project on tx beams
    proj = np.matmul(rx_words.conj()[None, :, :], ch.response)
    amps = np.matmul(proj, tx_words.T[None, :, :])  # (K, R, T)
    return (np.abs(amps) ** 2).sum(axis=0).T


def spectral_efficiency(ch: ChannelFreq, f: np.ndarray, w: np.ndarray, cfg: RateConfig) -> float:
    """Single-stream SE = (1/K) sum_k log2(1 + P/(K sigma^2) |w^H H[k] f|^2)."""
    k = ch.num_subcarriers
    if f.shape[0] != ch.response.shape[2] or w.shape[0] != ch.response.shape[1]:
        raise ValueError("beam lengths do not match the channel dimensions")
    gain = np.abs(np.einsum("v,kvu,u->k", w.conj(), ch.response, f)) ** 2
    snr = cfg.tx_power / (k * cfg.noise_power) * gain
    return float(np.mean(np.log2(1.0 + snr)))


def beam_search(ch: ChannelFreq, tx_cb: Codebook, tx_candidates, rx_cb: Codebook,
                rx_candidates, cfg: RateConfig) -> SearchResult:
    """Exhaustive sweep over the candidate cross-product.

    Picks the pair maximizing the wideband received power sum_k |w^H H[k] f|^2
    (ties go to the lexicographically smallest (tx, rx)); the overhead is one
    training block per evaluated pair.
    """
    tx_candidates = np.asarray(tx_candidates, dtype=int)
    rx_candidates = np.asarray(rx_candidates, dtype=int)
    if tx_candidates.size == 0 or rx_candidates.size == 0:
        raise ValueError("candidate lists must be nonempty")
    powers = _pair_powers(ch, tx_cb.codewords[tx_candidates], rx_cb.codewords[rx_candidates])
    flat = int(np.argmax(powers))  # first maximum = smallest (tx, rx) in C order
    ti, ri = divmod(flat, powers.shape[1])
    tx, rx = int(tx_candidates[ti]), int(rx_candidates[ri])
    se = spectral_efficiency(ch, tx_cb.codewords[tx], rx_cb.codewords[rx], cfg)
    return SearchResult(tx_index=tx, rx_index=rx, spectral_efficiency=se,
                        overhead_blocks=int(tx_candidates.size * rx_candidates.size))


def effective_rate(se: float, overhead_blocks: int, cfg: RateConfig) -> float:
    """Rate discounted by the share of the coherence time spent training:
    max(0, 1 - overhead * T_sym / T_coh) * B * se."""
    if se < 0:
        raise ValueError("spectral efficiency must be nonnegative")
    frac = 1.0 - overhead_blocks * cfg.symbol_period / cfg.coherence_time
    return max(0.0, frac) * cfg.bandwidth * se


@dataclass
class StrategyInputs:
    """Everything a per-sample strategy run needs besides the models."""

    ch: ChannelFreq
    radar_aps: Aps  # linear
    comm_aps: Aps  # linear, ground truth for similarity
    radar_col: ToeplitzColumn


def predicted_comm_aps(strategy: str, inputs: StrategyInputs, grid: DftGrid,
                       aps_net: NetworkParams = None, col_net: NetworkParams = None,
                       floor_db: float = -80.0) -> Aps:
    """The linear-scale spectrum each strategy uses to center its beam window."""
    if strategy == "radar_only":
        return inputs.radar_aps
    if strategy == "aps_pred":
        if aps_net is None:
            raise MissingModelError("aps_pred needs trained spectrum-prediction params")
        return from_log_scale(aps_net_apply(aps_net, to_log_scale(inputs.radar_aps, floor_db)))
    if strategy == "cov_pred":
        if col_net is None:
            raise MissingModelError("cov_pred needs trained column-prediction params")
        pred_col = col_net_apply(col_net, inputs.radar_col)
        return aps(toeplitz_from_column(pred_col), grid)
    raise ValueError(f"strategy {strategy!r} has no guiding spectrum")


def run_strategy(inputs: StrategyInputs, strategy: str, tx_cb: Codebook, rx_cb: Codebook,
                 grid: DftGrid, rate_cfg: RateConfig, aps_net: NetworkParams = None,
                 col_net: NetworkParams = None, window: int = None,
                 similarity_window: int = 5, floor_db: float = -80.0) -> RateRow:
    """One sample through one search strategy.

    The infrastructure side sweeps either its full codebook (exhaustive) or a
    window of beams around the strategy's reference angle; the vehicle side is
    swept in full in every strategy, so the overhead is (window or N) x N_v.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    num_tx = len(tx_cb.angles)
    rx_candidates = np.arange(len(rx_cb.angles))
    if strategy == "exhaustive":
        tx_candidates = np.arange(num_tx)
        sim = math.nan
    else:
        guide = predicted_comm_aps(strategy, inputs, grid, aps_net, col_net, floor_db)
        if window is None:
            window = DEFAULT_WINDOWS[strategy]
        tx_candidates = candidate_window(tx_cb, reference_angle(guide, grid), window)
        sim = similarity(guide, inputs.comm_aps, similarity_window)
    result = beam_search(inputs.ch, tx_cb, tx_candidates, rx_cb, rx_candidates, rate_cfg)
    rate = effective_rate(result.spectral_efficiency, result.overhead_blocks, rate_cfg)
    return RateRow(strategy=strategy, tx_index=result.tx_index, rx_index=result.rx_index,
                   overhead_blocks=result.overhead_blocks,
                   spectral_efficiency=result.spectral_efficiency, rate=rate, similarity=sim)
