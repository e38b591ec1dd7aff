"""Frequency position modulation and multiplexing (FPMM) link simulation.

Each node sends one unit-amplitude tone whose frequency position encodes a
quantized level. Positions of all nodes are interleaved across the band
(position ``p = level * n_node + node``), so any single node's comb spans
the full bandwidth. The receiver takes one DFT over the whole observation
window and, for each node, picks the strongest bin among that node's own
comb.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ResolutionError, ValidationError
from .mapping import Mapping, encode, round_half_away
from .seeding import derive_seed, rng_for

# 64-bit LCG (Knuth MMIX constants)
LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FpmmConfig:
    """Link parameters.

    ``f_s_hz=None`` selects ``n_q * n_node * delta_f``, the slowest complex
    sample rate at which the two band-edge positions do not alias onto the
    same DFT bin.
    """

    bandwidth_hz: float
    n_q: int = 100
    n_0: int = 2
    n_node: int = 1000
    t_win_s: float = 10.0
    f_s_hz: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.bandwidth_hz) and self.bandwidth_hz > 0):
            raise ValidationError("bandwidth_hz", f"must be positive, got {self.bandwidth_hz!r}")
        for name in ("n_q", "n_0", "n_node"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValidationError(name, f"must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_q < 2:
            raise ValidationError("n_q", f"must be >= 2, got {self.n_q}")
        if self.n_0 < 1 or self.n_q % self.n_0:
            raise ValidationError("n_0", f"must divide n_q={self.n_q}, got {self.n_0}")
        if self.n_node < 1:
            raise ValidationError("n_node", f"must be >= 1, got {self.n_node}")
        if not (math.isfinite(self.t_win_s) and self.t_win_s > 0):
            raise ValidationError("t_win_s", f"must be positive, got {self.t_win_s!r}")
        if self.f_s_hz is not None and not self.f_s_hz >= self.bandwidth_hz:
            raise ValidationError("f_s_hz", f"must be >= bandwidth {self.bandwidth_hz}, got {self.f_s_hz!r}")

    @property
    def n_lines(self) -> int:
        return self.n_q // self.n_0

    @property
    def n_positions(self) -> int:
        return self.n_q * self.n_node

    @property
    def delta_f_hz(self) -> float:
        return self.bandwidth_hz / (self.n_positions - 1)

    @property
    def sample_rate_hz(self) -> float:
        if self.f_s_hz is not None:
            return float(self.f_s_hz)
        return self.n_positions * self.delta_f_hz

    @property
    def n_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.t_win_s))


def resolvable_points(bandwidth_hz: float, t_win_s: float) -> int:
    """Frequency points in the band at DFT resolution ``1 / t_win_s``."""
    # guard against B*T landing a hair below an integer
    return int(math.floor(bandwidth_hz * t_win_s * (1 + 1e-12)))


def max_nodes(bandwidth_hz: float, n_q: int, t_win_s: float) -> int:
    return resolvable_points(bandwidth_hz, t_win_s) // n_q


@dataclass(frozen=True)
class FrequencyPlan:
    bandwidth_hz: float
    n_q: int
    n_node: int
    delta_f_hz: float

    def position_index(self, node, level):
        return np.asarray(level) * self.n_node + np.asarray(node)

    def frequency(self, node, level):
        return -self.bandwidth_hz / 2 + self.position_index(node, level) * self.delta_f_hz

    def frequencies(self) -> np.ndarray:
        """All position frequencies, shape ``(n_q, n_node)``."""
        p = np.arange(self.n_q * self.n_node).reshape(self.n_q, self.n_node)
        return -self.bandwidth_hz / 2 + p * self.delta_f_hz


def plan_frequencies(config: FpmmConfig) -> FrequencyPlan:
    limit = max_nodes(config.bandwidth_hz, config.n_q, config.t_win_s)
    if config.n_node > limit:
        raise CapacityError(
            f"{config.n_node} nodes exceed capacity {limit} "
            f"(B_w={config.bandwidth_hz} Hz, T_win={config.t_win_s} s, N_q={config.n_q})"
        )
    if 1.0 / config.t_win_s > config.delta_f_hz:
        raise ResolutionError(f"resolution 1/T_win={1 / config.t_win_s} Hz exceeds spacing {config.delta_f_hz} Hz")
    return FrequencyPlan(config.bandwidth_hz, config.n_q, config.n_node, config.delta_f_hz)


def quantize_encoded(value: float, d_max: float, n_q: int) -> int:
    return int(round_half_away(value / d_max * (n_q - 1)))


def sensor_level(mapping: Mapping, source: Sequence[float], n_q: int) -> int:
    """Quantized FPMM level for one sensor reading vector."""
    return quantize_encoded(encode(mapping, source), mapping.d_max, n_q)


# --- scrambler -------------------------------------------------------------


@dataclass(frozen=True)
class ScramblerState:
    seed: int
    n_q: int


def _lcg_jump(steps: int) -> tuple[int, int]:
    """Affine map (a, c) with ``state_steps = a * state_0 + c mod 2**64``."""
    a, c = 1, 0
    mult, inc = LCG_MULT, LCG_INC
    while steps:
        if steps & 1:
            a = (a * mult) & _MASK64
            c = (c * mult + inc) & _MASK64
        inc = ((mult + 1) * inc) & _MASK64
        mult = (mult * mult) & _MASK64
        steps >>= 1
    return a, c


def scramble_offset(state: ScramblerState, slot: int) -> int:
    """Offset ``x_r`` for a slot: the (slot+1)-th LCG output, top 31 bits, mod n_q."""
    a, c = _lcg_jump(slot + 1)
    s = (a * (state.seed & _MASK64) + c) & _MASK64
    return (s >> 33) % state.n_q


def scramble_offsets(seeds, n_q: int, slot: int) -> np.ndarray:
    """Vectorized :func:`scramble_offset` over an array of node seeds."""
    a, c = _lcg_jump(slot + 1)
    s = np.asarray(seeds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        s = s * np.uint64(a) + np.uint64(c)
    return ((s >> np.uint64(33)) % np.uint64(n_q)).astype(np.int64)


def scramble(x_q: int, state: ScramblerState, slot: int) -> int:
    return (x_q + scramble_offset(state, slot)) % state.n_q


def descramble(y: int, state: ScramblerState, slot: int) -> int:
    return (y - scramble_offset(state, slot)) % state.n_q


# --- physical layer ----------------------------------------------------------


def rayleigh_gains(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean-power circular complex Gaussian gains."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)


def synthesize(plan: FrequencyPlan, levels, config: FpmmConfig, seed: int, gains=None) -> np.ndarray:
    """Sum of one unit tone per node with independent uniform phases.

    ``gains`` optionally scales each node's tone (flat block fading).
    """
    levels = np.asarray(levels, dtype=np.int64)
    if levels.shape != (plan.n_node,):
        raise ValidationError("levels", f"expected {plan.n_node} levels, got shape {levels.shape}")
    if levels.min() < 0 or levels.max() >= plan.n_q:
        raise ValidationError("levels", f"must lie in [0, {plan.n_q - 1}]")

    rng = np.random.default_rng(seed)
    amp = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, plan.n_node))
    if gains is not None:
        amp = amp * np.asarray(gains)
    p = plan.position_index(np.arange(plan.n_node), levels)

    fs = config.sample_rate_hz
    n = config.n_samples
    f0 = -plan.bandwidth_hz / 2
    period = fs / plan.delta_f_hz
    k = int(round(period))
    if k >= 1 and abs(period - k) <= 1e-9 * period:
        # every tone is f0 + p*fs/k: one length-k inverse DFT gives a period
        spec = np.zeros(k, dtype=complex)
        np.add.at(spec, p % k, amp)
        x = np.resize(np.fft.ifft(spec) * k, n)
    else:
        f = (p * plan.delta_f_hz) / fs
        x = np.empty(n, dtype=complex)
        step = 4096
        for start in range(0, n, step):
            t = np.arange(start, min(start + step, n))
            x[start : start + len(t)] = np.exp(2j * np.pi * np.outer(t, f)) @ amp
    ramp = np.exp(2j * np.pi * np.mod(f0 / fs * np.arange(n), 1.0))
    return x * ramp


def noise_variance(snr_db: float, config: FpmmConfig) -> float:
    """Per-sample complex noise variance for a unit-power tone.

    The noise PSD is flat over the sampled band and integrates to
    ``10**(-snr_db/10)`` over the signal bandwidth ``B_w``.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 10.0 ** (-snr_db / 10.0) * config.sample_rate_hz / config.bandwidth_hz


def apply_channel(samples, snr_db: float, config: FpmmConfig, seed: int) -> np.ndarray:
    """Add circular complex Gaussian noise at the given per-tone SNR."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValidationError("samples", "must be nonempty")
    var = noise_variance(snr_db, config)
    if var == 0:
        return samples.copy()
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((samples.size, 2)).view(complex).reshape(samples.shape)
    return samples + math.sqrt(var / 2) * noise


def detect(samples, plan: FrequencyPlan, config: FpmmConfig) -> np.ndarray:
    """Per-node argmax over the node's comb of DFT magnitudes.

    Ties go to the lowest level (``np.argmax`` returns the first maximum).
    """
    if 1.0 / config.t_win_s > plan.delta_f_hz:
        raise ResolutionError(f"resolution 1/T_win={1 / config.t_win_s} Hz exceeds spacing {plan.delta_f_hz} Hz")
    samples = np.asarray(samples)
    n = config.n_samples
    if samples.shape != (n,):
        raise ValidationError("samples", f"expected {n} samples, got shape {samples.shape}")
    spectrum = np.abs(np.fft.fft(samples))
    bins = round_half_away(plan.frequencies() * (n / config.sample_rate_hz)).astype(np.int64) % n
    return np.argmax(spectrum[bins], axis=0)


# --- experiment ----------------------------------------------------------------


@dataclass
class LinkSnapshot:
    transmitted_levels: np.ndarray
    samples: np.ndarray
    snr_db: float
    fading_gains: np.ndarray | None = None


@dataclass
class MdrReport:
    snr_db: float
    n_node: int
    n_missed: int
    transmitted: np.ndarray  # (windows, n_node) sensor levels x_q
    detected: np.ndarray  # (windows, n_node) descrambled detections

    @property
    def windows(self) -> int:
        return self.transmitted.shape[0]

    @property
    def mdr(self) -> float:
        return self.n_missed / (self.n_node * self.windows)


def node_seeds(n_node: int, master_seed: int) -> np.ndarray:
    return rng_for(master_seed, "node-seeds").integers(0, 2**64, size=n_node, dtype=np.uint64)


def simulate_window(
    config: FpmmConfig,
    plan: FrequencyPlan,
    snr_db: float,
    master_seed: int,
    window: int,
    seeds: np.ndarray,
    fading: bool = False,
) -> tuple[LinkSnapshot, np.ndarray, np.ndarray]:
    """One observation window; returns ``(snapshot, x_q, detected x_q)``.

    Sensor levels, tone phases and fading gains depend only on
    ``(master_seed, window)``; the noise additionally depends on the SNR, so
    every point of an SNR sweep sees the same transmissions.
    """
    x_q = rng_for(master_seed, "levels", window).integers(0, config.n_q, size=config.n_node)
    offsets = scramble_offsets(seeds, config.n_q, window)
    y = (x_q + offsets) % config.n_q
    gains = rayleigh_gains(config.n_node, rng_for(master_seed, "fading", window)) if fading else None
    clean = synthesize(plan, y, config, derive_seed(master_seed, "phase", window), gains)
    rx = apply_channel(clean, snr_db, config, derive_seed(master_seed, "noise", window, float(snr_db)))
    y_hat = detect(rx, plan, config)
    x_hat = (y_hat - offsets) % config.n_q
    return LinkSnapshot(y, rx, snr_db, gains), x_q, x_hat


def run_mdr_experiment(
    config: FpmmConfig,
    snr_grid: Sequence[float],
    trials: int,
    master_seed: int,
    fading: bool = False,
    workers: int = 1,
) -> list[MdrReport]:
    """Miss-detection rate at each SNR, aggregated over ``trials`` windows."""
    if trials < 1:
        raise ValidationError("trials", f"must be >= 1, got {trials}")
    plan = plan_frequencies(config)
    seeds = node_seeds(config.n_node, master_seed)

    def one(job):
        snr, w = job
        _, x_q, x_hat = simulate_window(config, plan, snr, master_seed, w, seeds, fading)
        return x_q, x_hat

    jobs = [(float(snr), w) for snr in snr_grid for w in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    reports = []
    for i, snr in enumerate(snr_grid):
        chunk = results[i * trials : (i + 1) * trials]
        tx = np.stack([r[0] for r in chunk])
        det = np.stack([r[1] for r in chunk])
        reports.append(MdrReport(float(snr), config.n_node, int(np.sum(tx != det)), tx, det))
    return reports
