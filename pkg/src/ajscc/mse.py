"""Mean-square-error analysis of the N:1 mapping and stage-count optimization."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SearchBudgetError, ValidationError
from .mapping import Mapping, MappingConfig, decode_batch, encode_batch

DEFAULT_L_HI = 500
DEFAULT_BUDGET = 10**8
_MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian channel noise referenced to unit signal power.

    ``sigma_n2 = 10 ** (-snr_db / 10)``; ``snr_db = inf`` gives a noiseless channel.
    """

    snr_db: float

    @property
    def sigma_n2(self) -> float:
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)

    @classmethod
    def from_variance(cls, sigma_n2: float) -> "NoiseModel":
        if sigma_n2 < 0:
            raise ValidationError("sigma_n2", f"must be non-negative, got {sigma_n2}")
        if sigma_n2 == 0:
            return cls(math.inf)
        return cls(-10.0 * math.log10(sigma_n2))


@dataclass(frozen=True)
class MseBreakdown:
    noise_term: float
    quantization_terms: tuple[float, ...]

    @property
    def total(self) -> float:
        return self.noise_term + math.fsum(self.quantization_terms)


@dataclass(frozen=True)
class OptimizationResult:
    optimal_levels: tuple[int, ...]
    optimal_mse: float
    search_bound: int
    evaluations: int


def quantization_term(r: float, levels: int) -> float:
    return (r * r) / (12.0 * (levels - 1) ** 2)


def closed_form_mse(config: MappingConfig, noise: NoiseModel) -> MseBreakdown:
    """Closed-form sum MSE: channel noise on the continuous dimension plus
    uniform quantization error ``Delta_k**2 / 12`` on each quantized one."""
    gain = config.ranges[0] * math.prod(config.levels) / config.d_max
    q = tuple(quantization_term(config.ranges[k + 1], lv) for k, lv in enumerate(config.levels))
    return MseBreakdown(noise_term=gain * gain * noise.sigma_n2, quantization_terms=q)


def monte_carlo_mse(mapping: Mapping, noise: NoiseModel, trials: int, seed: int) -> float:
    """Empirical sum MSE over uniformly drawn sources.

    Trials are processed in fixed-size blocks, each with its own generator
    spawned from ``seed``, so the result does not depend on how blocks are
    scheduled.
    """
    if trials < 1:
        raise ValidationError("trials", f"must be >= 1, got {trials}")
    ranges = np.asarray(mapping.config.ranges)
    sigma = math.sqrt(noise.sigma_n2)
    block_sums = []
    for b, start in enumerate(range(0, trials, _MC_BLOCK)):
        n = min(_MC_BLOCK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        s = rng.uniform(0.0, 1.0, size=(n, len(ranges))) * ranges
        x = encode_batch(mapping, s)
        if sigma > 0:
            x = x + sigma * rng.standard_normal(n)
        s_hat, _ = decode_batch(mapping, x)
        block_sums.append(float(np.sum((s - s_hat) ** 2)))
    return math.fsum(block_sums) / trials


def search_space_size(n_quantized: int, l_hi: int, symmetric: bool) -> int:
    values = l_hi - 1
    if symmetric:
        return math.comb(values + n_quantized - 1, n_quantized)
    return values**n_quantized


def optimize_levels(
    n: int,
    ranges: Sequence[float],
    d_max: float,
    noise: NoiseModel,
    l_hi: int = DEFAULT_L_HI,
    budget: int = DEFAULT_BUDGET,
) -> OptimizationResult:
    """Exhaustive integer minimization of the closed-form MSE over
    ``L_k in [2, l_hi]``.

    When every quantized dimension has the same range the objective is
    symmetric in the stage counts, and only non-decreasing tuples are
    searched. Ties resolve to the lexicographically smallest tuple.
    """
    if n < 2:
        raise ValidationError("dimensions", f"must be >= 2, got {n}")
    if l_hi < 2:
        raise ValidationError("l_hi", f"must be >= 2, got {l_hi}")
    if len(ranges) != n:
        raise ValidationError("ranges", f"expected {n} ranges, got {len(ranges)}")
    # validates ranges and d_max
    MappingConfig(tuple(ranges), (2,) * (n - 1), d_max)

    nq = n - 1
    symmetric = len(set(float(r) for r in ranges[1:])) == 1
    size = search_space_size(nq, l_hi, symmetric)
    if size > budget:
        raise SearchBudgetError(
            f"search over {nq} stage counts up to {l_hi} needs {size} evaluations, budget is {budget}"
        )

    coef = (ranges[0] / d_max) ** 2 * noise.sigma_n2
    values = np.arange(2, l_hi + 1)
    q = [np.asarray([quantization_term(r, lv) for lv in values]) for r in ranges[1:]]

    if nq == 1:
        total = coef * values.astype(float) ** 2 + q[0]
        i = int(np.argmin(total))
        return OptimizationResult((int(values[i]),), float(total[i]), l_hi, size)

    # vectorize over the last two stage counts, loop over the rest
    a, b = np.meshgrid(np.arange(len(values)), np.arange(len(values)), indexing="ij")
    a, b = a.ravel(), b.ravel()
    if symmetric:
        keep = a <= b
        a, b = a[keep], b[keep]
    pair_prod = values[a].astype(float) * values[b]
    pair_q = q[nq - 2][a] + q[nq - 1][b]

    if symmetric:
        prefixes = itertools.combinations_with_replacement(range(len(values)), nq - 2)
    else:
        prefixes = itertools.product(range(len(values)), repeat=nq - 2)

    best_val = math.inf
    best = None
    for prefix in prefixes:
        lo = np.searchsorted(a, prefix[-1]) if (symmetric and prefix) else 0
        p = math.prod(int(values[i]) for i in prefix)
        qs = sum(q[k][i] for k, i in enumerate(prefix))
        total = coef * (p * pair_prod[lo:]) ** 2 + (qs + pair_q[lo:])
        j = int(np.argmin(total))
        if total[j] < best_val:
            best_val = float(total[j])
            best = tuple(int(values[i]) for i in prefix) + (int(values[a[lo + j]]), int(values[b[lo + j]]))

    # report the value exactly as closed_form_mse computes it
    cfg = MappingConfig(tuple(ranges), best, d_max)
    return OptimizationResult(best, closed_form_mse(cfg, noise).total, l_hi, size)
