"""N:1 rectangular Shannon mapping.

The first source dimension is carried continuously along a set of parallel
lines; every other dimension is quantized and selects which line is used.
The transmitted scalar is the accumulated length along those lines from the
origin to the mapped point.

Lines are visited in a boustrophedon order: the continuous coordinate
reverses direction on every other line, and each quantized digit reverses
whenever the digits above it sit on an odd position. Consecutive lines
therefore differ by one step in exactly one quantized dimension, so a
small channel perturbation that crosses a line boundary lands on a
geometric neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SourceRangeError, ValidationError

__all__ = [
    "MappingConfig",
    "Mapping",
    "DecodedVector",
    "build_mapping",
    "encode",
    "decode",
    "encode_batch",
    "decode_batch",
    "compose_line_index",
    "expand_line_index",
    "round_half_away",
]


def round_half_away(x):
    """Round to nearest integer, ties away from zero (numpy-aware)."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    fl = np.floor(a)
    r = fl + (a - fl >= 0.5)
    return np.copysign(r, x)


@dataclass(frozen=True)
class MappingConfig:
    """Geometry of an N:1 mapping.

    Parameters
    ----------
    ranges : sequence of float
        Width ``R_k`` of each (already shifted) source range ``[0, R_k]``.
    levels : sequence of int
        Stage counts ``L_1..L_{N-1}`` for dimensions 2..N.
    d_max : float
        Largest accumulated length the output may take.
    """

    ranges: tuple[float, ...]
    levels: tuple[int, ...]
    d_max: float

    def __post_init__(self):
        ranges = tuple(float(r) for r in self.ranges)
        object.__setattr__(self, "ranges", ranges)
        if len(ranges) < 2:
            raise ValidationError("dimensions", f"need at least 2 sources, got {len(ranges)}")
        for k, r in enumerate(ranges):
            if not (math.isfinite(r) and r > 0):
                raise ValidationError(f"ranges[{k}]", f"must be a positive real, got {r!r}")

        levels = []
        for k, lv in enumerate(self.levels):
            if isinstance(lv, bool) or int(lv) != lv:
                raise ValidationError(f"levels[{k}]", f"must be an integer, got {lv!r}")
            if lv < 2:
                raise ValidationError(f"levels[{k}]", f"must be an integer greater than 1, got {lv}")
            levels.append(int(lv))
        if len(levels) != len(ranges) - 1:
            raise ValidationError(
                "levels", f"expected {len(ranges) - 1} stage counts for {len(ranges)} sources, got {len(levels)}"
            )
        object.__setattr__(self, "levels", tuple(levels))

        d_max = float(self.d_max)
        if not (math.isfinite(d_max) and d_max > 0):
            raise ValidationError("d_max", f"must be a positive real, got {self.d_max!r}")
        object.__setattr__(self, "d_max", d_max)

    @property
    def dimensions(self) -> int:
        return len(self.ranges)


@dataclass(frozen=True)
class Mapping:
    config: MappingConfig
    line_length: float
    spacings: tuple[float, ...]
    n_lines: int = field(repr=False)

    @property
    def dimensions(self) -> int:
        return self.config.dimensions

    @property
    def d_max(self) -> float:
        return self.config.d_max


class DecodedVector(NamedTuple):
    values: tuple[float, ...]
    line_indices: tuple[int, ...]


def build_mapping(config: MappingConfig) -> Mapping:
    n_lines = math.prod(config.levels)
    d = config.d_max / n_lines
    spacings = tuple(config.ranges[k + 1] / (lv - 1) for k, lv in enumerate(config.levels))
    return Mapping(config=config, line_length=d, spacings=spacings, n_lines=n_lines)


def compose_line_index(levels: Sequence[int], digits) -> np.ndarray:
    """Combine per-dimension line indices into the traversal position.

    ``digits[..., 0]`` is the least significant digit (dimension 2).
    """
    digits = np.asarray(digits, dtype=np.int64)
    m = np.zeros(digits.shape[:-1], dtype=np.int64)
    for k in range(len(levels) - 1, -1, -1):
        lv = levels[k]
        e = np.where(m % 2 == 0, digits[..., k], lv - 1 - digits[..., k])
        m = m * lv + e
    return m


def expand_line_index(levels: Sequence[int], m) -> np.ndarray:
    """Inverse of :func:`compose_line_index`."""
    m = np.asarray(m, dtype=np.int64)
    out = np.empty(m.shape + (len(levels),), dtype=np.int64)
    base = 1
    for k, lv in enumerate(levels):
        e = (m // base) % lv
        higher = m // (base * lv)
        out[..., k] = np.where(higher % 2 == 0, e, lv - 1 - e)
        base *= lv
    return out


def _check_sources(mapping: Mapping, s: np.ndarray) -> None:
    ranges = np.asarray(mapping.config.ranges)
    if s.shape[-1] != len(ranges):
        raise SourceRangeError(f"expected {len(ranges)} components, got {s.shape[-1]}")
    bad = ~((s >= 0) & (s <= ranges))
    if bad.any():
        k = int(np.argwhere(bad)[0][-1])
        v = s[..., k][bad[..., k]][0]
        raise SourceRangeError(f"source component {k + 1} = {float(v)!r} outside range [0, {float(ranges[k])!r}]")


def encode_batch(mapping: Mapping, sources) -> np.ndarray:
    """Encode an ``(n, N)`` array of source vectors to ``n`` scalars."""
    s = np.atleast_2d(np.asarray(sources, dtype=float))
    _check_sources(mapping, s)
    cfg = mapping.config
    d = mapping.line_length

    digits = np.empty(s.shape[:-1] + (len(cfg.levels),), dtype=np.int64)
    for k, lv in enumerate(cfg.levels):
        i = round_half_away(s[..., k + 1] / mapping.spacings[k]).astype(np.int64)
        digits[..., k] = np.clip(i, 0, lv - 1)
    m = compose_line_index(cfg.levels, digits)

    frac = s[..., 0] / cfg.ranges[0] * d
    offset = np.where(m % 2 == 0, frac, d - frac)
    return np.clip(m * d + offset, 0.0, cfg.d_max)


def encode(mapping: Mapping, source: Sequence[float]) -> float:
    """Map one source vector to its accumulated length in ``[0, D_max]``."""
    s = np.asarray(source, dtype=float)
    if s.ndim != 1:
        raise SourceRangeError("encode expects a single source vector; use encode_batch for arrays")
    return float(encode_batch(mapping, s[None, :])[0])


def decode_batch(mapping: Mapping, received) -> tuple[np.ndarray, np.ndarray]:
    """Decode an array of received scalars.

    Returns ``(values, line_indices)`` with shapes ``(n, N)`` and ``(n, N-1)``.
    Scalars outside ``[0, D_max]`` are clamped first.
    """
    cfg = mapping.config
    d = mapping.line_length
    r = np.clip(np.atleast_1d(np.asarray(received, dtype=float)), 0.0, cfg.d_max)

    m = np.clip(np.floor(r / d).astype(np.int64), 0, mapping.n_lines - 1)
    offset = np.clip(r - m * d, 0.0, d)
    frac = np.where(m % 2 == 0, offset, d - offset)

    digits = expand_line_index(cfg.levels, m)
    values = np.empty(r.shape + (cfg.dimensions,), dtype=float)
    values[..., 0] = frac / d * cfg.ranges[0]
    for k, delta in enumerate(mapping.spacings):
        values[..., k + 1] = digits[..., k] * delta
    return values, digits


def decode(mapping: Mapping, received: float) -> DecodedVector:
    """Recover the source vector nearest to a received scalar."""
    values, digits = decode_batch(mapping, [received])
    return DecodedVector(tuple(float(v) for v in values[0]), tuple(int(i) for i in digits[0]))
