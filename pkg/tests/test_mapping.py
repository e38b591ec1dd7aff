import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ajscc.errors import SourceRangeError, ValidationError
from ajscc.mapping import (
    MappingConfig,
    build_mapping,
    compose_line_index,
    decode,
    decode_batch,
    encode,
    encode_batch,
    expand_line_index,
    round_half_away,
)
from oracles import curve_grid, line_sequence, nearest_on_grid, quantized_point


def mp(ranges, levels, d_max):
    return build_mapping(MappingConfig(ranges, levels, d_max))


# --- build_mapping ---------------------------------------------------------


def test_build_2d():
    m = mp((1, 1), (4,), 4)
    assert m.line_length == 1.0
    assert m.spacings == pytest.approx((1 / 3,))


def test_build_3d():
    m = mp((1, 1, 1), (2, 2), 4)
    assert m.line_length == 1.0
    assert m.spacings == (1.0, 1.0)


@pytest.mark.parametrize(
    "ranges, levels, d_max, field",
    [
        ((1, 1), (1,), 4, "levels[0]"),
        ((1, 1, 1), (3, 0), 4, "levels[1]"),
        ((1, 1), (2.5,), 4, "levels[0]"),
        ((1, -1), (4,), 4, "ranges[1]"),
        ((0, 1), (4,), 4, "ranges[0]"),
        ((1, 1), (4,), 0, "d_max"),
        ((1,), (), 4, "dimensions"),
        ((1, 1, 1), (4,), 4, "levels"),
    ],
)
def test_validation_names_field(ranges, levels, d_max, field):
    with pytest.raises(ValidationError) as e:
        MappingConfig(ranges, levels, d_max)
    assert e.value.field == field


def test_line_length_times_lines_is_dmax():
    m = mp((1, 2, 3), (7, 11), 1234.5)
    assert math.isclose(m.line_length * 77, 1234.5, rel_tol=1e-15)


# --- encode / decode examples ------------------------------------------------


def test_encode_2d_example():
    assert encode(mp((1, 1), (4,), 4), (0.25, 0.5)) == pytest.approx(2.25)


def test_encode_3d_example():
    assert encode(mp((1, 1, 1), (2, 2), 4), (0.2, 0.9, 0.4)) == pytest.approx(1.8)


@pytest.mark.parametrize("levels", [(4,), (2, 2), (3, 5, 2)])
def test_origin_encodes_to_zero(levels):
    m = mp((1,) * (len(levels) + 1), levels, 10)
    assert encode(m, (0,) * (len(levels) + 1)) == 0.0


def test_decode_2d_example():
    out = decode(mp((1, 1), (4,), 4), 2.25)
    assert out.values == pytest.approx((0.25, 2 / 3))
    assert out.line_indices == (2,)
    assert abs(out.values[1] - 0.5) == pytest.approx(1 / 6)


def test_decode_zero_is_origin():
    assert decode(mp((1, 1, 1), (3, 4), 12), 0.0).values == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("excess", [0.3, 1e9])
def test_decode_clamps_above(excess):
    m = mp((1, 1, 2), (3, 4), 12)
    assert decode(m, 12 + excess) == decode(m, 12)


def test_decode_clamps_below():
    m = mp((1, 1), (5,), 3)
    assert decode(m, -0.7) == decode(m, 0.0)


def test_encode_rejects_out_of_range():
    m = mp((1, 2), (4,), 4)
    with pytest.raises(SourceRangeError, match="component 2"):
        encode(m, (0.5, 2.1))
    with pytest.raises(SourceRangeError):
        encode(m, (-0.1, 1.0))
    with pytest.raises(SourceRangeError):
        encode(m, (0.5, float("nan")))


def test_round_half_away():
    assert list(round_half_away([0.5, 1.5, 2.5, -0.5, 0.49999999999999994])) == [1, 2, 3, -1, 0]


# --- line ordering -----------------------------------------------------------


@pytest.mark.parametrize("levels", [(4,), (2, 2), (3, 4), (2, 3, 4), (3, 2, 2, 3)])
def test_line_index_matches_traversal_oracle(levels):
    seq = line_sequence(levels)
    digits = np.array(seq)
    assert list(compose_line_index(levels, digits)) == list(range(len(seq)))
    assert (expand_line_index(levels, np.arange(len(seq))) == digits).all()


@pytest.mark.parametrize("levels", [(3, 4), (2, 3, 4)])
def test_adjacent_lines_differ_by_one_step(levels):
    d = expand_line_index(levels, np.arange(math.prod(levels)))
    steps = np.abs(np.diff(d, axis=0)).sum(axis=1)
    assert (steps == 1).all()


def test_every_line_round_trips():
    levels = (3, 2, 4)
    m = mp((1, 1, 1, 1), levels, 24)
    lines = np.arange(24)
    # decode the midpoint of each line and re-encode it
    values, digits = decode_batch(m, (lines + 0.5) * m.line_length)
    assert (compose_line_index(levels, digits) == lines).all()
    assert np.allclose(encode_batch(m, values), (lines + 0.5) * m.line_length)


def test_junction_goes_to_higher_line():
    m = mp((1, 1), (4,), 4)
    # end of line 0 and start of line 1 share the scalar 1.0
    assert encode(m, (1.0, 0.0)) == 1.0
    out = decode(m, 1.0)
    assert out.line_indices == (1,)
    assert out.values[0] == 1.0


# --- properties ------------------------------------------------------------------


@st.composite
def mapping_and_source(draw, max_dims=5, max_lines=10_000):
    n = draw(st.integers(2, max_dims))
    levels = []
    budget = max_lines
    for _ in range(n - 1):
        lv = draw(st.integers(2, max(2, min(64, budget // 2))))
        levels.append(lv)
        budget //= lv
        if budget < 2:
            budget = 2
    ranges = draw(st.lists(st.floats(0.01, 100), min_size=n, max_size=n))
    d_max = draw(st.floats(1.0, 1e4))
    frac = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    frac[0] = min(max(frac[0], 1e-9), 1 - 1e-9)
    source = [f * r for f, r in zip(frac, ranges)]
    return mp(tuple(ranges), tuple(levels), d_max), source


@settings(max_examples=300, deadline=None)
@given(mapping_and_source())
def test_round_trip_property(case):
    m, s = case
    x = encode(m, s)
    assert 0.0 <= x <= m.d_max
    out = decode(m, x)
    r = m.config.ranges
    assert abs(out.values[0] - s[0]) <= 1e-9 * r[0]
    for k in range(1, len(s)):
        assert abs(out.values[k] - s[k]) <= m.spacings[k - 1] / 2 + 1e-9


@settings(max_examples=200, deadline=None)
@given(mapping_and_source(max_dims=4, max_lines=500), st.floats(-1, 1))
def test_noise_locality(case, u):
    """Small perturbations move only the continuous coordinate, by R1/d per unit."""
    m, s = case
    x = encode(m, s)
    base = decode(m, x)
    d = m.line_length
    offset = x - math.floor(x / d) * d
    room = min(offset, d - offset)
    n = 0.9 * u * room
    moved = decode(m, x + n)
    assert moved.line_indices == base.line_indices
    assert abs(moved.values[0] - base.values[0]) == pytest.approx(m.config.ranges[0] / d * abs(n), abs=1e-9)
    gain = m.config.ranges[0] * m.n_lines / m.d_max
    assert gain == pytest.approx(m.config.ranges[0] / d)


@pytest.mark.parametrize(
    "ranges, levels, d_max",
    [((1, 1), (4,), 4), ((2, 1, 3), (3, 4), 50), ((1, 1, 1, 1), (2, 3, 2), 7)],
)
def test_brute_force_nearest_point(ranges, levels, d_max):
    coords, lengths = curve_grid(ranges, levels, d_max, points_per_line=2000)
    m = mp(ranges, levels, d_max)
    pitch = m.line_length / 2000
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = rng.uniform(0, 1, len(ranges)) * ranges
        want = nearest_on_grid(coords, lengths, quantized_point(s, ranges, levels))
        assert abs(encode(m, s) - want) <= pitch + 1e-9
