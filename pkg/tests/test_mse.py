import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ajscc.errors import SearchBudgetError, ValidationError
from ajscc.mapping import MappingConfig, build_mapping
from ajscc.mse import NoiseModel, closed_form_mse, monte_carlo_mse, optimize_levels
from oracles import mse_scan


def exact_mse(ranges, levels, d_max, sigma2):
    """Closed form evaluated in rational arithmetic."""
    r = [Fraction(x) for x in ranges]
    gain = r[0] * math.prod(levels) / Fraction(d_max)
    total = gain * gain * Fraction(sigma2)
    for k, lv in enumerate(levels):
        total += r[k + 1] ** 2 / (12 * (lv - 1) ** 2)
    return float(total)


def test_noise_model_variance():
    assert NoiseModel(30).sigma_n2 == pytest.approx(1e-3)
    assert NoiseModel(math.inf).sigma_n2 == 0.0
    assert NoiseModel.from_variance(1e-2).snr_db == pytest.approx(20)


def test_closed_form_3d_example():
    br = closed_form_mse(MappingConfig((1, 1, 1), (20, 20), 3000), NoiseModel(30))
    assert br.noise_term == pytest.approx((400 / 3000) ** 2 * 1e-3, rel=1e-12)
    assert br.noise_term == pytest.approx(1.778e-5, rel=1e-3)
    assert br.quantization_terms == pytest.approx(((1 / 12) / 361,) * 2, rel=1e-12)
    assert br.quantization_terms[0] == pytest.approx(2.308e-4, rel=1e-3)
    assert br.total == pytest.approx(4.794e-4, rel=1e-3)
    assert br.total == pytest.approx(exact_mse((1, 1, 1), (20, 20), 3000, Fraction(1, 1000)), rel=1e-13)


def test_closed_form_noiseless():
    br = closed_form_mse(MappingConfig((1, 1, 1), (2, 2), 10), NoiseModel(math.inf))
    assert br.noise_term == 0
    assert br.total == pytest.approx(1 / 6, rel=1e-15)


@pytest.mark.parametrize("ranges, lv, d_max, snr", [((1, 1), 7, 50, 20), ((2.5, 0.3), 40, 900, 33)])
def test_closed_form_two_dims(ranges, lv, d_max, snr):
    s2 = 10 ** (-snr / 10)
    want = (ranges[0] * lv / d_max) ** 2 * s2 + ranges[1] ** 2 / 12 / (lv - 1) ** 2
    assert closed_form_mse(MappingConfig(ranges, (lv,), d_max), NoiseModel(snr)).total == pytest.approx(want)


def test_terms_monotone_in_levels():
    noise = NoiseModel(25)
    prev = None
    for lv in range(2, 60):
        br = closed_form_mse(MappingConfig((1, 1, 1), (lv, 9), 800), noise)
        if prev:
            assert br.noise_term > prev.noise_term
            assert br.quantization_terms[0] < prev.quantization_terms[0]
            assert br.quantization_terms[1] == prev.quantization_terms[1]
        prev = br


def test_permutation_symmetry():
    noise = NoiseModel(22)
    a = closed_form_mse(MappingConfig((1.0, 0.5, 2.0, 3.0), (4, 9, 13), 5000), noise).total
    for perm in itertools.permutations(range(3)):
        r = (1.0,) + tuple((0.5, 2.0, 3.0)[i] for i in perm)
        lv = tuple((4, 9, 13)[i] for i in perm)
        assert closed_form_mse(MappingConfig(r, lv, 5000), noise).total == pytest.approx(a, rel=1e-15)


# --- Monte Carlo ------------------------------------------------------------------


def test_mc_noiseless_matches_quantization_terms():
    cfg = MappingConfig((1, 1, 1), (6, 9), 100)
    mc = monte_carlo_mse(build_mapping(cfg), NoiseModel(math.inf), 10**6, seed=3)
    want = closed_form_mse(cfg, NoiseModel(math.inf)).total
    assert abs(mc - want) / want <= 0.05


def test_mc_high_snr_two_dims():
    cfg = MappingConfig((1, 1), (10,), 100)
    mc = monte_carlo_mse(build_mapping(cfg), NoiseModel(30), 10**6, seed=11)
    want = closed_form_mse(cfg, NoiseModel(30)).total
    assert abs(mc - want) / want <= 0.05


def test_mc_deterministic():
    m = build_mapping(MappingConfig((1, 1), (10,), 100))
    assert monte_carlo_mse(m, NoiseModel(10), 1, seed=42) == monte_carlo_mse(m, NoiseModel(10), 1, seed=42)
    a = monte_carlo_mse(m, NoiseModel(10), 200_000, seed=1)
    assert a == monte_carlo_mse(m, NoiseModel(10), 200_000, seed=1)
    assert a != monte_carlo_mse(m, NoiseModel(10), 200_000, seed=2)


def test_mc_rejects_zero_trials():
    m = build_mapping(MappingConfig((1, 1), (10,), 100))
    with pytest.raises(ValidationError):
        monte_carlo_mse(m, NoiseModel(10), 0, seed=1)


# --- optimizer --------------------------------------------------------------------


def test_optimize_two_dims_against_scan():
    res = optimize_levels(2, (1, 1), 1500, NoiseModel(30))
    lv, val = mse_scan((1 / 1500) ** 2 * 1e-3, 1 / 12, range(2, 501))
    assert res.optimal_levels == (lv,)
    assert res.optimal_mse == pytest.approx(val, rel=1e-12)
    assert abs(lv - 117) <= 2
    assert 1e-5 <= res.optimal_mse <= 1e-4
    assert res.optimal_mse == pytest.approx(1.2e-5, rel=0.05)


def test_optimize_3d_colocated():
    res = optimize_levels(3, (1, 1, 1), 3000, NoiseModel(30))
    l1, l2 = res.optimal_levels
    assert abs(l1 - l2) <= 1
    assert 10 <= min(l1, l2) and max(l1, l2) <= 45


def test_optimize_huge_noise_picks_two():
    res = optimize_levels(4, (1, 1, 1, 1), 100, NoiseModel(-60), l_hi=50)
    assert res.optimal_levels == (2, 2, 2)


@pytest.mark.parametrize("ranges", [(1, 1, 1, 1), (1, 0.5, 1, 2), (3, 1, 2)])
def test_optimize_matches_full_enumeration(ranges):
    n, l_hi, d_max, noise = len(ranges), 25, 400, NoiseModel(18)
    best = None
    for lv in itertools.product(range(2, l_hi + 1), repeat=n - 1):
        v = exact_mse(ranges, lv, d_max, noise.sigma_n2)
        if best is None or v < best[1]:
            best = (lv, v)
    res = optimize_levels(n, ranges, d_max, noise, l_hi=l_hi)
    assert res.optimal_mse == pytest.approx(best[1], rel=1e-12)
    assert res.optimal_mse == closed_form_mse(MappingConfig(ranges, res.optimal_levels, d_max), noise).total
    if len(set(ranges[1:])) == 1:
        assert list(res.optimal_levels) == sorted(res.optimal_levels)


def test_optimize_budget():
    with pytest.raises(SearchBudgetError):
        optimize_levels(5, (1,) * 5, 3000, NoiseModel(20))
    with pytest.raises(SearchBudgetError):
        optimize_levels(3, (1, 1, 2), 3000, NoiseModel(20), l_hi=100, budget=1000)
    optimize_levels(4, (1,) * 4, 3000, NoiseModel(20), l_hi=500)


def test_optimize_validates():
    with pytest.raises(ValidationError):
        optimize_levels(1, (1,), 10, NoiseModel(20))
    with pytest.raises(ValidationError):
        optimize_levels(2, (1, 1), 10, NoiseModel(20), l_hi=1)
    with pytest.raises(ValidationError):
        optimize_levels(2, (1, 1), -10, NoiseModel(20))


def test_interior_minimum_at_working_scale():
    for n, l_hi in ((2, 500), (3, 500), (4, 200)):
        for d_max in (500, 1500, 3000):
            for snr in (20, 30):
                res = optimize_levels(n, (1,) * n, d_max, NoiseModel(snr), l_hi=l_hi)
                assert 2 < min(res.optimal_levels) and max(res.optimal_levels) < l_hi


def test_optimal_level_trends():
    grid = {}
    for n, l_hi in ((2, 500), (3, 500), (4, 300), (5, 80)):
        for d_max in (1000, 3000, 5000):
            res = optimize_levels(n, (1,) * n, d_max, NoiseModel(20), l_hi=l_hi)
            grid[n, d_max] = np.mean(res.optimal_levels)
    for d_max in (1000, 3000, 5000):
        assert all(grid[n + 1, d_max] <= grid[n, d_max] for n in (2, 3, 4))
    for n in (2, 3, 4, 5):
        assert grid[n, 1000] <= grid[n, 3000] <= grid[n, 5000]
