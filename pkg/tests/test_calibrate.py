import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ednoise.calibrate import (
    CalibrationError,
    calibrate_rho,
    calibration_table,
    expected_noise,
    table_csv,
)
from ednoise.graph import DegreeDistribution, degree_distribution, erdos_renyi, subgraph_mask

EDN = ["mv-sln", "mv-pwn", "veto-sln", "veto-pwn", "seq-sln", "seq-pwn"]
LEVELS = [round(0.05 * i, 2) for i in range(1, 11)]


@pytest.fixture(scope="module")
def er_dist():
    return degree_distribution(erdos_renyi(500, 0.02, 4))


def test_expected_noise_examples():
    dist = DegreeDistribution({1: 0.5, 2: 0.5})
    assert expected_noise(dist, "veto", 0.2) == pytest.approx(0.28, abs=1e-15)
    assert expected_noise(dist, "veto-sln", 0.0) == 0.0
    ones = DegreeDistribution({1: 1.0})
    for v in EDN:
        assert expected_noise(ones, v, 0.37, 5) == pytest.approx(0.37, abs=1e-15)
    assert expected_noise(dist, "sln", 0.3) == 0.3


def test_expected_noise_zero_rho_any_graph(er_dist):
    for v in EDN:
        assert expected_noise(er_dist, v, 0.0, 7) == 0.0


def test_degree_one_calibration_is_identity():
    ones = DegreeDistribution({1: 1.0})
    res = calibrate_rho(ones, "veto", None, 0.25)
    assert res.rho == pytest.approx(0.25, abs=1e-9)


def test_baselines_are_exact(er_dist):
    for v in ("sln", "pwn"):
        for level in LEVELS:
            res = calibrate_rho(er_dist, v, 7, level)
            assert res.rho == level and res.achieved_level == level


def test_ccn_is_rejected(er_dist):
    with pytest.raises(CalibrationError):
        calibrate_rho(er_dist, "ccn", 7, 0.1)


def test_zero_level(er_dist):
    assert calibrate_rho(er_dist, "veto-sln", 7, 0.0).rho == 0.0


@pytest.mark.parametrize("variant", EDN)
def test_round_trip(er_dist, variant):
    for level in LEVELS:
        res = calibrate_rho(er_dist, variant, 7, level)
        assert 0.0 <= res.rho <= 1.0
        assert abs(res.achieved_level - level) < 1e-9
        assert abs(expected_noise(er_dist, variant, res.rho, 7) - level) < 1e-9


def test_matched_level_comparability(er_dist):
    for level in (0.1, 0.3, 0.5):
        vals = [
            expected_noise(er_dist, v, calibrate_rho(er_dist, v, 7, level).rho, 7) for v in EDN
        ]
        assert max(vals) - min(vals) <= 2e-9


def test_cap_is_reported():
    dist = DegreeDistribution({0: 0.5, 3: 0.5})
    with pytest.raises(CalibrationError) as err:
        calibrate_rho(dist, "seq-sln", 3, 0.4)
    assert err.value.max_level == pytest.approx(0.5 * 2 / 3)
    with pytest.raises(CalibrationError):
        calibrate_rho(dist, "veto", None, 0.6)


def test_out_of_range_targets(er_dist):
    with pytest.raises(CalibrationError):
        calibrate_rho(er_dist, "veto", None, 1.5)
    with pytest.raises(CalibrationError):
        calibrate_rho(er_dist, "seq-pwn", None, 0.1)


def test_monotone_on_search_interval(er_dist):
    grid = np.linspace(0, 1, 201)
    for v in ("mv-sln", "veto-sln"):
        vals = [expected_noise(er_dist, v, r) for r in grid]
        assert np.all(np.diff(vals) >= -1e-15)
    cap = 6 / 7
    vals = [expected_noise(er_dist, "seq-sln", r, 7) for r in grid * cap]
    assert np.all(np.diff(vals) >= -1e-15)


def test_seq_pwn_level_is_not_monotone_for_dense_graphs():
    # all nodes of degree 12, K = 3: the level peaks and falls back as rho grows
    dist = DegreeDistribution({12: 1.0})
    vals = np.array([expected_noise(dist, "seq-pwn", r, 3) for r in np.linspace(0, 1, 101)])
    assert np.any(np.diff(vals) < -1e-6)
    res = calibrate_rho(dist, "seq-pwn", 3, 0.6)
    assert abs(res.achieved_level - 0.6) < 1e-9
    # the smallest solution is returned
    below = np.linspace(0, res.rho, 50, endpoint=False)
    assert all(expected_noise(dist, "seq-pwn", r, 3) < 0.6 for r in below)


def test_mask_restricted_distribution():
    g = erdos_renyi(400, 0.02, 8)
    mask = subgraph_mask(g, "train", range(100))
    full = calibrate_rho(degree_distribution(g), "veto", None, 0.2)
    part = calibrate_rho(degree_distribution(g, mask), "veto", None, 0.2)
    assert abs(part.achieved_level - 0.2) < 1e-9
    assert part.rho != full.rho


def test_table_csv_layout(er_dist):
    results = calibration_table(er_dist, ["veto-sln", "sln"], 7, [0.05, 0.1])
    lines = table_csv(results).splitlines()
    assert lines[0] == "level,veto-sln,sln"
    assert lines[1].startswith("0.05,")
    assert lines[2].endswith(",0.1")
    assert results[0].to_dict()["variant"] == "veto-sln"


@given(st.dictionaries(st.integers(0, 30), st.integers(1, 50), min_size=1, max_size=8),
       st.floats(0.01, 0.45))
def test_round_trip_property(counts, level):
    degs = [d for d, c in counts.items() for _ in range(c)]
    dist = DegreeDistribution.from_degrees(degs)
    for v in ("mv", "veto", "seq-sln", "seq-pwn"):
        try:
            res = calibrate_rho(dist, v, 4, level)
        except CalibrationError as err:
            assert err.max_level < level
            continue
        assert abs(res.achieved_level - level) < 1e-9
