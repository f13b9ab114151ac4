import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mespin import cam_array as cam
from mespin import magnetodynamics as md
from mespin.device import MEXNORDevice, SequencingError, nominal_resistances
from mespin.transport import BarrierStack, LeadParams

WORDS_4 = [tuple(p) for p in itertools.product((0, 1), repeat=4)]
R_P, R_AP = nominal_resistances(BarrierStack(), LeadParams())


def test_exhaustive_match_against_oracle():
    # 16 rows hold every 4-bit word; every key must select exactly its own row
    arr = cam.CAMArray(16, 4)
    for r, w in enumerate(WORDS_4):
        arr.store_word(r, w)
    for key in WORDS_4:
        res = arr.search(key)
        assert res.matchline_low == cam.brute_force_match(arr.stored_words(), key)
        assert res.matches == [WORDS_4.index(key)]


def test_two_word_example():
    arr = cam.CAMArray(2, 4)
    arr.store_word(0, "1010")
    arr.store_word(1, "1100")
    assert arr.search("1010").matches == [0]
    assert arr.search("1100").matches == [1]
    assert arr.search("0000").matches == []


@pytest.mark.parametrize("pos", range(4))
def test_one_bit_difference_is_a_miss(pos):
    arr = cam.CAMArray(1, 4)
    arr.store_word(0, "0110")
    key = [0, 1, 1, 0]
    key[pos] ^= 1
    res = arr.search(key)
    assert res.matches == []
    assert [not h for h in res.per_cell_inverter[0]] == [i == pos for i in range(4)]


@settings(max_examples=30, deadline=None)
@given(
    words=st.lists(st.lists(st.integers(0, 1), min_size=6, max_size=6), min_size=1, max_size=5),
    key=st.lists(st.integers(0, 1), min_size=6, max_size=6),
)
def test_match_oracle_property(words, key):
    arr = cam.CAMArray(len(words), 6)
    for r, w in enumerate(words):
        arr.store_word(r, w)
    assert arr.search(key).matchline_low == cam.brute_force_match([tuple(w) for w in words], key)


def test_divider_orientation_and_margin():
    ref = cam.reference_resistance(R_P, R_AP)
    v_p = cam.divider_voltage(1.0, ref, R_P)
    v_ap = cam.divider_voltage(1.0, ref, R_AP)
    assert v_p < 0.5 < v_ap
    assert cam.divider_margin(R_P, R_AP) == pytest.approx(v_ap - v_p)
    assert cam.divider_margin(R_P, R_AP) > 0.1


def test_divider_examples():
    assert cam.divider_voltage(1.0, 10e3, 10e3) == pytest.approx(0.5)
    assert cam.divider_voltage(2.0, 1e3, 3e3) == pytest.approx(1.5)


def test_geometric_mean_reference_is_margin_optimal():
    # d/dref [R_AP/(ref+R_AP) - R_P/(ref+R_P)] = 0 at ref^2 = R_P R_AP
    ref = cam.reference_resistance(R_P, R_AP)
    assert ref == pytest.approx(math.sqrt(R_P * R_AP))
    grid = np.linspace(R_P * 1.001, R_AP * 0.999, 2001)
    margins = [cam.divider_margin(R_P, R_AP, g) for g in grid]
    assert max(margins) <= cam.divider_margin(R_P, R_AP) + 1e-15
    assert abs(grid[int(np.argmax(margins))] - ref) < (grid[1] - grid[0])


def test_geometric_mean_centres_nodes_about_half_supply():
    ref = cam.reference_resistance(R_P, R_AP)
    v_p = cam.divider_voltage(1.0, ref, R_P)
    v_ap = cam.divider_voltage(1.0, ref, R_AP)
    assert v_p + v_ap == pytest.approx(1.0)


def test_t_read_constant_is_calibrated():
    assert cam.T_READ == pytest.approx(cam.calibrate_t_read(), rel=1e-12)
    with pytest.raises(ValueError):
        cam.calibrate_t_read(target=1e-15, overhead=2e-15)


def test_read_energy_per_bit_near_target():
    arr = cam.CAMArray(2, 4)
    arr.store_word(0, "1010")
    arr.store_word(1, "0101")
    res = arr.search("1010")
    assert res.energy.read_energy_per_bit == pytest.approx(15e-15, rel=0.20)
    # the match row draws more than the all-mismatch row
    assert arr.row_read_energy(res, 0) > arr.row_read_energy(res, 1)
    assert arr.row_read_energy(res, 0) == pytest.approx(1.0 / (math.sqrt(R_P * R_AP) + R_P) * cam.T_READ)


def test_read_overhead_adds_per_bit():
    a = cam.CAMArray(1, 4).search("0000").energy.read_energy_per_bit
    b = cam.CAMArray(1, 4, read_overhead=1e-15).search("0000").energy.read_energy_per_bit
    assert b - a == pytest.approx(1e-15)


def test_search_energy_grows_with_width_and_rows():
    totals = [cam.CAMArray(2, w).search([0] * w).energy.total for w in (2, 4, 8)]
    assert totals[0] < totals[1] < totals[2]
    totals = [cam.CAMArray(r, 4).search("0000").energy.total for r in (1, 2, 4)]
    assert totals[0] < totals[1] < totals[2]


def test_breakdown_sums_to_total():
    res = cam.CAMArray(3, 4).search("1001")
    assert math.fsum(res.energy.breakdown.values()) == pytest.approx(res.energy.total, rel=1e-12)


def test_key_write_is_idempotent():
    arr = cam.CAMArray(2, 4)
    arr.store_word(0, "1100")
    first = arr.search("1100")
    second = arr.search("1100")
    assert first.matchline_low == second.matchline_low
    assert first.energy.total == pytest.approx(second.energy.total)


def test_store_touches_only_top_magnets_of_row():
    arr = cam.CAMArray(2, 4)
    arr.search("1111")
    bottoms = [[c.device.bottom.m.copy() for c in row] for row in arr.cells]
    arr.store_word(1, "1010")
    assert arr.stored_words() == [(0, 0, 0, 0), (1, 0, 1, 0)]
    for row, snap in zip(arr.cells, bottoms):
        for c, m in zip(row, snap):
            np.testing.assert_array_equal(c.device.bottom.m, m)


def test_unsettled_cell_during_search_is_sequencing_fault():
    arr = cam.CAMArray(1, 2)
    arr.cells[0][1].device.top.m = np.array([0.0, 1.0, 0.0])
    with pytest.raises(SequencingError):
        cam.evaluate_cell(arr.cells[0][1], arr.V_READ)


def test_reference_must_sit_between_states():
    with pytest.raises(ValueError):
        cam.CAMCell(MEXNORDevice(), ref_mtj=R_P * 0.9)
    with pytest.raises(ValueError):
        cam.CAMCell(MEXNORDevice(), ref_mtj=R_AP * 1.1)
    with pytest.raises(ValueError):
        cam.CAMArray(1, 4, ref_mtj=R_AP * 2)


def test_stochastic_search_matches_oracle():
    arr = cam.CAMArray(2, 4, mode="stochastic", cfg=md.SimConfig(seed=3))
    arr.store_word(0, "1010")
    arr.store_word(1, "0110")
    assert arr.search("0110").matches == [1]
    assert arr.search("1010").matches == [0]
