"""Tests for the core series model: parsing, conversion, gaps, day views."""

from datetime import timedelta

import numpy as np
import pytest

from meterfill import (
    EnergySeries,
    ImputationError,
    MeterKind,
    ParseConfig,
    ParseError,
    PowerSeries,
    ValidationError,
    day_partition,
    detect_gaps,
    energy_to_power,
    parse_series,
    power_to_energy,
)
from meterfill.series import format_series

from conftest import MONDAY, QUARTER_HOUR, energy, power, with_missing


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------


def test_energy_series_requires_a_present_value():
    with pytest.raises(ValidationError, match="at least one present"):
        energy([np.nan, np.nan])


def test_consumption_must_be_monotone():
    with pytest.raises(ValidationError, match="decrease"):
        energy([0.0, 2.0, 1.0])


def test_monotone_tolerance_allows_small_dips():
    es = energy([0.0, 2.0, 1.999], tol=0.01)
    assert es.n == 3


def test_generation_meters_skip_the_monotone_check():
    es = energy([5.0, 3.0, 4.0], kind=MeterKind.GENERATION)
    assert es.meter_kind is MeterKind.GENERATION


def test_values_are_immutable():
    es = energy([0.0, 1.0])
    with pytest.raises(ValueError):
        es.values[0] = 9.0


def test_infinite_values_rejected():
    with pytest.raises(ValidationError, match="finite"):
        energy([0.0, np.inf])


# ---------------------------------------------------------------------------
# parse_series
# ---------------------------------------------------------------------------


def _csv(rows):
    return "timestamp,value\n" + "\n".join(rows) + "\n"


def test_parse_four_rows_with_one_missing():
    text = _csv(
        [
            "2018-01-01 00:00:00,0",
            "2018-01-01 00:15:00,1",
            "2018-01-01 00:30:00,",
            "2018-01-01 00:45:00,3",
        ]
    )
    es = parse_series(text)
    assert isinstance(es, EnergySeries)
    assert es.n == 4
    assert es.resolution == QUARTER_HOUR
    assert np.isnan(es.values[2])
    assert es.values[3] == 3.0


def test_parse_accepts_nan_literal():
    text = _csv(["2018-01-01 00:00:00,0", "2018-01-01 01:00:00,NaN", "2018-01-01 02:00:00,2"])
    es = parse_series(text)
    assert np.isnan(es.values[1])


def test_parse_irregular_spacing_names_the_row():
    text = _csv(
        [
            "2018-01-01 00:00:00,0",
            "2018-01-01 00:15:00,1",
            "2018-01-01 00:30:00,2",
            "2018-01-01 01:00:00,3",
        ]
    )
    with pytest.raises(ParseError, match="irregular spacing at row 4"):
        parse_series(text)


def test_parse_rejects_non_numeric_values():
    text = _csv(["2018-01-01 00:00:00,0", "2018-01-01 00:15:00,abc"])
    with pytest.raises(ParseError, match="non-numeric value at row 2"):
        parse_series(text)


def test_parse_rejects_empty_file():
    with pytest.raises(ParseError, match="empty"):
        parse_series("")
    with pytest.raises(ParseError, match="empty"):
        parse_series("timestamp,value\n")


def test_parse_rejects_wrong_header():
    with pytest.raises(ParseError, match="header"):
        parse_series("time,reading\n2018-01-01,0\n")


def test_parse_rejects_bad_timestamp():
    text = _csv(["2018-01-01 00:00:00,0", "not-a-date,1"])
    with pytest.raises(ParseError, match="invalid timestamp at row 2"):
        parse_series(text)


def test_parse_one_year_quarter_hourly_file():
    stamps = [MONDAY + i * QUARTER_HOUR for i in range(35040)]
    text = _csv([f"{ts.isoformat(sep=' ')},{i}" for i, ts in enumerate(stamps)])
    es = parse_series(text)
    assert es.n == 35040


def test_parse_power_kind_allows_decreasing_values():
    text = _csv(["2018-01-01 00:00:00,5", "2018-01-01 00:15:00,2"])
    ps = parse_series(text, ParseConfig(kind="power"))
    assert isinstance(ps, PowerSeries)
    assert ps.values.tolist() == [5.0, 2.0]


def test_format_series_round_trips():
    es = energy([0.0, 0.1, np.nan, 0.30000000000000004])
    again = parse_series(format_series(es))
    assert again.start == es.start
    assert again.resolution == es.resolution
    assert np.array_equal(again.values, es.values, equal_nan=True)


# ---------------------------------------------------------------------------
# energy <-> power
# ---------------------------------------------------------------------------


def test_energy_to_power_hand_example():
    es = energy([0.0, 1.0, 3.0, 6.0])
    assert energy_to_power(es).values.tolist() == [1.0, 2.0, 3.0]


def test_constant_energy_gives_zero_power():
    assert energy_to_power(energy([5.0, 5.0, 5.0])).values.tolist() == [0.0, 0.0]


def test_power_missing_iff_either_reading_missing():
    es = energy([0.0, np.nan, 3.0])
    assert np.isnan(energy_to_power(es).values).all()


def test_power_to_energy_hand_example():
    ps = power([1.0, 2.0, 3.0])
    assert power_to_energy(ps, 0.0).values.tolist() == [0.0, 1.0, 3.0, 6.0]


def test_power_to_energy_zero_power_constant_energy():
    assert power_to_energy(power([0.0, 0.0]), 5.0).values.tolist() == [5.0, 5.0, 5.0]


def test_power_to_energy_rejects_missing_values():
    with pytest.raises(ImputationError, match="missing"):
        power_to_energy(power([1.0, np.nan]), 0.0)


def test_round_trip_is_identity_on_random_series():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(2, 500))
        values = np.cumsum(rng.uniform(0.0, 5.0, size=n)) + rng.uniform(0, 100)
        es = energy(values, resolution=QUARTER_HOUR)
        back = power_to_energy(energy_to_power(es), es.values[0])
        assert np.abs(back.values - es.values).max() < 1e-9
        ps = energy_to_power(es)
        ps_back = energy_to_power(power_to_energy(ps, es.values[0]))
        assert np.abs(ps_back.values - ps.values).max() < 1e-9


# ---------------------------------------------------------------------------
# detect_gaps
# ---------------------------------------------------------------------------


def test_interior_gap_indices_anchors_and_energy():
    base = energy(np.arange(10.0))
    es = with_missing(base, [5, 6])
    (gap,) = detect_gaps(es)
    # Two missing readings kill three power values: the spans needing e5 or e6.
    assert (gap.first_missing, gap.last_missing) == (4, 6)
    assert gap.length == 3
    assert (gap.anchor_before, gap.anchor_after) == (4.0, 7.0)
    assert gap.actual_energy == 3.0
    assert (gap.energy_first, gap.energy_last) == (5, 6)


def test_complete_series_has_no_gaps():
    assert detect_gaps(energy(np.arange(5.0))) == []


def test_leading_gap_is_unanchored():
    es = with_missing(energy(np.arange(10.0)), [0, 1, 2])
    (gap,) = detect_gaps(es)
    assert gap.anchor_before is None
    assert gap.actual_energy is None
    assert not gap.anchored
    assert (gap.first_missing, gap.last_missing) == (0, 2)
    assert (gap.energy_first, gap.energy_last) == (0, 2)


def test_trailing_gap_is_unanchored():
    es = with_missing(energy(np.arange(10.0)), [8, 9])
    (gap,) = detect_gaps(es)
    assert gap.anchor_after is None
    assert (gap.first_missing, gap.last_missing) == (7, 8)
    assert (gap.energy_first, gap.energy_last) == (8, 9)


def test_gap_union_covers_exactly_the_missing_power_indices():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(5, 120))
        values = np.cumsum(rng.uniform(0, 2, n))
        drop = rng.random(n) < 0.25
        if drop.all():
            drop[int(rng.integers(n))] = False
        es = energy(np.where(drop, np.nan, values), kind=MeterKind.GENERATION)
        missing_power = set(np.flatnonzero(np.isnan(energy_to_power(es).values)).tolist())
        covered = set()
        gaps = detect_gaps(es)
        for gap in gaps:
            covered.update(range(gap.first_missing, gap.last_missing + 1))
        assert covered == missing_power
        # maximality: two adjacent runs of missing readings would be one gap
        for a, b in zip(gaps, gaps[1:]):
            assert b.energy_first > a.energy_last + 1
            assert b.first_missing > a.last_missing


# ---------------------------------------------------------------------------
# day_partition
# ---------------------------------------------------------------------------


def test_day_aligned_quarter_hourly_partition():
    values = np.arange(3 * 96, dtype=float) * 0.25  # 3 days of 1 kW
    es = energy(values, resolution=QUARTER_HOUR)
    days = day_partition(es)
    assert [d.slots for d in days] == [96, 96, 95]
    assert all(d.covers_full_day for d in days)
    assert days[0].missing == 0
    assert days[0].known_energy == pytest.approx(24.0)  # 96 slots of 1 kW for 15 min


def test_day_fully_inside_a_gap():
    values = np.arange(3 * 96, dtype=float) * 0.25
    es = with_missing(energy(values, resolution=QUARTER_HOUR), range(95, 193))
    days = day_partition(es)
    assert days[1].missing == 96
    assert days[1].known_energy == 0.0


def test_partial_first_day_is_not_full():
    start = MONDAY + timedelta(hours=12)
    values = np.arange(48 + 96, dtype=float)
    es = energy(values, start=start, resolution=QUARTER_HOUR)
    days = day_partition(es)
    assert not days[0].covers_full_day
    assert days[0].first_slot == 48
    assert days[1].covers_full_day


def test_misaligned_start_is_rejected():
    start = MONDAY + timedelta(minutes=7)
    es = energy([0.0, 1.0, 2.0], start=start, resolution=QUARTER_HOUR)
    with pytest.raises(ImputationError, match="aligned"):
        day_partition(es)


def test_non_divisor_resolution_is_rejected():
    es = energy([0.0, 1.0], resolution=timedelta(minutes=7))
    with pytest.raises(ImputationError, match="does not divide"):
        day_partition(es)


def test_day_partition_energy_conservation():
    rng = np.random.default_rng(13)
    values = np.concatenate(([0.0], np.cumsum(rng.uniform(0, 1, size=4 * 96 - 1))))
    es = energy(values, resolution=QUARTER_HOUR)
    es = with_missing(es, [30, 31, 32, 200, 290, 291])
    days = day_partition(es)
    gaps = detect_gaps(es)
    assert all(g.anchored for g in gaps)
    total = sum(d.known_energy for d in days) + sum(g.actual_energy for g in gaps)
    assert total == pytest.approx(es.values[-1] - es.values[0], abs=1e-9)
