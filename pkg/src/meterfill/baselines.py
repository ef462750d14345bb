"""Benchmark imputation methods operating on power series.

All three imputers return a complete series and never touch present values:
linear interpolation between the bracketing known values, the historical
average week, and an additive seasonal model (piecewise-linear trend plus
zero-mean daily and weekly profiles) fitted by least squares on the present
values only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ImputationError, ValidationError
from .series import PowerSeries, grid_offset, slots_per_day

TREND_KNOT_DAYS = 28


def impute_linear(ps: PowerSeries) -> PowerSeries:
    """Linearly interpolate each gap between its bracketing present values.

    Runs touching the series boundary are filled by constant extension of
    the nearest present value.
    """
    present = ~np.isnan(ps.values)
    if not present.any():
        raise ImputationError("cannot interpolate a series with no present values")
    if present.all():
        return ps
    idx = np.arange(ps.n)
    filled = np.interp(idx, idx[present], ps.values[present])
    filled[present] = ps.values[present]
    return replace(ps, values=filled)


def impute_hist_avg(ps: PowerSeries) -> PowerSeries:
    """Fill each missing value from the average week at its weekly slot.

    The weekly slot of index t is ``t mod W`` with W the number of power
    values per week; a slot that must be imputed but has no present value
    anywhere in the series is an error.
    """
    spd = slots_per_day(ps.resolution)
    week = 7 * spd
    present = ~np.isnan(ps.values)
    if present.all():
        return ps
    slot = np.arange(ps.n) % week
    sums = np.bincount(slot[present], weights=ps.values[present], minlength=week)
    counts = np.bincount(slot[present], minlength=week)
    missing_idx = np.flatnonzero(~present)
    empty = counts[slot[missing_idx]] == 0
    if empty.any():
        bad = int(slot[missing_idx[empty][0]])
        raise ImputationError(f"no present value at weekly slot {bad}")
    filled = np.array(ps.values)
    filled[missing_idx] = sums[slot[missing_idx]] / counts[slot[missing_idx]]
    return replace(ps, values=filled)


@dataclass(frozen=True)
class SeasonalModel:
    """Additive decomposition: piecewise-linear trend + daily + weekly profile.

    The trend is linear between ``knots`` (power-index positions) with the
    listed values; both profiles are zero-mean over their cycles.
    """

    knots: tuple[int, ...]
    knot_values: tuple[float, ...]
    daily_profile: np.ndarray   # one value per within-day slot
    weekly_profile: np.ndarray  # one value per weekday, Monday first

    def __post_init__(self):
        daily = np.asarray(self.daily_profile, dtype=np.float64)
        weekly = np.asarray(self.weekly_profile, dtype=np.float64)
        object.__setattr__(self, "daily_profile", daily)
        object.__setattr__(self, "weekly_profile", weekly)
        if abs(daily.mean()) > 1e-6 or abs(weekly.mean()) > 1e-6:
            raise ValidationError("seasonal profiles must be zero-mean over their cycles")

    def trend_at(self, index: np.ndarray) -> np.ndarray:
        return np.interp(index, self.knots, self.knot_values)

    def predict(self, index: np.ndarray, slot: np.ndarray, weekday0: np.ndarray) -> np.ndarray:
        """Model value at power indices with given within-day slots and weekdays (0-based)."""
        return self.trend_at(index) + self.daily_profile[slot] + self.weekly_profile[weekday0]


def _hat_basis(index: np.ndarray, knots: Sequence[int]) -> np.ndarray:
    design = np.zeros((index.size, len(knots)))
    for j in range(len(knots)):
        lo = knots[j - 1] if j > 0 else knots[0]
        hi = knots[j + 1] if j + 1 < len(knots) else knots[-1]
        up = (index - lo) / (knots[j] - lo) if knots[j] > lo else np.ones_like(index, float)
        down = (hi - index) / (hi - knots[j]) if hi > knots[j] else np.ones_like(index, float)
        design[:, j] = np.clip(np.minimum(up, down), 0.0, 1.0)
    return design


def fit_seasonal_model(ps: PowerSeries) -> SeasonalModel:
    """Fit the additive model by least squares on the present values only."""
    spd = slots_per_day(ps.resolution)
    present = ~np.isnan(ps.values)
    if present.sum() < 2 * 7 * spd:
        raise ImputationError(
            "seasonal model needs at least two weeks of present values, got "
            f"{int(present.sum())} of {2 * 7 * spd}"
        )
    m = ps.n
    idx = np.arange(m)
    step = TREND_KNOT_DAYS * spd
    knots = list(range(0, m - 1, step))
    if knots[-1] != m - 1:
        knots.append(m - 1)
    if len(knots) < 2:
        knots = [0, m - 1]

    design = _hat_basis(idx[present].astype(float), knots)
    beta, *_ = np.linalg.lstsq(design, ps.values[present], rcond=None)
    trend = _hat_basis(idx.astype(float), knots) @ beta

    midnight_offset = grid_offset(ps.start, ps.resolution)
    slot = (midnight_offset + idx) % spd
    day_index = (midnight_offset + idx) // spd
    weekday0 = (ps.start.date().weekday() + day_index) % 7

    detrended = ps.values - trend
    daily = np.zeros(spd)
    counts = np.bincount(slot[present], minlength=spd)
    sums = np.bincount(slot[present], weights=detrended[present], minlength=spd)
    np.divide(sums, counts, out=daily, where=counts > 0)
    daily_mean = daily.mean()
    daily -= daily_mean

    residual = detrended - daily_mean - daily[slot]
    weekly = np.zeros(7)
    wcounts = np.bincount(weekday0[present], minlength=7)
    wsums = np.bincount(weekday0[present], weights=residual[present], minlength=7)
    np.divide(wsums, wcounts, out=weekly, where=wcounts > 0)
    weekly_mean = weekly.mean()
    weekly -= weekly_mean

    shifted = beta + daily_mean + weekly_mean  # fold the removed means into the trend
    return SeasonalModel(
        knots=tuple(knots),
        knot_values=tuple(float(v) for v in shifted),
        daily_profile=daily,
        weekly_profile=weekly,
    )


def impute_seasonal_model(ps: PowerSeries) -> PowerSeries:
    """Fill missing values with the fitted seasonal model's value at t."""
    present = ~np.isnan(ps.values)
    if present.all():
        return ps
    model = fit_seasonal_model(ps)
    spd = slots_per_day(ps.resolution)
    midnight_offset = grid_offset(ps.start, ps.resolution)
    idx = np.flatnonzero(~present)
    slot = (midnight_offset + idx) % spd
    weekday0 = (ps.start.date().weekday() + (midnight_offset + idx) // spd) % 7
    filled = np.array(ps.values)
    filled[idx] = model.predict(idx.astype(float), slot, weekday0)
    return replace(ps, values=filled)
