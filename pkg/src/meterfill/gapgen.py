"""Artificial missing-value insertion for benchmark runs.

Removals are split into isolated single readings and multi-value gaps with
uniformly drawn lengths.  Placement keeps every removal run non-adjacent to
any other and preserves the first and last readings, so every synthetic gap
stays anchored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSpecError, ValidationError
from .series import EnergySeries, slots_per_day

DEFAULT_MAX_GAP_DAYS = 3
PLACEMENT_ATTEMPTS = 20


@dataclass(frozen=True)
class MissingnessSpec:
    """How much to remove and in what shape.

    ``share`` is the fraction of readings to remove, ``single_fraction`` the
    fraction of removals that must be isolated singles.  ``max_gap_len`` is
    in readings; None means three days' worth at the series resolution.
    """

    share: float
    max_gap_len: int | None = None
    single_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.share < 1.0:
            raise ValidationError(f"share must be in (0, 1), got {self.share}")
        if self.max_gap_len is not None and self.max_gap_len < 2:
            raise ValidationError(f"max_gap_len must be at least 2, got {self.max_gap_len}")
        if not 0.0 <= self.single_fraction <= 1.0:
            raise ValidationError(
                f"single_fraction must be in [0, 1], got {self.single_fraction}"
            )


@dataclass(frozen=True)
class MissingMask:
    """Sorted removed reading indices plus the subset that are isolated."""

    indices: np.ndarray
    singles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "singles", np.asarray(self.singles, dtype=np.int64))


def _draw_gap_lengths(rng: np.random.Generator, budget: int, max_len: int) -> list[int]:
    """Uniform lengths in [2, max_len] consuming the budget, tail truncated.

    The tail is nudged so a remainder of one reading never occurs; with
    max_len == 2 an odd budget is unservable.
    """
    lengths = []
    remaining = budget
    while remaining >= 2:
        length = int(rng.integers(2, max_len + 1))
        length = min(length, remaining)
        if remaining - length == 1:
            if length > 2:
                length -= 1
            elif length + 1 <= min(max_len, remaining):
                length += 1
            else:
                raise InfeasibleSpecError(
                    "cannot tile an odd removal budget with gaps of length 2; "
                    "use a larger max_gap_len or a different share"
                )
        lengths.append(length)
        remaining -= length
    if remaining == 1:
        lengths.append(1)  # degenerate budget: one extra isolated removal
    return lengths


def _valid_gap_starts(removed: np.ndarray, length: int) -> np.ndarray:
    """Start indices where a gap of `length` fits without touching anything."""
    n = removed.size
    window = np.concatenate(([0], np.cumsum(removed.view(np.int8))))
    starts = np.arange(1, n - length)
    if starts.size == 0:
        return starts
    occupied = window[starts + length + 1] - window[starts - 1]
    return starts[occupied == 0]


def _place(rng: np.random.Generator, n: int, lengths: list[int], n_singles: int) -> np.ndarray:
    removed = np.zeros(n, dtype=bool)
    for length in lengths:
        starts = _valid_gap_starts(removed, length)
        if starts.size == 0:
            raise InfeasibleSpecError("no room left for a gap")
        start = int(starts[rng.integers(starts.size)])
        removed[start : start + length] = True

    # Singles need both neighbours present, including against earlier removals.
    placeable = np.zeros(n, dtype=bool)
    placeable[1 : n - 1] = ~removed[:-2] & ~removed[1:-1] & ~removed[2:]
    for _ in range(n_singles):
        options = np.flatnonzero(placeable)
        if options.size == 0:
            raise InfeasibleSpecError("no room left for a single missing value")
        pick = int(options[rng.integers(options.size)])
        removed[pick] = True
        placeable[max(pick - 2, 0) : pick + 3] = False
    return removed


def insert_missing(es: EnergySeries, spec: MissingnessSpec) -> tuple[EnergySeries, MissingMask]:
    """Remove values from a complete series, returning it plus the mask.

    The removal count is ``round(share * n)`` exactly, of which
    ``round(single_fraction * count)`` are isolated singles; the remainder is
    consumed by multi-value gaps with lengths uniform in [2, max_gap_len]
    (the last gap truncated to fit).  The first and last readings are never
    removed and no two removal runs touch, so all gaps are anchored.
    Deterministic for a fixed seed.
    """
    if np.isnan(es.values).any():
        raise ValidationError("artificial removal needs a complete input series")
    n = es.n
    total = round(spec.share * n)
    if total < 1:
        raise ValidationError("share * series length must be at least 1")
    max_len = spec.max_gap_len
    if max_len is None:
        max_len = DEFAULT_MAX_GAP_DAYS * slots_per_day(es.resolution)

    n_singles = round(spec.single_fraction * total)
    gap_budget = total - n_singles
    if total > n - 2:
        raise InfeasibleSpecError(
            f"cannot remove {total} of {n} readings while preserving the "
            "boundary anchors; use a smaller share"
        )

    rng = np.random.default_rng(spec.seed)
    last_error = None
    for _ in range(PLACEMENT_ATTEMPTS):
        try:
            lengths = _draw_gap_lengths(rng, gap_budget, max_len)
            removed = _place(rng, n, lengths, n_singles)
            break
        except InfeasibleSpecError as exc:
            last_error = exc
    else:
        raise InfeasibleSpecError(
            f"could not place {total} removals after {PLACEMENT_ATTEMPTS} attempts "
            f"({last_error}); use a smaller share or max_gap_len"
        )

    indices = np.flatnonzero(removed)
    run_break = np.diff(indices) > 1
    run_id = np.concatenate(([0], np.cumsum(run_break)))
    run_sizes = np.bincount(run_id)
    singles = indices[run_sizes[run_id] == 1]

    degraded = np.array(es.values)
    degraded[indices] = np.nan
    out = EnergySeries(
        start=es.start,
        resolution=es.resolution,
        values=degraded,
        meter_kind=es.meter_kind,
        monotone_tol=es.monotone_tol,
    )
    return out, MissingMask(indices=indices, singles=singles)
