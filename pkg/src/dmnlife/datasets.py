"""Bundled fixture data."""

from __future__ import annotations

from .ustat import Sample

# Survival times in days of 40 leukemia patients (Ministry of Health
# Hospital, Saudi Arabia), listed in increasing order.  Reference values
# reported for this data set alongside it: delta_cap = -0.871605 and
# standardized statistic -3.615245 (mutually inconsistent; see README).
LEUKEMIA_DAYS: tuple[int, ...] = (
    115, 181, 255, 418, 441, 461, 516, 739, 743, 789,
    807, 865, 924, 983, 1024, 1062, 1063, 1165, 1191, 1222,
    1222, 1251, 1277, 1290, 1357, 1369, 1408, 1455, 1478, 1549,
    1578, 1578, 1599, 1603, 1605, 1696, 1735, 1799, 1815, 1852,
)

LEUKEMIA_REFERENCE_DELTA_CAP = -0.871605
LEUKEMIA_REFERENCE_Z = -3.615245

FIXTURES = {"leukemia": LEUKEMIA_DAYS}


def leukemia_sample() -> Sample:
    return Sample(LEUKEMIA_DAYS)


def fixture_sample(name: str) -> Sample:
    try:
        return Sample(FIXTURES[name.lower()])
    except KeyError:
        raise ValueError(
            f"unknown fixture {name!r}; available: {sorted(FIXTURES)}"
        ) from None
