import random

import pytest

from cdrflow.eventlog import CaseLog, Trace
from cdrflow.geo import GeoPoint, Region, RegionIndex


def square_region(region_id, level, lon0, lat0, size_deg, parent=None):
    ring = (
        GeoPoint(lat0, lon0),
        GeoPoint(lat0, lon0 + size_deg),
        GeoPoint(lat0 + size_deg, lon0 + size_deg),
        GeoPoint(lat0 + size_deg, lon0),
        GeoPoint(lat0, lon0),
    )
    return Region(
        region_id=region_id, name=region_id, level=level,
        parent_id=parent, polygons=((ring,),),
    )


@pytest.fixture
def two_municipalities():
    """Side-by-side unit squares 'A' (lon 0..1) and 'B' (lon 1..2)."""
    return RegionIndex(
        [
            square_region("A", "municipality", 0.0, 0.0, 1.0),
            square_region("B", "municipality", 1.0, 0.0, 1.0),
        ]
    )


def random_case_log(rng: random.Random, n_traces=None, alphabet=None) -> CaseLog:
    """Seeded random log with integer-second, nondecreasing timestamps."""
    if alphabet is None:
        alphabet = [chr(ord("A") + i) for i in range(rng.randint(2, 10))]
    if n_traces is None:
        n_traces = rng.randint(1, 200)
    traces = []
    for c in range(n_traces):
        length = rng.randint(1, 10)
        t = rng.randint(0, 10_000)
        events = []
        for _ in range(length):
            events.append((rng.choice(alphabet), float(t)))
            t += rng.randint(1, 900)
        traces.append(Trace(case_id=f"case{c:05d}", events=tuple(events)))
    return CaseLog(traces=tuple(traces), level="municipality")
