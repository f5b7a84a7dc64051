"""Origin-destination aggregation and comparison against survey figures."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from scipy.special import betainc

from .errors import ClassMismatch, DegenerateInput, UnresolvedRegion
from .stays import Staypoint
from .trips import Trip

# half a percentage point of rounding slack across all survey classes
SHARE_SUM_TOLERANCE = 5e-3


@dataclass(frozen=True)
class OdMatrix:
    level: str
    counts: tuple  # tuple of ((origin_region, dest_region), trip count), sorted
    total: int
    dropped_trip_ids: tuple = ()

    def count_dict(self) -> dict[tuple[str, str], int]:
        return {pair: n for pair, n in self.counts}


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r: float
    r_squared: float
    p_value: Optional[float]
    n: int
    degenerate_y: bool = False


@dataclass(frozen=True)
class ShareComparison:
    classes: tuple          # tuple of (class, measured share, survey share)
    deviations_pp: tuple    # tuple of (class, measured - survey, percentage points)
    deviations_rel: tuple   # tuple of (class, relative deviation or None)
    regression: Optional[RegressionResult] = None
    regression_without_outlier: Optional[RegressionResult] = None
    outlier_pair: Optional[tuple] = None


def build_od_matrix(
    trips: Sequence[Trip], staypoints: Sequence[Staypoint], level: str
) -> OdMatrix:
    """Trip counts per (origin region, destination region) at the given level.

    Intra-region trips land on the diagonal; trips whose endpoints lack a
    region are excluded and tallied in the drop list.
    """
    sp_index = {sp.staypoint_id: sp for sp in staypoints}
    counts: dict[tuple[str, str], int] = {}
    dropped = []
    for trip in trips:
        try:
            origin = _endpoint_region(trip.origin_staypoint, sp_index, level, trip.trip_id)
            dest = _endpoint_region(trip.dest_staypoint, sp_index, level, trip.trip_id)
        except UnresolvedRegion:
            dropped.append(trip.trip_id)
            continue
        counts[(origin, dest)] = counts.get((origin, dest), 0) + 1
    return OdMatrix(
        level=level,
        counts=tuple(sorted(counts.items())),
        total=sum(counts.values()),
        dropped_trip_ids=tuple(dropped),
    )


def apply_region_aliases(od: OdMatrix, aliases: dict[str, str]) -> OdMatrix:
    """Rename matrix regions (e.g. reconciling older administrative names).

    Cells that collide after renaming are summed; unlisted regions pass
    through unchanged.
    """
    merged: dict[tuple[str, str], int] = {}
    for (origin, dest), n in od.counts:
        pair = (aliases.get(origin, origin), aliases.get(dest, dest))
        merged[pair] = merged.get(pair, 0) + n
    return OdMatrix(
        level=od.level,
        counts=tuple(sorted(merged.items())),
        total=od.total,
        dropped_trip_ids=od.dropped_trip_ids,
    )


def load_region_aliases_csv(path: str | Path) -> dict[str, str]:
    """Alias file, header `from,to`: region renames applied before comparison."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["from", "to"]:
            raise ValueError(f"alias file {path}: expected header from,to")
        return {row[0]: row[1] for row in reader if row}


def _endpoint_region(
    sp_id: str, sp_index: dict[str, Staypoint], level: str, trip_id: str
) -> str:
    sp = sp_index.get(sp_id)
    if sp is None:
        raise UnresolvedRegion(f"trip {trip_id}: staypoint {sp_id!r} not found")
    region = sp.region_parish if level == "parish" else sp.region_municipality
    if region is None:
        raise UnresolvedRegion(f"trip {trip_id}: staypoint {sp_id} has no {level} region")
    return region


def linear_regression(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Ordinary least squares with Pearson r and a two-sided slope p-value.

    The p-value uses the t statistic with n-2 degrees of freedom evaluated
    through the regularized incomplete beta function; it is None for n < 3.
    When y has zero variance the fit is flat and r is reported as 0 with the
    degenerate flag set.
    """
    if len(x) != len(y):
        raise DegenerateInput("x and y must have equal length")
    n = len(x)
    if n < 2:
        raise DegenerateInput("need at least two points")
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    sxx = sum((xi - mean_x) ** 2 for xi in x)
    syy = sum((yi - mean_y) ** 2 for yi in y)
    sxy = sum((xi - mean_x) * (yi - mean_y) for xi, yi in zip(x, y))
    if sxx == 0.0:
        raise DegenerateInput("x is constant")

    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    degenerate_y = syy == 0.0
    r = 0.0 if degenerate_y else sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    r_squared = r * r

    p_value: Optional[float] = None
    if n >= 3 and not degenerate_y:
        df = n - 2
        denom = 1.0 - r_squared
        if denom <= 0.0:
            p_value = 0.0
        else:
            t_squared = r_squared * df / denom
            p_value = float(betainc(df / 2.0, 0.5, df / (df + t_squared)))
    elif n >= 3:
        p_value = 1.0  # flat y: slope 0 carries no evidence
    return RegressionResult(
        slope=slope, intercept=intercept, r=r, r_squared=r_squared,
        p_value=p_value, n=n, degenerate_y=degenerate_y,
    )


def compare_shares(
    od: OdMatrix,
    survey_shares: dict[str, float],
    class_map: dict[str, str],
    survey_pairs: Optional[dict[tuple[str, str], float]] = None,
) -> ShareComparison:
    """Measured destination-class shares against survey shares.

    class_map sends every destination region to a survey class; the survey
    classes must partition the observed destinations and their shares must
    sum to one.  When pairwise survey counts are supplied, the per-pair
    regression is reported twice: with all pairs and with the single
    largest-residual pair excluded.
    """
    # published survey shares are rounded to 0.1 pp, so allow that much slack
    share_sum = sum(survey_shares.values())
    if abs(share_sum - 1.0) > SHARE_SUM_TOLERANCE:
        raise ClassMismatch(f"survey shares sum to {share_sum}, expected 1")
    if od.total == 0:
        raise DegenerateInput("od matrix is empty")

    measured: dict[str, int] = {cls: 0 for cls in survey_shares}
    for (origin, dest), n in od.counts:
        cls = class_map.get(dest)
        if cls is None:
            raise ClassMismatch(f"destination {dest!r} has no survey class")
        if cls not in survey_shares:
            raise ClassMismatch(f"class {cls!r} missing from the survey shares")
        measured[cls] += n

    classes = tuple(
        (cls, measured[cls] / od.total, survey_shares[cls]) for cls in sorted(survey_shares)
    )
    deviations_pp = tuple(
        (cls, (m - s) * 100.0) for cls, m, s in classes
    )
    deviations_rel = tuple(
        (cls, (m - s) / s if s > 0 else None) for cls, m, s in classes
    )

    regression = regression_wo = None
    outlier_pair = None
    if survey_pairs:
        pairs = sorted(survey_pairs)
        count_by_pair = od.count_dict()
        x = [float(survey_pairs[p]) for p in pairs]
        y = [float(count_by_pair.get(p, 0)) for p in pairs]
        regression = linear_regression(x, y)
        if len(pairs) >= 4:
            residuals = [
                abs(yi - (regression.intercept + regression.slope * xi))
                for xi, yi in zip(x, y)
            ]
            worst = max(range(len(pairs)), key=lambda i: (residuals[i], pairs[i]))
            outlier_pair = pairs[worst]
            x_wo = [v for i, v in enumerate(x) if i != worst]
            y_wo = [v for i, v in enumerate(y) if i != worst]
            try:
                regression_wo = linear_regression(x_wo, y_wo)
            except DegenerateInput:
                regression_wo = None
    return ShareComparison(
        classes=classes,
        deviations_pp=deviations_pp,
        deviations_rel=deviations_rel,
        regression=regression,
        regression_without_outlier=regression_wo,
        outlier_pair=outlier_pair,
    )


# --- file formats -----------------------------------------------------------

def load_survey_csv(path: str | Path) -> dict:
    """Survey input: either class shares or pairwise trip counts.

    Header `class,share` yields {"shares": {...}}; header
    `origin,destination,trips` yields {"pairs": {...}}.
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header == ["class", "share"]:
            shares = {row[0]: float(row[1]) for row in reader if row}
            return {"shares": shares}
        if header == ["origin", "destination", "trips"]:
            pairs = {(row[0], row[1]): float(row[2]) for row in reader if row}
            return {"pairs": pairs}
    raise ValueError(f"survey file {path}: expected 'class,share' or 'origin,destination,trips'")


def load_class_map_csv(path: str | Path) -> dict[str, str]:
    """Destination-region to survey-class mapping, header `destination,class`."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["destination", "class"]:
            raise ValueError(f"class map {path}: expected header destination,class")
        return {row[0]: row[1] for row in reader if row}


def write_od_csv(od: OdMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["origin", "destination", "trips"])
        for (origin, dest), n in od.counts:
            writer.writerow([origin, dest, n])


def _regression_dict(reg: Optional[RegressionResult]) -> Optional[dict]:
    if reg is None:
        return None
    return {
        "slope": reg.slope,
        "intercept": reg.intercept,
        "r": reg.r,
        "r_squared": reg.r_squared,
        "p_value": reg.p_value,
        "n": reg.n,
        "degenerate_y": reg.degenerate_y,
    }


def comparison_to_dict(cmp: ShareComparison) -> dict:
    return {
        "classes": [
            {"class": cls, "measured_share": m, "survey_share": s}
            for cls, m, s in cmp.classes
        ],
        "deviations_pp": [{"class": cls, "pp": d} for cls, d in cmp.deviations_pp],
        "deviations_rel": [{"class": cls, "rel": d} for cls, d in cmp.deviations_rel],
        "regression": _regression_dict(cmp.regression),
        "regression_without_outlier": _regression_dict(cmp.regression_without_outlier),
        "outlier_pair": list(cmp.outlier_pair) if cmp.outlier_pair else None,
    }


def write_validation_report(
    od: OdMatrix,
    comparison: Optional[ShareComparison],
    path: str | Path,
) -> None:
    doc = {
        "level": od.level,
        "total_trips": od.total,
        "n_od_pairs": len(od.counts),
        "n_dropped_trips": len(od.dropped_trip_ids),
        "comparison": comparison_to_dict(comparison) if comparison else None,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
