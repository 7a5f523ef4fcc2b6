"""Posterior summaries, the two-prior and prior-vs-MLE sufficiency criteria, and power-law fits."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

MEASURES = ("N1", "N2")


@dataclass(frozen=True)
class PosteriorSummary:
    """Mean and standard deviation of (N1, N2) from a chain or a bootstrap.

    ``source`` is a prior label (``"Z"``, ``"GH"``, ``"Z+I"``, ...) or
    ``"MLE_BOOTSTRAP"``.
    """

    mean_n1: float
    mean_n2: float
    err_n1: float
    err_n2: float
    source: str
    m: int

    def __post_init__(self):
        vals = (self.mean_n1, self.mean_n2, self.err_n1, self.err_n2)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("summary values must be finite")
        if self.err_n1 < 0 or self.err_n2 < 0:
            raise ValueError("errors must be nonnegative")

    def mean(self, measure: str) -> float:
        return self.mean_n1 if measure == "N1" else self.mean_n2

    def err(self, measure: str) -> float:
        return self.err_n1 if measure == "N1" else self.err_n2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PosteriorSummary":
        return cls(**data)


@dataclass(frozen=True)
class CriterionReport:
    """One side-by-side comparison: ``satisfied`` iff ``gap < budget``."""

    m: int
    gap: float
    budget: float
    satisfied: bool
    which: str
    measure: str
    sources: tuple = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sources"] = list(self.sources)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionReport":
        data = dict(data)
        data["sources"] = tuple(data.get("sources", ()))
        return cls(**data)


def summarize(samples, source: str, m: int) -> PosteriorSummary:
    """Sample mean and sample standard deviation (ddof=1) of each measure."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (N1, N2) pairs")
    if arr.shape[0] < 2:
        raise ValueError("need at least two samples to summarize")
    mean = arr.mean(axis=0)
    err = (arr - arr[0]).std(axis=0, ddof=1)  # shifted so constant columns give exactly 0
    return PosteriorSummary(float(mean[0]), float(mean[1]), float(err[0]), float(err[1]), source, int(m))


def _check_measure(measure: str):
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")


def _compare(a: PosteriorSummary, b: PosteriorSummary, measure: str, which: str, width: float):
    _check_measure(measure)
    if a.m != b.m:
        raise ValueError(f"summaries are for different M ({a.m} vs {b.m})")
    gap = abs(a.mean(measure) - b.mean(measure))
    budget = width * (a.err(measure) + b.err(measure))
    return CriterionReport(a.m, gap, budget, bool(gap < budget), which, measure, (a.source, b.source))


def criterion_1(sz: PosteriorSummary, sgh: PosteriorSummary, measure: str, width: float = 1.0) -> CriterionReport:
    """Two priors agree: ``|<N>_Z - <N>_GH| < width * (dN_Z + dN_GH)``."""
    return _compare(sz, sgh, measure, "C1", width)


def criterion_1_5(sp: PosteriorSummary, smle: PosteriorSummary, measure: str, width: float = 1.0) -> CriterionReport:
    """Prior and bootstrap agree: ``|<N>_P - N_MLE| < width * (dN_P + dN_MLE)``.

    Apply once per prior and keep the larger sufficient M.
    """
    return _compare(sp, smle, measure, "C1_5", width)


def combine_trials(reports: Sequence[CriterionReport]) -> CriterionReport:
    """Trial-averaged gap against trial-averaged budget for one M."""
    if not reports:
        raise ValueError("no reports to combine")
    first = reports[0]
    if any(r.m != first.m or r.which != first.which or r.measure != first.measure for r in reports):
        raise ValueError("reports must share m, criterion and measure")
    gap = float(np.mean([r.gap for r in reports]))
    budget = float(np.mean([r.budget for r in reports]))
    return CriterionReport(first.m, gap, budget, bool(gap < budget), first.which, first.measure, first.sources)


def fit_power_law(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares fit of ``y = c * m**(-alpha)`` in log-log space; returns ``(c, alpha)``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (m, y) pairs")
    m, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0) or np.any(m <= 0):
        raise ValueError("power-law fit needs positive m and y")
    if np.unique(m).size < 2:
        raise ValueError("need at least two distinct m values")
    slope, intercept = np.polyfit(np.log(m), np.log(y), 1)
    return float(np.exp(intercept)), float(-slope)


def sufficient_m(reports: Sequence[CriterionReport]) -> Optional[int]:
    """Smallest tested M from which the criterion holds at every larger tested M, else ``None``."""
    if not reports:
        raise ValueError("empty report series")
    ms = [r.m for r in reports]
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise ValueError("reports must be ordered by strictly increasing m")
    threshold = None
    for r in reversed(reports):
        if not r.satisfied:
            break
        threshold = r.m
    return threshold


def reports_to_json(reports: Sequence[CriterionReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
