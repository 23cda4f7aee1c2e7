"""Bound reports: empirical constants with refinement metadata, CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["BoundReport", "REFINEMENT_THRESHOLD", "log_ratio_sup", "reports_to_csv", "to_jsonable"]

REFINEMENT_THRESHOLD = 0.10
CSV_COLUMNS = ("name", "part", "regime", "epsilon", "c", "empirical_C", "refinement_delta", "grid_level", "pass")


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass
class BoundReport:
    """Empirical sup of LHS/RHS and its change under one grid refinement.

    ``values`` holds the sup at each refinement level (coarse first); the
    report passes when the finest value is finite and the relative change
    between the last two levels is below ``threshold``.  Equality-type checks
    store the relative gap in ``empirical_C`` and set ``passed`` explicitly.
    """

    name: str
    params: dict = field(default_factory=dict)
    sample: str = ""
    values: tuple = ()
    threshold: float = REFINEMENT_THRESHOLD
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def empirical_C(self) -> float:
        return float(self.values[-1]) if self.values else float("nan")

    @property
    def refinement_delta(self) -> float:
        if len(self.values) < 2:
            return float("nan")
        a, b = float(self.values[-2]), float(self.values[-1])
        if a == b:
            return 0.0
        return abs(b - a) / max(abs(a), abs(b))

    @property
    def ok(self) -> bool:
        if self.passed is not None:
            return bool(self.passed)
        c = self.empirical_C
        return bool(math.isfinite(c) and c >= 0 and self.refinement_delta < self.threshold)

    def as_dict(self) -> dict:
        return to_jsonable(
            {
                "name": self.name,
                "params": self.params,
                "sample": self.sample,
                "empirical_C": self.empirical_C,
                "refinement_delta": self.refinement_delta,
                "levels": list(self.values),
                "pass": self.ok,
                **({"extra": self.extra} if self.extra else {}),
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> list:
        p = self.params
        return [
            self.name,
            p.get("part", ""),
            p.get("regime", ""),
            _fmt(p.get("epsilon", "")),
            _fmt(p.get("c", "")),
            _fmt(self.empirical_C),
            _fmt(self.refinement_delta),
            p.get("grid_level", ""),
            str(self.ok).lower(),
        ]

    def line(self) -> str:
        flag = "PASS" if self.ok else "FAIL"
        return f"[{flag}] {self.name}: C={self.empirical_C:.6g} delta={self.refinement_delta:.3g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def log_ratio_sup(lhs, log_rhs, mask=None) -> float:
    """sup of |lhs| / exp(log_rhs) evaluated in the log domain (0 where lhs vanishes)."""
    lhs = np.abs(np.asarray(lhs, dtype=float))
    log_rhs = np.broadcast_to(log_rhs, lhs.shape)
    with np.errstate(divide="ignore"):
        lr = np.log(lhs) - log_rhs
    if mask is not None:
        mask = np.broadcast_to(mask, lhs.shape)
        if not mask.any():
            return 0.0
        lr = lr[mask]
    if lr.size == 0:
        return 0.0
    top = np.max(lr)
    if np.isnan(top):
        return float("nan")
    return float(np.exp(top)) if top > -np.inf else 0.0
