"""
Machine-readable verification reports.

A report is a JSON object::

    {
      "tool": "almosthermitian", "version": "...", "command": "...",
      "manifold": "...", "seed": 7, "order": 3, "tol_scale": 1.0,
      "parameters": {...},
      "records": [
        {"name": "...", "samples": 50, "max_residual": 1e-16,
         "min_margin": null, "tolerance": 1e-8, "passed": true,
         "elapsed": 0.12, "details": {...}},
        ...
      ],
      "status": "pass"
    }

``elapsed`` is the only field that may differ between runs with equal
arguments; :func:`strip_timing` removes it.  Keys are written sorted.
"""

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Record", "Report", "strip_timing", "timed"]


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


@dataclass
class Record:
    """One named check."""

    name: str
    samples: int
    tolerance: float
    max_residual: float = None
    min_margin: float = None
    passed: bool = None
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)
    error: str = None

    def __post_init__(self):
        if self.passed is None:
            ok = self.error is None
            if self.max_residual is not None:
                ok = ok and self.max_residual <= self.tolerance
            if self.min_margin is not None:
                ok = ok and self.min_margin >= -self.tolerance
            self.passed = bool(ok)

    def to_dict(self):
        out = {
            "name": self.name,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "min_margin": self.min_margin,
            "passed": self.passed,
            "elapsed": round(self.elapsed, 6),
        }
        if self.details:
            out["details"] = self.details
        if self.error is not None:
            out["error"] = self.error
        return _clean(out)


@dataclass
class Report:
    command: str
    manifold: str
    seed: int
    order: int
    tol_scale: float = 1.0
    parameters: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    def add(self, record):
        self.records.append(record)
        return record

    def to_dict(self):
        from . import __version__

        return _clean(
            {
                "tool": "almosthermitian",
                "version": __version__,
                "command": self.command,
                "manifold": self.manifold,
                "seed": self.seed,
                "order": self.order,
                "tol_scale": self.tol_scale,
                "parameters": self.parameters,
                "records": [r.to_dict() for r in self.records],
                "status": "pass" if self.passed else "fail",
            }
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def strip_timing(report):
    """Copy of a report dict (or JSON text) without ``elapsed`` fields."""
    if isinstance(report, str):
        report = json.loads(report)
    return _drop_elapsed(report)


def _drop_elapsed(x):
    if isinstance(x, dict):
        return {k: _drop_elapsed(v) for k, v in x.items() if k != "elapsed"}
    if isinstance(x, list):
        return [_drop_elapsed(v) for v in x]
    return x


@contextmanager
def timed():
    """``with timed() as t: ...`` then ``t()`` gives the elapsed seconds."""
    start = time.perf_counter()
    end = []
    yield lambda: (end[0] if end else time.perf_counter()) - start
    end.append(time.perf_counter())
