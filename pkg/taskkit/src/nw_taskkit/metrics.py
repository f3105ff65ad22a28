"""Metrics emission obeying the engine's invocation ABI.

Candidate scripts (and the reference template) call `emit_metrics` to write
`<output_dir>/metrics.json` in exactly the schema the search engine parses:
metric_name, primary_metric, optional normalization {min, max}, optional
auxiliary numbers and wall_seconds.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

METRICS_FILENAME = "metrics.json"


def emit_metrics(
    metric_name: str,
    primary_metric: float,
    auxiliary: dict | None = None,
    output_dir: str | os.PathLike = ".",
    normalization: tuple[float, float] | None = None,
    wall_seconds: float | None = None,
) -> Path:
    """Write the metrics document; returns its path.

    Raises ValueError on non-finite values before anything touches disk.
    """
    if not metric_name:
        raise ValueError("metric_name must be non-empty")
    if not math.isfinite(primary_metric):
        raise ValueError(f"primary_metric must be finite, got {primary_metric}")
    doc: dict = {
        "metric_name": metric_name,
        "primary_metric": float(primary_metric),
    }
    if normalization is not None:
        lo, hi = float(normalization[0]), float(normalization[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise ValueError(f"normalization range invalid: ({lo}, {hi})")
        doc["normalization"] = {"min": lo, "max": hi}
    if auxiliary:
        clean = {}
        for key, value in auxiliary.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"auxiliary {key!r} must be finite, got {value}")
            clean[str(key)] = value
        doc["auxiliary"] = clean
    if wall_seconds is not None:
        if not math.isfinite(wall_seconds) or wall_seconds < 0:
            raise ValueError(f"wall_seconds must be finite and >= 0, got {wall_seconds}")
        doc["wall_seconds"] = float(wall_seconds)

    path = Path(output_dir) / METRICS_FILENAME
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path
