"""Seeded synthetic benchmark tasks.

A task is a directory of EDF fixtures plus a documented scoring rule. The
"ridge-peak" rule maps a hyperparameter the script declares in its metrics
auxiliary to primary_metric = 1 - min(1, |h - h_star|) for a hidden optimum
h_star, so a mock refinement loop has a known target to climb toward while
staying fully deterministic: same seed, same bytes, same scores.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .edfio import write_edf

SCORING_FILENAME = "scoring.json"
DEFAULT_LABELS = ("FP1", "O1", "C3", "C4", "P3", "P4", "F3", "F4")


def ridge_peak_score(h: float, h_star: float) -> float:
    return 1.0 - min(1.0, abs(h - h_star))


@dataclass(frozen=True)
class SyntheticTask:
    name: str
    seed: int
    n_channels: int
    fs: float
    duration: float
    h_star: float
    data_dir: Path

    def score(self, h: float) -> float:
        return ridge_peak_score(h, self.h_star)


def make_synthetic_task(
    name: str,
    seed: int,
    out_dir: str | os.PathLike,
    n_channels: int = 2,
    fs: float = 200.0,
    duration: float = 10.0,
    n_files: int = 2,
    line_noise_hz: float | None = 50.0,
    h_star: float | None = None,
) -> SyntheticTask:
    """Generate EDF fixtures and the scoring document under `out_dir`.

    Channels carry a 10 Hz base rhythm plus noise; `line_noise_hz` injects
    mains contamination so the engine's probe has something to find.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    if h_star is None:
        h_star = round(float(rng.uniform(0.5, 0.9)), 2)

    labels = list(DEFAULT_LABELS[:n_channels])
    if len(labels) < n_channels:
        labels += [f"CH{i}" for i in range(len(labels), n_channels)]
    n_records = int(round(duration))
    t = np.arange(int(fs * duration)) / fs
    for k in range(n_files):
        signals = []
        for _ in range(n_channels):
            x = 300.0 * np.sin(2 * np.pi * 10.0 * t + rng.uniform(0, 2 * np.pi))
            if line_noise_hz:
                x = x + 600.0 * np.sin(
                    2 * np.pi * line_noise_hz * t + rng.uniform(0, 2 * np.pi)
                )
            x = x + 20.0 * rng.standard_normal(t.size)
            signals.append(x)
        write_edf(
            out_dir / f"rec_{k:02d}.edf",
            labels=labels,
            fs=fs,
            record_duration=1.0,
            n_records=n_records,
            signals=signals,
        )

    scoring = {
        "rule": "ridge-peak",
        "h_star": h_star,
        "description": (
            "declare a hyperparameter h in the metrics auxiliary object;"
            " the task scores primary_metric = 1 - min(1, |h - h_star|)"
        ),
    }
    (out_dir / SCORING_FILENAME).write_text(
        json.dumps(scoring, indent=2), encoding="utf-8"
    )
    (out_dir / "task.json").write_text(
        json.dumps(
            {
                "name": name,
                "seed": seed,
                "n_channels": n_channels,
                "fs": fs,
                "duration": duration,
                "n_files": n_files,
                "line_noise_hz": line_noise_hz,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return SyntheticTask(
        name=name,
        seed=seed,
        n_channels=n_channels,
        fs=fs,
        duration=duration,
        h_star=h_star,
        data_dir=out_dir,
    )


def load_scoring(data_dir: str | os.PathLike) -> dict | None:
    path = Path(data_dir) / SCORING_FILENAME
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))
