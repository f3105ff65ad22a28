"""Data-directory probe: constraint extraction from raw recordings.

Scans a directory for EDF recordings, parses intrinsic attributes from the
headers and quantifies artifact contamination spectrally. The result is a
compact descriptor of derived scalars and labels only; raw sample values
never leave this module.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import edf
from .errors import (
    NoParseableRecordingsError,
    NonFiniteInputError,
    NyquistViolationError,
    InvalidBandError,
    PathNotFoundError,
    PermissionDeniedError,
    WeaveError,
    WindowTooShortError,
)
from .spectral import estimate_band_ratio, estimate_powerline

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_BUDGET = 5
QUALITY_WINDOW_SECONDS = 60.0
EOG_BAND = (0.5, 4.0)
EMG_BAND_LO = 30.0
FRONTAL_PREFIXES = ("FP", "AF")

DESCRIPTOR_FIELDS = (
    "sampling_rate_hz",
    "channel_labels",
    "channel_count",
    "duration_s",
    "powerline_ratio_50",
    "powerline_ratio_60",
    "eog_index",
    "emg_ratio",
    "warnings",
)


@dataclass(frozen=True)
class RecordingInventory:
    root_path: Path
    files: tuple[tuple[Path, str, int], ...]  # (path, format tag, byte size)

    @property
    def total_files(self) -> int:
        return len(self.files)

    def tagged(self, *tags: str) -> list[Path]:
        return [p for p, t, _ in self.files if t in tags]


@dataclass(frozen=True)
class IntrinsicAttributes:
    """Header-level signal attributes of one recording layout."""

    sampling_rate: float
    sampling_rates: tuple[float, ...]
    channel_labels: tuple[str, ...]
    channel_count: int
    duration: float
    physical_units: tuple[str, ...]

    def __post_init__(self):
        if self.channel_count != len(self.channel_labels):
            raise ValueError("channel_count must match the number of labels")
        if any(r <= 0 for r in self.sampling_rates):
            raise ValueError("every sampling rate must be positive")


@dataclass(frozen=True)
class ArtifactQuality:
    powerline_ratio_50: float
    powerline_ratio_60: float
    eog_index: float
    emg_ratio: float

    def __post_init__(self):
        for name in ("powerline_ratio_50", "powerline_ratio_60", "eog_index", "emg_ratio"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} out of [0,1]: {v}")


@dataclass(frozen=True)
class ConstraintVector:
    intrinsic: IntrinsicAttributes
    quality: ArtifactQuality
    sampled_files: tuple[Path, ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)


def scan_directory(root: str | os.PathLike, recursion_limit: int = 8) -> RecordingInventory:
    """List every regular file under `root`, up to `recursion_limit` levels deep.

    Files directly inside `root` are depth 0. Entries are sorted for
    deterministic inventories.
    """
    root = Path(root)
    if not root.exists():
        raise PathNotFoundError(f"no such directory: {root}")
    if not root.is_dir():
        raise PathNotFoundError(f"not a directory: {root}")
    if not os.access(root, os.R_OK):
        raise PermissionDeniedError(f"directory not readable: {root}")

    entries: list[tuple[Path, str, int]] = []

    def visit(directory: Path, depth: int):
        try:
            children = sorted(directory.iterdir())
        except PermissionError as exc:
            raise PermissionDeniedError(str(exc)) from exc
        for child in children:
            if child.is_symlink():
                continue
            if child.is_file():
                entries.append((child, edf.detect_format(child), child.stat().st_size))
            elif child.is_dir() and depth < recursion_limit:
                visit(child, depth + 1)

    visit(root, 0)
    return RecordingInventory(root_path=root, files=tuple(entries))


def parse_edf_header(path: str | os.PathLike) -> IntrinsicAttributes:
    """Intrinsic attributes of a single EDF recording."""
    header = edf.parse_header(path)
    rates = header.sampling_rates
    # scalar rate = most common across signals; ties break toward the highest
    counts = Counter(rates)
    top = max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
    return IntrinsicAttributes(
        sampling_rate=top,
        sampling_rates=rates,
        channel_labels=header.labels,
        channel_count=header.n_signals,
        duration=header.duration,
        physical_units=header.units,
    )


def _safe_metric(fn, *args, warnings: list[str], context: str) -> float | None:
    try:
        return fn(*args)
    except (WindowTooShortError, NyquistViolationError, InvalidBandError,
            NonFiniteInputError) as exc:
        warnings.append(f"{context}: {exc}")
        return None


def _file_quality(path: Path, warnings: list[str]) -> dict[str, float] | None:
    """Per-file quality metrics over the first 60 s, averaged across channels."""
    header = edf.parse_header(path)
    signals = edf.read_samples(path, header, max_seconds=QUALITY_WINDOW_SECONDS)
    idx = header.signal_indices(include_annotations=False)
    if not idx:
        warnings.append(f"{path.name}: no signal channels")
        return None
    rates = header.sampling_rates
    labels = header.labels

    frontal = [i for i in idx if labels[i].upper().startswith(FRONTAL_PREFIXES)]
    eog_channels = frontal if frontal else idx

    per_channel: dict[str, list[float]] = {
        "powerline_ratio_50": [],
        "powerline_ratio_60": [],
        "eog_index": [],
        "emg_ratio": [],
    }
    for i in idx:
        x, fs = signals[i], rates[i]
        v = _safe_metric(estimate_powerline, x, fs, 50.0,
                         warnings=warnings, context=f"{path.name}[{labels[i]}]@50Hz")
        if v is not None:
            per_channel["powerline_ratio_50"].append(v)
        v = _safe_metric(estimate_powerline, x, fs, 60.0,
                         warnings=warnings, context=f"{path.name}[{labels[i]}]@60Hz")
        if v is not None:
            per_channel["powerline_ratio_60"].append(v)
        emg_hi = fs / 2 - 1
        if EMG_BAND_LO < emg_hi:
            v = _safe_metric(estimate_band_ratio, x, fs, EMG_BAND_LO, emg_hi,
                             warnings=warnings, context=f"{path.name}[{labels[i]}]:emg")
            if v is not None:
                per_channel["emg_ratio"].append(v)
        else:
            warnings.append(f"{path.name}[{labels[i]}]: fs={fs} too low for EMG band")
        if i in eog_channels:
            v = _safe_metric(estimate_band_ratio, x, fs, *EOG_BAND,
                             warnings=warnings, context=f"{path.name}[{labels[i]}]:eog")
            if v is not None:
                per_channel["eog_index"].append(v)

    if not any(per_channel.values()):
        return None
    return {k: float(np.mean(v)) if v else 0.0 for k, v in per_channel.items()}


def extract_constraints(
    inventory: RecordingInventory,
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
) -> ConstraintVector:
    """Build the constraint vector from up to `sample_budget` EDF recordings.

    Intrinsic attributes come from the first parseable file; layout
    differences in the other sampled files become warnings, not errors.
    Quality ratios are arithmetic means of the per-file metrics.
    """
    candidates = inventory.tagged("EDF", "EDF+")
    if not candidates:
        raise NoParseableRecordingsError(
            f"no EDF recordings under {inventory.root_path}"
        )
    sampled = candidates[: max(1, sample_budget)]
    warnings: list[str] = []

    intrinsic: IntrinsicAttributes | None = None
    parseable: list[Path] = []
    for path in sampled:
        try:
            attrs = parse_edf_header(path)
        except WeaveError as exc:
            warnings.append(f"{path.name}: unparseable ({exc})")
            continue
        parseable.append(path)
        if intrinsic is None:
            intrinsic = attrs
            continue
        if attrs.channel_count != intrinsic.channel_count:
            warnings.append(
                f"inconsistent channel count: {path.name} has {attrs.channel_count},"
                f" expected {intrinsic.channel_count}"
            )
        elif attrs.channel_labels != intrinsic.channel_labels:
            warnings.append(f"inconsistent channel labels in {path.name}")
        if attrs.sampling_rate != intrinsic.sampling_rate:
            warnings.append(
                f"inconsistent sampling rate: {path.name} has"
                f" {attrs.sampling_rate} Hz, expected {intrinsic.sampling_rate} Hz"
            )
    if intrinsic is None:
        raise NoParseableRecordingsError(
            f"none of {len(sampled)} sampled EDF files parsed"
        )
    if len(set(intrinsic.sampling_rates)) > 1:
        warnings.append(
            "mixed per-signal sampling rates within recording: "
            + ", ".join(f"{r:g}" for r in sorted(set(intrinsic.sampling_rates)))
        )

    per_file = []
    for path in parseable:
        metrics = _file_quality(path, warnings)
        if metrics is not None:
            per_file.append(metrics)
    if per_file:
        quality = ArtifactQuality(
            powerline_ratio_50=float(np.mean([m["powerline_ratio_50"] for m in per_file])),
            powerline_ratio_60=float(np.mean([m["powerline_ratio_60"] for m in per_file])),
            eog_index=float(np.mean([m["eog_index"] for m in per_file])),
            emg_ratio=float(np.mean([m["emg_ratio"] for m in per_file])),
        )
    else:
        warnings.append("no usable signal windows; quality metrics default to 0")
        quality = ArtifactQuality(0.0, 0.0, 0.0, 0.0)

    return ConstraintVector(
        intrinsic=intrinsic,
        quality=quality,
        sampled_files=tuple(parseable),
        warnings=tuple(warnings),
    )


def to_descriptor(cv: ConstraintVector) -> dict:
    """The stable key/value descriptor embedded in prompts and written to disk."""
    return {
        "sampling_rate_hz": round(cv.intrinsic.sampling_rate, 6),
        "channel_labels": list(cv.intrinsic.channel_labels),
        "channel_count": cv.intrinsic.channel_count,
        "duration_s": round(cv.intrinsic.duration, 6),
        "powerline_ratio_50": round(cv.quality.powerline_ratio_50, 6),
        "powerline_ratio_60": round(cv.quality.powerline_ratio_60, 6),
        "eog_index": round(cv.quality.eog_index, 6),
        "emg_ratio": round(cv.quality.emg_ratio, 6),
        "warnings": list(cv.warnings),
    }


def render_descriptor(cv: ConstraintVector) -> str:
    return json.dumps(to_descriptor(cv), indent=2)


def write_descriptor(cv: ConstraintVector, out_path: str | os.PathLike) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_descriptor(cv) + "\n", encoding="utf-8")
    logger.info("wrote constraint descriptor to %s", out_path)
    return out_path
