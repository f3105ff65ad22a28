"""Minimal EDF/EDF+ reader.

EDF files carry a 256-byte fixed ASCII header, then 256 bytes of per-signal
header fields, then data records of 16-bit little-endian samples. Only what
the data probe needs is implemented: header parsing and bounded sample
reading. Writing EDF is deliberately out of scope here.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    MalformedFieldError,
    TruncatedHeaderError,
    ZeroRecordDurationError,
)

EDF_MAGIC = b"0       "
FIXED_HEADER_BYTES = 256
PER_SIGNAL_HEADER_BYTES = 256

# (field name, byte width) in on-disk order for the per-signal header block
_SIGNAL_FIELDS = (
    ("labels", 16),
    ("transducers", 80),
    ("units", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefilter", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)

ANNOTATION_LABEL = "EDF Annotations"


@dataclass(frozen=True)
class EdfHeader:
    """Full parsed header, enough to locate and scale every sample."""

    version: str
    reserved: str
    n_records: int
    record_duration: float
    n_signals: int
    labels: tuple[str, ...]
    units: tuple[str, ...]
    physical_min: tuple[float, ...]
    physical_max: tuple[float, ...]
    digital_min: tuple[int, ...]
    digital_max: tuple[int, ...]
    samples_per_record: tuple[int, ...]
    header_bytes: int

    @property
    def sampling_rates(self) -> tuple[float, ...]:
        return tuple(s / self.record_duration for s in self.samples_per_record)

    @property
    def duration(self) -> float:
        return self.n_records * self.record_duration

    @property
    def is_plus(self) -> bool:
        return self.reserved.startswith("EDF+")

    def signal_indices(self, include_annotations: bool = False) -> list[int]:
        if include_annotations:
            return list(range(self.n_signals))
        return [i for i, lab in enumerate(self.labels) if lab != ANNOTATION_LABEL]


def _ascii(raw: bytes) -> str:
    return raw.decode("latin-1").strip()


def _as_int(raw: bytes, field: str) -> int:
    text = _ascii(raw)
    try:
        return int(text)
    except ValueError:
        raise MalformedFieldError(f"field {field!r} is not an integer: {text!r}") from None


def _as_float(raw: bytes, field: str) -> float:
    text = _ascii(raw)
    try:
        return float(text)
    except ValueError:
        raise MalformedFieldError(f"field {field!r} is not numeric: {text!r}") from None


def parse_header(path: str | os.PathLike) -> EdfHeader:
    """Parse the fixed and per-signal header blocks of an EDF file."""
    path = Path(path)
    with open(path, "rb") as f:
        fixed = f.read(FIXED_HEADER_BYTES)
        if len(fixed) < FIXED_HEADER_BYTES:
            raise TruncatedHeaderError(
                f"{path}: {len(fixed)} bytes, EDF needs at least {FIXED_HEADER_BYTES}"
            )
        version = _ascii(fixed[0:8])
        reserved = _ascii(fixed[192:236])
        header_bytes = _as_int(fixed[184:192], "header_bytes")
        n_records = _as_int(fixed[236:244], "n_records")
        record_duration = _as_float(fixed[244:252], "record_duration")
        n_signals = _as_int(fixed[252:256], "n_signals")
        if n_signals <= 0:
            raise MalformedFieldError(f"signal count must be positive, got {n_signals}")
        if record_duration == 0:
            raise ZeroRecordDurationError(f"{path}: record duration is zero")
        if record_duration < 0:
            raise MalformedFieldError(
                f"record duration must be positive, got {record_duration}"
            )

        block = f.read(PER_SIGNAL_HEADER_BYTES * n_signals)
        if len(block) < PER_SIGNAL_HEADER_BYTES * n_signals:
            raise TruncatedHeaderError(
                f"{path}: signal header truncated ({len(block)} of "
                f"{PER_SIGNAL_HEADER_BYTES * n_signals} bytes)"
            )

    columns: dict[str, list] = {}
    offset = 0
    for field, width in _SIGNAL_FIELDS:
        raws = [block[offset + i * width : offset + (i + 1) * width] for i in range(n_signals)]
        offset += width * n_signals
        if field in ("labels", "transducers", "units", "prefilter", "reserved"):
            columns[field] = [_ascii(r) for r in raws]
        elif field in ("physical_min", "physical_max"):
            columns[field] = [_as_float(r, field) for r in raws]
        else:
            columns[field] = [_as_int(r, field) for r in raws]

    if any(s <= 0 for s in columns["samples_per_record"]):
        raise MalformedFieldError("samples per record must be positive for every signal")

    return EdfHeader(
        version=version,
        reserved=reserved,
        n_records=n_records,
        record_duration=record_duration,
        n_signals=n_signals,
        labels=tuple(columns["labels"]),
        units=tuple(columns["units"]),
        physical_min=tuple(columns["physical_min"]),
        physical_max=tuple(columns["physical_max"]),
        digital_min=tuple(columns["digital_min"]),
        digital_max=tuple(columns["digital_max"]),
        samples_per_record=tuple(columns["samples_per_record"]),
        header_bytes=header_bytes,
    )


def read_samples(
    path: str | os.PathLike,
    header: EdfHeader | None = None,
    max_seconds: float | None = None,
) -> list[np.ndarray]:
    """Read physically scaled samples for every signal.

    Returns one float array per signal (annotation channels included, raw).
    `max_seconds` bounds reading to the first whole records covering that
    span. Truncated trailing records are dropped.
    """
    path = Path(path)
    if header is None:
        header = parse_header(path)

    n_records = header.n_records
    if max_seconds is not None:
        n_records = min(n_records, int(np.ceil(max_seconds / header.record_duration)))

    record_samples = sum(header.samples_per_record)
    record_bytes = 2 * record_samples
    data_offset = FIXED_HEADER_BYTES + PER_SIGNAL_HEADER_BYTES * header.n_signals

    with open(path, "rb") as f:
        f.seek(data_offset)
        raw = f.read(record_bytes * n_records)
    got_records = len(raw) // record_bytes
    raw = raw[: got_records * record_bytes]
    if got_records == 0:
        return [np.empty(0) for _ in range(header.n_signals)]

    matrix = np.frombuffer(raw, dtype="<i2").reshape(got_records, record_samples)

    signals: list[np.ndarray] = []
    col = 0
    for i in range(header.n_signals):
        spr = header.samples_per_record[i]
        digital = matrix[:, col : col + spr].reshape(-1).astype(float)
        col += spr
        dig_range = header.digital_max[i] - header.digital_min[i]
        if dig_range != 0:
            scale = (header.physical_max[i] - header.physical_min[i]) / dig_range
            offset = header.physical_max[i] - scale * header.digital_max[i]
            digital = digital * scale + offset
        signals.append(digital)
    return signals


def detect_format(path: str | os.PathLike) -> str:
    """Cheap format tag via magic bytes: 'EDF', 'EDF+' or 'UNKNOWN'."""
    try:
        with open(path, "rb") as f:
            head = f.read(236)
    except OSError:
        return "UNKNOWN"
    if len(head) < 8 or head[:8] != EDF_MAGIC:
        return "UNKNOWN"
    reserved = head[192:236].decode("latin-1", errors="replace")
    return "EDF+" if reserved.startswith("EDF+") else "EDF"
