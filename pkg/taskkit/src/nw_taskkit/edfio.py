"""EDF writing for synthetic fixtures.

Serializes the standard layout: 256-byte fixed ASCII header, 256 header
bytes per signal, then data records of 16-bit little-endian samples.
Physical and digital ranges default to unit gain so float inputs survive to
within rounding.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np


def _pad(text: str, width: int) -> bytes:
    raw = text.encode("latin-1")
    if len(raw) > width:
        raise ValueError(f"EDF field overflow: {text!r} exceeds {width} bytes")
    return raw.ljust(width)


def _num(value, width: int) -> bytes:
    text = f"{value:g}" if isinstance(value, float) else str(value)
    return _pad(text, width)


def write_edf(
    path: str | os.PathLike,
    labels: list[str],
    fs: float,
    record_duration: float,
    n_records: int,
    signals: list[np.ndarray],
    units: str = "uV",
) -> Path:
    ns = len(labels)
    spr = int(round(fs * record_duration))
    header = b"".join(
        [
            _pad("0", 8),
            _pad("X X X X", 80),
            _pad("Startdate 01-JAN-2024 X X X", 80),
            _pad("01.01.24", 8),
            _pad("00.00.00", 8),
            _num(256 * (ns + 1), 8),
            _pad("", 44),
            _num(n_records, 8),
            _num(record_duration, 8),
            _num(ns, 4),
        ]
    )
    header += b"".join(_pad(lab, 16) for lab in labels)
    header += b"".join(_pad("synthetic", 80) for _ in range(ns))
    header += b"".join(_pad(units, 8) for _ in range(ns))
    header += b"".join(_num(-32768.0, 8) for _ in range(ns))
    header += b"".join(_num(32767.0, 8) for _ in range(ns))
    header += b"".join(_num(-32768, 8) for _ in range(ns))
    header += b"".join(_num(32767, 8) for _ in range(ns))
    header += b"".join(_pad("", 80) for _ in range(ns))
    header += b"".join(_num(spr, 8) for _ in range(ns))
    header += b"".join(_pad("", 32) for _ in range(ns))

    chunks = [header]
    for r in range(n_records):
        for x in signals:
            seg = np.asarray(x[r * spr : (r + 1) * spr])
            if seg.size < spr:
                seg = np.pad(seg, (0, spr - seg.size))
            chunks.append(np.clip(np.round(seg), -32768, 32767).astype("<i2").tobytes())
    path = Path(path)
    path.write_bytes(b"".join(chunks))
    return path
