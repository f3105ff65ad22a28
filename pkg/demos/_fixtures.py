"""Tiny EDF fixture writer shared by the demo scripts.

Standalone on purpose: demos exercise the installed `weave` package only,
so the fixture data has to come from somewhere else.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pad(text: str, width: int) -> bytes:
    return text.encode("latin-1").ljust(width)


def _num(value, width: int) -> bytes:
    text = f"{value:g}" if isinstance(value, float) else str(value)
    return _pad(text, width)


def write_demo_edf(path: Path, labels, fs=200.0, seconds=10, line_freq=50.0, seed=0):
    """One EDF file: 10 Hz rhythm + mains noise + white noise per channel."""
    rng = np.random.default_rng(seed)
    ns = len(labels)
    spr = int(fs)
    t = np.arange(int(fs * seconds)) / fs
    signals = []
    for _ in range(ns):
        x = 300 * np.sin(2 * np.pi * 10 * t + rng.uniform(0, 2 * np.pi))
        if line_freq:
            x = x + 600 * np.sin(2 * np.pi * line_freq * t + rng.uniform(0, 2 * np.pi))
        signals.append(x + 20 * rng.standard_normal(t.size))

    header = b"".join([
        _pad("0", 8), _pad("X X X X", 80), _pad("demo recording", 80),
        _pad("01.01.24", 8), _pad("00.00.00", 8), _num(256 * (ns + 1), 8),
        _pad("", 44), _num(seconds, 8), _num(1.0, 8), _num(ns, 4),
    ])
    header += b"".join(_pad(lab, 16) for lab in labels)
    header += b"".join(_pad("demo", 80) for _ in range(ns))
    header += b"".join(_pad("uV", 8) for _ in range(ns))
    header += b"".join(_num(-32768.0, 8) for _ in range(ns))
    header += b"".join(_num(32767.0, 8) for _ in range(ns))
    header += b"".join(_num(-32768, 8) for _ in range(ns))
    header += b"".join(_num(32767, 8) for _ in range(ns))
    header += b"".join(_pad("", 80) for _ in range(ns))
    header += b"".join(_num(spr, 8) for _ in range(ns))
    header += b"".join(_pad("", 32) for _ in range(ns))

    chunks = [header]
    for r in range(seconds):
        for x in signals:
            chunks.append(np.round(x[r * spr:(r + 1) * spr]).astype("<i2").tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    return path


def write_demo_corpus(directory: Path, n_files=2, line_freq=50.0):
    return [
        write_demo_edf(directory / f"rec_{k:02d}.edf", ["FP1", "O1"],
                       line_freq=line_freq, seed=k)
        for k in range(n_files)
    ]
