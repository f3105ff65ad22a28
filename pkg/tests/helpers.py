"""Shared test oracles and fixture builders.

Everything here is deliberately independent of the package internals: the
EDF writer emits bytes straight from the public format description, and the
spectral oracle is a direct complex-exponential DFT with no windowing.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

# --- independent EDF writer ---------------------------------------------------


def _pad(text: str, width: int) -> bytes:
    raw = text.encode("latin-1")
    if len(raw) > width:
        raise ValueError(f"field too long for EDF: {text!r} > {width}")
    return raw.ljust(width)


def _num(value, width: int) -> bytes:
    text = f"{value:g}" if isinstance(value, float) else str(value)
    return _pad(text, width)


def build_edf_bytes(
    labels: list[str],
    samples_per_record: list[int],
    record_duration: float,
    n_records: int,
    signals: list[np.ndarray] | None = None,
    units: list[str] | None = None,
    reserved: str = "",
    physical_range: tuple[float, float] = (-32768.0, 32767.0),
    digital_range: tuple[int, int] = (-32768, 32767),
) -> bytes:
    """Serialize an EDF file: 256-byte fixed header, 256 bytes per signal,
    then int16 little-endian data records.

    With the default unit-gain ranges, physical values equal the rounded
    digital ones, so float signals survive to within 0.5 units.
    """
    ns = len(labels)
    assert len(samples_per_record) == ns
    units = units or ["uV"] * ns

    header = b""
    header += _pad("0", 8)  # version
    header += _pad("X X X X", 80)  # patient id
    header += _pad("Startdate 01-JAN-2024 X X X", 80)  # recording id
    header += _pad("01.01.24", 8)
    header += _pad("00.00.00", 8)
    header += _num(256 * (ns + 1), 8)  # header bytes
    header += _pad(reserved, 44)
    header += _num(n_records, 8)
    header += _num(record_duration, 8)
    header += _num(ns, 4)

    header += b"".join(_pad(lab, 16) for lab in labels)
    header += b"".join(_pad("AgAgCl electrode", 80) for _ in range(ns))
    header += b"".join(_pad(u, 8) for u in units)
    header += b"".join(_num(physical_range[0], 8) for _ in range(ns))
    header += b"".join(_num(physical_range[1], 8) for _ in range(ns))
    header += b"".join(_num(digital_range[0], 8) for _ in range(ns))
    header += b"".join(_num(digital_range[1], 8) for _ in range(ns))
    header += b"".join(_pad("", 80) for _ in range(ns))
    header += b"".join(_num(spr, 8) for spr in samples_per_record)
    header += b"".join(_pad("", 32) for _ in range(ns))
    assert len(header) == 256 * (ns + 1)

    if signals is None:
        signals = [np.zeros(spr * n_records) for spr in samples_per_record]
    chunks = [header]
    for r in range(n_records):
        for i, spr in enumerate(samples_per_record):
            seg = np.asarray(signals[i][r * spr : (r + 1) * spr])
            if seg.size < spr:
                seg = np.pad(seg, (0, spr - seg.size))
            chunks.append(np.round(seg).astype("<i2").tobytes())
    return b"".join(chunks)


def write_edf(path: Path, **kwargs) -> Path:
    path = Path(path)
    path.write_bytes(build_edf_bytes(**kwargs))
    return path


def sine(freq: float, fs: float, seconds: float, amp: float = 1000.0, phase: float = 0.0):
    t = np.arange(int(round(fs * seconds))) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


def write_sine_corpus(
    directory: Path,
    n_files: int = 2,
    labels: list[str] | None = None,
    fs: float = 200.0,
    seconds: float = 12.0,
    line_freq: float | None = 50.0,
    seed: int = 0,
) -> list[Path]:
    """A small corpus of EDF files: 10 Hz base rhythm + optional line noise."""
    directory.mkdir(parents=True, exist_ok=True)
    labels = labels or ["FP1", "O1"]
    rng = np.random.default_rng(seed)
    paths = []
    for k in range(n_files):
        chans = []
        for _ in labels:
            x = sine(10.0, fs, seconds, amp=300.0, phase=rng.uniform(0, 2 * np.pi))
            if line_freq:
                x = x + sine(line_freq, fs, seconds, amp=600.0,
                             phase=rng.uniform(0, 2 * np.pi))
            x = x + 20.0 * rng.standard_normal(x.size)
            chans.append(x)
        paths.append(
            write_edf(
                directory / f"rec_{k:02d}.edf",
                labels=labels,
                samples_per_record=[int(fs)] * len(labels),
                record_duration=1.0,
                n_records=int(seconds),
                signals=chans,
            )
        )
    return paths


# --- brute-force spectral oracle ----------------------------------------------

_DFT_CACHE: dict[int, np.ndarray] = {}


def dft_band_ratio(
    x: np.ndarray,
    fs: float,
    band: tuple[float, float],
    reference: tuple[float, float],
) -> float:
    """Direct DFT periodogram band-power ratio (no FFT, no window).

    O(N^2) via an explicit complex-exponential matrix; the point is

    independence from the scipy Welch path, not speed.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n not in _DFT_CACHE:
        k = np.arange(n // 2 + 1)
        t = np.arange(n)
        _DFT_CACHE[n] = np.exp(-2j * np.pi * np.outer(k, t) / n)
    power = np.abs(_DFT_CACHE[n] @ x) ** 2
    freqs = np.arange(n // 2 + 1) * fs / n
    num = power[(freqs >= band[0]) & (freqs <= band[1])].sum()
    ref = power[(freqs >= reference[0]) & (freqs <= reference[1])].sum()
    if ref <= 0:
        return 0.0
    return float(min(1.0, max(0.0, num / ref)))


def oracle_tone_signal(rng: np.random.Generator, fs: float, seconds: float):
    """A line-spectrum test signal: integer-Hz tones >= 3 Hz apart, one of
    them pinned at 50 Hz, plus a -40 dB noise floor.

    Returns (samples, tone frequencies). Tones avoid 46-54 Hz so the 50 Hz
    line owns its band.
    """
    tones = [50.0]
    pool = [f for f in range(3, 96) if not (46 <= f <= 54)]
    rng.shuffle(pool)
    want = 1 + int(rng.integers(2, 6))
    for f in pool:
        if all(abs(f - g) >= 3 for g in tones):
            tones.append(float(f))
        if len(tones) == want:
            break
    t = np.arange(int(fs * seconds)) / fs
    x = np.zeros(t.size)
    for f in tones:
        x += rng.uniform(0.5, 2.0) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    x += 0.01 * rng.standard_normal(t.size)
    return x, tones


def clear_band(rng: np.random.Generator, tones: list[float], fs: float):
    """A band with >= 1 tone inside and every edge >= 3 Hz from any tone."""
    for _ in range(1000):
        lo = int(rng.integers(1, 80))
        hi = int(rng.integers(lo + 6, int(fs / 2) - 1))
        inside = any(lo + 3 <= f <= hi - 3 for f in tones)
        clear = all(abs(f - lo) >= 3 and abs(f - hi) >= 3 for f in tones)
        if inside and clear:
            return float(lo), float(hi)
    raise AssertionError("could not place a clear band; loosen the constraints")


# --- mock playbooks -------------------------------------------------------------


def metrics_script(
    h: float,
    h_star: float = 0.8,
    wall: float = 0.25,
    metric_name: str = "ridge_peak",
) -> str:
    """A self-contained candidate that scores itself with the ridge-peak rule."""
    return f'''\
import argparse
import json

H = {h!r}
H_STAR = {h_star!r}

parser = argparse.ArgumentParser()
parser.add_argument("--data-dir", required=True)
parser.add_argument("--output-dir", required=True)
args = parser.parse_args()

metric = 1.0 - min(1.0, abs(H - H_STAR))
with open(f"{{args.output_dir}}/metrics.json", "w") as fh:
    json.dump(
        {{
            "metric_name": {metric_name!r},
            "primary_metric": metric,
            "auxiliary": {{"h": H}},
            "wall_seconds": {wall!r},
        }},
        fh,
    )
'''


def fenced(script: str, rationale: str = "Plan: tune the declared hyperparameter.") -> str:
    return f"{rationale}\n```python\n{script}\n```"


def halving_steps(h0: float, h_star: float, n: int) -> list[float]:
    hs = [h0]
    for _ in range(n):
        hs.append((hs[-1] + h_star) / 2.0)
    return hs


def ridge_playbook(h0: float = 0.2, h_star: float = 0.8, steps: int = 12) -> list[dict]:
    """Playbook whose REFINE responses move h halfway toward the optimum."""
    entries = [
        {
            "role": "DRAFT_ROOT",
            "pattern": ".*",
            "response": fenced(metrics_script(h0, h_star)),
        }
    ]
    hs = halving_steps(h0, h_star, steps)
    for parent_h, child_h in zip(hs, hs[1:]):
        entries.append(
            {
                "role": "REFINE",
                "pattern": re.escape(f"auxiliary h: {parent_h}") + r"\n",
                "response": fenced(
                    metrics_script(child_h, h_star),
                    rationale=f"Move h from {parent_h} halfway toward the peak.",
                ),
            }
        )
    # anything deeper just repeats the last script
    entries.append(
        {
            "role": "REFINE",
            "pattern": ".*",
            "response": fenced(metrics_script(hs[-1], h_star)),
        }
    )
    return entries


def write_playbook(path: Path, entries: list[dict]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(entries, indent=2), encoding="utf-8")
    return path


BROKEN_SCRIPT = "def broken(:\n    pass\n"
