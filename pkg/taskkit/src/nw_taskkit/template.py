"""Reference pipeline script: the standardized preprocessing front end.

`reference_template()` returns a runnable, self-contained candidate script
obeying the engine's invocation ABI. Its preprocessing stage applies the
standardized recipe: 0.1-75 Hz bandpass, region-adaptive notch (50 or 60 Hz,
whichever band dominates, overridable by a constraints.json descriptor in
the data directory), temporal resampling to 200 Hz, and global amplitude
scaling by 1e-2. The model stage is a deliberately tiny trainable stub.

The script imports only allow-listed modules (numpy, scipy, stdlib), so it
runs unmodified under the engine sandbox; it is also useful raw material
for mock playbooks and documentation.
"""

TEMPLATE = '''\
"""Candidate pipeline: load -> preprocess -> model.

Stages:
  load        read every EDF in --data-dir into per-channel float arrays
  preprocess  0.1-75 Hz bandpass, adaptive 50/60 Hz notch, resample to
              200 Hz, scale amplitudes by 1e-2
  model       tiny logistic-regression stub over per-epoch band powers

Declares its tunable hyperparameter `h` in the metrics auxiliary. On
synthetic ridge-peak tasks (scoring.json present in the data directory) the
primary metric is the task's documented score for `h`; otherwise it is the
stub's holdout accuracy.
"""

import argparse
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal

H = 0.5  # tunable hyperparameter, reported in the metrics auxiliary
TARGET_FS = 200.0
BAND = (0.1, 75.0)
SCALE = 1e-2


def read_edf(path):
    """Minimal EDF reader: labels, sampling rate, channels as float arrays."""
    raw = Path(path).read_bytes()
    n_records = int(raw[236:244].decode("latin-1").strip())
    record_duration = float(raw[244:252].decode("latin-1").strip())
    ns = int(raw[252:256].decode("latin-1").strip())

    # per-signal header layout: 16/80/8/8/8/8/8/80/8/32 bytes per field block
    starts = {}
    cursor = 0
    for name, width in [("label", 16), ("transducer", 80), ("unit", 8),
                        ("pmin", 8), ("pmax", 8), ("dmin", 8), ("dmax", 8),
                        ("prefilter", 80), ("spr", 8), ("reserved", 32)]:
        starts[name] = cursor
        cursor += width

    def field(name, width):
        base = 256 + starts[name] * ns
        return [
            raw[base + i * width : base + (i + 1) * width].decode("latin-1").strip()
            for i in range(ns)
        ]

    labels = field("label", 16)
    pmin = np.array([float(v) for v in field("pmin", 8)])
    pmax = np.array([float(v) for v in field("pmax", 8)])
    dmin = np.array([float(v) for v in field("dmin", 8)])
    dmax = np.array([float(v) for v in field("dmax", 8)])
    spr = np.array([int(v) for v in field("spr", 8)])

    data_start = 256 * (ns + 1)
    record_len = int(spr.sum())
    usable = (len(raw) - data_start) // (2 * record_len)
    n_records = min(n_records, usable)
    matrix = np.frombuffer(
        raw, dtype="<i2", count=n_records * record_len, offset=data_start
    ).reshape(n_records, record_len).astype(float)

    channels = []
    col = 0
    for i in range(ns):
        x = matrix[:, col : col + spr[i]].reshape(-1)
        col += int(spr[i])
        drange = dmax[i] - dmin[i]
        if drange != 0:
            scale = (pmax[i] - pmin[i]) / drange
            x = x * scale + (pmax[i] - scale * dmax[i])
        channels.append(x)
    fs = spr[0] / record_duration
    return labels, float(fs), channels


def band_power(x, fs, lo, hi):
    spectrum = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    return float(spectrum[(freqs >= lo) & (freqs <= hi)].sum())


def pick_notch(channels, fs, data_dir):
    """Descriptor override if present, else estimate which mains band wins."""
    descriptor = Path(data_dir) / "constraints.json"
    if descriptor.exists():
        doc = json.loads(descriptor.read_text())
        r50 = doc.get("powerline_ratio_50", 0.0)
        r60 = doc.get("powerline_ratio_60", 0.0)
        return 50.0 if r50 >= r60 else 60.0
    p50 = sum(band_power(x, fs, 49, 51) for x in channels)
    p60 = sum(band_power(x, fs, 59, 61) for x in channels)
    return 50.0 if p50 >= p60 else 60.0


def preprocess(channels, fs, data_dir):
    nyq = fs / 2
    hi = min(BAND[1], 0.9 * nyq)
    sos = signal.butter(4, [BAND[0], hi], btype="bandpass", fs=fs, output="sos")
    channels = [signal.sosfiltfilt(sos, x) for x in channels]

    notch_hz = pick_notch(channels, fs, data_dir)
    if notch_hz < 0.9 * nyq:
        b, a = signal.iirnotch(notch_hz, Q=30.0, fs=fs)
        channels = [signal.filtfilt(b, a, x) for x in channels]

    ratio = Fraction(TARGET_FS / fs).limit_denominator(1000)
    channels = [
        signal.resample_poly(x, ratio.numerator, ratio.denominator) for x in channels
    ]
    channels = [SCALE * x for x in channels]
    return channels, notch_hz


def epoch_features(channels, fs):
    """Log band powers per 1 s epoch, stacked over channels."""
    bands = [(0.5, 4), (4, 8), (8, 13), (13, 30), (30, 45)]
    epoch = int(fs)
    n_epochs = min(x.size for x in channels) // epoch
    rows = []
    for e in range(n_epochs):
        feats = []
        for x in channels:
            seg = x[e * epoch : (e + 1) * epoch]
            for lo, hi in bands:
                feats.append(np.log1p(band_power(seg, fs, lo, hi)))
        rows.append(feats)
    return np.array(rows)


def train_stub(features, h):
    """Logistic regression on deterministic pseudo-labels, plain GD."""
    labels = (np.arange(features.shape[0]) // 2) % 2
    split = max(1, int(0.7 * features.shape[0]))
    mu, sd = features[:split].mean(axis=0), features[:split].std(axis=0) + 1e-9
    z = (features - mu) / sd
    rng = np.random.default_rng(0)
    w = 0.01 * rng.standard_normal(z.shape[1])
    b = 0.0
    lr, reg = 0.1, 0.1 * (1.0 - h)
    for _ in range(200):
        logits = z[:split] @ w + b
        p = 1.0 / (1.0 + np.exp(-logits))
        grad_w = z[:split].T @ (p - labels[:split]) / split + reg * w
        grad_b = float(np.mean(p - labels[:split]))
        w -= lr * grad_w
        b -= lr * grad_b
    pred = (z[split:] @ w + b) > 0
    if pred.size == 0:
        return 0.5
    return float(np.mean(pred == labels[split:]))


def main():
    start = time.monotonic()
    parser = argparse.ArgumentParser()
    parser.add_argument("--data-dir", required=True)
    parser.add_argument("--output-dir", required=True)
    args = parser.parse_args()

    paths = sorted(Path(args.data_dir).glob("*.edf"))
    if not paths:
        raise SystemExit("no EDF recordings found")
    loaded = [read_edf(p) for p in paths]

    processed = []
    notch_hz = None
    for _, fs, channels in loaded:
        chans, notch_hz = preprocess(channels, fs, args.data_dir)
        processed.extend(chans)

    features = epoch_features(processed, TARGET_FS)
    accuracy = train_stub(features, H)

    scoring_path = Path(args.data_dir) / "scoring.json"
    if scoring_path.exists():
        scoring = json.loads(scoring_path.read_text())
        primary = 1.0 - min(1.0, abs(H - float(scoring["h_star"])))
        metric_name = "ridge_peak"
    else:
        primary = max(0.0, min(1.0, accuracy))
        metric_name = "stub_accuracy"

    metrics = {
        "metric_name": metric_name,
        "primary_metric": primary,
        "auxiliary": {
            "h": H,
            "notch_hz": notch_hz,
            "resample_hz": TARGET_FS,
            "n_samples_per_channel": float(min(x.size for x in processed)),
            "stub_accuracy": accuracy,
        },
        "wall_seconds": time.monotonic() - start,
    }
    out = Path(args.output_dir) / "metrics.json"
    out.write_text(json.dumps(metrics, indent=2))


if __name__ == "__main__":
    main()
'''


def reference_template() -> str:
    """The runnable reference pipeline script text."""
    return TEMPLATE
