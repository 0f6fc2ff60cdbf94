"""Loading heart-rate, gait and audio recordings, and the synthetic data generator.

File formats
------------
* heart rate: CSV, header ``timestamp,bpm``
* gait: CSV, header ``timestamp,ax,ay,az,gx,gy,gz``. Gait values are taken
  as raw reals; no unit or device-orientation convention is assumed.
* audio: RIFF WAV, 16-bit PCM, mono or stereo (stereo is averaged).

A dataset directory holds one sub-directory per subject containing
``hr.csv``, ``gait.csv`` and ``breath.wav``.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wearauth import ANALYSIS_RATE
from wearauth.dsp import read_wav, resample, write_wav
from wearauth.errors import DataError

log = logging.getLogger(__name__)

HR_HEADER = ["timestamp", "bpm"]
GAIT_HEADER = ["timestamp", "ax", "ay", "az", "gx", "gy", "gz"]
BPM_RANGE = (20.0, 250.0)


@dataclass(frozen=True)
class HeartRateSeries:
    subject: str
    timestamps: np.ndarray
    bpm: np.ndarray

    def __len__(self):
        return self.bpm.size

    @property
    def channels(self):
        return self.bpm[None, :]


@dataclass(frozen=True)
class GaitSeries:
    subject: str
    timestamps: np.ndarray
    values: np.ndarray  # (n, 6): ax, ay, az, gx, gy, gz

    def __len__(self):
        return self.values.shape[0]

    @property
    def channels(self):
        return self.values.T


@dataclass(frozen=True)
class AudioClip:
    subject: str
    pcm: np.ndarray
    sample_rate: int

    @property
    def duration(self):
        return self.pcm.size / self.sample_rate


@dataclass(frozen=True)
class SubjectData:
    subject: str
    hr: HeartRateSeries
    gait: GaitSeries
    audio: AudioClip


def _check_subject(subject):
    if not subject:
        raise DataError("subject id must be non-empty")
    return str(subject)


def _read_rows(path, header):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise DataError(f"{path}:1: expected header {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def _check_monotone(path, timestamps):
    bad = np.flatnonzero(np.diff(timestamps) <= 0)
    if bad.size:
        # +2 for the header and the 1-based line count, +1 for the later row
        raise DataError(f"{path}:{bad[0] + 3}: timestamps must be strictly increasing")


def load_heart_rate(path, subject=None):
    rows = _read_rows(path, HR_HEADER)
    _check_monotone(path, rows[:, 0])
    lo, hi = BPM_RANGE
    bad = np.flatnonzero(~((rows[:, 1] > lo) & (rows[:, 1] < hi)))
    if bad.size:
        raise DataError(f"{path}:{bad[0] + 2}: bpm {rows[bad[0], 1]} outside ({lo:g}, {hi:g})")
    return HeartRateSeries(_check_subject(subject or Path(path).parent.name), rows[:, 0], rows[:, 1])


def load_gait(path, subject=None):
    rows = _read_rows(path, GAIT_HEADER)
    _check_monotone(path, rows[:, 0])
    return GaitSeries(_check_subject(subject or Path(path).parent.name), rows[:, 0], rows[:, 1:])


def load_audio(path, subject=None, analysis_rate=ANALYSIS_RATE):
    pcm, rate = read_wav(path)
    if rate != analysis_rate:
        pcm = resample(pcm, int(round(pcm.size * analysis_rate / rate)))
    return AudioClip(_check_subject(subject or Path(path).parent.name), pcm, analysis_rate)


def _write_rows(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_heart_rate(path, series):
    _write_rows(path, HR_HEADER, [series.timestamps, series.bpm])


def write_gait(path, series):
    _write_rows(path, GAIT_HEADER, [series.timestamps, *series.values.T])


def write_dataset(directory, data):
    directory = Path(directory)
    for subject, item in data.items():
        sub = directory / subject
        sub.mkdir(parents=True, exist_ok=True)
        write_heart_rate(sub / "hr.csv", item.hr)
        write_gait(sub / "gait.csv", item.gait)
        write_wav(sub / "breath.wav", item.audio.pcm, item.audio.sample_rate)


def load_dataset(directory, analysis_rate=ANALYSIS_RATE):
    """Load every subject sub-directory of ``directory`` (sorted by name)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory}: dataset directory not found")
    data = {}
    for sub in sorted(p for p in directory.iterdir() if p.is_dir() and (p / "hr.csv").exists()):
        data[sub.name] = SubjectData(
            sub.name,
            load_heart_rate(sub / "hr.csv", sub.name),
            load_gait(sub / "gait.csv", sub.name),
            load_audio(sub / "breath.wav", sub.name, analysis_rate),
        )
    if len(data) < 2:
        raise DataError(f"{directory}: need at least 2 subject directories, found {len(data)}")
    return data


# --- synthetic data -------------------------------------------------------

def _latent_grid(rng, subjects, count):
    """Per-subject latent coordinates in [-1, 1], evenly spread then shuffled."""
    grid = np.linspace(-1.0, 1.0, subjects)
    cols = [rng.permutation(grid) + rng.normal(0.0, 0.05, subjects) for _ in range(count)]
    return np.stack(cols, axis=1)


def _synth_hr(rng, subject, z, separation, n):
    baseline = 72.0 + separation * 3.0 * z[0]
    sd = 3.0 * 2.0 ** (separation * 0.15 * z[1])
    phi = 0.7
    eps = rng.normal(0.0, sd * np.sqrt(1 - phi ** 2), n)
    noise = np.empty(n)
    noise[0] = rng.normal(0.0, sd)
    for t in range(1, n):
        noise[t] = phi * noise[t - 1] + eps[t]
    bpm = np.clip(baseline + noise, 30.0, 220.0)
    return HeartRateSeries(subject, 60.0 * np.arange(n), bpm)


def _synth_gait(rng, subject, z, separation, n):
    t = 0.05 * np.arange(n)
    freq = 1.8 * 2.0 ** (separation * 0.1 * z[2])
    base_amp = np.array([2.0, 2.5, 1.5, 0.8, 0.6, 1.0])
    amp = base_amp * 2.0 ** (separation * 0.15 * z[3:9])
    phase = rng.uniform(0.0, 2 * np.pi, 6)
    noise_sd = np.array([0.3, 0.3, 0.3, 0.05, 0.05, 0.05])
    values = amp * np.sin(2 * np.pi * freq * t[:, None] + phase) + rng.normal(0.0, 1.0, (n, 6)) * noise_sd
    values[:, 2] += 9.81
    return GaitSeries(subject, t, values)


def _band_noise(rng, n, sample_rate, centers, widths, weights):
    spectrum = np.fft.rfft(rng.normal(0.0, 1.0, n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    logf = np.log2(np.maximum(freqs, 1.0))
    gain = np.zeros_like(freqs)
    for c, w, a in zip(centers, widths, weights):
        gain += a * np.exp(-0.5 * ((logf - np.log2(c)) / w) ** 2)
    out = np.fft.irfft(spectrum * gain, n)
    return out / (np.sqrt(np.mean(out ** 2)) + 1e-12)


def _synth_breath(rng, subject, z, separation, sample_rate, events):
    center = 900.0 * 2.0 ** (separation * 0.5 * z[9])
    width = 0.35 * 2.0 ** (separation * 0.2 * z[10])
    second = 2.2 * 2.0 ** (separation * 0.15 * z[11])
    level = 0.12 * 2.0 ** (separation * 0.15 * z[12])
    pieces = [np.zeros(int(0.4 * sample_rate))]
    for k in range(events):
        n = int(rng.uniform(1.2, 1.6) * sample_rate)
        burst = _band_noise(rng, n, sample_rate, [center, center * second], [width, width], [1.0, 0.5])
        envelope = np.sin(np.pi * np.arange(n) / n) ** 0.5
        pieces.append(level * envelope * burst)
        pieces.append(np.zeros(int((0.5 if k < events - 1 else 0.4) * sample_rate)))
    pcm = np.clip(np.concatenate(pieces), -1.0, 1.0)
    return AudioClip(subject, pcm, sample_rate)


def synth_dataset(seed, subjects=10, separation=3.0, hr_samples=4005, gait_samples=3605,
                  sample_rate=ANALYSIS_RATE, events=6):
    """Generate a deterministic synthetic dataset.

    Heart rate is a subject baseline plus AR(1) noise, gait a per-axis
    sinusoid with subject frequency/amplitude plus noise, and breathing a
    clip of ``events`` band-passed noise bursts with a subject-specific band.
    ``separation`` scales every between-subject difference; at 0 all
    subjects share one distribution.

    Returns a dict mapping subject id (``S01``...) to :class:`SubjectData`.
    """
    if subjects < 2:
        raise DataError("synth_dataset needs at least 2 subjects")
    if separation < 0:
        raise DataError("separation must be >= 0")
    root = np.random.SeedSequence(seed)
    children = root.spawn(subjects + 1)
    latent = _latent_grid(np.random.default_rng(children[0]), subjects, 13)
    data = {}
    for s in range(subjects):
        subject = f"S{s + 1:02d}"
        rng = np.random.default_rng(children[s + 1])
        z = latent[s]
        data[subject] = SubjectData(
            subject,
            _synth_hr(rng, subject, z, separation, hr_samples),
            _synth_gait(rng, subject, z, separation, gait_samples),
            _synth_breath(rng, subject, z, separation, sample_rate, events),
        )
    log.debug("synthesized %d subjects (seed=%s, separation=%s)", subjects, seed, separation)
    return data
