"""Statistical window features, MFCCs, and per-model feature fusion."""

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from wearauth import ANALYSIS_RATE
from wearauth.errors import DataError

STAT_NAMES = (
    "μ", "Mdn", "σ", "σ²", "cov", "ran", "coran", "p25", "p75", "max", "iqr",
    "coi", "mad_μ", "mad_Mdn", "E", "P", "rms", "rss", "snr", "γ", "κ",
)
GAIT_AXES = ("X-acc", "Y-acc", "Z-acc", "X-gy", "Y-gy", "Z-gy")
N_MFCC = 40
MFCC_NAMES = tuple(f"MFCC{i + 1}" for i in range(N_MFCC))  # MFCC1 is coefficient 0

HR, HRG, HRB = "HR", "HRG", "HRB"
MODEL_KINDS = (HR, HRG, HRB)


def _ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def stat_features_batch(windows):
    """The 21 statistics for every row of a (m, n) array, returned as (m, 21).

    Population moments, linear-interpolation quartiles and excess kurtosis;
    any ratio whose denominator is zero is reported as 0.
    """
    x = np.asarray(windows, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DataError("statistical features need windows of at least 2 samples")
    n = x.shape[1]
    mu = x.mean(axis=1)
    med = np.median(x, axis=1)
    hi = x.max(axis=1)
    lo = x.min(axis=1)
    dev = x - mu[:, None]
    constant = hi == lo
    dev[constant] = 0.0
    m2 = np.mean(dev ** 2, axis=1)
    m3 = np.mean(dev ** 3, axis=1)
    m4 = np.mean(dev ** 4, axis=1)
    sd = np.sqrt(m2)
    p25, p75 = np.percentile(x, [25, 75], axis=1)
    energy = np.sum(x ** 2, axis=1)
    power = energy / n
    cols = [
        mu, med, sd, m2,
        _ratio(sd, mu),
        hi - lo,
        _ratio(hi - lo, hi + lo),
        p25, p75, hi,
        p75 - p25,
        _ratio(p75 - p25, p75 + p25),
        np.mean(np.abs(dev), axis=1),
        np.median(np.abs(x - med[:, None]), axis=1),
        energy, power, np.sqrt(power), np.sqrt(energy),
        _ratio(mu, sd),
        _ratio(m3, m2 ** 1.5),
        np.where(m2 > 0, _ratio(m4, m2 ** 2) - 3.0, 0.0),
    ]
    return np.stack(cols, axis=1)


def stat_features(window):
    """The 21 named statistics of one channel window, ordered as ``STAT_NAMES``."""
    return stat_features_batch(np.asarray(window, dtype=float)[None, :])[0]


# --- MFCC -----------------------------------------------------------------

@dataclass(frozen=True)
class MfccConfig:
    sample_rate: int = ANALYSIS_RATE
    n_fft: int = 2048
    hop: int = 512
    n_mels: int = 64
    n_mfcc: int = N_MFCC
    preemphasis: float = 0.97
    log_floor: float = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate, n_fft, n_mels):
    """Triangular filters on the rfft bins, equally spaced in mel from 0 to Nyquist."""
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rise = (freqs - lower) / (center - lower)
    fall = (upper - freqs) / (upper - center)
    bank = np.maximum(0.0, np.minimum(rise, fall))
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=8)
def dct_matrix(n):
    """Orthonormal DCT-II matrix (n x n)."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.sqrt(2.0 / n) * np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    m[0] /= np.sqrt(2.0)
    m.setflags(write=False)
    return m


def frame_count(n_samples, n_fft=2048, hop=512):
    return max(0, (n_samples - n_fft) // hop) + 1


def log_mel_frames(pcm, config=MfccConfig()):
    x = np.asarray(pcm, dtype=float)
    x = np.append(x[:1], x[1:] - config.preemphasis * x[:-1])
    if x.size < config.n_fft:
        x = np.pad(x, (0, config.n_fft - x.size))
    count = frame_count(x.size, config.n_fft, config.hop)
    idx = np.arange(count)[:, None] * config.hop + np.arange(config.n_fft)[None, :]
    window = np.hanning(config.n_fft + 1)[:-1]
    power = np.abs(np.fft.rfft(x[idx] * window, axis=1)) ** 2
    bank = mel_filterbank(config.sample_rate, config.n_fft, config.n_mels)
    return np.log(np.maximum(power @ bank.T, config.log_floor))


def mfcc(event, config=MfccConfig()):
    """40 MFCCs averaged over frames. Accepts a BreathingEvent or raw samples."""
    pcm = getattr(event, "pcm", event)
    rate = getattr(event, "sample_rate", config.sample_rate)
    if rate != config.sample_rate:
        raise DataError(f"event at {rate} Hz, MFCC configured for {config.sample_rate} Hz")
    ceps = log_mel_frames(pcm, config) @ dct_matrix(config.n_mels)[:config.n_mfcc].T
    return ceps.mean(axis=0)


# --- fusion ---------------------------------------------------------------

def feature_names(model):
    hr = list(STAT_NAMES)
    if model == HR:
        return hr
    if model == HRG:
        return hr + [f"{axis} {s}" for axis in GAIT_AXES for s in STAT_NAMES]
    if model == HRB:
        return hr + list(MFCC_NAMES)
    raise ValueError(f"unknown model kind {model!r}")


@dataclass(frozen=True)
class FeatureVector:
    subject: str
    group: int
    names: tuple
    values: np.ndarray


def _window_matrix(window):
    return window.channels if hasattr(window, "channels") else np.atleast_2d(window)


def fuse(model, hr=None, gait=None, breath=None, group=0):
    """Build the feature vector for ``model`` from per-biometric parts.

    ``hr`` and ``gait`` are SampleWindows, ``breath`` a BreathingEvent (or a
    precomputed 40-vector of MFCCs).
    """
    if model not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model!r}")
    if hr is None:
        raise DataError(f"{model} needs a heart-rate window")
    parts = [stat_features(_window_matrix(hr)[0])]
    subjects = {hr.subject}
    if model == HRG:
        if gait is None:
            raise DataError("HRG needs a gait window")
        parts.append(stat_features_batch(_window_matrix(gait)).ravel())
        subjects.add(gait.subject)
    elif model == HRB:
        if breath is None:
            raise DataError("HRB needs a breathing event")
        if hasattr(breath, "pcm"):
            subjects.add(breath.subject)
            parts.append(mfcc(breath))
        else:
            parts.append(np.asarray(breath, dtype=float))
    if len(subjects) > 1:
        raise DataError(f"parts come from different subjects: {sorted(subjects)}")
    return FeatureVector(hr.subject, group, tuple(feature_names(model)), np.concatenate(parts))


@dataclass
class FeatureTable:
    """Feature matrix for many instances: one row per instance."""
    names: list
    X: np.ndarray
    subjects: np.ndarray
    groups: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def subject_ids(self):
        return sorted(set(self.subjects.tolist()))


def write_feature_csv(path, table):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "group", *table.names])
        for s, g, row in zip(table.subjects, table.groups, table.X):
            writer.writerow([s, int(g), *(repr(float(v)) for v in row)])


def read_feature_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["subject", "group"]:
            raise DataError(f"{path}: expected header starting with subject,group")
        subjects, groups, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                groups.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field") from None
            subjects.append(row[0])
    return FeatureTable(header[2:], np.array(rows, dtype=float).reshape(len(rows), len(header) - 2),
                        np.array(subjects), np.array(groups, dtype=int))
