"""Breathing-event augmentation: 15 pitch shifts, 7 speed changes, 80 noise mixes."""

from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from wearauth import ANALYSIS_RATE
from wearauth.dsp import read_wav, resample, time_stretch, write_wav
from wearauth.errors import DataError
from wearauth.segment import Augmented, Original

SEMITONES = tuple(-3.5 + 0.5 * i for i in range(15))
SPEED_FACTORS = (0.25, 0.5, 0.75, 1.25, 1.5, 1.75, 2.0)
SNR_LEVELS = (1e-4, 1e-3, 1e-2, 1e-1, 1e1, 1e2, 1e3, 1e4)
NOISE_CLIPS = 10


@dataclass(frozen=True)
class PitchShift:
    semitones: float


@dataclass(frozen=True)
class SpeedChange:
    factor: float


@dataclass(frozen=True)
class NoiseMix:
    noise_id: int
    snr: float


@dataclass(frozen=True)
class NoiseBank:
    clips: tuple
    sample_rate: int = ANALYSIS_RATE

    def __post_init__(self):
        if len(self.clips) != NOISE_CLIPS:
            raise DataError(f"noise bank needs exactly {NOISE_CLIPS} clips, got {len(self.clips)}")
        for i, clip in enumerate(self.clips):
            if clip.size == 0 or not np.any(clip):
                raise DataError(f"noise clip {i} is silent")


@lru_cache(maxsize=8)
def enumerate_specs(pitch=True, speed=True, noise=True):
    """All 102 augmentation specs in canonical order.

    The toggles drop whole families, for ablations; PitchShift(0.0), the
    unmodified event, is always kept.
    """
    specs = [PitchShift(s) for s in SEMITONES if pitch or s == 0.0]
    if speed:
        specs += [SpeedChange(f) for f in SPEED_FACTORS]
    if noise:
        specs += [NoiseMix(n, snr) for n in range(NOISE_CLIPS) for snr in SNR_LEVELS]
    return tuple(specs)


def default_noise_bank(sample_rate=ANALYSIS_RATE, seed=0, seconds=6.0):
    """Ten generated appliance-like noises: coloured noise plus a motor hum.

    Spectral tilt runs from white to brown across the bank; each clip also
    carries a harmonic hum at its own fundamental.
    """
    rng = np.random.default_rng(seed)
    n = int(seconds * sample_rate)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    t = np.arange(n) / sample_rate
    clips = []
    for k in range(NOISE_CLIPS):
        tilt = k / (NOISE_CLIPS - 1)  # 0 = white, 1 = brown (1/f^2 power)
        spectrum = np.fft.rfft(rng.normal(size=n)) / np.maximum(freqs, 20.0) ** tilt
        noise = np.fft.irfft(spectrum, n)
        noise /= np.sqrt(np.mean(noise ** 2))
        f0 = 50.0 + 25.0 * k
        hum = sum(np.sin(2 * np.pi * f0 * h * t + rng.uniform(0, 2 * np.pi)) / h for h in range(1, 6))
        clip = noise + 0.5 * hum
        clips.append(0.5 * clip / np.max(np.abs(clip)))
    return NoiseBank(tuple(clips), sample_rate)


def load_noise_bank(directory, sample_rate=ANALYSIS_RATE):
    """Load a user-supplied bank: exactly 10 WAVs, noise_id by lexicographic order."""
    paths = sorted(Path(directory).glob("*.wav"))
    if len(paths) != NOISE_CLIPS:
        raise DataError(f"{directory}: noise bank needs exactly {NOISE_CLIPS} WAV files, found {len(paths)}")
    clips = []
    for p in paths:
        pcm, rate = read_wav(p)
        if rate != sample_rate:
            pcm = resample(pcm, int(round(pcm.size * sample_rate / rate)))
        clips.append(pcm)
    return NoiseBank(tuple(clips), sample_rate)


def write_noise_bank(directory, bank):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, clip in enumerate(bank.clips):
        write_wav(directory / f"noise_{i:02d}.wav", clip, bank.sample_rate)


def pitch_shift(pcm, semitones):
    """Shift pitch by ``semitones`` keeping the duration (resample, then stretch back)."""
    n = pcm.size
    ratio = 2.0 ** (semitones / 12.0)
    shifted = resample(pcm, max(1, int(round(n / ratio))))
    return time_stretch(shifted, n)


def change_speed(pcm, factor):
    return time_stretch(pcm, max(1, int(round(pcm.size / factor))))


def noise_components(signal, noise, snr):
    """Return ``(signal, scaled_noise)`` such that P(signal)/P(scaled_noise) == snr.

    The noise is looped or truncated to the signal length and its power is
    measured on exactly that segment.
    """
    signal = np.asarray(signal, dtype=float)
    reps = int(np.ceil(signal.size / noise.size))
    segment = np.tile(noise, reps)[:signal.size]
    p_signal = np.mean(signal ** 2)
    p_noise = np.mean(segment ** 2)
    if p_signal == 0:
        raise DataError("cannot mix noise into a silent event")
    if p_noise == 0:
        raise DataError("noise segment is silent")
    gain = np.sqrt(p_signal / (snr * p_noise))
    return signal, gain * segment


def mix_noise(signal, noise, snr):
    clean, scaled = noise_components(signal, noise, snr)
    out = clean + scaled
    peak = np.max(np.abs(out))
    return out / peak if peak > 1.0 else out


def apply(event, spec, bank=None):
    """Return the augmented copy of ``event`` described by ``spec``."""
    if isinstance(spec, PitchShift):
        pcm = pitch_shift(event.pcm, spec.semitones)
    elif isinstance(spec, SpeedChange):
        pcm = change_speed(event.pcm, spec.factor)
    elif isinstance(spec, NoiseMix):
        if bank is None:
            raise ValueError("NoiseMix needs a noise bank")
        pcm = mix_noise(event.pcm, bank.clips[spec.noise_id], spec.snr)
    else:
        raise TypeError(f"unknown augmentation spec {spec!r}")
    parent = event.origin if isinstance(event.origin, Original) else event.origin.parent
    return replace(event, pcm=pcm, origin=Augmented(parent, spec), start=None)


def augment_all(events, bank, specs=None):
    """Expand every event into its 102 variants, grouped by parent event."""
    if not events:
        raise DataError("no events to augment")
    specs = enumerate_specs() if specs is None else specs
    return [apply(ev, spec, bank) for ev in events for spec in specs]
