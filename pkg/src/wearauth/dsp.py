"""Low-level audio helpers: windowed-sinc resampling, WSOLA time stretching, WAV I/O."""

import wave

import numpy as np

from wearauth.errors import DataError

SINC_HALF_WIDTH = 16
OLA_FRAME = 1024
OLA_HOP = 256
OLA_TOLERANCE = 256
_CHUNK = 8192


def resample(x, n_out, half_width=SINC_HALF_WIDTH):
    """Resample ``x`` to exactly ``n_out`` samples by windowed-sinc interpolation.

    Output sample k is read at input position ``k * len(x) / n_out``. When
    shrinking, the sinc cutoff is lowered to the new Nyquist rate so the
    result is band-limited. Samples outside the input count as zero.
    """
    x = np.asarray(x, dtype=float)
    n_in = x.size
    if n_out < 1:
        raise ValueError("n_out must be positive")
    if n_in == 0:
        return np.zeros(n_out)
    if n_out == n_in:
        return x.copy()
    ratio = n_in / n_out
    cutoff = min(1.0, 1.0 / ratio)
    reach = half_width / cutoff
    taps = np.arange(-int(np.ceil(reach)), int(np.ceil(reach)) + 1)
    out = np.empty(n_out)
    for start in range(0, n_out, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, n_out))
        t = k * ratio
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + taps[None, :]
        d = t[:, None] - idx
        w = cutoff * np.sinc(cutoff * d)
        w *= np.where(np.abs(d) < reach, 0.5 * (1.0 + np.cos(np.pi * d / reach)), 0.0)
        valid = (idx >= 0) & (idx < n_in)
        vals = x[np.clip(idx, 0, n_in - 1)] * valid
        out[k] = np.sum(w * vals, axis=1)
    return out


def _best_offset(region, template):
    """Offset of ``template`` inside ``region`` with the largest cross-correlation."""
    nfft = 1 << (region.size + template.size - 1).bit_length()
    corr = np.fft.irfft(np.fft.rfft(region, nfft) * np.conj(np.fft.rfft(template, nfft)), nfft)
    return int(np.argmax(corr[:region.size - template.size + 1]))


def time_stretch(x, n_out, frame=OLA_FRAME, hop=OLA_HOP, tolerance=OLA_TOLERANCE):
    """Change the duration of ``x`` to ``n_out`` samples without changing pitch.

    Waveform-similarity overlap-add: Hann-windowed frames are written every
    ``hop`` samples and read near ``hop * len(x) / n_out``, each read shifted
    by up to ``tolerance`` samples to best match the natural continuation of
    the previous frame. The sum is divided by the accumulated window. Frames
    are centred, so a unit rate is an identity.
    """
    x = np.asarray(x, dtype=float)
    n_in = x.size
    if n_out == n_in:
        return x.copy()
    rate = n_in / n_out
    half = frame // 2
    window = np.hanning(frame + 1)[:-1]
    n_frames = int(np.ceil(n_out / hop)) + 2
    nominal = np.round(np.arange(n_frames) * hop * rate).astype(np.int64) + tolerance
    padded = np.zeros(max(n_in + frame, nominal[-1] + frame) + 2 * tolerance + hop)
    padded[half + tolerance:half + tolerance + n_in] = x
    out = np.zeros(n_frames * hop + frame)
    norm = np.zeros_like(out)
    start = nominal[0]
    for m in range(n_frames):
        if m:
            lo = nominal[m] - tolerance
            target = padded[start + hop:start + hop + frame]
            start = lo + _best_offset(padded[lo:lo + frame + 2 * tolerance], target)
        s = m * hop
        out[s:s + frame] += window * padded[start:start + frame]
        norm[s:s + frame] += window
    out = out[half:half + n_out]
    norm = norm[half:half + n_out]
    return out / np.maximum(norm, 1e-8)


def read_wav(path):
    """Read a 16-bit PCM WAV file. Returns ``(mono_samples, sample_rate)``."""
    try:
        with wave.open(str(path), "rb") as fh:
            width = fh.getsampwidth()
            channels = fh.getnchannels()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise DataError(f"{path}: unsupported or corrupt WAV ({exc})") from exc
    if width != 2:
        raise DataError(f"{path}: unsupported codec, expected 16-bit PCM (got {8 * width}-bit)")
    data = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    if data.size == 0:
        raise DataError(f"{path}: zero-length audio")
    data = data.reshape(-1, channels).mean(axis=1)
    return data, rate


def write_wav(path, samples, sample_rate):
    """Write mono (or, with a 2-D ``(n, ch)`` array, multichannel) 16-bit PCM."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(samples.shape[1])
        fh.setsampwidth(2)
        fh.setframerate(int(sample_rate))
        fh.writeframes(pcm.tobytes())
