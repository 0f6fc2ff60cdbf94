"""Fixed-size windowing of sensor streams and breathing-event endpoint detection."""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from wearauth.errors import DataError
from wearauth.ingest import GaitSeries, HeartRateSeries

HEART_RATE = "HeartRate"
GAIT = "Gait"

WINDOW_LEN = 10
WINDOW_STEP = 5

FRAME_S = 0.025
HOP_S = 0.010
MIN_EVENT_S = 0.2
MAX_EVENT_S = 5.0
MIN_GAP_S = 0.15


@dataclass(frozen=True)
class SampleWindow:
    subject: str
    kind: str
    channels: np.ndarray  # (channel_count, window_len)
    index: int

    @property
    def window_len(self):
        return self.channels.shape[1]


@dataclass(frozen=True)
class Original:
    clip_id: str
    ordinal: int


@dataclass(frozen=True)
class Augmented:
    parent: Original
    spec: object


@dataclass(frozen=True)
class BreathingEvent:
    subject: str
    pcm: np.ndarray = field(repr=False)
    sample_rate: int
    origin: Union[Original, Augmented]
    start: Optional[int] = None  # sample offset in the source clip, originals only

    @property
    def duration(self):
        return self.pcm.size / self.sample_rate

    @property
    def group(self):
        """Ordinal of the original event this one descends from."""
        origin = self.origin
        return origin.ordinal if isinstance(origin, Original) else origin.parent.ordinal


def windowize(series, window_len=WINDOW_LEN, step=WINDOW_STEP):
    """Cut a series into windows of ``window_len`` samples every ``step`` samples.

    All channels share the same boundaries; trailing samples that do not
    fill a window are dropped.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    if window_len < 2:
        raise ValueError("window_len must be >= 2")
    if isinstance(series, HeartRateSeries):
        kind = HEART_RATE
    elif isinstance(series, GaitSeries):
        kind = GAIT
    else:
        raise TypeError(f"cannot windowize {type(series).__name__}")
    data = series.channels
    n = data.shape[1]
    if n < window_len:
        raise DataError(f"series of {n} samples is shorter than one window ({window_len})")
    count = (n - window_len) // step + 1
    return [
        SampleWindow(series.subject, kind, data[:, i * step:i * step + window_len].copy(), i)
        for i in range(count)
    ]


def frame_rms(pcm, frame, hop):
    if pcm.size < frame:
        pcm = np.pad(pcm, (0, frame - pcm.size))
    count = (pcm.size - frame) // hop + 1
    idx = np.arange(count)[:, None] * hop + np.arange(frame)[None, :]
    return np.sqrt(np.mean(pcm[idx] ** 2, axis=1))


def extract_events(clip, clip_id=None, floor_ratio=0.1, floor_min=1e-4):
    """Find single inhalation events in ``clip`` by short-time energy.

    An event is a run of 25 ms frames (10 ms hop) whose RMS exceeds
    ``max(floor_min, floor_ratio * clip RMS)``; runs separated by less than
    0.15 s of silence are merged and runs shorter than 0.2 s dropped.
    Events longer than 5 s are truncated to 5 s.
    """
    pcm = np.asarray(clip.pcm, dtype=float)
    sr = clip.sample_rate
    clip_id = clip_id or clip.subject
    frame = int(round(FRAME_S * sr))
    hop = int(round(HOP_S * sr))
    clip_rms = float(np.sqrt(np.mean(pcm ** 2))) if pcm.size else 0.0
    threshold = max(floor_min, floor_ratio * clip_rms)
    active = frame_rms(pcm, frame, hop) > threshold
    if not active.any():
        return []

    on = np.flatnonzero(active)
    runs = []
    start = prev = on[0]
    for k in on[1:]:
        if (k - prev - 1) * hop >= MIN_GAP_S * sr:
            runs.append((start, prev))
            start = k
        prev = k
    runs.append((start, prev))

    events = []
    max_len = int(MAX_EVENT_S * sr)
    for first, last in runs:
        s = first * hop
        e = min(last * hop + frame, pcm.size)
        if e - s < MIN_EVENT_S * sr:
            continue
        e = min(e, s + max_len)
        events.append(BreathingEvent(clip.subject, pcm[s:e].copy(), sr, Original(clip_id, len(events)), s))
    return events
