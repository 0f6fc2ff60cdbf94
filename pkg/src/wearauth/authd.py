"""Hierarchical context-driven authenticator and its latency model.

Heart rate is tried first. If its confidence is below the threshold the
movement context picks exactly one fallback: HRG when moving, HRB when
sedentary. A failed fallback revokes access.
"""

import json
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from wearauth.errors import DataError
from wearauth.features import HR, HRB, HRG, fuse
from wearauth.segment import BreathingEvent, SampleWindow

SEDENTARY = "Sedentary"
NON_SEDENTARY = "NonSedentary"
ACCEPT = "Accept"
REVOKE = "Revoke"
CONFIDENT = "Confident"
BELOW_THRESHOLD = "BelowThreshold"
MISSING_MODALITY = "MissingModality"

DEFAULT_THETA = 0.52
DEFAULT_TAU_MOVE = 0.5
HR_WINDOW = 10
BREATH_SECONDS = 1.4

_CONF_EPS = 1e-12


def detect_movement(gait_window, tau_move=DEFAULT_TAU_MOVE):
    """NonSedentary iff the std of the acceleration magnitude exceeds ``tau_move``."""
    channels = np.asarray(getattr(gait_window, "channels", gait_window), dtype=float)
    if channels.ndim != 2 or channels.shape[0] != 6 or channels.shape[1] < 2:
        raise DataError(f"gait window must be 6 channels x >=2 samples, got shape {channels.shape}")
    magnitude = np.sqrt(np.sum(channels[:3] ** 2, axis=0))
    return NON_SEDENTARY if float(np.std(magnitude)) > tau_move else SEDENTARY


@dataclass(frozen=True)
class AuthContext:
    hr_window: SampleWindow
    movement: str
    gait_window: Optional[SampleWindow] = None
    breathing_event: Optional[BreathingEvent] = None

    def __post_init__(self):
        if self.movement not in (SEDENTARY, NON_SEDENTARY):
            raise ValueError(f"unknown movement state {self.movement!r}")
        if self.movement == NON_SEDENTARY and self.gait_window is None:
            raise DataError("a NonSedentary context needs a gait window")

    @classmethod
    def observe(cls, hr_window, gait_window, breathing_event=None, tau_move=DEFAULT_TAU_MOVE):
        """Build a context, deriving the movement state from the gait window."""
        return cls(hr_window, detect_movement(gait_window, tau_move), gait_window, breathing_event)


@dataclass(frozen=True)
class AuthDecision:
    outcome: str
    route: str
    confidence: float
    threshold: float
    reason: str


def _confidence(model, features):
    value = float(np.ravel(model.confidence(features.values[None, :]))[0])
    return min(max(value, _CONF_EPS), 1.0 - _CONF_EPS)


def _need(models, route):
    model = models.get(route)
    if model is None:
        raise DataError(f"no {route} model available for this route")
    return model


def authenticate(ctx, models, theta=DEFAULT_THETA):
    """Run one authentication session. ``models`` maps HR/HRG/HRB to objects with ``confidence``."""
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    hr_conf = _confidence(_need(models, HR), fuse(HR, hr=ctx.hr_window))
    if hr_conf >= theta:
        return AuthDecision(ACCEPT, HR, hr_conf, theta, CONFIDENT)
    if ctx.movement == NON_SEDENTARY:
        route = HRG
        conf = _confidence(_need(models, HRG), fuse(HRG, hr=ctx.hr_window, gait=ctx.gait_window))
    else:
        route = HRB
        model = _need(models, HRB)
        if ctx.breathing_event is None:
            return AuthDecision(REVOKE, HRB, hr_conf, theta, MISSING_MODALITY)
        conf = _confidence(model, fuse(HRB, hr=ctx.hr_window, breath=ctx.breathing_event))
    if conf >= theta:
        return AuthDecision(ACCEPT, route, conf, theta, CONFIDENT)
    return AuthDecision(REVOKE, route, conf, theta, BELOW_THRESHOLD)


def estimate_latency(x, route):
    """Seconds to reach a decision on ``route`` when one HR sample takes ``x`` seconds."""
    if not x > 0:
        raise ValueError("seconds per heart-rate sample must be > 0")
    if route == HR:
        return HR_WINDOW * x
    if route == HRG:
        return 2 * HR_WINDOW * x
    if route == HRB:
        # a second HR window outlasts the breathing event once x >= 0.14 s
        return 2 * HR_WINDOW * x if x >= BREATH_SECONDS / HR_WINDOW else HR_WINDOW * x + BREATH_SECONDS
    raise ValueError(f"unknown route {route!r}")


def session_record(decision, x, timestamp=None):
    record = {"timestamp": time.time() if timestamp is None else timestamp}
    record.update({k: v for k, v in asdict(decision).items() if k in ("route", "confidence", "outcome", "reason")})
    record["threshold"] = decision.threshold
    record["estimated_latency_s"] = estimate_latency(x, decision.route)
    return record


def write_session_log(fh, decision, x, timestamp=None):
    fh.write(json.dumps(session_record(decision, x, timestamp), sort_keys=True) + "\n")
