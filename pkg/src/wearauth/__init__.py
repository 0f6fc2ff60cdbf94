"""Context-dependent implicit authentication for wearables.

Heart rate, gait and breathing-audio soft biometrics are windowed,
featurized and fed to binary/unary classifiers; a hierarchical
authenticator routes between the HR, HRG and HRB models.
"""

__version__ = "0.1.0"

ANALYSIS_RATE = 22050
