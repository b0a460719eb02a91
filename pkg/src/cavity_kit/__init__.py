"""Multimode confocal cavity QED: Green's functions, cooperativity, thresholds,
global fits, transmission imaging and mean-field dynamics.

Units throughout: angular frequencies in rad/us (hbar = 1), lengths in um,
times in us.  ``mhz(nu)`` converts a frequency nu in MHz to rad/us.
"""

__version__ = "0.1.0"

from .cavity_model import (  # noqa: E402
    CavityParams,
    CloudParams,
    ModeIndex,
    PumpParams,
    hermite_gauss,
    mhz,
    mode_weight,
    to_mhz,
)
from .cooperativity import enhancement_cloud, enhancement_point  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .greens import greens_cloud, greens_map, greens_point  # noqa: E402
from .presets import bec_cloud, paper_cavity, paper_pump, probe_cloud  # noqa: E402
from .threshold import critical_pump, scan_detuning, scan_position  # noqa: E402

__all__ = [
    "CavityParams", "CloudParams", "ModeIndex", "PumpParams", "hermite_gauss", "mhz",
    "mode_weight", "to_mhz", "enhancement_cloud", "enhancement_point", "greens_cloud",
    "greens_map", "greens_point", "bec_cloud", "paper_cavity", "paper_pump", "probe_cloud",
    "critical_pump", "scan_detuning", "scan_position",
]
