"""Space-frequency beampattern synthesis for RIS-fed radar transmitters.

Waveform samples and RIS phase shifts are optimized jointly by block-coordinate
descent so that the radiated beampattern matches a desired angle-frequency mask.
"""

from .metrics import BeampatternGrid, evaluate_grid, npb, rse, to_db
from .operators import Operators, mimo_operators, ris_operators
from .pattern import Box, DesiredPattern, build_desired, calibrate_height, rescale, two_beam_boxes
from .scene import SceneConfig, SamplingGrid, build_geometry, build_grids
from .solver import BCDResult, SolverOptions, run_bcd, run_mimo_baseline

__version__ = "0.1.0"

__all__ = [
    "BCDResult", "BeampatternGrid", "Box", "DesiredPattern", "Operators", "SamplingGrid",
    "SceneConfig", "SolverOptions", "build_desired", "build_geometry", "build_grids",
    "calibrate_height", "evaluate_grid", "mimo_operators", "npb", "rescale", "ris_operators",
    "rse", "run_bcd", "run_mimo_baseline", "to_db", "two_beam_boxes",
]
