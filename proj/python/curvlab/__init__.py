"""Static metrics, Weyl solutions, warped splittings and curvature radii."""

from ._core import *  # noqa: F401,F403
from ._core import CurvlabError, run_scenario, scenario_names  # noqa: F401

__version__ = "0.1.0"
