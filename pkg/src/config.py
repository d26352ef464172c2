"""Configuration and numerical defaults for viscowave."""

import os
from pathlib import Path

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

# Paths
PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = PROJECT_ROOT / "configs"

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING")

# Spectral density grid (r in units of 1/scale)
GRID_R_MIN = float(os.getenv("GRID_R_MIN", "1e-6"))
GRID_R_MAX = float(os.getenv("GRID_R_MAX", "1e12"))
GRID_POINTS_PER_DECADE = int(os.getenv("GRID_POINTS_PER_DECADE", "64"))
JACOBI_NODES = int(os.getenv("JACOBI_NODES", "64"))
BOUNDARY_EPS = float(os.getenv("BOUNDARY_EPS", "1e-8"))  # relative offset from the cut

# CM / measure checks
CM_CHECK_THRESHOLD = float(os.getenv("CM_CHECK_THRESHOLD", "1e-7"))
MASS_TOL = float(os.getenv("MASS_TOL", "1e-6"))

# Inversion engine
TALBOT_NODES = int(os.getenv("TALBOT_NODES", "24"))
DEHOOG_TERMS = int(os.getenv("DEHOOG_TERMS", "20"))
DEHOOG_TOL = float(os.getenv("DEHOOG_TOL", "1e-9"))
NEAR_WAVEFRONT = float(os.getenv("NEAR_WAVEFRONT", "1e-3"))  # band, in units of scale
ACCURACY_FAR = float(os.getenv("ACCURACY_FAR", "1e-6"))
ACCURACY_NEAR = float(os.getenv("ACCURACY_NEAR", "1e-3"))
CONVOLUTION_PANELS = int(os.getenv("CONVOLUTION_PANELS", "256"))

# Duality solver
DUALITY_STEPS = int(os.getenv("DUALITY_STEPS", "2048"))
DUALITY_SPAN = float(os.getenv("DUALITY_SPAN", "10"))  # in units of scale
DUALITY_TOL = float(os.getenv("DUALITY_TOL", "1e-6"))

# Wavefront diagnostics
BAND_MIN = float(os.getenv("BAND_MIN", "1e-4"))
BAND_MAX = float(os.getenv("BAND_MAX", "1e-1"))
FIT_POINTS_PER_DECADE = int(os.getenv("FIT_POINTS_PER_DECADE", "8"))
MONOTONE_SLACK = float(os.getenv("MONOTONE_SLACK", "1e-9"))
BOUND_SLACK = float(os.getenv("BOUND_SLACK", "1e-3"))
BOUND_FLOOR = float(os.getenv("BOUND_FLOOR", "1e-3"))
ROUTE_TOL = float(os.getenv("ROUTE_TOL", "1e-3"))  # agreement of jump-amplitude routes
