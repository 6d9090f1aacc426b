import os
import re
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Logging
LOG_LEVEL = os.getenv("SHEAR_BEAM_LOG_LEVEL", "INFO").upper()

# Element shooting
SHOOTING_TOL = 1e-10
SHOOTING_MAX_ITER = 30
# Newton steps are halved until the residual drops by SHOOTING_SUFFICIENT_DECREASE * step fraction
SHOOTING_BACKTRACKS = 10
SHOOTING_SUFFICIENT_DECREASE = 1e-4
# Substep counts tried when shooting straight onto the target fails
SHOOTING_CONTINUATION_LEVELS = (2, 4, 8, 16)

# Ziegler shear-angle iteration
SHEAR_ANGLE_MAX_ITER = 50
SHEAR_ANGLE_TOL_FACTOR = 1e-12
SHEAR_ANGLE_BRACKET_MARGIN = 1e-9

# Dense linear algebra
PIVOT_THRESHOLD = 1e-14
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

# Global equilibrium iteration
GLOBAL_TOL = 1e-10
GLOBAL_MAX_ITER = 40
# Halvings of a load step whose equilibrium iteration failed
STEP_CUTBACKS = 6

# Branch switching: lateral perturbation as a fraction of EI/L^2
PERTURBATION_FACTOR = 1e-4
BRANCH_SWITCH_ATTEMPTS = 12

# Euler elastica: axial compliance replaced by EULER_AXIAL_PENALTY * L^2 * c_bend
EULER_AXIAL_PENALTY = 1e-9

# Closed-form root brackets
TENSION_ROOT_MARGIN = 1e-9

# Output
CSV_SIGNIFICANT_DIGITS = 9

# CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

# Supported beam models
SUPPORTED_MODELS = ["reissner", "ziegler", "kirchhoff", "euler"]

# Built-in case ids, e.g. "ss-midforce", "ss-midforce:ziegler", "ss-midforce:reissner:1/16"
CASE_ID_PATTERN = re.compile(
    r"^(?P<name>[a-z][a-z0-9-]*)(?::(?P<model>" + "|".join(SUPPORTED_MODELS) + r"))?(?::(?P<ratio>\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)?))?$",
    re.IGNORECASE,
)

# Element shooting inside the frame solver; end forces feed the global residual
FRAME_SHOOTING_TOL = 1e-12
