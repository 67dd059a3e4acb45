"""
Configuration settings for JunctionWalk.

All app-wide constants. Imported across the codebase via
`from src.config.settings import <NAME>`.
"""

# Hyper-Wishart prior: degrees of freedom and identity scale matrix
DEFAULT_DELTA = 5.0

# Clique-separator law used when no prior is given on the command line
DEFAULT_PRIOR = "uniform"
PRIOR_NAMES = ("uniform", "expfam", "expfam-plain")
DEFAULT_ALPHA = 2.0
DEFAULT_BETA = 4.0

# Sampler defaults
DEFAULT_SAMPLER = "parallel"
DEFAULT_ITERATIONS = 500_000
DEFAULT_SKELETON_PERIOD = 100
# Full-state snapshots are written every SNAPSHOT_FACTOR * skeleton_period steps
SNAPSHOT_FACTOR = 10
DEFAULT_SEED = 0

# Simulation defaults (auto-regressive graph + intraclass covariance)
DEFAULT_SIM_P = 50
DEFAULT_SIM_MAX_LAG = 5
DEFAULT_SIM_SIGMA2 = 1.0
DEFAULT_SIM_RHO = 0.9
DEFAULT_SIM_N = 100

# Diagnostics
DEFAULT_ACF_MAX_LAG = 2500
DEFAULT_BURN_IN = 0

# Exhaustive oracles are only tractable on tiny graphs
MAX_ENUMERATION_P = 6
MAX_THEOREM_P = 8

# Process exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERICAL_ERROR = 4

# Logging
LOG_FORMAT = "[junctionwalk] %(levelname)s %(name)s: %(message)s"

# File names inside run directories
TRACE_FILE = "trace.ndjson"
SNAPSHOT_DIR = "snapshots"
MANIFEST_FILE = "manifest.json"
