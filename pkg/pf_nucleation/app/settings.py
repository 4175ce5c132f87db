"""
Default settings for pf_nucleation.

Every value below can be overridden from the environment with the ``PF_NUCLEATION_`` prefix,
e.g. ``PF_NUCLEATION_OUTPUT_DIR=/scratch/runs``. See ``pf_nucleation.app.conf``.
"""

# Residual stiffness k in [(1 - d)^2 + k]
K_RES = 1e-10

TOL_STAGGER = 1e-6
TOL_NEWTON_U = 1e-8
MAX_STAGGER = 500
MAX_NEWTON_U = 50
LINE_SEARCH_HALVINGS = 20
LINEAR_SOLVER = "direct"

VIGILANCE_SAFETY_FACTOR = 1.0
GC_REDUCTION_FACTOR = 0.9
GC_REDUCTION_MAX_STAGES = 60
ACCEPTANCE_TIE_TOLERANCE = 1e-10
PARALLEL_UNIVERSE_WORKERS = 1

BACKTRACK_TOLERANCE = 1e-8
BACKTRACK_MAX_RETRACES = 100

FRACTURE_PLATEAU_TOLERANCE = 1e-6
FRACTURE_PLATEAU_STEPS = 3

FIELD_DUMP_STRIDE = 10
OUTPUT_DIR = "pf_nucleation_output"
LOG_LEVEL = "INFO"
