from types import SimpleNamespace

MODEL_KINDS = SimpleNamespace(
    PLANE_STRAIN="plane_strain",
    ANTI_PLANE="anti_plane",
)

UNIVERSE_LABELS = SimpleNamespace(
    CRACKLESS="crackless",
    CRACKED="cracked",
)

DRIVERS = SimpleNamespace(
    PARALLEL_UNIVERSE="parallel_universe",
    STANDARD="standard",
    BACKTRACKING="backtracking",
)

LINEAR_SOLVERS = SimpleNamespace(DIRECT="direct", CG="cg")

GEOMETRY_KINDS = SimpleNamespace(
    SQUARE="square",
    HOLED_SQUARE="holed_square",
    FIBER_COMPOSITE="fiber_composite",
    ANTIPLANE_SQUARE="antiplane_square",
    MESH_FILE="mesh_file",
)

LOADINGS = SimpleNamespace(
    TENSION="tension",
    FIBER_PULL="fiber_pull",
    ANTIPLANE_TEAR="antiplane_tear",
)

# Node sets that live on the domain boundary; derived sets such as the top-edge halves are
# subsets of these.
BOUNDARY_SETS = ["top", "bottom", "left", "right", "hole", "fiber"]

# A node with d above this value is considered broken ("max d(Omega) >= 0.9").
CRACK_THRESHOLD = 0.9

# Relative slack allowed when checking that the staggered energy never increases.
ENERGY_MONOTONICITY_SLACK = 1e-12

TRACE_CSV_COLUMNS = [
    "step",
    "u_b",
    "sigma_max",
    "vigilance",
    "pi_nc_elastic",
    "pi_nc_surface",
    "pi_c_elastic",
    "pi_c_surface",
    "accepted",
    "wall_s",
    "pi_nc_total",
    "pi_c_total",
    "max_d",
    "stagger_iterations",
    "crack_sets",
]
