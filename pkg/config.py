LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

MAX_DIM = 1024  # largest matrix dimension any operation accepts

# Dyadic box covers
MAX_COVER_DEPTH = 12
MAX_COVER_BOXES = 10**7  # per level; deeper levels are skipped once exceeded

# Grid Brown densities
DEFAULT_GRID_SIZE = 200
DEFAULT_EPSILON_REL = 1e-3  # epsilon = DEFAULT_EPSILON_REL * max(||T||, 1)
GRID_MARGIN_REL = 0.1
GRID_MASS_TOL = 0.05
GRID_LEAK_TOL = 0.05
GRID_CHUNK_ENTRIES = 4_000_000  # complex entries per batched potential evaluation

# Verification suites
DEFAULT_SEEDS = "1-10"
DEFAULT_SUITE_MAX_DIM = 32
MAX_ENUMERATED_CLUSTERS = 10  # maximality checks enumerate all subsets up to this many clusters

# CLI exit codes
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NON_COMMUTING = 2
EXIT_DECOMPOSITION_FAILED = 3
EXIT_GRID_FAILED = 4
EXIT_IO = 5

# Verification suite sampling
SUITE_BOUNDARY_MARGIN = 1e-4  # random regions keep every eigenvalue this far from their boundary
SUITE_REGIONS = 4  # random boxes per model and suite
SUITE_TRIALS = 5  # random subspaces or polynomials per region
SUITE_ALPHAS = 20
SUITE_COVER_DEPTH = 12  # focused covers only refine boxes holding preimage atoms
SUITE_GRID_DEPTH = 5
SUITE_BOREL_BALLS = 19
SUITE_MAX_TENSOR_DIM = 256
