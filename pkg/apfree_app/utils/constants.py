"""
Constants used throughout the application.
"""
# Numerical tolerances
EXACT_TOL = 1e-12
ROOT_OF_UNITY_TOL = 1e-9
MEASURE_TOL = 1e-12
STATIONARY_TOL = 1e-12
CROSS_CHECK_TOL = 1e-8
DECOMPOSITION_TOL = 1e-10
ASCENT_IMPROVEMENT_TOL = 1e-10

# Exit codes
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_CONSISTENCY = 3

# Function file format
FUNCTION_FILE_MAGIC = b'FPFN'
FUNCTION_FILE_VERSION = 1
FUNCTION_FILE_HEADER = '<4sHHHB3s'
FUNCTION_KIND_CODES = {'boolean': 0, 'real': 1, 'complex': 2}
FUNCTION_KINDS = {code: kind for kind, code in FUNCTION_KIND_CODES.items()}

REPORT_SCHEMA_VERSION = 1

# Differences allowed in a restricted progression x, x+a, x+2a
AP_DIFFERENCES = (0, 1, 2)
PAIR_DIFFERENCES = (0, 1)

# Increment engine
ENDGAME_DENSITY = 0.99
ENDGAME_MIN_DIMENSION = 10

TRACE_STEP_KINDS = ('random_restriction', 'basis_change', 'z_restriction', 'coordinate_drop')

EXTREMAL_EXHAUSTIVE_MAX_POINTS = 25
VERIFY_SUITES = ('core', 'funcspace', 'chains', 'aps', 'embeddings', 'structure', 'increment')
