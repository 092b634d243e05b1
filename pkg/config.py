# Configuration file for the Koszul division toolkit

import os

# Logging Configuration
LOG_LEVEL = os.environ.get("KOSZUL_LOG_LEVEL", "WARNING").upper()

# Exact Algebra Configuration
SNAP_MAX_DENOMINATOR = 10**6  # Rational snapping of float nullspace coordinates

# Numerical Tolerances
COMPLEX_PROPERTY_TOL = 1e-8   # |Psi*Phi| entries, absolute
RANK_REL_TOL = 1e-10          # singular values below this * sigma_max count as zero
HESSIAN_RANK_REL_TOL = 1e-9
LIFT_CYCLE_TOL = 1e-9         # |g _| f| <= tol * |f| for a pointwise cycle
IDENTITY_TOL = 1e-8
NORM_IDENTITY_TOL = 1e-10
EXACTNESS_AGREE_TOL = 1e-9
TRACE_SLACK = 1e-9
RHO_NORM_TOL = 1e-6
RHO_NORM_RESTARTS = 8
RHO_NORM_MAX_ITER = 500

# Finite Difference Configuration
FD_STEP = float(os.environ.get("KOSZUL_FD_STEP", "1e-3"))
FD_MAX_STEP = 1e-2
ZERO_LOCUS_REL = 1e-4
FD_GRAD_TOL = 1e-5
FD_HESSIAN_TOL = 1e-6

# Quadrature Configuration
DEFAULT_N_RAD = 16
DEFAULT_N_ANG = 16
DIVERGENCE_GROWTH = 0.10      # >10% growth under two consecutive doublings
RICHARDSON_RATIO_RANGE = (2.5, 6.0)  # difference ratios accepted as second-order convergence
RICHARDSON_FLOOR = 1e-12      # differences below this * value are roundoff
QUAD_CHUNK = 2**18            # nodes evaluated per block

# Solver Configuration
DEGREE_MARGIN = 2             # default d = max(deg f, deg g) + margin
CERT_BASE_TOL = 1e-6
CERT_REFINE_FACTOR = 10

# CLI Configuration
SCHEMA_VERSION = "1.0"
DEFAULT_SEED = 0
DEFAULT_NPOINTS = 20
TRACE_FUZZ_TRIALS = 1000
MAX_RANDOM_RANK = 3

EXIT_OK = 0
EXIT_PARSE_ERROR = 2
EXIT_NOT_CYCLE = 3
EXIT_INFEASIBLE = 4
EXIT_DIVERGENT = 5
EXIT_SINGULAR_POINT = 6
EXIT_IDENTITY_FAILURE = 7

# Export Configuration
EXCEL_ENGINE = 'openpyxl'
JSON_INDENT = 2
