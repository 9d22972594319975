import os

# Numerical tolerances
ORTHONORMALITY_TOL = 1e-10
RESIDUAL_RTOL = 1e-8  # residual M^-1 norm relative to the eigenvalue
DEGENERACY_RTOL = 1e-8  # relative gap grouping eigenvalues for re-orthonormalization
EPSILON_AGREEMENT_RTOL = 1e-10
EPSILON_AGREEMENT_ATOL = 1e-14
GRAM_CONDITION_LIMIT = 1e12
SAFETY_INFLATION = 1e-12  # relative inflation of every final bound
MESH_GEOMETRY_RTOL = 1e-10  # collinearity and on-boundary tests, relative to the mesh extent

# Eigensolver settings
# above this number of free DOFs the shift-invert sparse path is used
DENSE_EIGEN_DOF_LIMIT = 4000
SHIFT_INVERT_SIGMA = -0.01
# discrete eigenvalues computed beyond the last cluster, used by tau_k
TAU_WINDOW_EXTRA = 5
TAU_ADJACENCY_LIMIT = 3

# Certification settings
DEFAULT_ITERATIONS = 5
SQUARE_CH_FACTOR = 0.493  # C_h = 0.493 h on uniform right-triangle meshes of the unit square

# Quadrature settings
QUADRATURE_ORDER = 11  # Gauss points per direction of the collapsed rule, exact to degree 2n-1
QUADRATURE_AUDIT_TOL = 1e-11  # max change of projected mode coefficients when the order doubles

# Dumbbell geometry, squares [0,1]x[0,1] and [1.1,2.1]x[0,1], bar [1,1.1]x[0.49,0.51]
DUMBBELL_BAR_LENGTH = 0.1
DUMBBELL_BAR_WIDTH = 0.02
DUMBBELL_BAR_CENTER = 0.5
# Triangle switches: planar straight line graph, quality with min angle, max area
DUMBBELL_TRIANGLE_OPTS = 'pq30a0.02'
MIN_ANGLE_DEGREES = 15.0

# Data files
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')
DUMBBELL_ENCLOSURES_PATH = os.path.join(DATA_DIR, 'dumbbell_enclosures.txt')
DUMBBELL_CH_PATH = os.path.join(DATA_DIR, 'dumbbell_ch.txt')

# Parallelism, levels are certified concurrently up to this many workers
EIGENCERT_THREADS = int(os.environ.get('EIGENCERT_THREADS', 1))

# Report settings
REPORT_SIGNIFICANT_DIGITS = 10
GAP_VIOLATED_MARKER = 'gap-violated'
