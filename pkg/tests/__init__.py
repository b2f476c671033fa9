import os as _os

# Absolute tolerance for comparisons against dense or closed-form references.
TOL = 1e-10

SEED = int(_os.environ.get("SYMTENSOR_TEST_SEED", "20240611"))
