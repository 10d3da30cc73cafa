"""Policy evaluation and uniqueness certificates for two-discount Büchi surrogate rewards."""

import os

# numba's TBB layer warns on older TBB builds; the OpenMP/workqueue layers are fine.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__version__ = "0.1.0"
