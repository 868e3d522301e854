"""Joint labor supply of couples under convex wage schedules and a breadwinner norm."""
import os

# the TBB layer shipped with some distributions is too old and only warns;
# OpenMP is always present alongside numba's parallel backend
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

__version__ = "0.1.0"
