"""
Configuration management for phmin.
"""

import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Central configuration class."""

    # Root clustering and admissibility
    TOL_CLUSTER = float(os.environ.get("PHMIN_TOL_CLUSTER", "1e-6"))
    MASS_TOL = float(os.environ.get("PHMIN_MASS_TOL", "1e-3"))

    # Alternating minimization
    TOL_TERM = float(os.environ.get("PHMIN_TOL_TERM", "1e-13"))
    SUCCESS_FACTOR = float(os.environ.get("PHMIN_SUCCESS_FACTOR", "1e-10"))
    MAX_OUTER_ITER = int(os.environ.get("PHMIN_MAX_OUTER_ITER", "5000"))
    EXTRAPOLATE = os.environ.get("PHMIN_EXTRAPOLATE", "true").lower() in ("1", "true", "yes")

    # QP subproblems (0 means size-dependent default)
    QP_TOL = float(os.environ.get("PHMIN_QP_TOL", "1e-10"))
    QP_MAX_ITER = int(os.environ.get("PHMIN_QP_MAX_ITER", "0"))

    # Verification
    VERIFY_TOL = float(os.environ.get("PHMIN_VERIFY_TOL", "1e-4"))
    SPECTRUM_TOL = float(os.environ.get("PHMIN_SPECTRUM_TOL", "1e-4"))

    # Reports and batch runs
    TRACE_CAP = int(os.environ.get("PHMIN_TRACE_CAP", "10000"))
    BENCH_WORKERS = int(os.environ.get("PHMIN_BENCH_WORKERS", "0"))
    SEED = int(os.environ.get("PHMIN_SEED", "0"))

    # Logging
    LOG_LEVEL = os.environ.get("PHMIN_LOG_LEVEL", "WARNING")
