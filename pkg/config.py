"""
Configuration file for the two-qubit correlation toolkit
Contains numerical defaults; every value can be overridden from the
environment or a .env file
"""
import os
from dotenv import load_dotenv

load_dotenv()

# Quadrature (per sphere)
QUAD_THETA = int(os.getenv("TWOQ_QUAD_THETA", "64"))
QUAD_PHI = int(os.getenv("TWOQ_QUAD_PHI", "128"))

# Monte-Carlo / trial simulation
MC_SAMPLES = int(os.getenv("TWOQ_MC_SAMPLES", "200000"))
SEED = int(os.getenv("TWOQ_SEED", "20240917"))
TRIALS = int(os.getenv("TWOQ_TRIALS", "100000"))
WORKERS = int(os.getenv("TWOQ_WORKERS", "1"))

# Tolerances
TOL_POS = float(os.getenv("TWOQ_TOL_POS", "1e-10"))
CLASSIFY_TOL = float(os.getenv("TWOQ_CLASSIFY_TOL", "1e-9"))

# Output
OUTPUT_FORMAT = os.getenv("TWOQ_FORMAT", "csv")
LOG_LEVEL = os.getenv("TWOQ_LOG_LEVEL", "WARNING")

# HTTP surface
PORT = int(os.getenv("PORT", "5000"))
FLASK_DEBUG = os.getenv("FLASK_DEBUG", "False")


def effective_config() -> dict:
    """Snapshot of the environment-level defaults, keyed like the CLI flags."""
    return {
        "quad-theta": QUAD_THETA,
        "quad-phi": QUAD_PHI,
        "mc-samples": MC_SAMPLES,
        "seed": SEED,
        "trials": TRIALS,
        "workers": WORKERS,
        "format": OUTPUT_FORMAT,
        "tol-pos": TOL_POS,
        "classify-tol": CLASSIFY_TOL,
    }
