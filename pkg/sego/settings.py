"""
Settings for the sego project.

Values come from the environment (or a `.env` file next to manage.py) and
fall back to the defaults below. Experiment hyperparameters live in
`detector.config`, not here.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

# Where TU dataset directories live, e.g. DATA_DIR / 'BZR' / 'BZR_A.txt'
DATA_DIR = Path(os.getenv("SEGO_DATA_DIR", BASE_DIR / "data"))

OUTPUT_DIR = Path(os.getenv("SEGO_OUTPUT_DIR", BASE_DIR / "runs"))

# Empty means no on-disk view cache
CACHE_DIR = os.getenv("SEGO_CACHE_DIR", "")

LOG_LEVEL = os.getenv("SEGO_LOG_LEVEL", "INFO").upper()

WORKERS = int(os.getenv("SEGO_WORKERS", "1"))

# Cross-check every incremental entropy delta against a full recomputation
DEBUG_ENTROPY = os.getenv("SEGO_DEBUG_ENTROPY", "0").lower() in ("1", "true", "yes")
