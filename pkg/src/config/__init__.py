"""
Runtime configuration for the gradient estimation toolkit.

Values come from the environment (optionally a .env file in the working
directory) and fall back to the defaults below.
"""

import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

OUTPUT_DIR = os.getenv("GSPGS_OUTPUT_DIR", "results")
MAX_CONCURRENT_JOBS = int(os.getenv("GSPGS_JOBS", "1"))
BASE_SEED = int(os.getenv("GSPGS_BASE_SEED", "0"))
DIVERGENCE_GUARD = float(os.getenv("GSPGS_DIVERGENCE_GUARD", "1e6"))
PROGRESS_LOG = os.getenv("GSPGS_PROGRESS_LOG", "experiment_progress.log")
LOG_LEVEL = os.getenv("GSPGS_LOG_LEVEL", "INFO")


def get_runtime_config() -> dict:
    """
    Current runtime settings as a dictionary.

    Returns:
        dict: output directory, job cap, base seed, divergence guard, log settings
    """
    return {
        'output_dir': OUTPUT_DIR,
        'jobs': MAX_CONCURRENT_JOBS,
        'base_seed': BASE_SEED,
        'divergence_guard': DIVERGENCE_GUARD,
        'progress_log': PROGRESS_LOG,
        'log_level': LOG_LEVEL,
    }
