#!/usr/bin/env python3
"""
Configuration for the slot allocation lab.
Values come from the environment or a .env file in the project root.
"""

import os
import sys

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _int_from_env(name, default):
    """Read an integer environment variable, falling back to default."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"Warning: {name}={raw!r} is not an integer, using {default}", file=sys.stderr)
        return default


# Parallelism cap for Monte Carlo blocks and sweeps
THREADS = max(1, _int_from_env('OSA_LAB_THREADS', os.cpu_count() or 1))

# Default seed for command-line runs
DEFAULT_SEED = _int_from_env('OSA_LAB_SEED', 0)

# Where reports and generated instances go
OUTPUT_DIR = os.getenv('OSA_LAB_OUTPUT_DIR', 'output')

# Size limits for the exact oracles
EXACT_ENUMERATION_LIMIT = 9   # n! permutations
FCFS_EXACT_LIMIT = 20         # 2^n subsets
POLICY_EXACT_LIMIT = 10       # sum_k C(n,k)^2 game states

# Monte Carlo
DEFAULT_TRIALS = 100000
MC_BLOCK_SIZE = 2000
PREFIX_SAMPLING_LIMIT = 32
REQUEST_CAP_FACTOR = 50

# Online Huffman codec
DEFAULT_LITERAL_WIDTH = 8
DEFAULT_TOKEN_WIDTH = 16
