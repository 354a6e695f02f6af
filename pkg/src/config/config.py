"""
Configuration settings for the FEM bus simulator.
This file contains the default parameters for the bus, the two device models,
the FEM, the harness and the tester service. Every value may be overridden
with an FEMSIM_* environment variable (or a .env file); none is required.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value, 0) if value else default


# Logging
LOG_LEVEL = os.getenv('FEMSIM_LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Bus
IDLE_BYTE = 0xFF  # SDA left HIGH by the master
MAX_ADDRESS = 0x7F  # 7-bit addressing
HOP_LATENCY_TICKS = 1

# SLP (slave) defaults
DEFAULT_SLP_ADDRESS = _env_int('FEMSIM_SLP_ADDRESS', 0x08)
DEFAULT_SEED = _env_int('FEMSIM_SEED', 0)

# Command bytes
CMD_START_ANALOG_READ = _env_int('FEMSIM_CMD_START', 0x01)
CMD_REQUEST_DATA = _env_int('FEMSIM_CMD_REQUEST', 0x02)
CMD_END_TRANSMISSION = _env_int('FEMSIM_CMD_END', 0x03)

# OBC (master) defaults
DEFAULT_N_REQUESTS = _env_int('FEMSIM_N_REQUESTS', 4)
DEFAULT_TIMEOUT_TICKS = _env_int('FEMSIM_TIMEOUT_TICKS', 10)
DEFAULT_EXPECTED_RANGE = (0x00, 0x7F)
DEFAULT_REQUEST_LEN = 1
DEFAULT_RETRIES = _env_int('FEMSIM_RETRIES', 0)

# Sample generator (64-bit LCG)
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
LCG_MODULUS = 1 << 64
LCG_SHIFT = 33
SAMPLE_MODULUS = 128

# Harness
DEFAULT_MAX_TICKS = _env_int('FEMSIM_MAX_TICKS', 256)
DEFAULT_WORKERS = _env_int('FEMSIM_WORKERS', 1)

# File formats
FAULTLOAD_VERSION = '1'
TRACE_FORMAT = 'femsim-trace'
TRACE_VERSION = '1'
REPORT_VERSION = '1'

# Tester service
TESTER_HOST = os.getenv('FEMSIM_TESTER_HOST', '0.0.0.0')  # Listen on all available interfaces
TESTER_PORT = _env_int('FEMSIM_TESTER_PORT', 5000)
DEBUG_MODE = os.getenv('FEMSIM_DEBUG', '0') == '1'

# API Endpoints
FAULTLOAD_ENDPOINT = '/api/faultload'
RUN_ENDPOINT = '/api/run'
GOLDEN_ENDPOINT = '/api/golden'
