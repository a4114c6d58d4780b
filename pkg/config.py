"""Configuration settings for the one-apparent-double-point toolkit."""
import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    """Application configuration."""

    # Fixture and report locations
    FIXTURES_DIR = os.getenv('OADP_FIXTURES', os.path.join(BASE_DIR, 'fixtures'))
    REPORT_PATH = os.getenv('OADP_REPORT', 'oadp_report.json')

    # Finite-field oracle settings
    VETTED_PRIMES = (10007, 10009, 10037, 10039)
    PRIMES = [int(p) for p in os.getenv('OADP_PRIMES', '10007,10009,10037').split(',') if p.strip()]
    TRIALS = int(os.getenv('OADP_TRIALS', 5))
    MIN_TRIALS = 3
    MAX_SLICE_RETRIES = 6

    # Deterministic sample points
    SEED = int(os.getenv('OADP_SEED', 20240607))
    SAMPLE_HEIGHT = 7  # sample coordinates drawn from [-7, 7]
    ROUNDTRIP_SAMPLES = 8
    TRANSPORT_SAMPLES = 12
    FREENESS_SAMPLES = 5

    # Logging
    LOG_LEVEL = os.getenv('OADP_LOG_LEVEL', 'WARNING')

    @staticmethod
    def pencils_dir():
        return os.path.join(Config.FIXTURES_DIR, 'pencils')

    @staticmethod
    def entries_dir():
        return os.path.join(Config.FIXTURES_DIR, 'entries')
