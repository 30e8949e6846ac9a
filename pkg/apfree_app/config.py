"""
Configuration management for apfree.
"""
import os
from dotenv import load_dotenv

load_dotenv()


def _threads_from_env():
    """APFREE_THREADS, falling back to the CPU count."""
    value = os.environ.get('APFREE_THREADS')
    if value and value.strip().isdigit() and int(value) > 0:
        return int(value)
    return os.cpu_count() or 1


class Config:
    """Base configuration."""
    SQLALCHEMY_TRACK_MODIFICATIONS = False

    THREADS = _threads_from_env()
    MAX_TABLE_BITS = 26  # p^n <= 2^26 table cells
    MAX_COUNT_WORK = 2 ** 31  # p^n * 3^n pairs for direct counting
    REPORT_SCHEMA_VERSION = 1
    VERIFY_DEFAULT_TRIALS = None  # each check runs its acceptance count
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING')
    CHECK_FREENESS = False


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    # Absolute path so the ledger does not depend on the working directory
    _db_path = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'instance', 'apfree.db')
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL', f'sqlite:///{_db_path}')
    CHECK_FREENESS = True


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
    THREADS = 1
    VERIFY_DEFAULT_TRIALS = 3
    CHECK_FREENESS = True


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}
