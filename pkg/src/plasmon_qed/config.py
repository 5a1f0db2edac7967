"""
Configuration management for the QD-MNP simulator
"""

from pathlib import Path
from typing import List


class Config:
    """Central configuration: physical constants, numerical defaults and project paths"""

    # Physical Constants (CODATA 2018)
    HBAR_MEV_PS = 0.6582119569  # meV * ps
    HBAR_SI = 1.054571817e-34  # J * s
    ELEMENTARY_CHARGE = 1.602176634e-19  # C
    EPSILON_0 = 8.8541878128e-12  # F / m
    DEBYE_SI = 3.335640952e-30  # C * m

    # Directory Paths
    PROJECT_ROOT = Path(__file__).resolve().parents[2]
    DATA_DIR = "data"
    CONFIG_DIR = "configs"
    OUTPUT_DIR = "./results"

    # File Names
    SILVER_TABLE = "silver_johnson_christy.csv"
    DEFAULTS_FILE = "defaults.conf"
    RESULTS_FILE = "results.csv"
    META_FILE = "meta.txt"
    FAILURES_FILE = "failures.txt"

    # Fock Cutoff Control
    FOCK_START = 4
    FOCK_CAP = 64
    FOCK_TOLERANCE = 1e-6

    # Steady State / Propagation
    STEADY_STATE_TOLERANCE = 1e-10
    RK4_STEP_FRACTION = 0.1
    RK4_STEP_TOLERANCE = 1e-11
    RK4_MIN_STEP_PS = 1e-9

    # Correlators
    CORRELATOR_POINTS = 2048
    CORRELATOR_SPAN = 20.0
    EXPM_THRESHOLD = 500
    TAIL_TOLERANCE = 1e-4
    MIN_INTENSITY = 1e-30

    # Mean-field iteration
    MEAN_FIELD_DAMPING = 0.5
    MEAN_FIELD_MAX_ITERATIONS = 10_000
    MEAN_FIELD_TOLERANCE = 1e-13

    # Parameters the source never states; flagged in every metadata sidecar
    ASSUMED_KEYS = [
        "geometry.r_m_nm",
        "exciton.gamma_x_meV",
    ]

    @classmethod
    def get_data_path(cls) -> Path:
        """Get bundled data directory path"""
        return cls.PROJECT_ROOT / cls.DATA_DIR

    @classmethod
    def get_config_path(cls) -> Path:
        """Get shipped experiment config directory path"""
        return cls.PROJECT_ROOT / cls.CONFIG_DIR

    @classmethod
    def get_silver_table_path(cls) -> Path:
        """Get bundled silver permittivity table path"""
        return cls.get_data_path() / cls.SILVER_TABLE

    @classmethod
    def get_defaults_path(cls) -> Path:
        """Get defaults config file path"""
        return cls.get_config_path() / cls.DEFAULTS_FILE

    @classmethod
    def get_output_files(cls) -> List[str]:
        """Get list of files every experiment run may write"""
        return [cls.RESULTS_FILE, cls.META_FILE, cls.FAILURES_FILE]

    @classmethod
    def ensure_output_directory(cls, output_dir: Path) -> Path:
        """Create the output directory if it doesn't exist"""
        output_dir.mkdir(parents=True, exist_ok=True)
        return output_dir
