"""
Experiment configuration files: flat `key = value` lines with dotted keys
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import Config
from ..errors import ConfigError, ParameterError
from ..optics.coupling import GeometryParams
from ..utils.file_utils import trim_bom

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = (
    "coupling-vs-distance",
    "damping-map",
    "scattering-sweep",
    "power-series",
    "rf-spectrum",
    "g2-scan",
    "g2-trace",
    "convergence-report",
)

SWEEP_KINDS = {
    "coupling-vs-distance": "R_nm",
    "damping-map": "R_nm",
    "scattering-sweep": "offset_meV",
    "power-series": "rabi_meV",
    "rf-spectrum": "detection_offset_meV",
    "g2-scan": "offset_meV",
}

LOCATE_MODES = ("none", "dip", "peak")
TRACE_OBSERVABLES = ("scattered", "incoherent")

KNOWN_KEYS = {
    "experiment.kind",
    "experiment.name",
    "material.table",
    "material.eps_b",
    "geometry.R_nm",
    "geometry.r_m_nm",
    "geometry.s_alpha",
    "geometry.mu_enm",
    "exciton.detuning_meV",
    "exciton.gamma_x_meV",
    "drive.rabi_meV",
    "drive.offset_meV",
    "drive.locate",
    "solver.n_max",
    "solver.fock_tol",
    "solver.fock_cap",
    "solver.tau_points",
    "solver.tau_max_ps",
    "trace.observable",
    "output.dir",
}
for _axis in ("sweep", "sweep2", "locate"):
    KNOWN_KEYS.update({f"{_axis}.start", f"{_axis}.stop", f"{_axis}.count", f"{_axis}.log"})


@dataclass(frozen=True)
class SweepAxis:
    """Evenly (or log-) spaced sweep from start to stop inclusive"""

    start: float
    stop: float
    count: int
    log: bool = False

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"sweep count must be >= 2, got {self.count}")
        if self.log and not (self.start > 0 and self.stop > 0):
            raise ConfigError("log sweep needs positive start and stop")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class ConfigEntry:
    value: str
    source: Path
    line_number: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description"""

    kind: str
    name: str
    table_path: Path
    eps_b: float
    geometry: GeometryParams
    detuning: float
    gamma_x: float
    rabi: float
    offset: float
    locate: str = "none"
    sweep: Optional[SweepAxis] = None
    sweep2: Optional[SweepAxis] = None
    locate_axis: Optional[SweepAxis] = None
    n_max: Optional[int] = None
    fock_tol: float = Config.FOCK_TOLERANCE
    fock_cap: int = Config.FOCK_CAP
    tau_points: int = Config.CORRELATOR_POINTS
    tau_max: Optional[float] = None
    trace_observable: str = "scattered"
    output_dir: Path = Path(Config.OUTPUT_DIR)
    resolved: Dict[str, str] = field(default_factory=dict)
    assumed: Tuple[str, ...] = ()

    @property
    def expected_rows(self) -> Optional[int]:
        """Row count the results file must have, when fixed by the sweep axes"""
        if self.kind == "damping-map":
            return self.sweep.count * self.sweep2.count
        if self.kind in SWEEP_KINDS:
            return self.sweep.count
        if self.kind == "g2-trace":
            return self.tau_points
        return None

    def with_overrides(self, output_dir: Optional[Path] = None, fock_cap: Optional[int] = None) -> "ExperimentConfig":
        """Apply command-line overrides"""
        cfg = self
        if output_dir is not None:
            cfg = replace(cfg, output_dir=Path(output_dir), resolved={**cfg.resolved, "output.dir": str(output_dir)})
        if fock_cap is not None:
            if fock_cap < Config.FOCK_START:
                raise ConfigError(f"--fock-cap must be >= {Config.FOCK_START}, got {fock_cap}")
            cfg = replace(cfg, fock_cap=fock_cap, resolved={**cfg.resolved, "solver.fock_cap": str(fock_cap)})
        return cfg


def parse_config_file(path: Path) -> Dict[str, ConfigEntry]:
    """
    Read `key = value` lines; `#` starts a comment

    Raises:
        ConfigError: Missing file, malformed line, unknown or repeated key
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    entries: Dict[str, ConfigEntry] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            line = trim_bom(raw) if line_number == 1 else raw
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_number}: expected 'key = value', got '{line}'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"{path}:{line_number}: unknown key '{key}'")
            if not value:
                raise ConfigError(f"{path}:{line_number}: empty value for '{key}'")
            if key in entries:
                raise ConfigError(f"{path}:{line_number}: '{key}' set twice (first on line {entries[key].line_number})")
            entries[key] = ConfigEntry(value=value, source=path, line_number=line_number)
    return entries


class _Reader:
    """Typed access to merged config entries with located error messages"""

    def __init__(self, entries: Dict[str, ConfigEntry]):
        self.entries = entries

    def has(self, key: str) -> bool:
        return key in self.entries

    def _where(self, key: str) -> str:
        entry = self.entries[key]
        return f"{entry.source}:{entry.line_number}"

    def text(self, key: str, default: Optional[str] = None) -> str:
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"missing required key '{key}'")
            return default
        return self.entries[key].value

    def number(self, key: str, default: Optional[float] = None) -> float:
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"missing required key '{key}'")
            return default
        try:
            value = float(self.entries[key].value)
        except ValueError as e:
            raise ConfigError(f"{self._where(key)}: '{key}' must be a number, got '{self.entries[key].value}'") from e
        if not np.isfinite(value):
            raise ConfigError(f"{self._where(key)}: '{key}' must be finite")
        return value

    def integer(self, key: str, default: Optional[int] = None) -> int:
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"missing required key '{key}'")
            return default
        try:
            return int(self.entries[key].value)
        except ValueError as e:
            raise ConfigError(f"{self._where(key)}: '{key}' must be an integer, got '{self.entries[key].value}'") from e

    def boolean(self, key: str, default: bool = False) -> bool:
        if key not in self.entries:
            return default
        value = self.entries[key].value.lower()
        if value in ("true", "yes", "1"):
            return True
        if value in ("false", "no", "0"):
            return False
        raise ConfigError(f"{self._where(key)}: '{key}' must be true or false, got '{value}'")

    def choice(self, key: str, options: Tuple[str, ...], default: Optional[str] = None) -> str:
        value = self.text(key, default)
        if value not in options:
            raise ConfigError(f"'{key}' must be one of {', '.join(options)}, got '{value}'")
        return value

    def path(self, key: str, default: Optional[str] = None) -> Path:
        value = Path(self.text(key, default))
        if value.is_absolute() or key not in self.entries:
            return value
        return (self.entries[key].source.parent / value).resolve()

    def axis(self, prefix: str) -> Optional[SweepAxis]:
        keys = [f"{prefix}.start", f"{prefix}.stop", f"{prefix}.count"]
        present = [self.has(key) for key in keys]
        if not any(present):
            return None
        if not all(present):
            raise ConfigError(f"'{prefix}' axis needs start, stop and count")
        return SweepAxis(
            start=self.number(keys[0]),
            stop=self.number(keys[1]),
            count=self.integer(keys[2]),
            log=self.boolean(f"{prefix}.log"),
        )


def load_experiment_config(path: Path, defaults_path: Optional[Path] = None) -> ExperimentConfig:
    """
    Load the defaults file, overlay an experiment file and validate the result

    Args:
        path: Experiment config file
        defaults_path: Defaults file (the shipped configs/defaults.conf if omitted)

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: Any invalid key, value or combination
    """
    path = Path(path)
    defaults_path = Path(defaults_path) if defaults_path is not None else Config.get_defaults_path()

    entries: Dict[str, ConfigEntry] = {}
    if defaults_path.resolve() != path.resolve():
        entries.update(parse_config_file(defaults_path))
        logger.debug(f"Loaded {len(entries)} defaults from {defaults_path}")
    overrides = parse_config_file(path)
    entries.update(overrides)
    logger.info(f"Loaded experiment config {path} ({len(overrides)} keys)")

    reader = _Reader(entries)
    kind = reader.choice("experiment.kind", EXPERIMENT_KINDS)

    try:
        geometry = GeometryParams(
            R_nm=reader.number("geometry.R_nm"),
            r_m_nm=reader.number("geometry.r_m_nm"),
            s_alpha=reader.integer("geometry.s_alpha", 2),
            mu_enm=reader.number("geometry.mu_enm"),
        )
    except ParameterError as e:
        raise ConfigError(f"invalid geometry: {e}") from e

    n_max_text = reader.text("solver.n_max", "auto")
    n_max = None if n_max_text == "auto" else reader.integer("solver.n_max")
    tau_max_text = reader.text("solver.tau_max_ps", "auto")
    tau_max = None if tau_max_text == "auto" else reader.number("solver.tau_max_ps")

    cfg = ExperimentConfig(
        kind=kind,
        name=reader.text("experiment.name", path.stem),
        table_path=reader.path("material.table", str(Config.get_silver_table_path())),
        eps_b=reader.number("material.eps_b"),
        geometry=geometry,
        detuning=reader.number("exciton.detuning_meV", 0.0),
        gamma_x=reader.number("exciton.gamma_x_meV"),
        rabi=reader.number("drive.rabi_meV", 0.0),
        offset=reader.number("drive.offset_meV", 0.0),
        locate=reader.choice("drive.locate", LOCATE_MODES, "none"),
        sweep=reader.axis("sweep"),
        sweep2=reader.axis("sweep2"),
        locate_axis=reader.axis("locate"),
        n_max=n_max,
        fock_tol=reader.number("solver.fock_tol", Config.FOCK_TOLERANCE),
        fock_cap=reader.integer("solver.fock_cap", Config.FOCK_CAP),
        tau_points=reader.integer("solver.tau_points", Config.CORRELATOR_POINTS),
        tau_max=tau_max,
        trace_observable=reader.choice("trace.observable", TRACE_OBSERVABLES, "scattered"),
        output_dir=reader.path("output.dir", Config.OUTPUT_DIR),
        resolved={key: entry.value for key, entry in sorted(entries.items())},
        assumed=tuple(key for key in Config.ASSUMED_KEYS if key not in overrides),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    problems: List[str] = []
    if not cfg.eps_b > 0:
        problems.append(f"material.eps_b must be positive, got {cfg.eps_b}")
    if not cfg.gamma_x > 0:
        problems.append(f"exciton.gamma_x_meV must be positive, got {cfg.gamma_x}")
    if not cfg.rabi >= 0:
        problems.append(f"drive.rabi_meV must be >= 0, got {cfg.rabi}")
    if cfg.n_max is not None and cfg.n_max < 1:
        problems.append(f"solver.n_max must be >= 1 or auto, got {cfg.n_max}")
    if not cfg.fock_tol > 0:
        problems.append(f"solver.fock_tol must be positive, got {cfg.fock_tol}")
    if cfg.fock_cap < Config.FOCK_START:
        problems.append(f"solver.fock_cap must be >= {Config.FOCK_START}, got {cfg.fock_cap}")
    if cfg.tau_points < 2:
        problems.append(f"solver.tau_points must be >= 2, got {cfg.tau_points}")
    if cfg.tau_max is not None and not cfg.tau_max > 0:
        problems.append(f"solver.tau_max_ps must be positive or auto, got {cfg.tau_max}")

    if cfg.kind in SWEEP_KINDS and cfg.sweep is None:
        problems.append(f"{cfg.kind} needs a sweep axis (sweep.start, sweep.stop, sweep.count)")
    if cfg.kind == "damping-map" and cfg.sweep2 is None:
        problems.append("damping-map needs a second axis (sweep2.start, sweep2.stop, sweep2.count)")
    if cfg.kind in ("coupling-vs-distance", "damping-map") and cfg.sweep is not None:
        if cfg.sweep.start <= cfg.geometry.r_m_nm or cfg.sweep.stop <= cfg.geometry.r_m_nm:
            problems.append(f"distance sweep must stay outside the MNP radius {cfg.geometry.r_m_nm} nm")
    if cfg.kind == "power-series" and cfg.sweep is not None and min(cfg.sweep.start, cfg.sweep.stop) < 0:
        problems.append("Rabi sweep must be nonnegative")
    if cfg.locate != "none" and cfg.locate_axis is None:
        problems.append("drive.locate needs a locate axis (locate.start, locate.stop, locate.count)")

    if problems:
        raise ConfigError("; ".join(problems))