"""Configuration management for sbp-freesurface experiments."""

import configparser
import io
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple

from .exceptions import ConfigurationError
from .utils.validation_helpers import parse_int_list, parse_number, sanitize_label

logger = logging.getLogger(__name__)

# =============================================================================
# Configuration Constants
# =============================================================================

ENV_PREFIX = "SBP_FS_"
PRESET_PACKAGE = "sbp_freesurface.presets"
PRESET_ALIASES_FILE = "aliases.cfg"

VALID_EQUATIONS = ("wave1d", "acoustic2d", "elastic2d")
VALID_BC_MODES = ("strong", "weak")
VALID_LAYOUTS = ("stress_on_n", "stress_on_m")
VALID_WAVELETS = ("ricker",)
VALID_MMS = ("", "wave1d", "wave1d-intertwined", "elastic2d")

VARIABLES_BY_EQUATION: Dict[str, Tuple[str, ...]] = {
    "wave1d": ("v", "sigma"),
    "acoustic2d": ("vx", "vy", "sigma"),
    "elastic2d": ("vx", "vy", "sxx", "syy", "sxy"),
}


# =============================================================================
# Environment Variable Parsing Helpers
# =============================================================================

def parse_bool_env(env_var: str, default: bool) -> bool:
    """Parse boolean environment variable with validation."""
    value = os.getenv(env_var)
    if value is None:
        return default

    value_lower = value.lower().strip()
    if value_lower in ('true', '1', 'yes', 'on'):
        return True
    elif value_lower in ('false', '0', 'no', 'off', ''):
        return False
    else:
        logger.warning(
            f"Invalid boolean value '{value}' for {env_var}. "
            f"Valid: true/false, 1/0, yes/no, on/off. Using default: {default}"
        )
        return default


def parse_int_env(env_var: str, default: int) -> int:
    """Parse integer environment variable with validation."""
    value = os.getenv(env_var)
    if value is None:
        return default

    try:
        return int(value)
    except ValueError:
        logger.warning(f"Invalid integer value '{value}' for {env_var}. Using default: {default}")
        return default


def parse_float_env(env_var: str, default: Optional[float]) -> Optional[float]:
    """Parse float environment variable (fractions such as 6/7 allowed)."""
    value = os.getenv(env_var)
    if value is None:
        return default

    try:
        return parse_number(value)
    except ValueError:
        logger.warning(f"Invalid float value '{value}' for {env_var}. Using default: {default}")
        return default


def parse_int_list_env(env_var: str, default: List[int]) -> List[int]:
    """Parse a comma-separated integer list environment variable."""
    value = os.getenv(env_var)
    if value is None:
        return default

    try:
        return parse_int_list(value)
    except ValueError:
        logger.warning(f"Invalid integer list '{value}' for {env_var}. Using default: {default}")
        return default


# =============================================================================
# Configuration Dataclasses - SINGLE SOURCE OF TRUTH FOR DEFAULTS
# =============================================================================

@dataclass
class SimulationConfig:
    """Equation, boundary treatment and time stepping."""
    name: str = "unnamed"
    equation: str = "wave1d"
    bc_mode: str = "strong"
    layout: str = "stress_on_n"
    dt: float = 2.5e-4
    steps: int = 24000
    energy_stride: int = 10
    nan_check_stride: int = 100
    threads: int = 1


@dataclass
class GridConfig:
    """Domain extents and resolution; ppw is points per minimum wavelength."""
    extent_x: float = 1.6
    extent_y: float = 0.0
    x_left: float = 0.0
    y_top: float = 0.0
    min_wavelength: float = 0.08
    ppw: List[int] = field(default_factory=lambda: [10])
    dx: Optional[float] = None


@dataclass
class MediumConfig:
    """Homogeneous material. c is used by wave1d/acoustic2d, lam/mu by elastic2d."""
    rho: float = 1.0
    c: float = 1.0
    lam: Optional[float] = None
    mu: Optional[float] = None


@dataclass
class SourceConfig:
    """Point source at a physical location, optionally shifted by whole or half spacings."""
    label: str = "S"
    target: str = "sigma"
    x: float = 0.0
    y: float = 0.0
    x_offset: float = 0.0
    y_offset: float = 0.0
    wavelet: str = "ricker"
    f0: float = 5.0
    t0: float = 0.25
    amplitude: float = 1.0


@dataclass
class ReceiverConfig:
    """Receiver at a physical location, offsets in grid spacings."""
    label: str = "R"
    variable: str = "sigma"
    x: float = 0.0
    y: float = 0.0
    x_offset: float = 0.0
    y_offset: float = 0.0


@dataclass
class AnalysisConfig:
    """Spectral, CFL-probe and convergence settings."""
    courant: Optional[float] = None
    probe_steps: int = 20000
    probe_tolerance: float = 1e-3
    probe_upper: float = 1.2
    blowup_factor: float = 1e3
    probe_seed: int = 20240101
    mms: str = ""
    full_fidelity: bool = False


@dataclass
class OutputConfig:
    """Output directory and artifact file names."""
    out_dir: str = "results"
    traces_file: str = "traces.csv"
    velocity_traces_file: str = "velocity_traces.csv"
    energy_file: str = "energy.csv"
    manifest_file: str = "manifest.txt"


_SCALAR_SECTIONS = ("simulation", "grid", "medium", "analysis", "output")


# =============================================================================
# Main Configuration Class
# =============================================================================

@dataclass
class SimConfig:
    """Full experiment description."""
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sources: List[SourceConfig] = field(default_factory=list)
    receivers: List[ReceiverConfig] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return 1 if self.simulation.equation == "wave1d" else 2

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to a plain dictionary."""
        data: Dict[str, Any] = {
            name: dict(vars(getattr(self, name))) for name in _SCALAR_SECTIONS
        }
        data["grid"]["ppw"] = list(self.grid.ppw)
        data["sources"] = [dict(vars(s)) for s in self.sources]
        data["receivers"] = [dict(vars(r)) for r in self.receivers]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SimConfig':
        """Create config from a dictionary, ignoring unknown keys."""
        config = cls()
        for name in _SCALAR_SECTIONS:
            section = getattr(config, name)
            for key, value in data.get(name, {}).items():
                if hasattr(section, key):
                    setattr(section, key, value)
        config.grid.ppw = list(config.grid.ppw)
        config.sources = [
            _fill(SourceConfig(), s) for s in data.get("sources", [])
        ]
        config.receivers = [
            _fill(ReceiverConfig(), r) for r in data.get("receivers", [])
        ]
        return config

    def copy(self) -> 'SimConfig':
        """Create a deep copy of the configuration."""
        return SimConfig.from_dict(self.to_dict())

    # -------------------------------------------------------------------------
    # INI round trip
    # -------------------------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> 'SimConfig':
        """Parse an INI document.

        Raises:
            ConfigurationError: On syntax errors, unknown keys or bad values.
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment,method-assign]
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigurationError(f"Invalid config syntax: {e}") from e

        config = cls()
        for section_name in parser.sections():
            items = dict(parser.items(section_name))
            if section_name in _SCALAR_SECTIONS:
                _apply_ini_items(getattr(config, section_name), items, section_name)
            elif section_name.startswith("source."):
                source = SourceConfig(label=section_name.split(".", 1)[1])
                _apply_ini_items(source, items, section_name)
                config.sources.append(source)
            elif section_name.startswith("receiver."):
                receiver = ReceiverConfig(label=section_name.split(".", 1)[1])
                _apply_ini_items(receiver, items, section_name)
                config.receivers.append(receiver)
            else:
                raise ConfigurationError(f"Invalid config section '[{section_name}]'")
        return config

    def to_ini(self) -> str:
        """Emit the canonical INI form (every field, fixed order)."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment,method-assign]
        for name in _SCALAR_SECTIONS:
            parser[name] = _ini_items(getattr(self, name))
        for source in self.sources:
            items = _ini_items(source)
            items.pop("label")
            parser[f"source.{source.label}"] = items
        for receiver in self.receivers:
            items = _ini_items(receiver)
            items.pop("label")
            parser[f"receiver.{receiver.label}"] = items
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    @classmethod
    def load(cls, path: Optional[Path] = None, apply_env: bool = True) -> 'SimConfig':
        """
        Load configuration with priority: defaults < file < env vars.

        CLI flags are applied afterwards by the caller.

        Returns:
            Validated SimConfig instance
        """
        config = cls()
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text()
            except OSError as e:
                raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
            logger.info(f"Loading configuration from {path}")
            config = cls.from_ini(text)

        if apply_env:
            config._apply_env_overrides()
        config.validate()
        return config

    @classmethod
    def load_preset(cls, name: str, apply_env: bool = True) -> 'SimConfig':
        """Load a preset shipped as package data; alias names are resolved first."""
        alias = preset_aliases().get(name)
        if alias is not None:
            logger.debug(f"Preset alias {name} -> {alias}")
            name = alias
        try:
            text = resources.files(PRESET_PACKAGE).joinpath(f"{name}.ini").read_text()
        except (FileNotFoundError, OSError) as e:
            raise ConfigurationError(
                f"Invalid preset '{name}'. Valid: {', '.join(list_presets())}"
            ) from e
        logger.info(f"Loading preset {name}")
        config = cls.from_ini(text)
        if apply_env:
            config._apply_env_overrides()
        config.validate()
        return config

    def save(self, path: Path) -> Path:
        """Write the canonical INI form to ``path``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini())
        logger.info(f"Configuration saved to {path}")
        return path

    def _apply_env_overrides(self) -> None:
        """Apply SBP_FS_* environment variable overrides."""
        self.simulation.bc_mode = os.getenv(f'{ENV_PREFIX}BC_MODE', self.simulation.bc_mode)
        self.simulation.dt = parse_float_env(f'{ENV_PREFIX}DT', self.simulation.dt)
        self.simulation.steps = parse_int_env(f'{ENV_PREFIX}STEPS', self.simulation.steps)
        self.simulation.energy_stride = parse_int_env(
            f'{ENV_PREFIX}ENERGY_STRIDE', self.simulation.energy_stride
        )
        self.simulation.threads = parse_int_env(f'{ENV_PREFIX}THREADS', self.simulation.threads)

        self.grid.ppw = parse_int_list_env(f'{ENV_PREFIX}PPW', self.grid.ppw)

        self.analysis.courant = parse_float_env(f'{ENV_PREFIX}COURANT', self.analysis.courant)
        self.analysis.probe_steps = parse_int_env(
            f'{ENV_PREFIX}PROBE_STEPS', self.analysis.probe_steps
        )
        self.analysis.mms = os.getenv(f'{ENV_PREFIX}MMS', self.analysis.mms)
        self.analysis.full_fidelity = parse_bool_env(
            f'{ENV_PREFIX}FULL_FIDELITY', self.analysis.full_fidelity
        )

        self.output.out_dir = os.getenv(f'{ENV_PREFIX}OUT_DIR', self.output.out_dir)

    def validate(self) -> None:
        """Validate configuration values."""
        sim = self.simulation
        if sim.equation not in VALID_EQUATIONS:
            raise ConfigurationError(
                f"Invalid equation '{sim.equation}'. Valid: {', '.join(VALID_EQUATIONS)}"
            )
        if sim.bc_mode not in VALID_BC_MODES:
            raise ConfigurationError(
                f"Invalid bc_mode '{sim.bc_mode}'. Valid: {', '.join(VALID_BC_MODES)}"
            )
        if sim.layout not in VALID_LAYOUTS:
            raise ConfigurationError(
                f"Invalid layout '{sim.layout}'. Valid: {', '.join(VALID_LAYOUTS)}"
            )
        if sim.layout == "stress_on_m" and (sim.equation != "wave1d" or sim.bc_mode != "strong"):
            raise ConfigurationError("Invalid layout 'stress_on_m'. Only wave1d with strong bc_mode")
        if not sim.dt > 0:
            raise ConfigurationError(f"Invalid dt {sim.dt}. Must be > 0")
        if sim.steps <= 0:
            raise ConfigurationError(f"Invalid steps {sim.steps}. Must be > 0")
        if sim.energy_stride <= 0:
            raise ConfigurationError(f"Invalid energy_stride {sim.energy_stride}. Must be > 0")
        if sim.nan_check_stride <= 0:
            raise ConfigurationError(
                f"Invalid nan_check_stride {sim.nan_check_stride}. Must be > 0"
            )
        if sim.threads < 1:
            raise ConfigurationError(f"Invalid threads {sim.threads}. Must be >= 1")

        grid = self.grid
        if not grid.extent_x > 0:
            raise ConfigurationError(f"Invalid extent_x {grid.extent_x}. Must be > 0")
        if self.dimension == 2 and not grid.extent_y > 0:
            raise ConfigurationError(f"Invalid extent_y {grid.extent_y}. Must be > 0 for 2D")
        if not grid.ppw or any(p <= 0 for p in grid.ppw):
            raise ConfigurationError(f"Invalid ppw {grid.ppw}. Must be positive integers")
        if grid.dx is not None and not grid.dx > 0:
            raise ConfigurationError(f"Invalid dx {grid.dx}. Must be > 0")
        if grid.dx is None and not grid.min_wavelength > 0:
            raise ConfigurationError(f"Invalid min_wavelength {grid.min_wavelength}. Must be > 0")

        medium = self.medium
        if not medium.rho > 0:
            raise ConfigurationError(f"Invalid rho {medium.rho}. Must be > 0")
        if sim.equation == "elastic2d":
            if medium.lam is None or medium.mu is None:
                raise ConfigurationError("Invalid medium. elastic2d needs lam and mu")
            if not medium.mu > 0:
                raise ConfigurationError(f"Invalid mu {medium.mu}. Must be > 0")
            if not medium.lam + 2 * medium.mu > 0:
                raise ConfigurationError("Invalid medium. lam + 2 mu must be > 0")
            if not medium.lam + medium.mu > 0:
                raise ConfigurationError("Invalid medium. lam + mu must be > 0")
        elif not medium.c > 0:
            raise ConfigurationError(f"Invalid c {medium.c}. Must be > 0")

        variables = VARIABLES_BY_EQUATION[sim.equation]
        labels: Set[str] = set()
        for source in self.sources:
            if source.target not in variables:
                raise ConfigurationError(
                    f"Invalid source target '{source.target}'. Valid: {', '.join(variables)}"
                )
            if source.wavelet not in VALID_WAVELETS:
                raise ConfigurationError(f"Invalid wavelet '{source.wavelet}'")
            if not source.f0 > 0:
                raise ConfigurationError(f"Invalid f0 {source.f0}. Must be > 0")
        for receiver in self.receivers:
            if sanitize_label(receiver.label) != receiver.label:
                raise ConfigurationError(f"Invalid receiver label '{receiver.label}'")
            if receiver.label in labels:
                raise ConfigurationError(f"Duplicate receiver label '{receiver.label}'")
            labels.add(receiver.label)
            if receiver.variable not in variables:
                raise ConfigurationError(
                    f"Invalid receiver variable '{receiver.variable}'. Valid: {', '.join(variables)}"
                )

        analysis = self.analysis
        if analysis.courant is not None and not analysis.courant > 0:
            raise ConfigurationError(f"Invalid courant {analysis.courant}. Must be > 0")
        if analysis.probe_steps <= 0:
            raise ConfigurationError(f"Invalid probe_steps {analysis.probe_steps}. Must be > 0")
        if not 0 < analysis.probe_tolerance < analysis.probe_upper:
            raise ConfigurationError(
                f"Invalid probe_tolerance {analysis.probe_tolerance}. Must be in (0, probe_upper)"
            )
        if not analysis.blowup_factor > 1:
            raise ConfigurationError(f"Invalid blowup_factor {analysis.blowup_factor}. Must be > 1")
        if analysis.mms not in VALID_MMS:
            raise ConfigurationError(f"Invalid mms '{analysis.mms}'")

    # -------------------------------------------------------------------------
    # Resolution
    # -------------------------------------------------------------------------

    def spacing_for(self, ppw: int) -> float:
        """Grid spacing for one resolution (explicit dx wins over ppw)."""
        if self.grid.dx is not None:
            return float(self.grid.dx)
        return self.grid.min_wavelength / ppw

    def grid_counts(self, ppw: int) -> Tuple[int, ...]:
        """N-grid point counts per axis for one resolution.

        Raises:
            ConfigurationError: If an extent is not a whole number of spacings.
        """
        dx = self.spacing_for(ppw)
        extents = [self.grid.extent_x] if self.dimension == 1 else [
            self.grid.extent_x, self.grid.extent_y
        ]
        counts = []
        for extent in extents:
            cells = extent / dx
            if abs(cells - round(cells)) > 1e-6 * max(1.0, cells):
                raise ConfigurationError(
                    f"Invalid grid. Extent {extent} is not a multiple of dx={dx} (ppw {ppw})"
                )
            counts.append(int(round(cells)) + 1)
        return tuple(counts)


def _fill(instance: Any, values: Dict[str, Any]) -> Any:
    for key, value in values.items():
        if hasattr(instance, key):
            setattr(instance, key, value)
    return instance


def _coerce(raw: str, default: Any, where: str) -> Any:
    """Convert an INI string using the type of the field's default."""
    text = raw.strip()
    try:
        if default is None and text.lower() == "none":
            return None
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, list):
            return parse_int_list(text)
        if isinstance(default, int):
            return int(text)
        if default is None or isinstance(default, float):
            return parse_number(text)
        return text
    except ValueError as e:
        raise ConfigurationError(f"Invalid value '{raw}' for {where}") from e


def _apply_ini_items(section: Any, items: Dict[str, str], section_name: str) -> None:
    defaults = type(section)()
    for key, raw in items.items():
        if not hasattr(defaults, key) or key == "label":
            raise ConfigurationError(f"Invalid key '{key}' in [{section_name}]")
        setattr(section, key, _coerce(raw, getattr(defaults, key), f"{section_name}.{key}"))


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _ini_items(section: Any) -> Dict[str, str]:
    return {key: _format_value(value) for key, value in vars(section).items()}


def list_presets() -> List[str]:
    """Names of the presets shipped with the package."""
    names = [
        entry.name[:-4]
        for entry in resources.files(PRESET_PACKAGE).iterdir()
        if entry.name.endswith(".ini")
    ]
    return sorted(names)


def preset_aliases() -> Dict[str, str]:
    """Alternative preset names mapped to the shipped preset they load."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # type: ignore[assignment]
    parser.read_string(resources.files(PRESET_PACKAGE).joinpath(PRESET_ALIASES_FILE).read_text())
    return dict(parser["aliases"]) if parser.has_section("aliases") else {}

