"""sbp-freesurface - Staggered-grid SBP operators with free-surface boundaries."""

from importlib import import_module

__version__ = "0.1.0"

from .config import (
    AnalysisConfig,
    GridConfig,
    MediumConfig,
    OutputConfig,
    ReceiverConfig,
    SimConfig,
    SimulationConfig,
    SourceConfig,
)
from .exceptions import (
    AccuracyError,
    AssemblyError,
    BlowUpError,
    ConfigurationError,
    EigensolverError,
    OperatorSizeError,
    OperatorStructureError,
    SbpFreeSurfaceError,
    SourceError,
)

__all__ = [
    # Operators
    "OperatorVariant",
    "OperatorSet1D",
    "build_operator_set",
    "apply_strong_reset",
    "compute_q",
    "projection_vectors",
    "verify_accuracy",
    # Assembly
    "BCMode",
    "MediumSpec",
    "SemiDiscreteSystem",
    "assemble_1d",
    "assemble_2d_acoustic",
    "assemble_2d_elastic",
    # Time stepping
    "WaveState",
    "SourceSpec",
    "ReceiverSpec",
    "step_leapfrog",
    "build_system",
    "run",
    # Configuration
    "SimConfig",
    "SimulationConfig",
    "GridConfig",
    "MediumConfig",
    "SourceConfig",
    "ReceiverConfig",
    "AnalysisConfig",
    "OutputConfig",
    # Exceptions
    "SbpFreeSurfaceError",
    "ConfigurationError",
    "OperatorSizeError",
    "OperatorStructureError",
    "AccuracyError",
    "AssemblyError",
    "SourceError",
    "BlowUpError",
    "EigensolverError",
]

_LAZY_EXPORTS = {
    "OperatorVariant": ("sbp_core", "OperatorVariant"),
    "OperatorSet1D": ("sbp_core", "OperatorSet1D"),
    "build_operator_set": ("sbp_core", "build_operator_set"),
    "apply_strong_reset": ("sbp_core", "apply_strong_reset"),
    "compute_q": ("sbp_core", "compute_q"),
    "projection_vectors": ("sbp_core", "projection_vectors"),
    "verify_accuracy": ("sbp_core", "verify_accuracy"),
    "BCMode": ("assembly", "BCMode"),
    "MediumSpec": ("assembly", "MediumSpec"),
    "SemiDiscreteSystem": ("assembly", "SemiDiscreteSystem"),
    "assemble_1d": ("assembly", "assemble_1d"),
    "assemble_2d_acoustic": ("assembly", "assemble_2d_acoustic"),
    "assemble_2d_elastic": ("assembly", "assemble_2d_elastic"),
    "WaveState": ("wavesim", "WaveState"),
    "SourceSpec": ("wavesim", "SourceSpec"),
    "ReceiverSpec": ("wavesim", "ReceiverSpec"),
    "step_leapfrog": ("wavesim", "step_leapfrog"),
    "build_system": ("wavesim", "build_system"),
    "run": ("wavesim", "run"),
}

_LAZY_SUBMODULES = {
    "sbp_core",
    "assembly",
    "wavesim",
    "analysis",
    "utils",
}


def __getattr__(name):
    """Lazily import numerical modules so config handling stays light."""
    if name in _LAZY_EXPORTS:
        module_name, attr_name = _LAZY_EXPORTS[name]
        module = import_module(f".{module_name}", __name__)
        value = getattr(module, attr_name)
        globals()[name] = value
        return value
    if name in _LAZY_SUBMODULES:
        module = import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
