"""Circuit-document pipeline: layout ingestion, parameter extraction, schematic
image to netlist conversion, a row store, and space-mapping optimization."""

from .errors import (
    AmbiguityError,
    CircuitDocError,
    ConfigError,
    DomainError,
    GeneratorError,
    InputError,
    TopologyError,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError",
    "CircuitDocError",
    "ConfigError",
    "DomainError",
    "GeneratorError",
    "InputError",
    "TopologyError",
    "__version__",
]
