"""Exception hierarchy shared across the pipeline.

The CLI maps each family onto an exit code, so new errors should subclass
one of the families below rather than ``Exception`` directly.
"""

from __future__ import annotations


class CircuitDocError(Exception):
    """Base class for every error raised by this package."""


class InputError(CircuitDocError):
    """Malformed or inconsistent user input (exit code 2)."""


class LayoutParseError(InputError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class DuplicateIdError(InputError):
    pass


class ConfigError(InputError):
    pass


class IntegrityError(InputError):
    """A row references a key that does not exist."""


class NotFoundError(InputError):
    pass


class DomainError(InputError):
    """A parameter vector or band lies outside its admissible domain."""


class GeneratorError(CircuitDocError):
    """The text generator failed; carries the iteration it failed on (exit code 3)."""

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class TopologyError(CircuitDocError):
    """Image-to-netlist conversion could not produce a consistent graph (exit code 4)."""


class AmbiguityError(TopologyError):
    def __init__(self, refdes: str, nets: list[str]):
        super().__init__(
            f"{refdes}: two-terminal component touches {len(nets)} nets ({', '.join(nets)})"
        )
        self.refdes = refdes
        self.nets = nets


class NetlistError(TopologyError):
    pass


class ConflictError(TopologyError):
    pass


class RenderError(TopologyError):
    pass
