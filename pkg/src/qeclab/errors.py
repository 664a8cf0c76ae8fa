"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ConfigError(ValidationError):
    """A scenario or configuration is inconsistent.

    The message names the violated inequality.
    """


class RangeError(ValueError):
    """A runtime value left its admissible range (overflow guard, state bound,
    quantizer input range)."""


class UnstableClosedLoop(ValueError):
    """The ideal closed loop A + BK is not Schur stable, so no stability
    threshold exists. Raised at analysis time, not while loading a scenario."""


class FrameDecodeError(ValueError):
    """A wire frame could not be parsed."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
