"""Exception types raised by relcompress."""


class RelcompressError(ValueError):
    """Base class for every error the library raises on bad input."""


class SeriesFormatError(RelcompressError):
    """Malformed series or labels input."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        where = f"line {line_number}: " if line_number else ""
        super().__init__(f"{where}{message}")


class NonMonotoneTimestampError(RelcompressError):
    """Timestamps must be strictly increasing."""

    def __init__(self, previous: float, current: float, line_number: int = None):
        self.previous = previous
        self.current = current
        self.line_number = line_number
        where = f"line {line_number}: " if line_number is not None else ""
        super().__init__(
            f"{where}timestamp {current!r} does not follow {previous!r}; "
            "timestamps must be strictly increasing"
        )


class InvalidParameterError(RelcompressError):
    """A parameter is outside the range an operation accepts."""


class LabelError(RelcompressError):
    """Interval labels overlap or cannot be used."""
