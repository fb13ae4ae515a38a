"""Exception hierarchy shared by every module."""


class ScglueError(Exception):
    """Base class for library errors."""


class DomainError(ScglueError, ValueError):
    """An argument lies outside the mathematical domain of the map."""


class RangeError(DomainError):
    """An argument is mathematically valid but would overflow double precision."""


class GridError(ScglueError, ValueError):
    """Sample grids are misaligned, too short, or otherwise incompatible."""


class MembershipError(ScglueError, ValueError):
    """An element violates the open-set conditions a construction requires."""


class ParseError(ScglueError, ValueError):
    """A text file does not follow its declared format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
