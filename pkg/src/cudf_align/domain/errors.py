"""Exceptions raised by the library. Only the CLI turns them into exit codes."""

from typing import Optional


class CudfAlignError(Exception):
    """Base class for every error raised by cudf_align."""


class CudfParseError(CudfAlignError):
    """Malformed CUDF document."""

    def __init__(self, message: str, stanza: Optional[int] = None, line: Optional[int] = None):
        self.stanza = stanza
        self.line = line
        location = []
        if stanza is not None:
            location.append(f"stanza {stanza}")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class InfeasibleRequestError(CudfAlignError):
    """A request atom matches no package of the universe."""

    def __init__(self, atom: str, action: str):
        self.atom = atom
        self.action = action
        super().__init__(f"request {action} '{atom}' matches no package")


class CriteriaSpecError(CudfAlignError):
    """Criteria string does not follow the grammar."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"position {position}: {message}")


class BruteForceCapError(CudfAlignError):
    """Universe too large for exhaustive enumeration."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"universe has {size} packages, exhaustive search is capped at {cap}")


class MalformedProgramError(CudfAlignError):
    """Internal inconsistency in a linear program."""
