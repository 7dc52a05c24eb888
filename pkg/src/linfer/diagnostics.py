"""Source positions and user-facing error reporting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Span:
    """1-based line/column of the token a message points at."""

    line: int
    col: int

    def __repr__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass
class Diagnostic:
    message: str
    span: Optional[Span] = None
    binding: Optional[str] = None

    def render(self, filename: str = "<input>") -> str:
        where = f"{filename}:{self.span.line}:{self.span.col}" if self.span else filename
        suffix = f" (in binding '{self.binding}')" if self.binding else ""
        return f"{where}: error: {self.message}{suffix}"


class LinError(Exception):
    """Any error with a source diagnostic attached."""

    def __init__(self, message: str, span: Optional[Span] = None,
                 binding: Optional[str] = None) -> None:
        super().__init__(message)
        self.diagnostic = Diagnostic(message, span, binding)

    def render(self, filename: str = "<input>") -> str:
        return self.diagnostic.render(filename)


class ParseError(LinError):
    pass


class CheckError(LinError):
    """Type error raised while checking a program."""
