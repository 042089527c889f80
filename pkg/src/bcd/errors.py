"""Exception hierarchy shared across the toolkit.

Exit-code mapping lives in the CLI: usage errors exit 1, data errors
(parse / database) exit 2, lifter problems exit 3.
"""


class BcdError(Exception):
    """Base class for all toolkit errors."""


class ParseError(BcdError):
    """Malformed LLVM IR input (e.g. unbalanced braces in a define block)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class LiftError(BcdError):
    """The external lifter ran but failed; carries captured diagnostics."""

    def __init__(self, message: str, diagnostics: str = ""):
        self.diagnostics = diagnostics
        super().__init__(message)


class ConfigError(BcdError):
    """Misconfiguration, e.g. the lifter executable is missing."""


class UnhashableError(BcdError):
    """Input cannot be fingerprinted (empty function, below size gate)."""


class IncompatibleSignatureError(BcdError):
    """Signatures generated under different (p, seed) cannot be compared."""


class IncompatibleDatabaseError(BcdError):
    """Database parameters do not match the requested operation's params."""


class CorruptDatabaseError(BcdError):
    """Database file failed magic/version/structure validation."""


class ValidationError(BcdError):
    """Out-of-range argument, e.g. a threshold outside the legal range."""
