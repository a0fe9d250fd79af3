"""Exception types raised across the toolkit."""


class IdprovError(Exception):
    """Base class for all toolkit errors."""


class NotPythonFile(IdprovError, ValueError):
    pass


class ParseError(IdprovError, ValueError):
    """A manifest or golden-set line could not be parsed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateProductName(IdprovError, ValueError):
    pass


class UnknownIdentifier(IdprovError, KeyError):
    pass


class FormatError(IdprovError, ValueError):
    """A persisted index file is truncated or malformed."""


class VersionError(FormatError):
    pass


class InsufficientIdentifiers(IdprovError):
    """No fingerprint of the requested size can be drawn from a release."""


class NoFileBoundaries(IdprovError):
    """The release was ingested without per-file identifier sets."""


class EmptySubject(IdprovError, ValueError):
    pass


class UndefinedForEmptyResult(IdprovError, ValueError):
    pass


class TruthMissing(IdprovError, KeyError):
    pass
