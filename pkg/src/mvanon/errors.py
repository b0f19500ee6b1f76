"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation and protocol problems exit 1,
missing inputs exit 2, malformed packages exit 3.
"""


class MvanonError(Exception):
    """Base class for all errors raised by this package."""


class KeyFormatError(MvanonError):
    """Master key material has the wrong length or encoding."""


class TraceParseError(MvanonError):
    """A trace CSV line failed validation; message carries the line number."""


class IterationLimitError(MvanonError):
    """A signed iteration count exceeded the configured bound."""


class DomainError(MvanonError):
    """An argument violated a documented precondition."""


class ProtocolError(MvanonError):
    """An owner- or analyst-side protocol step cannot proceed."""


class PackageError(MvanonError):
    """A seed package directory is missing pieces or internally inconsistent."""


class MatchError(MvanonError):
    """A flow fingerprint expected in a view is absent."""
