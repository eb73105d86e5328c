"""Exception taxonomy shared by all windtwin components.

Every error raised by the library derives from TwinError so callers can
catch one base class at process boundaries (CLI, HTTP handlers). The
`code` attribute is the stable machine-readable name used in HTTP error
payloads and CLI diagnostics.
"""


class TwinError(Exception):
    """Base class for all windtwin errors."""

    code = "TwinError"
    exit_code = 3  # runtime error unless a subclass says otherwise


class UnknownParameter(TwinError):
    code = "UnknownParameter"
    exit_code = 2


class InvalidRange(TwinError):
    code = "InvalidRange"
    exit_code = 2


class EmptyRange(TwinError):
    code = "EmptyRange"
    exit_code = 2


class InsufficientHistory(TwinError):
    code = "InsufficientHistory"
    exit_code = 2


class InsufficientData(TwinError):
    code = "InsufficientData"
    exit_code = 2


class ShapeMismatch(TwinError):
    code = "ShapeMismatch"


class DegenerateDelta(TwinError):
    code = "DegenerateDelta"


class EmptyDataset(TwinError):
    code = "EmptyDataset"
    exit_code = 2


class NonFiniteLoss(TwinError):
    code = "NonFiniteLoss"


class TaskMismatch(TwinError):
    code = "TaskMismatch"
    exit_code = 2


class UnknownModel(TwinError):
    code = "UnknownModel"


class FutureRange(TwinError):
    code = "FutureRange"


class InvalidTime(TwinError):
    code = "InvalidTime"


class Unauthorized(TwinError):
    code = "Unauthorized"


class SubscriberOverflow(TwinError):
    code = "SubscriberOverflow"


class OutOfDomain(TwinError):
    code = "OutOfDomain"


class NetworkError(TwinError):
    code = "NetworkError"


class ParseError(TwinError):
    code = "ParseError"
    exit_code = 2


class ShapeError(TwinError):
    code = "ShapeError"
    exit_code = 2


class NoFieldAvailable(TwinError):
    code = "NoFieldAvailable"
