"""Exception hierarchy. Every error raised by the package derives from FusePlaceError."""


class FusePlaceError(Exception):
    pass


class ConfigError(FusePlaceError, ValueError):
    """Malformed pricing, network or profile input."""


class NoTierFitsError(FusePlaceError):
    pass


class TierTooSmallError(FusePlaceError):
    pass


class MissingCloudProfileError(FusePlaceError):
    pass


class WorkflowError(FusePlaceError, ValueError):
    pass


class CyclicWorkflowError(WorkflowError):
    pass


class UnsupportedStateError(WorkflowError):
    pass


class UnreachableStateError(WorkflowError):
    pass


class InvalidPlanError(FusePlaceError, ValueError):
    pass


class MissingProfileError(FusePlaceError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class EmptyGraphError(FusePlaceError):
    pass


class NoPathError(FusePlaceError):
    pass


class TooLargeError(FusePlaceError):
    pass
