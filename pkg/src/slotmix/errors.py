"""Exception types raised across the package."""


class SlotmixError(Exception):
    pass


class InvalidArgument(SlotmixError, ValueError):
    pass


class NoPartnerError(InvalidArgument):
    """Long-range distance too short for any partner tile to exist."""


class DegenerateVertexError(SlotmixError):
    """A vertex has no neighbours, so the natural walk is undefined there."""


class DisconnectedGraphError(SlotmixError):
    """Stationary distribution is not unique on a disconnected graph."""


class ConvergenceError(SlotmixError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SizeLimitError(SlotmixError):
    pass


class SearchFailure(SlotmixError):
    pass


class ConfigError(SlotmixError):
    pass
