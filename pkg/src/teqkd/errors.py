"""Exception and warning types shared across the package."""


class TeqkdError(Exception):
    """Base class for all package errors."""


class NonConvergence(TeqkdError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""


class DomainError(TeqkdError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DomainWarning(UserWarning):
    """A high-SNR formula was evaluated outside its range of validity."""


class BudgetExceeded(TeqkdError):
    """A Monte Carlo run hit its trial cap before collecting enough events."""


class InsufficientData(TeqkdError):
    pass


class NoBracket(TeqkdError):
    """The target rate is not reached anywhere inside the search bracket."""


class DecodeFailure(TeqkdError):
    pass


class ConstructionFailure(TeqkdError):
    pass


class ProtocolError(TeqkdError):
    pass


class VersionMismatch(ProtocolError):
    pass


class MalformedFrame(ProtocolError):
    pass


class ProtocolTimeout(ProtocolError):
    pass


class SessionAborted(ProtocolError):
    """Connection dropped mid-session; ``nonce`` and ``next_block`` allow resuming."""

    def __init__(self, message, nonce=None, next_block=0):
        super().__init__(message)
        self.nonce = nonce
        self.next_block = next_block
