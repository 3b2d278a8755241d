"""
Exception types shared by the library, the CLI and the HTTP surface.
Library code raises these; only cli.py and app.py translate them.
"""


class TwoQubitError(Exception):
    """Base class for every error raised by this package"""


class NonPhysicalStateError(TwoQubitError):
    """The Bloch-Fano triple does not describe a positive density operator"""


class DomainError(TwoQubitError, ValueError):
    """A parameter is outside the domain where a closed form is defined"""


class InvalidInputError(TwoQubitError, ValueError):
    """Malformed or inconsistent input (bad vector, non-orthogonal task, ...)"""


class DegenerateInputError(TwoQubitError):
    """The requested quantity is undefined for this input (e.g. kappa = 0)"""


class ZeroCorrelationError(TwoQubitError):
    """|nE| vanishes, so no optimal measurement direction exists"""


class DegenerateOutcomeError(TwoQubitError):
    """A measurement outcome has zero probability"""

    def __init__(self, message: str, outcome: int):
        super().__init__(message)
        self.outcome = outcome
