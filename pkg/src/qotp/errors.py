"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"linalg.NoSuchRegister"``)
so that the command line can surface machine-readable failures.
"""


class QOTPError(Exception):
    module = "qotp"

    @property
    def code(self) -> str:
        return f"{self.module}.{type(self).__name__}"


# linalg
class LinalgError(QOTPError):
    module = "linalg"


class NameCollision(LinalgError):
    pass


class NoSuchRegister(LinalgError):
    pass


class ShapeError(LinalgError):
    pass


class NotHermitian(LinalgError):
    pass


class NotUnitary(LinalgError):
    pass


class InvalidState(LinalgError):
    pass


# entropy
class EntropyError(QOTPError):
    module = "entropy"


class PartitionError(EntropyError):
    pass


class NotStochastic(EntropyError):
    pass


class InvalidEnsemble(EntropyError):
    pass


# channels
class ChannelError(QOTPError):
    module = "channels"


class BadDimension(ChannelError):
    pass


class NotSymmetric(ChannelError):
    pass


class NotCPTP(ChannelError):
    pass


# protocols
class ProtocolError(QOTPError):
    module = "protocols"


class KeyLengthError(ProtocolError):
    pass


class ResourceExhausted(ProtocolError):
    pass


class EnsembleMismatch(ProtocolError):
    pass


class LedgerViolation(ProtocolError):
    pass


# cli
class CLIError(QOTPError):
    module = "cli"


class ConfigError(CLIError):
    pass


class ParseError(CLIError):
    pass
