"""Exception hierarchy.

Every failure class the protocol can report has its own type so callers
(and the attack harness) can tell a stale timestamp from a forged token.
The four top-level groups map onto the CLI exit codes.
"""


class MecAuthError(Exception):
    """Base class for all package errors."""

    exit_code = 1


# -- configuration / registry ------------------------------------------------

class ConfigError(MecAuthError):
    exit_code = 2


class RegistryError(ConfigError):
    pass


class DuplicateIdentityError(RegistryError):
    pass


class EmptyIdentityError(RegistryError):
    pass


class UnknownSIDError(RegistryError):
    """No directory record matches the pseudo-identity."""


# -- crypto / encoding -------------------------------------------------------

class CryptoError(MecAuthError):
    exit_code = 3


class MalformedPointError(CryptoError):
    pass


class CodecError(CryptoError):
    pass


class TruncatedFrameError(CodecError):
    pass


class LengthMismatchError(CodecError):
    pass


class UnknownTypeError(CodecError):
    pass


# -- handshake ---------------------------------------------------------------

class ProtocolError(MecAuthError):
    exit_code = 4


class StaleTimestampError(ProtocolError):
    pass


class ReplayedMessageError(ProtocolError):
    pass


class ScalarOutOfRangeError(ProtocolError):
    """Unmasked pseudo-identity is not a valid scalar (tampering signal)."""


class TokenMismatchError(ProtocolError):
    pass


class UnexpectedMessageError(ProtocolError):
    """Message does not fit the current state of the session."""


# -- cost model --------------------------------------------------------------

class CostModelError(MecAuthError):
    exit_code = 2


class InputsMissingError(CostModelError):
    pass


class MissingSizeError(CostModelError):
    pass


class UnderdeterminedError(CostModelError):
    pass


class OverdeterminedError(CostModelError):
    pass


class ClaimViolation(MecAuthError):
    exit_code = 5


def error_name(exc: BaseException) -> str:
    """Stable short name used in reports, e.g. ``StaleTimestampError`` -> ``stale-timestamp``."""
    name = type(exc).__name__
    for suffix in ("Error", "Violation"):
        if name.endswith(suffix) and name != suffix:
            name = name[: -len(suffix)]
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i and not name[i - 1].isupper():
            out.append("-")
        elif ch.isupper() and i and i + 1 < len(name) and name[i + 1].islower() and name[i - 1].isupper():
            out.append("-")
        out.append(ch.lower())
    return "".join(out)
