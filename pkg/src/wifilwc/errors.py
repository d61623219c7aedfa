"""Exception hierarchy shared by every layer of the simulator."""


class WifiLwcError(Exception):
    """Base class for all simulator errors."""


# --- sponge / AEAD ---

class UnsupportedWidth(WifiLwcError, ValueError):
    pass


class DataLimitExceeded(WifiLwcError):
    pass


class AuthFailure(WifiLwcError):
    """Tag verification failed; no plaintext is released."""


class PhaseError(WifiLwcError):
    """A sponge operation was called out of order."""


# --- handshake ---

class HandshakeAbort(WifiLwcError):
    """Any condition that makes a party abandon the running handshake."""


class WrongRole(HandshakeAbort):
    pass


class WrongPhase(HandshakeAbort):
    pass


class MalformedFrame(HandshakeAbort):
    pass


class MicMismatch(HandshakeAbort):
    pass


class NonceMismatch(HandshakeAbort):
    pass


class ReplayDetected(HandshakeAbort):
    pass


class KeysUnavailable(WifiLwcError):
    pass


class NotInstalled(WifiLwcError):
    pass


class OversizeInput(WifiLwcError, ValueError):
    pass


# --- modem / channel ---

class InvalidSymbol(WifiLwcError, ValueError):
    pass


class LengthMismatch(WifiLwcError, ValueError):
    pass


class NonPositiveGain(WifiLwcError, ValueError):
    pass


class NoFrame(WifiLwcError):
    pass


class ZeroPilot(WifiLwcError):
    pass


class DecodeFailure(WifiLwcError):
    pass


class EmptyBuffer(WifiLwcError, ValueError):
    pass


class DelayTooLarge(WifiLwcError, ValueError):
    pass


class InvalidM(WifiLwcError, ValueError):
    pass


# --- performance model / harness ---

class NonPositiveInput(WifiLwcError, ValueError):
    pass


class MissingEntry(WifiLwcError, KeyError):
    pass


class HandshakeFailed(WifiLwcError):
    def __init__(self, step, cause=None):
        self.step = step
        self.cause = cause
        msg = f"handshake failed at {step}"
        if cause is not None:
            msg += f": {type(cause).__name__}: {cause}"
        super().__init__(msg)


class ConfigError(WifiLwcError, ValueError):
    pass
