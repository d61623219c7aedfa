"""Lightweight-AEAD Wi-Fi handshake over a simulated OFDM link."""

from .errors import WifiLwcError
from .handshake import (PartyState, Role, auth_start, authenticator_on_msg2, authenticator_on_msg4,
                        protect, supplicant_on_msg1, supplicant_on_msg3, unprotect)
from .ofdm_rx import receive_frame
from .ofdm_tx import IqBuffer, Modulation, TaggedPayload, tag_stream, transmit_frame
from .sponge import SCHEMES, AeadParams, aead_decrypt, aead_encrypt, get_spec, kdf, mic

__version__ = "0.1.0"

__all__ = [
    "AeadParams", "IqBuffer", "Modulation", "PartyState", "Role", "SCHEMES", "TaggedPayload",
    "WifiLwcError", "aead_decrypt", "aead_encrypt", "auth_start", "authenticator_on_msg2",
    "authenticator_on_msg4", "get_spec", "kdf", "mic", "protect", "receive_frame",
    "supplicant_on_msg1", "supplicant_on_msg3", "tag_stream", "transmit_frame", "unprotect",
]
