"""Text encodings for 32-byte node and service hashes.

The overlay uses a filename-safe base64 variant ('+' -> '-', '/' -> '~')
for router hashes, and lowercase unpadded RFC 4648 base32 for service
addresses.
"""

from __future__ import annotations

import base64
import binascii
import re

HASH_LEN = 32

# 32 bytes -> 43 data chars + 1 pad char.
B64_LEN = 44

# ceil(256 / 5) base32 chars for a 32-byte digest.
B32_LEN = 52

B32_SUFFIX = ".b32.i2p"

_B64_ALTCHARS = b"-~"
_B64_RE = re.compile(r"[A-Za-z0-9\-~]{43}=?$")
_B32_RE = re.compile(r"[a-z2-7]{52}$")


class EncodingError(ValueError):
    """Raised for malformed hash text forms."""


def check_hash(value: bytes, label: str = "hash") -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != HASH_LEN:
        raise EncodingError(f"{label} must be exactly {HASH_LEN} bytes")
    return bytes(value)


def hash_to_b64(value: bytes) -> str:
    """Encode a 32-byte hash as the 44-char base64 variant (trailing '=')."""
    check_hash(value)
    return base64.b64encode(value, _B64_ALTCHARS).decode("ascii")


def hash_from_b64(text: str) -> bytes:
    """Decode the base64 variant; the trailing '=' may be omitted."""
    if not _B64_RE.fullmatch(text):
        raise EncodingError(f"not a base64-variant hash: {text!r}")
    padded = text if text.endswith("=") else text + "="
    try:
        value = base64.b64decode(padded, _B64_ALTCHARS, validate=True)
    except binascii.Error as exc:
        raise EncodingError(f"not a base64-variant hash: {text!r}") from exc
    return check_hash(value)


def hash_to_b32(value: bytes) -> str:
    """Encode a 32-byte hash as 52 lowercase base32 chars, no padding."""
    check_hash(value)
    return base64.b32encode(value).decode("ascii").rstrip("=").lower()


def hash_from_b32(text: str) -> bytes:
    """Decode 52 base32 chars; mixed case accepted, suffix not handled here."""
    folded = text.lower()
    if len(folded) != B32_LEN:
        raise EncodingError(
            f"base32 hash must be {B32_LEN} chars, got {len(folded)}"
        )
    if not _B32_RE.fullmatch(folded):
        raise EncodingError(f"not a base32 hash: {text!r}")
    # 52 chars carry 260 bits; pad to the 56-char block base32 expects.
    value = base64.b32decode(folded.upper() + "====")
    return check_hash(value)


def parse_hash_text(text: str) -> bytes:
    """Parse a hash given as hex, the base64 variant, or base32 (b32 suffix ok)."""
    candidate = text.strip()
    lowered = candidate.lower()
    if lowered.endswith(B32_SUFFIX):
        candidate = candidate[: -len(B32_SUFFIX)]
        lowered = candidate.lower()
    if len(candidate) == 2 * HASH_LEN and re.fullmatch(r"[0-9a-fA-F]+", candidate):
        return bytes.fromhex(candidate)
    if len(candidate) in (B64_LEN - 1, B64_LEN):
        return hash_from_b64(candidate)
    if len(candidate) == B32_LEN:
        return hash_from_b32(lowered)
    raise EncodingError(f"unrecognized hash form: {text!r}")
