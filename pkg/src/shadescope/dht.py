"""XOR routing-key math: daily key rotation, storage responsibility,
service-address derivation, and target-to-service association."""

from __future__ import annotations

import datetime as dt
import hashlib
import re
from typing import Iterable, Mapping, Union

from .encoding import B32_SUFFIX, EncodingError, check_hash, hash_from_b32, hash_to_b32
from .model import Destination, hash_identity

DateLike = Union[dt.date, str]

_DATE_RE = re.compile(r"\d{8}$")


def normalize_date(date: DateLike) -> str:
    """Return the UTC calendar date as the 8-char 'yyyyMMdd' form."""
    if isinstance(date, dt.date):
        return date.strftime("%Y%m%d")
    if not _DATE_RE.fullmatch(date):
        raise ValueError(f"date must be yyyyMMdd, got {date!r}")
    dt.datetime.strptime(date, "%Y%m%d")  # reject impossible calendar dates
    return date


def daily_mod_key(date: DateLike) -> bytes:
    """SHA-256 of the 8 ASCII date bytes; rotates storage keys once per UTC day."""
    return hashlib.sha256(normalize_date(date).encode("ascii")).digest()


def xor_bytes(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def _combine(key_hash: bytes, mod_key: bytes) -> bytes:
    # Byte-wise XOR. Deployed Java routers concatenate hash||mod_key
    # before the outer digest instead; swap this one line to match them.
    return xor_bytes(key_hash, mod_key)


def routing_key(key_hash: bytes, date: DateLike) -> bytes:
    """The date-salted storage key for a 32-byte record hash."""
    check_hash(key_hash, "record hash")
    return hashlib.sha256(_combine(key_hash, daily_mod_key(date))).digest()


def xor_distance(a: bytes, b: bytes) -> int:
    """Unsigned big-endian integer value of the byte-wise XOR."""
    check_hash(a)
    check_hash(b)
    return int.from_bytes(a, "big") ^ int.from_bytes(b, "big")


def nearest_to_key(storage_key: bytes, floodfills: Iterable[bytes]) -> bytes:
    """The floodfill XOR-nearest to an already-derived storage key.

    Ties (possible only with duplicate hashes) go to the smaller hash as
    a big-endian integer, making the result order-free.
    """
    check_hash(storage_key, "storage key")
    best = min(
        (check_hash(f, "floodfill hash") for f in floodfills),
        key=lambda f: (xor_distance(f, storage_key), int.from_bytes(f, "big")),
        default=None,
    )
    if best is None:
        raise ValueError("floodfill set is empty")
    return best


def responsible_floodfill(
    key_hash: bytes, date: DateLike, floodfills: Iterable[bytes]
) -> bytes:
    """The floodfill XOR-nearest to the routing key of ``key_hash``."""
    return nearest_to_key(routing_key(key_hash, date), floodfills)


def xor_association(
    target: bytes,
    eepsites: Iterable[str],
    floodfills: Union[Mapping[bytes, object], Iterable[bytes]],
    date: DateLike,
) -> tuple[list[str], list[str]]:
    """Service addresses for which ``target`` is the responsible storage node.

    For each address, the target qualifies unless some other floodfill is
    strictly XOR-closer to the address's routing key; the target itself is
    skipped in that scan, and equal distance does not disqualify.
    Undecodable addresses are skipped and reported as warnings.

    Returns (matched addresses in input order, warnings).
    """
    check_hash(target, "target hash")
    mod_key = daily_mod_key(date)
    if isinstance(floodfills, Mapping):
        floodfills = floodfills.keys()
    others = [f for f in floodfills if f != target]
    target_int = int.from_bytes(target, "big")
    other_ints = [int.from_bytes(f, "big") for f in others]

    matched: list[str] = []
    warnings: list[str] = []
    for addr in eepsites:
        try:
            service_hash = _service_hash_from_b32(addr)
        except EncodingError as exc:
            warnings.append(f"skipping {addr!r}: {exc}")
            continue
        rk_int = int.from_bytes(
            hashlib.sha256(_combine(service_hash, mod_key)).digest(), "big"
        )
        target_dist = target_int ^ rk_int
        if all(other ^ rk_int >= target_dist for other in other_ints):
            matched.append(addr)
    return matched, warnings


def _service_hash_from_b32(addr: str) -> bytes:
    text = addr.strip()
    if text.lower().endswith(B32_SUFFIX):
        text = text[: -len(B32_SUFFIX)]
    return hash_from_b32(text)


def derive_b32(dest: Destination) -> str:
    """The canonical service address for a destination."""
    return hash_to_b32(hash_identity(dest)) + B32_SUFFIX


def decode_b32(addr: str) -> bytes:
    """Recover the 32-byte destination hash from a service address."""
    return _service_hash_from_b32(addr)
