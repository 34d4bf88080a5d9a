"""Directory-snapshot loading and the textual LeaseSet fixture format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .encoding import B32_SUFFIX, EncodingError, hash_from_b32, hash_from_b64, hash_to_b64
from .model import Lease, LeaseSet, RouterInfo
from .wire import DecodeError, LenientRecord, decode_router_info, lenient_extract

RECORD_GLOB = "routerInfo-*.dat"


class NetDbError(Exception):
    """Raised when a snapshot directory or fixture file cannot be read."""


@dataclass(frozen=True)
class SnapshotStats:
    total: int
    floodfill_count: int
    parse_failures: int


@dataclass(frozen=True)
class ParseFailure:
    filename: str
    error: str
    lenient: LenientRecord


@dataclass
class NetDbSnapshot:
    """All records decoded from one directory view.

    Failures are counted and carried with their lenient extraction so a
    snapshot never silently drops a file.
    """

    records: dict[bytes, RouterInfo] = field(default_factory=dict)
    source_dir: Optional[Path] = None
    failures: list[ParseFailure] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def stats(self) -> SnapshotStats:
        floodfills = sum(1 for r in self.records.values() if r.is_floodfill)
        return SnapshotStats(
            total=len(self.records) + len(self.failures),
            floodfill_count=floodfills,
            parse_failures=len(self.failures),
        )

    @property
    def floodfill_hashes(self) -> list[bytes]:
        return [h for h, r in self.records.items() if r.is_floodfill]

    def lookup(self, router_hash: bytes) -> Optional[RouterInfo]:
        return self.records.get(router_hash)

    def to_dict(self) -> dict:
        stats = self.stats
        return {
            "total": stats.total,
            "floodfill_count": stats.floodfill_count,
            "parse_failures": stats.parse_failures,
            "records": [_record_dict(r) for r in self.records.values()],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _record_dict(record: RouterInfo) -> dict:
    addresses = []
    for addr in record.addresses:
        port = addr.options.get("port")
        addresses.append(
            {
                "style": addr.style,
                "host": addr.options.get("host"),
                "port": int(port) if port and port.isdigit() else None,
            }
        )
    return {
        "hash": hash_to_b64(record.hash),
        "caps": record.caps,
        "alpha": record.alpha,
        "iota": record.iota,
        "version": record.version,
        "knownRouters": record.known_routers,
        "knownLeaseSets": record.known_leasesets,
        "addresses": addresses,
    }


def load_netdb_dir(path: Union[str, Path]) -> NetDbSnapshot:
    """Decode every routerInfo-*.dat file under ``path``.

    Strict decoding is attempted first; a failing file is counted and its
    lenient extraction retained. One bad file never affects the others.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise NetDbError(f"not a readable directory: {directory}")
    snapshot = NetDbSnapshot(source_dir=directory)
    for entry in sorted(directory.rglob(RECORD_GLOB)):
        try:
            data = entry.read_bytes()
        except OSError as exc:
            snapshot.failures.append(
                ParseFailure(entry.name, f"unreadable: {exc}", LenientRecord())
            )
            continue
        try:
            record = decode_router_info(data)
        except DecodeError as exc:
            snapshot.failures.append(
                ParseFailure(entry.name, str(exc), lenient_extract(data))
            )
            continue
        if record.hash in snapshot.records:
            snapshot.warnings.append(f"duplicate record replaced: {entry.name}")
        snapshot.records[record.hash] = record
    return snapshot


def load_leasesets(path: Union[str, Path]) -> tuple[list[LeaseSet], list[str]]:
    """Parse the one-record-per-line LeaseSet fixture format.

    Line form: ``<dest_hash_b64> <b32> <gw_b64>:<tunnel_id>:<expiry_ms>[,...]``
    The lease column may be '-' or absent for a descriptor with no leases;
    '#' starts a comment. Malformed lines become warnings, not errors.
    """
    file = Path(path)
    if not file.is_file():
        raise NetDbError(f"no such leaseset file: {file}")
    leasesets: list[LeaseSet] = []
    warnings: list[str] = []
    for lineno, raw_line in enumerate(file.read_text().splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            leasesets.append(_parse_leaseset_line(line))
        except (ValueError, EncodingError) as exc:
            warnings.append(f"line {lineno}: {exc}")
    return leasesets, warnings


def _parse_leaseset_line(line: str) -> LeaseSet:
    parts = line.split()
    if len(parts) not in (2, 3):
        raise ValueError(f"expected 2 or 3 columns, got {len(parts)}")
    dest_hash = hash_from_b64(parts[0])
    b32: Optional[str] = None
    if parts[1] != "-":
        b32 = parts[1] if parts[1].endswith(B32_SUFFIX) else parts[1] + B32_SUFFIX
        if hash_from_b32(b32[: -len(B32_SUFFIX)]) != dest_hash:
            raise ValueError("b32 column does not match destination hash")
    leases: list[Lease] = []
    if len(parts) == 3 and parts[2] != "-":
        for chunk in parts[2].split(","):
            gw_text, tunnel_id, expiry_ms = chunk.split(":")
            leases.append(
                Lease(
                    gateway=hash_from_b64(gw_text),
                    tunnel_id=int(tunnel_id),
                    expiry_ms=int(expiry_ms),
                )
            )
    return LeaseSet(destination_hash=dest_hash, b32=b32, leases=tuple(leases))


def write_leasesets(
    leasesets: list[LeaseSet], path: Union[str, Path]
) -> None:
    """Write fixtures in the format :func:`load_leasesets` parses."""
    lines = []
    for ls in leasesets:
        cols = [
            hash_to_b64(ls.destination_hash),
            ls.b32 if ls.b32 else "-",
            ",".join(
                f"{hash_to_b64(l.gateway)}:{l.tunnel_id}:{l.expiry_ms}"
                for l in ls.leases
            )
            or "-",
        ]
        lines.append(" ".join(cols))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
