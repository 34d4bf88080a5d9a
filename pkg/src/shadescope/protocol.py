"""Multi-source shade classification and the LeaseSet gateway scan.

The classification run checks a local directory view, then a console
cache, then expands the console view by probing floodfills in batches,
re-checking the target after each batch. The first retrieval
short-circuits to capability classification; full exhaustion with no
retrieval yields level 8.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Optional, Protocol, Sequence, Union

from .classify import Evidence, EvidenceSource, ShadeReport, classify, profile_diagnostics
from .encoding import check_hash, hash_to_b64
from .model import CapabilityProfile, LeaseSet, RouterInfo, SHADE_EXCLUSIVE

# A gateway match is evidence of routing participation, not hosting.
GATEWAY_SCAN_NOTE = "routing participation, not hosting"

CONSOLE_HOST = "127.0.0.1"
CONSOLE_PORT = 7657


class ProbeTransportError(Exception):
    """A floodfill probe could not be delivered or answered."""


class NetDbSource(Protocol):
    """Pluggable record source: local view, console cache, probe effect."""

    def lookup_local(self, router_hash: bytes) -> Optional[RouterInfo]: ...

    def lookup_console(self, router_hash: bytes) -> Optional[RouterInfo]: ...

    def probe_floodfill(self, floodfill: bytes) -> None:
        """Expand the console view with the floodfill's stored records.

        Raises :class:`ProbeTransportError` when the probe cannot complete.
        """
        ...


def console_query_url(
    router_hash: bytes, host: str = CONSOLE_HOST, port: int = CONSOLE_PORT
) -> str:
    """Request format used by a live console source."""
    return f"http://{host}:{port}/netdb?r={hash_to_b64(router_hash)}"


class SnapshotSource:
    """Static source over loaded snapshots; it has no probe transport."""

    def __init__(self, local, console=None):
        self._local = local
        self._console = console

    def lookup_local(self, router_hash: bytes) -> Optional[RouterInfo]:
        return self._local.lookup(router_hash) if self._local else None

    def lookup_console(self, router_hash: bytes) -> Optional[RouterInfo]:
        return self._console.lookup(router_hash) if self._console else None

    def probe_floodfill(self, floodfill: bytes) -> None:
        raise ProbeTransportError("snapshot source has no probe transport")


@dataclass(frozen=True)
class ProbePlan:
    """Ordered floodfill probe schedule, consumed in fixed batches."""

    floodfills: tuple[bytes, ...]
    batch_size: int = 5
    max_probes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")
        if self.max_probes is not None and self.max_probes < 0:
            raise ValueError("max_probes must be non-negative")
        for f in self.floodfills:
            check_hash(f, "planned floodfill")

    @property
    def probe_limit(self) -> int:
        if self.max_probes is None:
            return len(self.floodfills)
        return min(self.max_probes, len(self.floodfills))

    def batches(self) -> Iterator[tuple[bytes, ...]]:
        limit = self.probe_limit
        for start in range(0, limit, self.batch_size):
            yield self.floodfills[start : min(start + self.batch_size, limit)]


class ProbeResult(Enum):
    OK = "ok"
    FAILED = "failed"


@dataclass(frozen=True)
class ProbeLogEntry:
    index: int
    floodfill: bytes
    result: ProbeResult


def classify_remote(
    subject: bytes,
    source: NetDbSource,
    plan: ProbePlan,
    checkpoint: Optional[Callable[[int, int], None]] = None,
) -> ShadeReport:
    """Run the full multi-source classification of one router hash.

    ``checkpoint`` is called after each probe batch with
    (cumulative probes, hits so far); experiment drivers use it to sample
    hit curves. The returned report carries per-probe log entries in
    ``report.probe_log``.

    A run whose every attempted probe failed is inconclusive (shade None)
    rather than level 8: absence cannot be certified from missing evidence.
    """
    check_hash(subject, "subject hash")
    evidence: list[Evidence] = []
    log: list[ProbeLogEntry] = []

    record = source.lookup_local(subject)
    evidence.append(Evidence(EvidenceSource.LOCAL_NETDB, record is not None))
    if record is not None:
        return _hit_report(subject, record, evidence, log, 0, 0)

    record = source.lookup_console(subject)
    evidence.append(Evidence(EvidenceSource.CONSOLE_CACHE, record is not None))
    if record is not None:
        return _hit_report(subject, record, evidence, log, 0, 0)

    probes_used = 0
    failed = 0
    for batch in plan.batches():
        for floodfill in batch:
            probes_used += 1
            try:
                source.probe_floodfill(floodfill)
                log.append(ProbeLogEntry(probes_used, floodfill, ProbeResult.OK))
            except ProbeTransportError:
                failed += 1
                log.append(ProbeLogEntry(probes_used, floodfill, ProbeResult.FAILED))
        record = source.lookup_console(subject)
        if checkpoint is not None:
            checkpoint(probes_used, 1 if record is not None else 0)
        if record is not None:
            evidence.append(
                Evidence(EvidenceSource.FLOODFILL_PROBE, True, probes_used)
            )
            return _hit_report(subject, record, evidence, log, probes_used, failed)

    evidence.append(Evidence(EvidenceSource.FLOODFILL_PROBE, False, probes_used))
    if probes_used > 0 and failed == probes_used:
        shade = None  # inconclusive: no probe ever answered
    else:
        shade = SHADE_EXCLUSIVE
    return ShadeReport(
        subject=subject,
        shade=shade,
        evidence=tuple(evidence),
        probes_used=probes_used,
        failed_probes=failed,
        probe_log=tuple(log),
    )


def _hit_report(
    subject: bytes,
    record: RouterInfo,
    evidence: list[Evidence],
    log: list[ProbeLogEntry],
    probes_used: int,
    failed: int,
) -> ShadeReport:
    profile = CapabilityProfile.from_record(record)
    return ShadeReport(
        subject=subject,
        shade=classify(profile),
        evidence=tuple(evidence),
        profile=profile,
        caps=record.caps,
        probes_used=probes_used,
        failed_probes=failed,
        diagnostics=tuple(profile_diagnostics(profile)),
        probe_log=tuple(log),
    )


def shade8_certificate(report: ShadeReport) -> bool:
    """True only for a conclusive level-8 report with zero failed probes.

    The certificate is the full conjunction: local miss, console miss,
    and a miss from every probed floodfill. Any failed probe leaves the
    evidence incomplete, so no certificate is issued.
    """
    return (
        report.shade is not None
        and report.shade.level == 8
        and report.failed_probes == 0
    )


class MatchKind(Enum):
    EXACT_HASH = "ExactHash"
    PREFIX = "Prefix"


@dataclass(frozen=True)
class GatewayMatch:
    leaseset: LeaseSet
    lease_index: int
    match_kind: MatchKind

    @property
    def note(self) -> str:
        return GATEWAY_SCAN_NOTE


def gateway_scan(
    target: bytes, leasesets: Sequence[LeaseSet]
) -> list[GatewayMatch]:
    """Find leases whose gateway equals the target hash (or prefix).

    A 32-byte target matches exactly; 4 to 31 bytes match as a prefix.
    Matches indicate routing participation only, never hosting, and must
    not feed a shade verdict.
    """
    if not 4 <= len(target) <= 32:
        raise ValueError("target must be a 32-byte hash or a prefix of >= 4 bytes")
    if len(target) == 32:
        kind, hit = MatchKind.EXACT_HASH, lambda gw: gw == target
    else:
        kind, hit = MatchKind.PREFIX, lambda gw: gw.startswith(target)
    matches = []
    for ls in leasesets:
        for idx, lease in enumerate(ls.leases):
            if hit(lease.gateway):
                matches.append(GatewayMatch(ls, idx, kind))
    return matches


def write_probe_log(report: ShadeReport, path: Union[str, Path]) -> None:
    """Write the per-probe CSV log: probe_index,floodfill_b64,result."""
    entries = getattr(report, "probe_log", ())
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["probe_index", "floodfill_b64", "result"])
        for entry in entries:
            writer.writerow(
                [entry.index, hash_to_b64(entry.floodfill), entry.result.value]
            )
