"""Deterministic synthetic-overlay generator and probe-experiment engine.

A generated network is fully reproducible from its spec and seed: router
identities, capability profiles, floodfill knowledge placement, and
probe experiments all derive from one seeded RNG. Records for published
routers are stored on the k floodfills XOR-nearest to their routing key
for the generation date, so probe behavior mirrors the real placement
rule.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from math import floor
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .classify import ShadeReport, classify
from .dht import DateLike, normalize_date, routing_key
from .encoding import hash_to_b64, hash_from_b64
from .model import (
    Destination,
    RouterInfo,
    Shade,
    TransportAddress,
    hash_identity,
    shade_for_level,
)
from .protocol import ProbePlan, ProbeTransportError, classify_remote
from .wire import KNOWN_STYLES, encode_router_info

EPOCH_2025_MS = 1_735_689_600_000
_VERSIONS = ("0.9.67", "0.9.68", "2.12.0")
_HIGH_BW = "NOPX"
_LOW_BW = "KLM"


class InfeasibleSpecError(ValueError):
    """The network spec cannot be realized (bad fractions, missing mass)."""


@dataclass(frozen=True)
class NetworkSpec:
    """Generation parameters. shade_distribution maps levels "1".."8" to
    fractions of n_routers; level "1" may be omitted and is then implied
    by floodfill_fraction."""

    n_routers: int
    floodfill_fraction: float
    shade_distribution: dict
    k: int = 4
    seed: int = 0
    date: str = "20250101"

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "NetworkSpec":
        raw = json.loads(Path(path).read_text())
        known = {"n_routers", "floodfill_fraction", "shade_distribution", "k", "seed", "date"}
        unknown = set(raw) - known
        if unknown:
            raise InfeasibleSpecError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class SimRouter:
    hash: bytes
    identity: Destination
    shade: Shade
    record: Optional[RouterInfo]


@dataclass
class NetworkModel:
    """Ground truth for one generated overlay."""

    spec: NetworkSpec
    routers: dict[bytes, SimRouter]
    published: tuple[bytes, ...]
    floodfills: tuple[bytes, ...]
    exclusive: frozenset[bytes]
    knowledge: dict[bytes, frozenset[bytes]]

    @property
    def seed(self) -> int:
        return self.spec.seed

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def date(self) -> str:
        return self.spec.date


@dataclass(frozen=True)
class VisibilityMetrics:
    rho: float
    xi: float


@dataclass(frozen=True)
class HitCurve:
    """Cumulative directory hits per probe checkpoint for one target."""

    target: bytes
    points: tuple[tuple[int, int], ...]
    report: Optional[ShadeReport] = None


def _allocate_counts(spec: NetworkSpec) -> dict[int, int]:
    """Largest-remainder allocation of router counts per shade level."""
    n = spec.n_routers
    if n < 1:
        raise InfeasibleSpecError("n_routers must be >= 1")
    if not 0.0 <= spec.floodfill_fraction <= 1.0:
        raise InfeasibleSpecError("floodfill_fraction must lie in [0, 1]")
    fractions: dict[int, float] = {}
    for key, value in spec.shade_distribution.items():
        level = int(key)
        if not 1 <= level <= 8:
            raise InfeasibleSpecError(f"shade level out of range: {key}")
        if value < 0:
            raise InfeasibleSpecError(f"negative fraction for shade {key}")
        fractions[level] = float(value)
    if 1 not in fractions:
        fractions[1] = spec.floodfill_fraction
    total = sum(fractions.values())
    if abs(total - 1.0) > 1e-9:
        raise InfeasibleSpecError(f"shade distribution sums to {total}, expected 1")

    counts: dict[int, int] = {}
    remainders: list[tuple[float, int]] = []
    for level in sorted(fractions):
        ideal = fractions[level] * n
        nearest = round(ideal)
        if abs(ideal - nearest) < 1e-6:  # snap float dust on exact c/n fractions
            counts[level] = nearest
            remainders.append((0.0, level))
        else:
            counts[level] = floor(ideal)
            remainders.append((ideal - counts[level], level))
    shortfall = n - sum(counts.values())
    if shortfall < 0:
        raise InfeasibleSpecError("distribution allocates more routers than n")
    for _, level in sorted(remainders, key=lambda rl: (-rl[0], rl[1]))[:shortfall]:
        counts[level] += 1

    expected_ff = floor(spec.floodfill_fraction * n + 0.5 + 1e-9)
    if counts.get(1, 0) == 0 and expected_ff > 0:
        raise InfeasibleSpecError("floodfills requested but no shade-1 mass")
    if abs(counts.get(1, 0) - spec.floodfill_fraction * n) > 1.0 + 1e-6:
        raise InfeasibleSpecError(
            "floodfill_fraction inconsistent with shade-1 distribution mass"
        )
    return counts


def _synth_identity(rng: random.Random) -> Destination:
    # Null certificate: 387 bytes total.
    return Destination(rng.randbytes(384) + b"\x00\x00\x00")


def _direct_address(rng: random.Random) -> TransportAddress:
    host = f"10.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"
    return TransportAddress(
        style=rng.choice(("NTCP2", "SSU2")),
        cost=rng.randint(5, 14),
        options={"host": host, "port": str(rng.randint(9000, 30999))},
    )


def _introducer_address(rng: random.Random) -> TransportAddress:
    return TransportAddress(
        style="SSU2",
        cost=5,
        options={
            "ih0": hash_to_b64(rng.randbytes(32)),
            "itag0": str(rng.randint(1, 2**31)),
        },
    )


def synth_record(rng: random.Random, shade_level: int) -> RouterInfo:
    """A record whose capability profile classifies exactly to ``shade_level``."""
    if not 1 <= shade_level <= 7:
        raise ValueError("only shades 1-7 publish records")
    if shade_level == 1:
        caps = rng.choice(_HIGH_BW) + "fR"
        addresses = [_direct_address(rng)]
    elif shade_level == 2:
        caps = rng.choice(_HIGH_BW) + "R"
        addresses = [_direct_address(rng)]
    elif shade_level == 3:
        caps = rng.choice(_LOW_BW) + "R"
        addresses = [_direct_address(rng)]
    elif shade_level == 4:
        caps = rng.choice(_LOW_BW + _HIGH_BW) + "U"
        addresses = [_direct_address(rng)]
    elif shade_level == 5:
        caps = rng.choice(_LOW_BW) + "U"
        addresses = [_introducer_address(rng)]
    elif shade_level == 6:
        caps = rng.choice(_LOW_BW) + "H"
        addresses = []
    else:
        caps = rng.choice(_LOW_BW)
        addresses = []
    options = {"caps": caps, "router.version": rng.choice(_VERSIONS)}
    if shade_level == 1:
        options["netdb.knownRouters"] = str(rng.randint(500, 9000))
        options["netdb.knownLeaseSets"] = str(rng.randint(0, 400))
    identity = _synth_identity(rng)
    record = RouterInfo(
        hash=hash_identity(identity),
        identity=identity,
        published_ms=EPOCH_2025_MS + rng.randint(0, 86_400_000),
        addresses=tuple(addresses),
        options=options,
        signature=rng.randbytes(64),
    )
    assert classify(record.profile()).level == shade_level
    return record


def generate_network(spec: NetworkSpec) -> NetworkModel:
    """Build the full ground-truth model for a spec, deterministically."""
    normalize_date(spec.date)
    if spec.k < 1:
        raise InfeasibleSpecError("replication k must be >= 1")
    counts = _allocate_counts(spec)
    rng = random.Random(spec.seed)

    levels: list[int] = []
    for level in sorted(counts):
        levels.extend([level] * counts[level])
    rng.shuffle(levels)

    routers: dict[bytes, SimRouter] = {}
    published: list[bytes] = []
    floodfills: list[bytes] = []
    exclusive: list[bytes] = []
    for level in levels:
        if level == 8:
            identity = _synth_identity(rng)
            router = SimRouter(
                hash=hash_identity(identity),
                identity=identity,
                shade=shade_for_level(8),
                record=None,
            )
            exclusive.append(router.hash)
        else:
            record = synth_record(rng, level)
            router = SimRouter(
                hash=record.hash,
                identity=record.identity,
                shade=shade_for_level(level),
                record=record,
            )
            published.append(router.hash)
            if level == 1:
                floodfills.append(router.hash)
        routers[router.hash] = router

    knowledge = _assign_knowledge(published, floodfills, spec.k, spec.date)
    return NetworkModel(
        spec=spec,
        routers=routers,
        published=tuple(published),
        floodfills=tuple(floodfills),
        exclusive=frozenset(exclusive),
        knowledge=knowledge,
    )


def _assign_knowledge(
    published: Sequence[bytes],
    floodfills: Sequence[bytes],
    k: int,
    date: DateLike,
) -> dict[bytes, frozenset[bytes]]:
    """Store each published record on the k floodfills nearest its routing key.

    The scan prefilters on the top 8 distance bytes with numpy, then
    resolves the boundary exactly with full 256-bit comparisons.
    """
    stored: dict[bytes, set[bytes]] = {f: set() for f in floodfills}
    if floodfills and published:
        kk = min(k, len(floodfills))
        ff64 = np.array(
            [int.from_bytes(f[:8], "big") for f in floodfills], dtype=np.uint64
        )
        ff_ints = [int.from_bytes(f, "big") for f in floodfills]
        for record_hash in published:
            rk = routing_key(record_hash, date)
            prefix = np.uint64(int.from_bytes(rk[:8], "big"))
            top8 = ff64 ^ prefix
            boundary = np.partition(top8, kk - 1)[kk - 1]
            candidates = np.nonzero(top8 <= boundary)[0]
            rk_int = int.from_bytes(rk, "big")
            nearest = sorted(
                candidates, key=lambda i: (ff_ints[i] ^ rk_int, ff_ints[i])
            )[:kk]
            for i in nearest:
                stored[floodfills[i]].add(record_hash)
    return {f: frozenset(s) for f, s in stored.items()}


def completeness_metrics(model: NetworkModel) -> VisibilityMetrics:
    """Observable completeness ratio and its complement.

    Both ratios are computed directly from the integer counts so each is
    the correctly rounded value of its exact fraction.
    """
    total = len(model.routers)
    if total == 0:
        raise ValueError("model has no routers")
    published = len(model.published)
    return VisibilityMetrics(rho=published / total, xi=(total - published) / total)


class SimulatedSource:
    """Directory source backed by a generated model.

    The console view starts from ``console_hashes`` and grows as probed
    floodfills contribute their stored records, which is the only way an
    initially unknown record can become visible.
    """

    def __init__(
        self,
        model: NetworkModel,
        local_hashes: Iterable[bytes] = (),
        console_hashes: Iterable[bytes] = (),
        failure_rate: float = 0.0,
        rng: Optional[random.Random] = None,
    ):
        self._model = model
        self._local = frozenset(local_hashes)
        self._visible = set(console_hashes)
        self._failure_rate = failure_rate
        self._rng = rng if rng is not None else random.Random(0)

    def _record(self, router_hash: bytes) -> Optional[RouterInfo]:
        router = self._model.routers.get(router_hash)
        return router.record if router else None

    def lookup_local(self, router_hash: bytes) -> Optional[RouterInfo]:
        return self._record(router_hash) if router_hash in self._local else None

    def lookup_console(self, router_hash: bytes) -> Optional[RouterInfo]:
        return self._record(router_hash) if router_hash in self._visible else None

    def probe_floodfill(self, floodfill: bytes) -> None:
        stored = self._model.knowledge.get(floodfill)
        if stored is None:
            raise ProbeTransportError("probed hash is not a floodfill")
        if self._failure_rate and self._rng.random() < self._failure_rate:
            raise ProbeTransportError("injected probe failure")
        self._visible |= stored


def run_probe_experiment(
    model: NetworkModel,
    targets: Sequence[bytes],
    plan: ProbePlan,
    local_hashes: Iterable[bytes] = (),
    failure_rate: float = 0.0,
    failure_seed: int = 0,
) -> list[HitCurve]:
    """Classify each target against a fresh simulated source.

    Every batch boundary contributes one curve point; a run that ends
    before any probe ran contributes the single point (0, hits).
    """
    floodfill_set = set(model.floodfills)
    for f in plan.floodfills:
        if f not in floodfill_set:
            raise ValueError("plan includes a hash outside the model's floodfills")
    curves: list[HitCurve] = []
    for target in targets:
        if target not in model.routers:
            raise ValueError(f"target not in model: {hash_to_b64(target)}")
        source = SimulatedSource(
            model,
            local_hashes=local_hashes,
            failure_rate=failure_rate,
            rng=random.Random(failure_seed),
        )
        points: list[tuple[int, int]] = []
        report = classify_remote(
            target, source, plan, checkpoint=lambda used, hits: points.append((used, hits))
        )
        if not points:
            points = [(0, 0 if report.shade is None or report.shade.level == 8 else 1)]
        curves.append(HitCurve(target=target, points=tuple(points), report=report))
    return curves


def export_curves(curves: Sequence[HitCurve], path: Union[str, Path]) -> None:
    """CSV rows target,cumulative_probes,hits ordered by target then probes."""
    if not curves:
        raise ValueError("no curves to export")
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "cumulative_probes", "hits"])
        for curve in sorted(curves, key=lambda c: hash_to_b64(c.target)):
            for probes, hits in curve.points:
                writer.writerow([hash_to_b64(curve.target), probes, hits])


def load_curves(path: Union[str, Path]) -> list[HitCurve]:
    """Inverse of :func:`export_curves` (reports are not persisted)."""
    grouped: dict[bytes, list[tuple[int, int]]] = {}
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            target = hash_from_b64(row["target"])
            grouped.setdefault(target, []).append(
                (int(row["cumulative_probes"]), int(row["hits"]))
            )
    return [HitCurve(target=t, points=tuple(p)) for t, p in grouped.items()]


def write_fixture_corpus(
    directory: Union[str, Path],
    n: int = 100,
    floodfill_count: int = 48,
    seed: int = 7,
) -> list[RouterInfo]:
    """Write a deterministic record corpus as routerInfo-<b64>.dat files."""
    if floodfill_count > n:
        raise ValueError("floodfill_count exceeds corpus size")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    records = []
    for i in range(n):
        level = 1 if i < floodfill_count else 2 + (i - floodfill_count) % 6
        records.append(synth_record(rng, level))
    for record in records:
        name = f"routerInfo-{hash_to_b64(record.hash)}.dat"
        (out / name).write_bytes(encode_router_info(record))
    return records


def random_record(rng: random.Random) -> RouterInfo:
    """A layout-diverse random record for codec round-trip testing."""
    if rng.random() < 0.3:
        identity = Destination(
            rng.randbytes(384) + b"\x05" + (4).to_bytes(2, "big") + rng.randbytes(4)
        )
    else:
        identity = _synth_identity(rng)
    addresses = []
    for _ in range(rng.randint(0, 3)):
        kind = rng.random()
        if kind < 0.4:
            addresses.append(_direct_address(rng))
        elif kind < 0.7:
            addresses.append(_introducer_address(rng))
        else:
            addresses.append(
                TransportAddress(
                    style=rng.choice(KNOWN_STYLES),
                    cost=rng.randint(0, 255),
                    expiration_ms=rng.choice((0, EPOCH_2025_MS)),
                    options=_random_options(rng),
                )
            )
    options: dict[str, str] = {}
    if rng.random() < 0.9:
        letters = "fHRU" + "KLMNOPX"
        options["caps"] = "".join(
            rng.sample(letters, rng.randint(0, min(4, len(letters))))
        )
    if rng.random() < 0.8:
        options["router.version"] = rng.choice(_VERSIONS)
    if rng.random() < 0.3:
        options["netdb.knownRouters"] = str(rng.randint(0, 10_000))
    if rng.random() < 0.3:
        options["netdb.knownLeaseSets"] = str(rng.randint(0, 500))
    options.update(_random_options(rng))
    return RouterInfo(
        hash=hash_identity(identity),
        identity=identity,
        published_ms=rng.randint(0, 2**48),
        addresses=tuple(addresses),
        options=options,
        signature=rng.randbytes(rng.randint(0, 80)),
    )


_OPTION_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789.-_=;: "


def _random_options(rng: random.Random) -> dict[str, str]:
    # Keys stay clear of the option names the lenient extractor targets.
    out = {}
    for _ in range(rng.randint(0, 3)):
        key = "x" + "".join(rng.choices("abcdefghijklmnopqrstuvwxyz", k=rng.randint(1, 8)))
        value = "".join(rng.choices(_OPTION_CHARS, k=rng.randint(0, 20)))
        out[key] = value
    return out
