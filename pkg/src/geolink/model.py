"""Domain types for check-in data and file ingestion/serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Union

__all__ = [
    "CheckIn",
    "AccountRecordSet",
    "Dataset",
    "GroundTruth",
    "ingest_checkins",
    "ingest_ground_truth",
    "write_checkins",
    "write_ground_truth",
]


@dataclass(frozen=True, slots=True)
class CheckIn:
    """A single check-in: an account at (lat, lng) at an epoch-second timestamp.

    Two check-ins of the same account at the same location but different
    timestamps are distinct records.
    """

    account_id: str
    lat: float
    lng: float
    timestamp: int

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lng <= 180.0:
            raise ValueError(f"longitude out of range: {self.lng}")


@dataclass(frozen=True, slots=True)
class AccountRecordSet:
    """All check-ins of one account, in source order."""

    account_id: str
    records: tuple[CheckIn, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError(f"account {self.account_id!r} has no records")
        for r in self.records:
            if r.account_id != self.account_id:
                raise ValueError(
                    f"record account {r.account_id!r} does not match {self.account_id!r}"
                )

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True, slots=True)
class Dataset:
    """Accounts of one platform, keyed by unique account id."""

    platform_label: str
    accounts: dict[str, AccountRecordSet] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.accounts)

    def record_count(self) -> int:
        return sum(len(a) for a in self.accounts.values())

    def iter_records(self) -> Iterator[CheckIn]:
        for acct in self.accounts.values():
            yield from acct.records


@dataclass(frozen=True, slots=True)
class GroundTruth:
    """Known linked account pairs (platform A id, platform B id)."""

    pairs: frozenset[tuple[str, str]]

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def identity(cls, ds: Dataset) -> "GroundTruth":
        """Self-linkage truth: every account paired with itself."""
        return cls(frozenset((a, a) for a in ds.accounts))


Source = Union[IO[bytes], IO[str], str, bytes]


def _iter_lines(source: Source) -> Iterator[str]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    for line in text.splitlines():
        yield line


def ingest_checkins(source: Source, platform_label: str) -> Dataset:
    """Parse comma-separated check-in lines `account_id,lat,lng,epoch_seconds`.

    Records are grouped by account in first-seen order; line order is kept
    within an account. Bit-identical records (same account, location, and
    timestamp) collapse to one. Empty input yields an empty dataset.

    Raises ValueError naming the 1-based line number for a malformed line,
    a wrong field count, an unparsable number, or out-of-range coordinates.
    """
    grouped: dict[str, list[CheckIn]] = {}
    seen: set[tuple[str, float, float, int]] = set()
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"expected 4 fields, got {len(parts)}, line {lineno}")
        account_id = parts[0].strip()
        if not account_id:
            raise ValueError(f"empty account id, line {lineno}")
        try:
            lat = float(parts[1])
            lng = float(parts[2])
            timestamp = int(parts[3])
        except ValueError:
            raise ValueError(f"unparsable number, line {lineno}") from None
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude out of range, line {lineno}")
        if not -180.0 <= lng <= 180.0:
            raise ValueError(f"longitude out of range, line {lineno}")
        key = (account_id, lat, lng, timestamp)
        if key in seen:
            continue
        seen.add(key)
        grouped.setdefault(account_id, []).append(
            CheckIn(account_id, lat, lng, timestamp)
        )
    accounts = {
        aid: AccountRecordSet(aid, tuple(records)) for aid, records in grouped.items()
    }
    return Dataset(platform_label, accounts)


def ingest_ground_truth(source: Source) -> GroundTruth:
    """Parse `id_a,id_b` lines into a linked-pair set; duplicates collapse.

    Pairs referencing accounts absent from the datasets are kept; evaluation
    simply never recovers them.
    """
    pairs: set[tuple[str, str]] = set()
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 2 fields, got {len(parts)}, line {lineno}")
        id_a, id_b = parts[0].strip(), parts[1].strip()
        if not id_a or not id_b:
            raise ValueError(f"empty account id, line {lineno}")
        pairs.add((id_a, id_b))
    return GroundTruth(frozenset(pairs))


def _format_float(x: float) -> str:
    return repr(float(x))


def write_checkins(ds: Dataset, sink: IO[str]) -> None:
    """Write a dataset back to the ingestion CSV schema (round-trip safe)."""
    for acct in ds.accounts.values():
        for r in acct.records:
            sink.write(
                f"{r.account_id},{_format_float(r.lat)},{_format_float(r.lng)},{r.timestamp}\n"
            )


def write_ground_truth(truth: GroundTruth, sink: IO[str]) -> None:
    for id_a, id_b in sorted(truth.pairs):
        sink.write(f"{id_a},{id_b}\n")


def dataset_from_records(platform_label: str, records: Iterable[CheckIn]) -> Dataset:
    """Group an iterable of check-ins into a Dataset, preserving order."""
    grouped: dict[str, list[CheckIn]] = {}
    for r in records:
        grouped.setdefault(r.account_id, []).append(r)
    return Dataset(
        platform_label,
        {aid: AccountRecordSet(aid, tuple(rs)) for aid, rs in grouped.items()},
    )
