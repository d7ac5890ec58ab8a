"""Hop-weighted signaling ledger, savings arithmetic and CSV/TSV export."""

from __future__ import annotations

import decimal
from dataclasses import dataclass, field
from decimal import Decimal
from typing import IO, Iterable

from .akaprime import AuthTranscript, Message
from .errors import ZeroBaseline
from .netmodel import Topology, hop_distance

CSV_HEADER = "scenario,mode,seed,total_messages,total_hop_cost,savings_pct"


@dataclass(frozen=True)
class LedgerEntry:
    seq: int
    time: int
    session_id: int
    sender: str
    receiver: str
    kind: str
    hop_cost: int


@dataclass
class SignalingLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SignalingLedger) and self.entries == other.entries


def record(ledger: SignalingLedger, message: Message, topology: Topology,
           time: int = 0, session_id: int = 0) -> SignalingLedger:
    cost = hop_distance(topology, message.sender, message.receiver)
    ledger.entries.append(LedgerEntry(len(ledger.entries) + 1, time, session_id,
                                      message.sender, message.receiver,
                                      message.kind.value, cost))
    return ledger


def record_transcript(ledger: SignalingLedger, tr: AuthTranscript, topology: Topology,
                      time: int) -> SignalingLedger:
    for msg in tr.messages:
        record(ledger, msg, topology, time, tr.session_id)
    return ledger


def total_cost(ledger: SignalingLedger) -> int:
    return sum(e.hop_cost for e in ledger)


def savings_exact(baseline_cost: int, srf_cost: int) -> Decimal:
    if baseline_cost <= 0:
        raise ZeroBaseline("baseline cost must be positive")
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        return Decimal(100 * (baseline_cost - srf_cost)) / Decimal(baseline_cost)


def savings_percent(baseline_cost: int, srf_cost: int) -> Decimal:
    """``100 * (b - s) / b`` rounded half-up to two decimals."""
    return savings_exact(baseline_cost, srf_cost).quantize(Decimal("0.01"),
                                                            rounding=decimal.ROUND_HALF_UP)


@dataclass(frozen=True)
class ComparisonResult:
    baseline_cost: int
    srf_cost: int

    @property
    def savings_pct(self) -> Decimal:
        return savings_percent(self.baseline_cost, self.srf_cost)


@dataclass(frozen=True)
class RunResult:
    """One CSV row. ``savings_pct`` is set only on compare rows."""

    scenario: str
    mode: str
    seed: int
    total_messages: int
    total_hop_cost: int
    savings_pct: Decimal | None = None

    def to_row(self) -> str:
        pct = "" if self.savings_pct is None else f"{self.savings_pct:.2f}"
        return (f"{self.scenario},{self.mode},{self.seed},{self.total_messages},"
                f"{self.total_hop_cost},{pct}")


def emit_csv(results: Iterable[RunResult], sink: IO[str]) -> int:
    """Write header plus one row per result; returns bytes written."""
    text = "".join(line + "\n" for line in [CSV_HEADER, *(r.to_row() for r in results)])
    sink.write(text)
    return len(text.encode("utf-8"))


def emit_transcript_tsv(ledger: SignalingLedger, sink: IO[str]) -> int:
    """``seq<TAB>t<TAB>sender<TAB>receiver<TAB>kind`` per ledger entry."""
    text = "".join(f"{e.seq}\t{e.time}\t{e.sender}\t{e.receiver}\t{e.kind}\n"
                   for e in ledger)
    sink.write(text)
    return len(text.encode("utf-8"))
