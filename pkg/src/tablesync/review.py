"""Persistent review queue for edit proposals.

Editors inspect pending proposals, attach a citation, and accept or reject;
nothing is ever applied without an accepting decision.  Persistence is an
append-only JSON-lines journal replayed into memory on open and compacted on
start, so records survive restarts byte-identically and the whole history
stays diffable.
"""

from __future__ import annotations

import datetime as _dt
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConflictError, ValidationError
from .rules import EditProposal

STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"

# Reporting buckets by edit type; merged-row replacements count as transfers.
EDIT_TYPE_BUCKETS = {
    "RowAddition": "Row Transfer",
    "RowDelete": "Row Transfer",
    "ValueSubstitute": "Value Substitution",
    "ValueAddition": "Append Value",
}


def direction_class(source_lang: str, target_lang: str) -> str:
    """One of the three reporting flows: en->x, x->en, or x->y."""
    if source_lang == "en":
        return "en->x"
    if target_lang == "en":
        return "x->en"
    return "x->y"


@dataclass
class Citation:
    url: str
    note: str = ""

    def to_json(self) -> dict:
        return {"url": self.url, "note": self.note}


@dataclass
class ProposalRecord:
    proposal: EditProposal
    status: str = STATUS_PENDING
    citation: Citation | None = None
    reviewer: str = ""
    created_at: str = ""
    decided_at: str | None = None
    exported: bool = False
    description: str = ""

    def to_json(self) -> dict:
        return {
            "proposal": self.proposal.to_json(),
            "status": self.status,
            "citation": self.citation.to_json() if self.citation else None,
            "reviewer": self.reviewer,
            "created_at": self.created_at,
            "decided_at": self.decided_at,
            "exported": self.exported,
            "description": self.description,
        }

    @classmethod
    def from_json(cls, record: dict) -> "ProposalRecord":
        citation = record.get("citation")
        return cls(
            proposal=EditProposal.from_json(record["proposal"]),
            status=record["status"],
            citation=Citation(**citation) if citation else None,
            reviewer=record.get("reviewer", ""),
            created_at=record.get("created_at", ""),
            decided_at=record.get("decided_at"),
            exported=bool(record.get("exported", False)),
            description=record.get("description", ""),
        )


def render_description(proposal: EditProposal, source_url: str) -> str:
    """Reviewer-facing summary: source page, the exact rows touched, and a
    slot for the citation the reviewer must supply."""
    if not source_url:
        raise ValidationError("a source page URL is required")
    lines = [
        f"Source page: {source_url}",
        f"Change type: {proposal.edit_type} ({proposal.rule})",
        f"Direction: {proposal.direction}",
    ]
    new = proposal.new_content
    if isinstance(new, dict):
        lines.append(f"Row key: {new.get('key', '')}")
        lines.append(f"New row values: {', '.join(new.get('values', []))}")
    else:
        lines.append(f"New values: {', '.join(new)}")
    if proposal.old_content:
        old = proposal.old_content
        if isinstance(old, list) and old and isinstance(old[0], dict):
            for row in old:
                lines.append(f"Replaces row: {row['key']}: {', '.join(row['values'])}")
        else:
            lines.append(f"Old values: {', '.join(old)}")
    lines.append(f"Source language: {proposal.source_lang}")
    lines.append("Citation: (reviewer attaches before accepting)")
    return "\n".join(lines)


@dataclass
class AcceptanceStats:
    """Accept/reject tallies per bucket plus the overall line."""

    by_type: dict[str, dict] = field(default_factory=dict)
    by_direction: dict[str, dict] = field(default_factory=dict)
    total: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "by_type": self.by_type,
            "by_direction": self.by_direction,
            "total": self.total,
        }


def _bucket() -> dict:
    return {"total": 0, "accepted": 0, "rejected": 0, "pending": 0, "rate": None}


def _tally(bucket: dict, record: ProposalRecord) -> None:
    bucket["total"] += 1
    if record.status == STATUS_ACCEPTED:
        bucket["accepted"] += 1
    elif record.status == STATUS_REJECTED:
        bucket["rejected"] += 1
    else:
        bucket["pending"] += 1


def _finish(bucket: dict) -> None:
    decided = bucket["accepted"] + bucket["rejected"]
    bucket["rate"] = round(100.0 * bucket["accepted"] / decided, 2) if decided else None


class ReviewQueue:
    """Journal-backed proposal store with a single-transition state machine."""

    def __init__(self, journal_path: str | Path | None = None, compact: bool = True):
        self._path = Path(journal_path) if journal_path else None
        self._records: dict[str, ProposalRecord] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()
        if self._path and self._path.exists():
            self._replay()
            if compact:
                self._compact()

    def _replay(self) -> None:
        for line in self._path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            op = entry["op"]
            if op == "enqueue":
                record = ProposalRecord.from_json(entry["record"])
                if record.proposal.id not in self._records:
                    self._order.append(record.proposal.id)
                self._records[record.proposal.id] = record
            elif op == "decide":
                record = self._records[entry["id"]]
                record.status = entry["status"]
                record.reviewer = entry["reviewer"]
                record.decided_at = entry["decided_at"]
                citation = entry.get("citation")
                record.citation = Citation(**citation) if citation else None
            elif op == "export":
                for record_id in entry["ids"]:
                    self._records[record_id].exported = True

    def _compact(self) -> None:
        with open(self._path, "w", encoding="utf-8") as fh:
            for record_id in self._order:
                fh.write(self._journal_line(
                    {"op": "enqueue", "record": self._records[record_id].to_json()}
                ))

    @staticmethod
    def _journal_line(entry: dict) -> str:
        return json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n"

    def _append(self, entry: dict) -> None:
        if self._path is None:
            return
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._path, "a", encoding="utf-8") as fh:
            fh.write(self._journal_line(entry))

    def __len__(self) -> int:
        return len(self._records)

    def enqueue(self, proposals, source_url: str = "") -> list[str]:
        """Insert proposals as pending records; idempotent on proposal id.

        Re-enqueueing an id with different content is an integrity error.
        """
        ids = []
        with self._lock:
            for proposal in proposals:
                existing = self._records.get(proposal.id)
                if existing is not None:
                    if existing.proposal.to_json() != proposal.to_json():
                        raise ValidationError(
                            f"proposal id {proposal.id} already holds different content"
                        )
                    ids.append(proposal.id)
                    continue
                record = ProposalRecord(
                    proposal=proposal,
                    created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
                    description=render_description(proposal, source_url)
                    if source_url else "",
                )
                self._records[proposal.id] = record
                self._order.append(proposal.id)
                self._append({"op": "enqueue", "record": record.to_json()})
                ids.append(proposal.id)
        return ids

    def get(self, record_id: str) -> ProposalRecord:
        record = self._records.get(record_id)
        if record is None:
            raise KeyError(record_id)
        return record

    def list(self, status: str | None = None, direction: str | None = None,
             rule: str | None = None) -> list[ProposalRecord]:
        out = []
        for record_id in self._order:
            record = self._records[record_id]
            if status and record.status != status:
                continue
            if direction and record.proposal.direction != direction:
                continue
            if rule and record.proposal.rule != rule:
                continue
            out.append(record)
        return out

    def decide(self, record_id: str, decision: str, reviewer: str,
               citation: Citation | None = None) -> ProposalRecord:
        """Transition a pending record exactly once.

        Accepting requires a citation; a second decision raises ConflictError
        no matter how the calls interleave.
        """
        if decision not in (STATUS_ACCEPTED, "accept", STATUS_REJECTED, "reject"):
            raise ValidationError(f"unknown decision {decision!r}")
        accepted = decision in (STATUS_ACCEPTED, "accept")
        if accepted and citation is None:
            raise ValidationError("accepting requires a citation")
        with self._lock:
            record = self._records.get(record_id)
            if record is None:
                raise KeyError(record_id)
            if record.status != STATUS_PENDING:
                raise ConflictError(f"record {record_id} already {record.status}")
            record.status = STATUS_ACCEPTED if accepted else STATUS_REJECTED
            record.reviewer = reviewer
            record.citation = citation
            record.decided_at = _dt.datetime.now(_dt.timezone.utc).isoformat()
            self._append({
                "op": "decide",
                "id": record_id,
                "status": record.status,
                "reviewer": reviewer,
                "citation": citation.to_json() if citation else None,
                "decided_at": record.decided_at,
            })
            return record

    def stats(self, direction: str | None = None) -> AcceptanceStats:
        """Tallies per edit-type bucket and per direction flow."""
        result = AcceptanceStats(total=_bucket())
        for record in self.list(direction=direction):
            type_bucket = EDIT_TYPE_BUCKETS[record.proposal.edit_type]
            flow = direction_class(record.proposal.source_lang,
                                   record.proposal.target_lang)
            result.by_type.setdefault(type_bucket, _bucket())
            result.by_direction.setdefault(flow, _bucket())
            _tally(result.by_type[type_bucket], record)
            _tally(result.by_direction[flow], record)
            _tally(result.total, record)
        for bucket in result.by_type.values():
            _finish(bucket)
        for bucket in result.by_direction.values():
            _finish(bucket)
        _finish(result.total)
        return result

    def export_accepted(self) -> list[EditProposal]:
        """Accepted records not yet exported, marked exported afterwards."""
        with self._lock:
            fresh = [
                record for record_id in self._order
                if (record := self._records[record_id]).status == STATUS_ACCEPTED
                and not record.exported
            ]
            for record in fresh:
                record.exported = True
            if fresh:
                self._append({"op": "export",
                              "ids": [r.proposal.id for r in fresh]})
            return [record.proposal for record in fresh]
