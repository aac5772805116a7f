"""Transcript and mapping-table I/O, and the source-label to QRFA mapping.

Source labels that mean different things depending on who said them (COR
``withdraw``, DSTC2 ``inform``) are keyed as ``label@user`` / ``label@agent``
in mapping tables; lookup tries the speaker-qualified key first.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal

from .log import SUBLABELS, Conversation, Label, LabelError, Utterance

UnmappedPolicy = Literal["error", "drop_event", "drop_trace"]
UNMAPPED_POLICIES = ("error", "drop_event", "drop_trace")
BUILTIN_MAPPINGS = ("cor", "scs", "ode", "dstc1", "dstc2", "qrfa")


class ParseError(ValueError):
    """Malformed transcript or mapping input."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class UnmappedReport:
    source_label: str
    conversation_id: str
    position: int


class UnmappedLabelError(LookupError):
    def __init__(self, report: UnmappedReport):
        super().__init__(
            f"unmapped label {report.source_label!r} in conversation "
            f"{report.conversation_id!r} at utterance {report.position}"
        )
        self.report = report


@dataclass(frozen=True)
class RawUtterance:
    speaker: str
    labels: tuple[str, ...]
    text: str | None = None


@dataclass(frozen=True)
class RawConversation:
    id: str
    raw_utterances: tuple[RawUtterance, ...]
    gold_success: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "raw_utterances", tuple(self.raw_utterances))
        if not self.raw_utterances:
            raise ValueError(f"conversation {self.id!r} is empty")


@dataclass
class MappingTable:
    scheme_name: str
    entries: dict[str, Label] = field(default_factory=dict)
    unmapped_policy: UnmappedPolicy = "error"

    def lookup(self, label: str, speaker: str | None = None) -> Label | None:
        label = label.strip()
        if speaker is not None:
            hit = self.entries.get(f"{label}@{speaker}")
            if hit is not None:
                return hit
        return self.entries.get(label)

    def with_policy(self, policy: UnmappedPolicy) -> MappingTable:
        if policy not in UNMAPPED_POLICIES:
            raise ValueError(f"unknown unmapped policy {policy!r}")
        return MappingTable(self.scheme_name, dict(self.entries), policy)


# -- transcripts -----------------------------------------------------------

def parse_transcripts(path, format: Literal["jsonl", "csv"] | None = None) -> list[RawConversation]:
    """Read a transcript file into raw conversations, preserving file order."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    with open(path, encoding="utf-8", newline="") as fh:
        if format == "jsonl":
            convs = _parse_jsonl(fh, path)
        elif format == "csv":
            convs = _parse_csv(fh, path)
        else:
            raise ValueError(f"unknown transcript format {format!r}")
    seen = set()
    for conv in convs:
        if conv.id in seen:
            raise ParseError(f"duplicate conversation id {conv.id!r}", path)
        seen.add(conv.id)
    return convs


def _success(value, path, line):
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        if low in ("", "null", "none"):
            return None
    raise ParseError(f"bad success value {value!r}", path, line)


def _parse_jsonl(fh, path) -> list[RawConversation]:
    out = []
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", path, lineno) from None
        if not isinstance(rec, dict) or "id" not in rec:
            raise ParseError("record must be an object with an 'id'", path, lineno)
        utts = rec.get("utterances")
        if not isinstance(utts, list):
            raise ParseError("'utterances' must be a list", path, lineno)
        if not utts:
            raise ParseError("empty conversation", path, lineno)
        raw = []
        for k, u in enumerate(utts):
            if not isinstance(u, dict):
                raise ParseError(f"utterance {k} is not an object", path, lineno)
            speaker = u.get("speaker")
            if speaker not in ("user", "agent"):
                raise ParseError(f"utterance {k}: bad speaker {speaker!r}", path, lineno)
            labels = u.get("labels")
            if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
                raise ParseError(f"utterance {k}: 'labels' must be a list of strings", path, lineno)
            if not labels:
                raise ParseError(f"utterance {k}: no labels", path, lineno)
            text = u.get("text")
            if text is not None and not isinstance(text, str):
                raise ParseError(f"utterance {k}: 'text' must be a string or null", path, lineno)
            raw.append(RawUtterance(speaker, tuple(x.strip() for x in labels), text))
        out.append(RawConversation(str(rec["id"]), raw, _success(rec.get("success"), path, lineno)))
    return out


CSV_COLUMNS = ("conversation_id", "turn_index", "speaker", "labels", "text", "success")


def _parse_csv(fh, path) -> list[RawConversation]:
    reader = csv.DictReader(fh)
    missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ParseError(f"missing columns {sorted(missing)}", path, 1)
    groups: dict[str, list] = {}
    success: dict[str, bool | None] = {}
    current = None
    for row in reader:
        lineno = reader.line_num
        cid = row["conversation_id"]
        if cid != current:
            if cid in groups:
                raise ParseError(f"duplicate conversation id {cid!r}", path, lineno)
            current = cid
            groups[cid] = []
            success[cid] = _success(row["success"], path, lineno)
        try:
            turn = int(row["turn_index"])
        except (TypeError, ValueError):
            raise ParseError(f"bad turn_index {row['turn_index']!r}", path, lineno) from None
        speaker = row["speaker"]
        if speaker not in ("user", "agent"):
            raise ParseError(f"bad speaker {speaker!r}", path, lineno)
        labels = tuple(x.strip() for x in (row["labels"] or "").split("|") if x.strip())
        if not labels:
            raise ParseError("utterance has no labels", path, lineno)
        text = row["text"] if row["text"] != "" else None
        groups[cid].append((turn, RawUtterance(speaker, labels, text)))
    out = []
    for cid, rows in groups.items():
        rows.sort(key=lambda r: r[0])
        out.append(RawConversation(cid, [u for _, u in rows], success[cid]))
    return out


def write_transcripts(conversations: Iterable[Conversation | RawConversation], path) -> None:
    """Write conversations in the transcript JSONL form.

    Mapped conversations are written with their QRFA labels as strings, so the
    output can be read back with ``parse_transcripts`` and mapped with the
    ``qrfa`` built-in table.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_transcripts(conversations))


def dumps_transcripts(conversations: Iterable[Conversation | RawConversation]) -> str:
    buf = io.StringIO()
    for conv in conversations:
        if isinstance(conv, RawConversation):
            utts = [
                {"speaker": u.speaker, "text": u.text, "labels": list(u.labels)}
                for u in conv.raw_utterances
            ]
        else:
            utts = [
                {"speaker": u.speaker, "text": u.text, "labels": [str(x) for x in u.labels]}
                for u in conv.utterances
            ]
        rec = {"id": conv.id, "success": conv.gold_success, "utterances": utts}
        buf.write(json.dumps(rec, ensure_ascii=False))
        buf.write("\n")
    return buf.getvalue()


def to_raw(conversations: Iterable[Conversation]) -> list[RawConversation]:
    """Normalized form of mapped conversations, as the writer emits it."""
    return [
        RawConversation(
            c.id,
            [RawUtterance(u.speaker, tuple(str(x) for x in u.labels), u.text) for u in c.utterances],
            c.gold_success,
        )
        for c in conversations
    ]


def parse_gold(path) -> dict[str, bool]:
    """Sidecar gold file with columns ``conversation_id,success``."""
    path = Path(path)
    gold = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"conversation_id", "success"} <= set(reader.fieldnames or ()):
            raise ParseError("gold file needs columns conversation_id,success", path, 1)
        for row in reader:
            value = _success(row["success"], path, reader.line_num)
            if value is None:
                continue
            cid = row["conversation_id"]
            if cid in gold:
                raise ParseError(f"duplicate conversation id {cid!r}", path, reader.line_num)
            gold[cid] = value
    return gold


# -- mapping tables --------------------------------------------------------

def parse_mapping(path, scheme_name: str | None = None) -> MappingTable:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return _read_mapping(fh, scheme_name or path.stem, path)


def _read_mapping(fh, scheme_name, path) -> MappingTable:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["source_label", "core", "sub"]:
        raise ParseError("mapping header must be 'source_label,core,sub'", path, 1)
    entries: dict[str, Label] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 columns, got {len(row)} in row {row!r}", path, lineno)
        source, core, sub = (cell.strip() for cell in row)
        if not source:
            raise ParseError(f"empty source label in row {row!r}", path, lineno)
        try:
            label = Label(core, sub or None)
        except LabelError as exc:
            raise ParseError(f"row {row!r}: {exc}", path, lineno) from None
        if source in entries:
            raise ParseError(f"duplicate source label {source!r} in row {row!r}", path, lineno)
        entries[source] = label
    return MappingTable(scheme_name, entries)


def qrfa_identity_table() -> MappingTable:
    """Maps already-normalized QRFA label strings onto themselves."""
    entries = {}
    for core, subs in SUBLABELS.items():
        entries[core.value] = Label(core)
        for sub in subs:
            label = Label(core, sub)
            entries[str(label)] = label
    return MappingTable("qrfa", entries)


def builtin_mapping(name: str) -> MappingTable:
    name = name.lower()
    if name == "qrfa":
        return qrfa_identity_table()
    if name not in BUILTIN_MAPPINGS:
        raise KeyError(f"no built-in mapping {name!r}; choose from {', '.join(BUILTIN_MAPPINGS)}")
    ref = resources.files("convmine") / "data" / "mappings" / f"{name}.csv"
    with ref.open("r", encoding="utf-8", newline="") as fh:
        return _read_mapping(fh, name, f"builtin:{name}")


def load_mapping(spec: str) -> MappingTable:
    """``builtin:<name>`` or a CSV path."""
    if spec.startswith("builtin:"):
        return builtin_mapping(spec.split(":", 1)[1])
    return parse_mapping(spec)


def apply_mapping(
    raw: Iterable[RawConversation], table: MappingTable
) -> tuple[list[Conversation], list[UnmappedReport]]:
    """Replace source labels with QRFA labels.

    Returns the mapped conversations and one report entry per unmapped label
    occurrence (plus one per utterance or conversation that ends up empty and
    is dropped, with ``source_label`` set to ``""``).
    """
    policy = table.unmapped_policy
    convs: list[Conversation] = []
    reports: list[UnmappedReport] = []
    for rc in raw:
        utts = []
        drop = False
        for pos, ru in enumerate(rc.raw_utterances):
            labels = []
            for src in ru.labels:
                label = table.lookup(src, ru.speaker)
                if label is None:
                    rep = UnmappedReport(src, rc.id, pos)
                    if policy == "error":
                        raise UnmappedLabelError(rep)
                    reports.append(rep)
                    drop = drop or policy == "drop_trace"
                    continue
                labels.append(label)
            if labels:
                utts.append(Utterance(ru.speaker, tuple(labels), ru.text))
            else:
                reports.append(UnmappedReport("", rc.id, pos))
        if drop:
            continue
        if not utts:
            reports.append(UnmappedReport("", rc.id, -1))
            continue
        convs.append(Conversation(rc.id, tuple(utts), rc.gold_success))
    return convs, reports


def raw_statistics(raw: Iterable[RawConversation]) -> dict[str, int]:
    """Dialogue/utterance/label counts at the source-label layer."""
    labels = set()
    n_dialogues = n_utts = 0
    for rc in raw:
        n_dialogues += 1
        n_utts += len(rc.raw_utterances)
        for u in rc.raw_utterances:
            labels.update(u.labels)
    return {"dialogues": n_dialogues, "utterances": n_utts, "distinct_labels": len(labels)}
