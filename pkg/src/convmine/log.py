"""Labels, conversations and event logs.

Event classes are carried as plain strings inside traces: ``"Q"`` at the core
layer and ``"Q:Information"`` at the fine layer. ``START`` and ``END`` are
reserved and never stored in a trace.
"""

from __future__ import annotations

import enum
import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Literal

START = "START"
END = "END"
RESERVED = frozenset({START, END})

Layer = Literal["core", "fine"]
LAYERS = ("core", "fine")


class CoreLabel(str, enum.Enum):
    Q = "Q"
    R = "R"
    F = "F"
    A = "A"

    @property
    def speaker(self) -> str:
        return "user" if self in (CoreLabel.Q, CoreLabel.F) else "agent"


class SubLabel(str, enum.Enum):
    Information = "Information"
    Prompt = "Prompt"
    Positive = "Positive"
    Negative = "Negative"
    Offer = "Offer"
    Understand = "Understand"
    Results = "Results"
    Backchannel = "Backchannel"
    Empty = "Empty"


SUBLABELS: dict[CoreLabel, tuple[SubLabel, ...]] = {
    CoreLabel.Q: (SubLabel.Information, SubLabel.Prompt),
    CoreLabel.F: (SubLabel.Positive, SubLabel.Negative),
    CoreLabel.R: (SubLabel.Offer, SubLabel.Understand),
    CoreLabel.A: (SubLabel.Results, SubLabel.Backchannel, SubLabel.Empty),
}


class LabelError(ValueError):
    pass


class LabelSideWarning(UserWarning):
    """An utterance carries a label belonging to the other speaker."""


@dataclass(frozen=True, order=True)
class Label:
    core: CoreLabel
    sub: SubLabel | None = None

    def __post_init__(self):
        if not isinstance(self.core, CoreLabel):
            object.__setattr__(self, "core", _core(self.core))
        if self.sub is not None:
            if not isinstance(self.sub, SubLabel):
                try:
                    object.__setattr__(self, "sub", SubLabel(self.sub))
                except ValueError:
                    raise LabelError(f"unknown sublabel {self.sub!r}") from None
            if self.sub not in SUBLABELS[self.core]:
                raise LabelError(
                    f"{self.sub.value} is not a sublabel of {self.core.value}"
                )

    @classmethod
    def parse(cls, text: str) -> Label:
        """Parse ``"Q"`` or ``"Q:Information"``."""
        core, _, sub = text.strip().partition(":")
        return cls(_core(core), sub or None)

    def strip(self) -> Label:
        return Label(self.core) if self.sub is not None else self

    def __str__(self) -> str:
        if self.sub is None:
            return self.core.value
        return f"{self.core.value}:{self.sub.value}"


def _core(value) -> CoreLabel:
    try:
        return CoreLabel(value)
    except ValueError:
        raise LabelError(f"unknown core label {value!r}") from None


def strip_event(event: str) -> str:
    """Project an event class to the core layer; idempotent."""
    return event.partition(":")[0]


def event_layer(event: str) -> Layer:
    return "fine" if ":" in event else "core"


@dataclass(frozen=True)
class Utterance:
    speaker: Literal["user", "agent"]
    labels: tuple[Label, ...]
    text: str | None = None

    def __post_init__(self):
        if self.speaker not in ("user", "agent"):
            raise ValueError(f"speaker must be 'user' or 'agent', got {self.speaker!r}")
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("utterance has no labels")
        for label in self.labels:
            if label.core.speaker != self.speaker:
                warnings.warn(
                    f"label {label} on a {self.speaker} utterance",
                    LabelSideWarning,
                    stacklevel=3,
                )


@dataclass(frozen=True)
class Conversation:
    id: str
    utterances: tuple[Utterance, ...]
    gold_success: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if not self.utterances:
            raise ValueError(f"conversation {self.id!r} is empty")


@dataclass(frozen=True)
class Trace:
    conversation_id: str
    events: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise ValueError(f"trace {self.conversation_id!r} is empty")
        bad = RESERVED.intersection(self.events)
        if bad:
            raise ValueError(f"trace {self.conversation_id!r} contains {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...] = ()
    layer: Layer = "core"
    gold: dict[str, bool] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        if self.layer not in LAYERS:
            raise ValueError(f"unknown layer {self.layer!r}")
        if self.layer == "core":
            for trace in self.traces:
                for event in trace.events:
                    if ":" in event:
                        raise ValueError(
                            f"fine-layer event {event!r} in a core-layer log "
                            f"(trace {trace.conversation_id!r})"
                        )

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def to_core(self) -> EventLog:
        if self.layer == "core":
            return self
        traces = [
            Trace(t.conversation_id, [strip_event(e) for e in t.events])
            for t in self.traces
        ]
        return EventLog(traces, "core", dict(self.gold))


def reduce_to_log(
    conversations: Iterable[Conversation],
    layer: Layer = "fine",
    multilabel_policy: Literal["expand", "first"] = "expand",
    dedupe: bool = False,
) -> EventLog:
    """Turn conversations into an event log, one trace per conversation.

    Under ``expand`` each label of an utterance becomes its own event, in
    annotation order; ``first`` keeps only the first label. ``dedupe`` drops
    repeated identical labels within a single utterance (after layer
    stripping).
    """
    if layer not in LAYERS:
        raise ValueError(f"unknown layer {layer!r}")
    if multilabel_policy not in ("expand", "first"):
        raise ValueError(f"unknown multilabel policy {multilabel_policy!r}")
    traces = []
    gold = {}
    for conv in conversations:
        events: list[str] = []
        for utt in conv.utterances:
            labels: Sequence[Label] = utt.labels
            if multilabel_policy == "first":
                labels = labels[:1]
            seen = set()
            for label in labels:
                if layer == "core":
                    label = label.strip()
                event = str(label)
                if dedupe:
                    if event in seen:
                        continue
                    seen.add(event)
                events.append(event)
        traces.append(Trace(conv.id, events))
        if conv.gold_success is not None:
            gold[conv.id] = conv.gold_success
    return EventLog(traces, layer, gold)


def log_statistics(log: EventLog) -> dict[str, int]:
    """Dialogue, utterance (event) and distinct-label counts."""
    labels = set()
    n_events = 0
    for trace in log.traces:
        n_events += len(trace.events)
        labels.update(trace.events)
    return {"dialogues": len(log.traces), "utterances": n_events, "distinct_labels": len(labels)}
