"""Directly-follows graphs, eventual-succession statistics and episode mining."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .log import END, START, EventLog, Layer


class EmptyLogError(ValueError):
    pass


def _require_traces(log: EventLog):
    if not log.traces:
        raise EmptyLogError("event log is empty")


def node_order(nodes) -> list[str]:
    """START first, END last, everything else sorted by name."""
    inner = sorted(n for n in nodes if n not in (START, END))
    head = [START] if START in nodes else []
    tail = [END] if END in nodes else []
    return head + inner + tail


@dataclass(frozen=True)
class TransitionGraph:
    edges: dict[tuple[str, str], int]
    trace_count: int
    layer: Layer = "core"
    nodes: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        nodes = set(self.nodes)
        for a, b in self.edges:
            nodes.add(a)
            nodes.add(b)
        object.__setattr__(self, "nodes", frozenset(nodes))

    def out_flow(self, node: str) -> int:
        return sum(f for (a, _), f in self.edges.items() if a == node)

    def in_flow(self, node: str) -> int:
        return sum(f for (_, b), f in self.edges.items() if b == node)

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        rank = {n: i for i, n in enumerate(node_order(self.nodes))}
        return sorted(
            ((a, b, f) for (a, b), f in self.edges.items()),
            key=lambda e: (rank[e[0]], rank[e[1]]),
        )

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "trace_count": self.trace_count,
            "nodes": node_order(self.nodes),
            "edges": [{"from": a, "to": b, "count": f} for a, b, f in self.sorted_edges()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> TransitionGraph:
        edges = {(e["from"], e["to"]): int(e["count"]) for e in data["edges"]}
        return cls(edges, int(data["trace_count"]), data.get("layer", "core"), frozenset(data.get("nodes", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def directly_follows(log: EventLog) -> TransitionGraph:
    """Count adjacent pairs in every trace, framed by START and END."""
    _require_traces(log)
    edges: Counter = Counter()
    for trace in log.traces:
        prev = START
        for event in trace.events:
            edges[(prev, event)] += 1
            prev = event
        edges[(prev, END)] += 1
    return TransitionGraph(dict(edges), len(log.traces), log.layer)


def extract_model(
    graph: TransitionGraph, min_edge_freq: float = 1, relative: bool = False
) -> TransitionGraph:
    """Keep edges whose frequency reaches the threshold.

    With ``relative=True`` the threshold is a fraction of ``trace_count``.
    """
    if relative:
        if not 0 < min_edge_freq <= 1:
            raise ValueError("relative threshold must be in (0, 1]")
        cutoff = min_edge_freq * graph.trace_count
    else:
        if min_edge_freq < 1:
            raise ValueError("min_edge_freq must be >= 1")
        cutoff = min_edge_freq
    kept = {e: f for e, f in graph.edges.items() if f >= cutoff}
    if not kept:
        raise ValueError(f"no edge survives threshold {min_edge_freq}")
    return TransitionGraph(kept, graph.trace_count, graph.layer)


@dataclass
class SuccessionStats:
    """Eventual-follows counts and gap distributions.

    ``pairs[(a, b)]`` maps each gap ``j - i`` to how many index pairs
    ``i < j`` have ``a`` at ``i`` and ``b`` at ``j``.
    """

    pairs: dict[tuple[str, str], Counter] = field(default_factory=dict)
    occurrences: Counter = field(default_factory=Counter)
    per_trace: dict[str, Counter] = field(default_factory=dict)

    def count(self, a: str, b: str) -> int:
        hist = self.pairs.get((a, b))
        return sum(hist.values()) if hist else 0

    def counts(self) -> dict[tuple[str, str], int]:
        return {k: sum(v.values()) for k, v in self.pairs.items()}

    def to_dict(self) -> dict:
        pairs = []
        for (a, b) in sorted(self.pairs):
            hist = self.pairs[(a, b)]
            pairs.append({
                "from": a,
                "to": b,
                "count": sum(hist.values()),
                "distances": {str(d): hist[d] for d in sorted(hist)},
            })
        return {
            "pairs": pairs,
            "occurrences": {k: self.occurrences[k] for k in sorted(self.occurrences)},
            "per_trace": {
                tid: {k: c[k] for k in sorted(c)} for tid, c in self.per_trace.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def mine_succession(log: EventLog) -> SuccessionStats:
    """One pass per trace, remembering where each label was seen so far."""
    _require_traces(log)
    pairs: dict[tuple[str, str], Counter] = defaultdict(Counter)
    occurrences: Counter = Counter()
    per_trace: dict[str, Counter] = {}
    for trace in log.traces:
        seen: dict[str, list[int]] = defaultdict(list)
        for j, event in enumerate(trace.events):
            for label, positions in seen.items():
                hist = pairs[(label, event)]
                for i in positions:
                    hist[j - i] += 1
            seen[event].append(j)
        local = Counter({label: len(pos) for label, pos in seen.items()})
        occurrences.update(local)
        per_trace[trace.conversation_id] = local
    return SuccessionStats(dict(pairs), occurrences, per_trace)


@dataclass(frozen=True)
class EpisodePattern:
    sequence: tuple[str, ...]
    support: int


def mine_episodes(
    log: EventLog, max_len: int = 4, min_support: int = 1, count_occurrences: bool = False
) -> list[EpisodePattern]:
    """Contiguous label windows of length 2..max_len.

    Support is the number of traces containing the window at least once, or
    the total number of windows when ``count_occurrences`` is set.
    """
    _require_traces(log)
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    support: Counter = Counter()
    for trace in log.traces:
        ev = trace.events
        windows = (
            ev[i:i + k]
            for k in range(2, max_len + 1)
            for i in range(len(ev) - k + 1)
        )
        support.update(windows if count_occurrences else set(windows))
    patterns = [EpisodePattern(seq, n) for seq, n in support.items() if n >= min_support]
    patterns.sort(key=lambda p: (-p.support, p.sequence))
    return patterns


def episodes_to_json(patterns: list[EpisodePattern]) -> str:
    rows = [{"sequence": list(p.sequence), "support": p.support} for p in patterns]
    return json.dumps(rows, indent=2) + "\n"
