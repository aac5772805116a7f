"""Alignment-based conformance checking against state-machine nets.

The synchronous product of a trace and a state-machine net has states
``(position, place)``. Moves are:

* synchronous: consume the next event and fire a visible transition with the
  same label (cost 0);
* log-only: consume the next event, stay in place;
* model-only: fire a transition without consuming (visible or invisible).

Costs come from :class:`CostFunction`; invisible and synchronous moves are
free. Fitness is ``1 - optimal / worst_case`` where the worst case replays
every event as log-only and takes the cheapest run through the model.
"""

from __future__ import annotations

import functools
import heapq
import json
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .log import EventLog, Trace
from .model import ModelError, ProcessNet

SYNC, LOG, MODEL = "sync", "log", "model"


@dataclass(frozen=True)
class CostFunction:
    log_only_cost: float = 1.0
    visible_model_only_cost: float = 1.0

    invisible_model_only_cost = 0.0
    synchronous_cost = 0.0

    def __post_init__(self):
        if not (self.log_only_cost > 0 and self.visible_model_only_cost > 0):
            raise ValueError("log-only and visible model-only costs must be positive")


DEFAULT_COST = CostFunction()


@dataclass(frozen=True)
class Move:
    kind: str
    label: str | None
    transition: str | None = None

    @property
    def visible(self) -> bool:
        return self.kind != MODEL or self.label is not None

    def cost(self, cost: CostFunction) -> float:
        if self.kind == LOG:
            return cost.log_only_cost
        if self.kind == MODEL and self.label is not None:
            return cost.visible_model_only_cost
        return 0.0

    def __str__(self) -> str:
        if self.kind == SYNC:
            return f"({self.label},{self.label})"
        if self.kind == LOG:
            return f"({self.label},>>)"
        return f"(>>,{self.label if self.label is not None else 'tau'})"


@dataclass(frozen=True)
class Alignment:
    moves: tuple[Move, ...]
    cost: float

    def log_projection(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.moves if m.kind in (SYNC, LOG))

    def model_projection(self) -> tuple[str, ...]:
        return tuple(m.transition for m in self.moves if m.kind in (SYNC, MODEL))


@dataclass(frozen=True)
class TraceFitness:
    conversation_id: str
    optimal_cost: float
    worst_case_cost: float
    fitness: float
    empty: bool = False


class _Compiled:
    """Index form of a state-machine net for a fixed cost function."""

    def __init__(self, net: ProcessNet, cost: CostFunction):
        if not net.is_state_machine():
            raise ModelError(f"net {net.name!r} is not a state machine")
        self.net = net
        self.places = list(net.places)
        index = {p: i for i, p in enumerate(self.places)}
        self.init = index[net.initial_marking[0][0]]
        self.final = index[net.final_marking[0][0]]
        n = len(self.places)

        # (transition, dst index, model-move cost) per source place
        self.out: list[list[tuple]] = [[] for _ in range(n)]
        closure = np.full((n, n), np.inf)
        np.fill_diagonal(closure, 0.0)
        by_label: dict[str, list[tuple[int, int, str]]] = {}
        for t in net.transitions:
            src, dst = index[t.inputs[0]], index[t.outputs[0]]
            w = cost.visible_model_only_cost if t.visible else 0.0
            if w < closure[src, dst]:
                closure[src, dst] = w
            self.out[src].append((t, dst, w))
            if t.visible:
                by_label.setdefault(t.label, []).append((src, dst, t.id))
        for k in range(n):
            closure = np.minimum(closure, closure[:, k:k + 1] + closure[k:k + 1, :])
        self.closure = np.ascontiguousarray(closure)
        self.model_path_cost = float(closure[self.init, self.final])
        if not math.isfinite(self.model_path_cost):
            raise ModelError(f"final marking of net {net.name!r} is unreachable")

        self.labels = sorted(by_label)
        self.label_id = {lab: i for i, lab in enumerate(self.labels)}
        self.sync: dict[str, list[tuple[int, int, str]]] = {
            lab: sorted(by_label[lab], key=lambda x: x[2]) for lab in self.labels
        }
        offsets, src, dst = [0], [], []
        for lab in self.labels:
            for s, d, _ in self.sync[lab]:
                src.append(s)
                dst.append(d)
            offsets.append(len(src))
        self.sync_offsets = np.asarray(offsets, dtype=np.intc)
        self.sync_src = np.asarray(src, dtype=np.intc)
        self.sync_dst = np.asarray(dst, dtype=np.intc)
        self.cost = cost

        self.incoming: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for p, outs in enumerate(self.out):
            for _, d, w in outs:
                self.incoming[d].append((p, w))

    def encode(self, events: Sequence[str]) -> list[int]:
        get = self.label_id.get
        return [get(e, -1) for e in events]

    def batch(self, variants: Sequence[Sequence[str]], backend=None) -> np.ndarray:
        flat: list[int] = []
        offsets = [0]
        for ev in variants:
            flat.extend(self.encode(ev))
            offsets.append(len(flat))
        kernel = _kernel.get(backend)
        return kernel.batch_costs(
            np.asarray(flat, dtype=np.intc),
            np.asarray(offsets, dtype=np.intc),
            self.init,
            self.final,
            self.closure,
            self.sync_offsets,
            self.sync_src,
            self.sync_dst,
            float(self.cost.log_only_cost),
        )


@functools.lru_cache(maxsize=64)
def _compile(net: ProcessNet, cost: CostFunction) -> _Compiled:
    return _Compiled(net, cost)


def _events(trace) -> tuple[str, ...]:
    return trace.events if isinstance(trace, Trace) else tuple(trace)


def optimal_cost(trace, net: ProcessNet, cost: CostFunction = DEFAULT_COST, backend: str | None = None) -> float:
    return float(_compile(net, cost).batch([_events(trace)], backend)[0])


def worst_case_cost(trace, net: ProcessNet, cost: CostFunction = DEFAULT_COST) -> float:
    """All events as log-only moves plus the cheapest run through the net."""
    return len(_events(trace)) * cost.log_only_cost + _compile(net, cost).model_path_cost


def optimal_alignment(trace, net: ProcessNet, cost: CostFunction = DEFAULT_COST) -> Alignment:
    """A minimum-cost alignment, chosen deterministically.

    Among minimum-cost alignments the shortest ones are kept; from those the
    moves are picked greedily, preferring synchronous, then invisible, then
    visible model-only, then log-only moves, then lexicographic label and
    transition id.
    """
    c = _compile(net, cost)
    events = _events(trace)
    n = len(events)
    n_places = len(c.places)
    inf = (math.inf, math.inf)
    log_cost = cost.log_only_cost

    # dist[i][p] = (cost, moves) to reach (n, final) from (i, p)
    dist: list[list[tuple[float, float]]] = [[inf] * n_places for _ in range(n + 1)]
    for i in range(n, -1, -1):
        seed = [inf] * n_places
        if i == n:
            seed[c.final] = (0.0, 0)
        else:
            nxt = dist[i + 1]
            for p in range(n_places):
                cc, ss = nxt[p]
                seed[p] = (cc + log_cost, ss + 1)
            for s, d, _ in c.sync.get(events[i], ()):
                cand = (nxt[d][0], nxt[d][1] + 1)
                if cand < seed[s]:
                    seed[s] = cand
        dist[i] = _backward_closure(seed, c)

    moves: list[Move] = []
    i, p = 0, c.init
    total = dist[0][c.init]
    if not math.isfinite(total[0]):
        raise ModelError(f"final marking of net {net.name!r} is unreachable")
    while (i, p) != (n, c.final):
        here = dist[i][p]
        options = []
        if i < n:
            ev = events[i]
            for s, d, tid in c.sync.get(ev, ()):
                if s == p and (dist[i + 1][d][0], dist[i + 1][d][1] + 1) == here:
                    options.append(((0, ev, tid), Move(SYNC, ev, tid), (i + 1, d)))
            there = dist[i + 1][p]
            if (there[0] + log_cost, there[1] + 1) == here:
                options.append(((3, ev, ""), Move(LOG, ev), (i + 1, p)))
        for t, d, w in c.out[p]:
            there = dist[i][d]
            if (there[0] + w, there[1] + 1) == here:
                rank = 2 if t.visible else 1
                options.append(((rank, t.label or "", t.id), Move(MODEL, t.label, t.id), (i, d)))
        _, move, (i, p) = min(options, key=lambda o: o[0])
        moves.append(move)
    alignment = Alignment(tuple(moves), total[0])
    if os.environ.get("CONVMINE_DEBUG"):
        check_alignment(alignment, events, net, cost)
    return alignment


def _backward_closure(seed, c: _Compiled):
    """Relax model-only moves backwards within one trace position."""
    dist = list(seed)
    heap = [(d, p) for p, d in enumerate(dist) if math.isfinite(d[0])]
    heapq.heapify(heap)
    incoming = c.incoming
    while heap:
        d, q = heapq.heappop(heap)
        if d > dist[q]:
            continue
        for p, w in incoming[q]:
            cand = (d[0] + w, d[1] + 1)
            if cand < dist[p]:
                dist[p] = cand
                heapq.heappush(heap, (cand, p))
    return dist


def check_alignment(alignment: Alignment, events: Sequence[str], net: ProcessNet, cost: CostFunction) -> None:
    """Assert the two projection properties and the cost sum."""
    assert alignment.log_projection() == tuple(events), "log projection differs from trace"
    by_id = {t.id: t for t in net.transitions}
    marking = net.initial_marking
    for tid in alignment.model_projection():
        t = by_id[tid]
        assert t in net.enabled(marking), f"transition {tid} not enabled"
        marking = net.fire(marking, t)
    assert marking == net.final_marking, "model projection does not end in the final marking"
    for m in alignment.moves:
        if m.kind == SYNC:
            assert by_id[m.transition].label == m.label, "synchronous move with mismatched label"
    total = math.fsum(m.cost(cost) for m in alignment.moves)
    assert math.isclose(total, alignment.cost, abs_tol=1e-9), "cost is not the sum of move costs"


def _fitness(cid: str, opt: float, worst: float) -> TraceFitness:
    assert opt <= worst + 1e-9, f"optimal cost {opt} exceeds worst case {worst}"
    return TraceFitness(cid, opt, worst, 1.0 - opt / worst if opt else 1.0)


def trace_fitness(trace, net: ProcessNet, cost: CostFunction = DEFAULT_COST, backend: str | None = None) -> TraceFitness:
    events = _events(trace)
    cid = trace.conversation_id if isinstance(trace, Trace) else ""
    worst = worst_case_cost(events, net, cost)
    if not events:
        return TraceFitness(cid, optimal_cost(events, net, cost, backend), worst, 0.0, empty=True)
    return _fitness(cid, optimal_cost(events, net, cost, backend), worst)


@dataclass
class FitnessReport:
    traces: list[TraceFitness]
    model: str = ""
    reconstructed: bool = False
    n_variants: int = 0
    mean: float = 0.0
    max: float = 0.0
    min: float = 0.0
    std: float = 0.0
    perfect_fraction: float = 0.0
    empty: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, traces: list[TraceFitness], **kw) -> FitnessReport:
        scored = sorted((t for t in traces if not t.empty), key=lambda t: t.conversation_id)
        empty = sorted(t.conversation_id for t in traces if t.empty)
        values = [t.fitness for t in scored]
        if not values:
            return cls(traces, empty=empty, **kw)
        mean = math.fsum(values) / len(values)
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))
        perfect = sum(1 for t in scored if t.optimal_cost == 0) / len(values)
        return cls(traces, mean=mean, max=max(values), min=min(values), std=std,
                   perfect_fraction=perfect, empty=empty, **kw)

    def aggregates(self) -> dict[str, float]:
        return {
            "average_per_case": self.mean,
            "max": self.max,
            "min": self.min,
            "std_deviation": self.std,
            "cases_with_value_1": self.perfect_fraction,
        }

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "reconstructed_model": self.reconstructed,
            "traces": len(self.traces),
            "variants": self.n_variants,
            "empty_traces": self.empty,
            "aggregates": self.aggregates(),
            "per_trace": [
                {
                    "conversation_id": t.conversation_id,
                    "optimal_cost": t.optimal_cost,
                    "worst_case_cost": t.worst_case_cost,
                    "fitness": t.fitness,
                }
                for t in self.traces
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_markdown(self) -> str:
        lines = []
        if self.reconstructed:
            lines.append(f"> reconstructed model: {self.model} (topology read off a diagram, not a published edge list)")
            lines.append("")
        lines += [
            f"| Metric | {self.model or 'model'} |",
            "|---|---|",
            f"| Average/case | {self.mean:.2f} |",
            f"| Max. | {self.max:.2f} |",
            f"| Min. | {self.min:.2f} |",
            f"| Std. Deviation | {self.std:.2f} |",
            f"| Cases with value 1 | {self.perfect_fraction:.2f} |",
            "",
            f"{len(self.traces)} traces, {self.n_variants} variants",
        ]
        return "\n".join(lines) + "\n"


def log_fitness(log: EventLog, net: ProcessNet, cost: CostFunction = DEFAULT_COST, backend: str | None = None) -> FitnessReport:
    """Per-trace fitness and log aggregates, one alignment per variant."""
    if not log.traces:
        raise ValueError("event log is empty")
    compiled = _compile(net, cost)
    variants: dict[tuple[str, ...], int] = {}
    for trace in log.traces:
        variants.setdefault(trace.events, len(variants))
    keys = list(variants)
    costs = compiled.batch(keys, backend)
    rows = []
    for trace in log.traces:
        opt = float(costs[variants[trace.events]])
        worst = len(trace.events) * cost.log_only_cost + compiled.model_path_cost
        rows.append(_fitness(trace.conversation_id, opt, worst))
    return FitnessReport.build(rows, model=net.name, reconstructed=net.reconstructed, n_variants=len(keys))
