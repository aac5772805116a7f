"""Reference conversation models.

A :class:`ModelDefinition` is a directed graph over conversation states with
synthetic ``START``/``END`` nodes. Each non-terminal node emits one event
class when entered (by default its own name). :func:`from_definition` turns
it into a state-machine :class:`ProcessNet` for alignment.
"""

from __future__ import annotations

import json
import random
from collections import Counter, deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .discovery import TransitionGraph, extract_model, node_order
from .log import END, LAYERS, START, EventLog, Layer, Trace, strip_event


class ModelError(ValueError):
    """A model definition or net is malformed."""


@dataclass(frozen=True)
class ModelDefinition:
    name: str
    layer: Layer
    edges: frozenset[tuple[str, str]]
    cycles: dict[str, frozenset[tuple[str, str]]] = field(default_factory=dict, compare=False)
    labels: dict[str, str] = field(default_factory=dict)
    reconstructed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((a, b) for a, b in self.edges))
        object.__setattr__(
            self, "cycles", {k: frozenset((a, b) for a, b in v) for k, v in self.cycles.items()}
        )
        if self.layer not in LAYERS:
            raise ModelError(f"unknown layer {self.layer!r}")
        self._validate()

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(n for e in self.edges for n in e)

    def label_of(self, node: str) -> str:
        return self.labels.get(node, node)

    def successors(self) -> dict[str, list[str]]:
        succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            succ[a].append(b)
        rank = {n: i for i, n in enumerate(node_order(self.nodes))}
        for v in succ.values():
            v.sort(key=rank.__getitem__)
        return succ

    def _validate(self):
        nodes = self.nodes
        if START not in nodes or END not in nodes:
            raise ModelError(f"model {self.name!r} needs both START and END")
        for a, b in self.edges:
            if b == START:
                raise ModelError(f"edge {a}->{b}: START cannot have incoming edges")
            if a == END:
                raise ModelError(f"edge {a}->{b}: END cannot have outgoing edges")
        if (START, END) in self.edges:
            raise ModelError("edge START->END would model an empty conversation")
        unknown = set(self.labels) - nodes
        if unknown:
            raise ModelError(f"labels given for unknown nodes {sorted(unknown)}")
        for node in nodes - {START, END}:
            lab = self.label_of(node)
            if lab in (START, END):
                raise ModelError(f"node {node!r} cannot emit reserved label {lab!r}")
            if self.layer == "core" and ":" in lab:
                raise ModelError(f"node {node!r} emits fine-layer label {lab!r} in a core model")
        fwd = _reach(self.edges, START)
        bwd = _reach(((b, a) for a, b in self.edges), END)
        dead = sorted(nodes - (fwd & bwd))
        if dead:
            raise ModelError(f"nodes not on any START..END path: {dead}")
        for cname, cedges in self.cycles.items():
            missing = cedges - self.edges
            if missing:
                raise ModelError(f"cycle {cname!r} uses edges not in the model: {sorted(missing)}")

    def to_dict(self) -> dict:
        rank = {n: i for i, n in enumerate(node_order(self.nodes))}

        def ordered(edges):
            return [list(e) for e in sorted(edges, key=lambda e: (rank[e[0]], rank[e[1]]))]

        out = {"name": self.name, "layer": self.layer, "edges": ordered(self.edges)}
        if self.cycles:
            out["cycles"] = {k: ordered(v) for k, v in sorted(self.cycles.items())}
        if self.labels:
            out["labels"] = {k: self.labels[k] for k in sorted(self.labels)}
        if self.reconstructed:
            out["reconstructed"] = True
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> ModelDefinition:
        try:
            edges = [tuple(e) for e in data["edges"]]
            if any(len(e) != 2 for e in edges):
                raise ModelError("every edge must be a [from, to] pair")
            return cls(
                name=str(data.get("name", "model")),
                layer=data.get("layer", "core"),
                edges=frozenset(edges),
                cycles={k: [tuple(e) for e in v] for k, v in data.get("cycles", {}).items()},
                labels=dict(data.get("labels", {})),
                reconstructed=bool(data.get("reconstructed", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed model definition: {exc}") from None


def _reach(edges: Iterable[tuple[str, str]], source: str) -> set[str]:
    adj: dict[str, list[str]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    seen = {source}
    stack = [source]
    while stack:
        for nxt in adj.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def load_definition(path) -> ModelDefinition:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc.msg})") from None
    return ModelDefinition.from_dict(data)


def _builtin(name: str) -> ModelDefinition:
    ref = resources.files("convmine") / "data" / "models" / f"{name}.json"
    return ModelDefinition.from_dict(json.loads(ref.read_text(encoding="utf-8")))


def builtin_qrfa() -> ModelDefinition:
    return _builtin("qrfa")


def builtin_cor() -> ModelDefinition:
    """COR model over its 11 speech acts; topology is a reconstruction."""
    return _builtin("cor")


def load_model(selector: str) -> ModelDefinition:
    """``qrfa``, ``cor`` or a path to a model-definition JSON file."""
    if selector.lower() == "qrfa":
        return builtin_qrfa()
    if selector.lower() == "cor":
        return builtin_cor()
    if not Path(selector).exists():
        raise ModelError(f"no such model file {selector!r}")
    return load_definition(selector)


# -- Petri nets ------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    id: str
    label: str | None
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    @property
    def visible(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class ProcessNet:
    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial_marking: tuple[tuple[str, int], ...]
    final_marking: tuple[tuple[str, int], ...]
    name: str = "net"
    reconstructed: bool = False

    def __post_init__(self):
        places = set(self.places)
        if len(places) != len(self.places):
            raise ModelError("duplicate place names")
        ids = [t.id for t in self.transitions]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate transition ids")
        for t in self.transitions:
            for p in t.inputs + t.outputs:
                if p not in places:
                    raise ModelError(f"transition {t.id!r} touches unknown place {p!r}")
        object.__setattr__(self, "initial_marking", _marking(self.initial_marking))
        object.__setattr__(self, "final_marking", _marking(self.final_marking))

    @property
    def alphabet(self) -> frozenset[str]:
        return frozenset(t.label for t in self.transitions if t.label is not None)

    def enabled(self, marking) -> list[Transition]:
        m = dict(marking)
        out = []
        for t in self.transitions:
            need = Counter(t.inputs)
            if all(m.get(p, 0) >= k for p, k in need.items()):
                out.append(t)
        return out

    def fire(self, marking, t: Transition) -> tuple[tuple[str, int], ...]:
        m = Counter(dict(marking))
        m.subtract(Counter(t.inputs))
        if any(v < 0 for v in m.values()):
            raise ModelError(f"transition {t.id!r} not enabled")
        m.update(Counter(t.outputs))
        return _marking(m)

    def is_state_machine(self) -> bool:
        return (
            all(len(t.inputs) == 1 and len(t.outputs) == 1 for t in self.transitions)
            and _tokens(self.initial_marking) == 1
            and _tokens(self.final_marking) == 1
        )


def _marking(m) -> tuple[tuple[str, int], ...]:
    items = m.items() if isinstance(m, Mapping) else m
    return tuple(sorted((p, int(k)) for p, k in items if k))


def _tokens(m) -> int:
    return sum(k for _, k in m)


def from_definition(definition: ModelDefinition, layer: Layer | None = None) -> ProcessNet:
    """State-machine net with one place per node.

    Edges into a labelled node become visible transitions carrying that
    node's label; edges into END become invisible transitions. Passing
    ``layer="core"`` for a fine-layer model projects labels to the core layer.
    """
    project = layer == "core" and definition.layer == "fine"
    places = tuple(node_order(definition.nodes))
    rank = {n: i for i, n in enumerate(places)}
    transitions = []
    for a, b in sorted(definition.edges, key=lambda e: (rank[e[0]], rank[e[1]])):
        if b == END:
            transitions.append(Transition(f"tau:{a}->{b}", None, (a,), (b,)))
        else:
            label = definition.label_of(b)
            if project:
                label = strip_event(label)
            transitions.append(Transition(f"{a}->{b}", label, (a,), (b,)))
    return ProcessNet(
        places,
        tuple(transitions),
        ((START, 1),),
        ((END, 1),),
        name=definition.name,
        reconstructed=definition.reconstructed,
    )


def from_transition_graph(
    graph: TransitionGraph, min_edge_freq: float = 1, name: str = "discovered", relative: bool = False
) -> tuple[ModelDefinition, list[str]]:
    """Threshold a discovered graph into a model definition.

    Returns the definition and the sorted list of nodes pruned because they
    no longer lie on a START..END path.
    """
    kept = extract_model(graph, min_edge_freq, relative=relative).edges
    fwd = _reach(kept, START)
    if END not in fwd:
        raise ModelError("START cannot reach END after thresholding")
    bwd = _reach(((b, a) for a, b in kept), END)
    useful = fwd & bwd
    edges = frozenset(e for e in kept if e[0] in useful and e[1] in useful)
    all_nodes = {n for e in kept for n in e}
    pruned = sorted(all_nodes - useful)
    return ModelDefinition(name, graph.layer, edges), pruned


# -- trace generation ------------------------------------------------------

def _distance_to_end(definition: ModelDefinition) -> dict[str, int]:
    rev: dict[str, list[str]] = {}
    for a, b in definition.edges:
        rev.setdefault(b, []).append(a)
    dist = {END: 0}
    queue = deque([END])
    while queue:
        node = queue.popleft()
        for prev in rev.get(node, ()):
            if prev not in dist:
                dist[prev] = dist[node] + 1
                queue.append(prev)
    return dist


def generate_traces(
    definition: ModelDefinition, n: int, max_len: int = 50, seed: int = 0, id_prefix: str = "g"
) -> EventLog:
    """Uniform random walks from START to END.

    Once a walk has emitted ``max_len`` events it only takes successors on a
    shortest path to END, so every walk terminates inside the model.
    """
    if n < 1 or max_len < 1:
        raise ValueError("n and max_len must be >= 1")
    rng = random.Random(seed)
    succ = definition.successors()
    dist = _distance_to_end(definition)
    width = len(str(n - 1))
    traces = []
    for k in range(n):
        node = START
        events: list[str] = []
        while True:
            options = succ[node]
            if len(events) >= max_len:
                best = min(dist[o] for o in options)
                options = [o for o in options if dist[o] == best]
            node = options[0] if len(options) == 1 else rng.choice(options)
            if node == END:
                break
            events.append(definition.label_of(node))
        traces.append(Trace(f"{id_prefix}{k:0{width}d}", events))
    return EventLog(traces, definition.layer)


# -- DOT -------------------------------------------------------------------

MIN_OPACITY = 0x26


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(obj: ModelDefinition | TransitionGraph, name: str | None = None) -> str:
    """Render a model or a discovered graph as a DOT digraph.

    Graph edges are labelled with their counts and drawn with opacity scaled
    linearly between the least and most frequent edge.
    """
    if isinstance(obj, ModelDefinition):
        title = name or obj.name
        nodes = node_order(obj.nodes)
        rank = {n: i for i, n in enumerate(nodes)}
        edges = [(a, b, None) for a, b in sorted(obj.edges, key=lambda e: (rank[e[0]], rank[e[1]]))]
        labels = obj.labels
    elif isinstance(obj, TransitionGraph):
        title = name or "flows"
        nodes = node_order(obj.nodes)
        edges = obj.sorted_edges()
        labels = {}
    else:
        raise TypeError(f"cannot render {type(obj).__name__} as DOT")

    lines = [f"digraph {_q(title)} {{", "  rankdir=LR;", "  node [shape=ellipse];"]
    for node in nodes:
        attrs = []
        if node in (START, END):
            attrs.append("shape=box")
        if node in labels and labels[node] != node:
            attrs.append(f"label={_q(node + chr(10) + labels[node])}")
        lines.append(f"  {_q(node)}" + (f" [{', '.join(attrs)}]" if attrs else "") + ";")
    freqs = [f for _, _, f in edges if f is not None]
    lo, hi = (min(freqs), max(freqs)) if freqs else (0, 0)
    for a, b, f in edges:
        if f is None:
            lines.append(f"  {_q(a)} -> {_q(b)};")
            continue
        alpha = 0xFF if hi == lo else round(MIN_OPACITY + (f - lo) * (0xFF - MIN_OPACITY) / (hi - lo))
        lines.append(f'  {_q(a)} -> {_q(b)} [label="{f}", color="#000000{alpha:02x}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
