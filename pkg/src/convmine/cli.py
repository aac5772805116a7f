"""Command-line entry point: ``convmine <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(parsing, mapping), 3 model error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import sys
from contextlib import redirect_stdout
from pathlib import Path

from . import __version__
from .conformance import CostFunction, log_fitness, optimal_alignment
from .discovery import (
    EmptyLogError,
    directly_follows,
    episodes_to_json,
    extract_model,
    mine_episodes,
    mine_succession,
)
from .evaluation import dataset_report, report_to_json, report_to_markdown
from .ingest import (
    UNMAPPED_POLICIES,
    ParseError,
    UnmappedLabelError,
    apply_mapping,
    dumps_transcripts,
    load_mapping,
    parse_gold,
    parse_transcripts,
    raw_statistics,
)
from .log import Conversation, EventLog, Label, LabelError, Utterance, log_statistics, reduce_to_log
from .model import ModelError, from_definition, generate_traces, load_model, to_dot

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3
DEFAULT_SEED = 20190414

logger = logging.getLogger("convmine")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers ---------------------------------------------------------------

def _write(path, text: str, force: bool) -> None:
    path = Path(path)
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {p}")
    return p


def _load_log(args, path=None) -> EventLog:
    path = _existing(path or args.input)
    raw = parse_transcripts(path, args.format)
    table = load_mapping(args.mapping).with_policy(args.unmapped)
    convs, _ = apply_mapping(raw, table)
    return reduce_to_log(convs, args.layer, args.multilabel, args.dedupe)


def _net_for(selector: str, layer: str):
    definition = load_model(selector)
    compare_layer = "core" if "core" in (layer, definition.layer) else "fine"
    return from_definition(definition, compare_layer), compare_layer


def _align_layers(log: EventLog, compare_layer: str) -> EventLog:
    return log.to_core() if compare_layer == "core" else log


def _cost(args) -> CostFunction:
    try:
        return CostFunction(args.log_cost, args.model_cost)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- subcommands -----------------------------------------------------------

def cmd_ingest(args) -> int:
    raw = parse_transcripts(_existing(args.input), args.format)
    table = load_mapping(args.mapping).with_policy(args.unmapped)
    try:
        convs, reports = apply_mapping(raw, table)
    except UnmappedLabelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.layer == "core":
        convs = [_strip_conversation(c) for c in convs]
    log = reduce_to_log(convs, args.layer, args.multilabel, args.dedupe)
    dropped = [r for r in reports if r.source_label]
    stats = {
        "mapping": table.scheme_name,
        "layer": args.layer,
        "multilabel_policy": args.multilabel,
        "unmapped_policy": args.unmapped,
        "source": raw_statistics(raw),
        "log": log_statistics(log),
        "dropped_events": len(dropped),
        "dropped_utterances": sum(1 for r in reports if not r.source_label and r.position >= 0),
        "dropped_conversations": len(raw) - len(convs),
        "unmapped_labels": sorted({r.source_label for r in dropped}),
    }
    _write(args.output, dumps_transcripts(convs), args.force)
    text = json.dumps(stats, indent=2) + "\n"
    if args.stats:
        _write(args.stats, text, args.force)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _strip_conversation(conv):
    return Conversation(
        conv.id,
        tuple(Utterance(u.speaker, tuple(x.strip() for x in u.labels), u.text) for u in conv.utterances),
        conv.gold_success,
    )


def cmd_discover(args) -> int:
    log = _load_log(args)
    graph = directly_follows(log)
    model_graph = extract_model(graph, args.min_edge_freq, relative=args.relative)
    succession = mine_succession(log)
    episodes = mine_episodes(log, args.max_episode_len, args.min_support, args.occurrences)
    out = Path(args.out_dir)
    outputs = {
        "graph.json": graph.to_json(),
        "graph.dot": to_dot(graph, "flows"),
        "model_graph.json": model_graph.to_json(),
        "model_graph.dot": to_dot(model_graph, "model"),
        "succession.json": succession.to_json(),
        "episodes.json": episodes_to_json(episodes),
    }
    for name in outputs:
        if (out / name).exists() and not args.force:
            raise UsageError(f"{out / name} exists; pass --force to overwrite")
    for name, text in outputs.items():
        _write(out / name, text, True)
    return EXIT_OK


def cmd_check(args) -> int:
    log = _load_log(args)
    net, layer = _net_for(args.model, log.layer)
    log = _align_layers(log, layer)
    report = log_fitness(log, net, _cost(args))
    if args.report == "json":
        data = report.to_dict()
        if args.alignments:
            data["alignments"] = {
                t.conversation_id: [str(m) for m in optimal_alignment(t, net, _cost(args)).moves]
                for t in log.traces
            }
        text = json.dumps(data, indent=2) + "\n"
    else:
        text = report.to_markdown()
    _write(args.output, text, args.force)
    return EXIT_OK


def _pairs(values, what) -> dict[str, str]:
    out = {}
    for item in values or ():
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"{what} must be NAME=PATH, got {item!r}")
        if name in out:
            raise UsageError(f"duplicate {what} name {name!r}")
        out[name] = path
    return out


def _evaluate(args, logs: dict[str, str], golds: dict[str, str], models: list[str]) -> str:
    unknown = set(golds) - set(logs)
    if unknown:
        raise UsageError(f"gold given for unknown logs {sorted(unknown)}")
    named = {}
    for name, path in logs.items():
        log = _load_log(args, path)
        gold = dict(log.gold)
        if name in golds:
            gold.update(parse_gold(_existing(golds[name])))
        named[name] = (log, gold or None)
    nets = {}
    for selector in models:
        definition = load_model(selector)
        nets[definition.name if selector.lower() in ("qrfa", "cor") else selector] = definition
    # compare at the coarsest layer present
    layer = "core" if any(d.layer == "core" for d in nets.values()) or any(
        lg.layer == "core" for lg, _ in named.values()
    ) else "fine"
    named = {k: (_align_layers(lg, layer), g) for k, (lg, g) in named.items()}
    nets = {k: from_definition(d, layer) for k, d in nets.items()}
    report = dataset_report(named, nets, _cost(args), args.threshold)
    return report_to_json(report) if args.report == "json" else report_to_markdown(report)


def cmd_evaluate(args) -> int:
    logs = _pairs(args.log, "--log")
    if not logs:
        raise UsageError("at least one --log NAME=PATH is required")
    text = _evaluate(args, logs, _pairs(args.gold, "--gold"), args.model or ["qrfa"])
    _write(args.output, text, args.force)
    return EXIT_OK


def cmd_generate(args) -> int:
    definition = load_model(args.model)
    log = generate_traces(definition, args.n, args.max_len, args.seed)
    lines = []
    for trace in log.traces:
        utts = [{"speaker": _speaker(e), "text": None, "labels": [e]} for e in trace.events]
        lines.append(json.dumps({"id": trace.conversation_id, "success": None, "utterances": utts}))
    _write(args.output, "\n".join(lines) + "\n", args.force)
    return EXIT_OK


def _speaker(event: str) -> str:
    try:
        return Label.parse(event).core.speaker
    except LabelError:
        return "user"


PIPELINE_KEYS = {
    "input", "format", "mapping", "layer", "multilabel", "unmapped", "dedupe",
    "models", "gold", "name", "normalized_out", "report_out", "report",
    "threshold", "log_cost", "model_cost", "force", "stats_out",
}


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    text = Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string("[pipeline]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    conf = dict(parser["pipeline"])
    unknown = set(conf) - PIPELINE_KEYS
    if unknown:
        raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("input", "normalized_out", "report_out"):
        if key not in conf:
            raise UsageError(f"{path}: missing key {key!r}")
    return conf


def cmd_pipeline(args) -> int:
    conf = read_config(_existing(args.config))
    base = Path(args.config).parent

    def rel(p):
        return str(base / p)

    ns = argparse.Namespace(
        input=rel(conf["input"]),
        format=conf.get("format"),
        mapping=conf.get("mapping", "builtin:qrfa"),
        layer=conf.get("layer", "core"),
        multilabel=conf.get("multilabel", "expand"),
        unmapped=conf.get("unmapped", "error"),
        dedupe=_flag(conf.get("dedupe", "false")),
        output=rel(conf["normalized_out"]),
        stats=None,
        force=args.force or _flag(conf.get("force", "false")),
        report=conf.get("report", "md"),
        threshold=float(conf.get("threshold", "1.0")),
        log_cost=float(conf.get("log_cost", "1")),
        model_cost=float(conf.get("model_cost", "1")),
    )
    if ns.layer not in ("core", "fine") or ns.multilabel not in ("expand", "first") \
            or ns.unmapped not in UNMAPPED_POLICIES or ns.report not in ("json", "md"):
        raise UsageError(f"{args.config}: bad value for layer, multilabel, unmapped or report")
    Path(ns.output).parent.mkdir(parents=True, exist_ok=True)
    code, stats = _capture(cmd_ingest, ns)
    if code != EXIT_OK:
        return code
    if "stats_out" in conf:
        _write(rel(conf["stats_out"]), stats, ns.force)
    # the normalized file is already mapped and layer-stripped
    ns.input, ns.format, ns.mapping = ns.output, "jsonl", "builtin:qrfa"
    name = conf.get("name", Path(conf["input"]).stem)
    golds = {name: rel(conf["gold"])} if "gold" in conf else {}
    models = [m.strip() for m in conf.get("models", "qrfa").split(",") if m.strip()]
    models = [m if m.lower() in ("qrfa", "cor") else rel(m) for m in models]
    text = _evaluate(ns, {name: ns.input}, golds, models)
    _write(rel(conf["report_out"]), text, ns.force)
    return EXIT_OK


def _capture(fn, ns):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = fn(ns)
    return code, buf.getvalue()


def _flag(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


# -- argument parsing ------------------------------------------------------

def _log_options(p, mapping_default="builtin:qrfa"):
    p.add_argument("--format", choices=("jsonl", "csv"), default=None,
                   help="transcript format (default: from file suffix)")
    p.add_argument("--mapping", default=mapping_default,
                   help="builtin:<cor|scs|ode|dstc1|dstc2|qrfa> or a mapping CSV")
    p.add_argument("--layer", choices=("core", "fine"), default="core")
    p.add_argument("--multilabel", choices=("expand", "first"), default="expand")
    p.add_argument("--dedupe", action="store_true",
                   help="collapse identical labels within one utterance")
    p.add_argument("--unmapped", choices=UNMAPPED_POLICIES, default="error")


def _cost_options(p):
    p.add_argument("--log-cost", type=float, default=1.0)
    p.add_argument("--model-cost", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convmine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="map source labels to QRFA and write a normalized transcript")
    p.add_argument("input")
    _log_options(p, mapping_default=None)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats", help="write statistics JSON here instead of stdout")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("discover", help="directly-follows graph, successions and episodes")
    p.add_argument("input")
    _log_options(p)
    p.add_argument("--min-edge-freq", type=float, default=1)
    p.add_argument("--relative", action="store_true", help="threshold is a fraction of the trace count")
    p.add_argument("--max-episode-len", type=int, default=4, choices=(2, 3, 4))
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--occurrences", action="store_true", help="count every episode occurrence")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("check", help="alignment-based fitness of a log against a model")
    p.add_argument("input")
    _log_options(p)
    p.add_argument("--model", default="qrfa", help="qrfa, cor or a model-definition JSON file")
    _cost_options(p)
    p.add_argument("--report", choices=("json", "md"), default="json")
    p.add_argument("--alignments", action="store_true", help="include optimal alignments (json only)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("evaluate", help="fitness and failure detection for several logs and models")
    p.add_argument("--log", action="append", metavar="NAME=PATH")
    p.add_argument("--gold", action="append", metavar="NAME=PATH", help="sidecar conversation_id,success CSV")
    p.add_argument("--model", action="append", help="repeatable; default qrfa")
    _log_options(p)
    _cost_options(p)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--report", choices=("json", "md"), default="md")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="random walks through a model, as a transcript JSONL")
    p.add_argument("--model", default="qrfa")
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--max-len", type=int, default=50)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pipeline", help="ingest, check and evaluate from one config file")
    p.add_argument("config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "mapping", "") is None:
        parser.error("--mapping is required")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, UnmappedLabelError, LabelError, EmptyLogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except KeyError as exc:  # unknown built-in mapping
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
