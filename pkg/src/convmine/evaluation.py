"""Success prediction from fitness and failure-detection scoring.

Failure is the positive class: a true positive is a conversation predicted to
fail that the annotators also marked as failed. Precision and recall with a
zero denominator are ``None`` (rendered as ``n/a``), never 0 or 1.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import asdict, dataclass

from .conformance import DEFAULT_COST, CostFunction, FitnessReport, log_fitness
from .log import EventLog
from .model import ProcessNet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuccessPrediction:
    conversation_id: str
    predicted_success: bool
    fitness: float


@dataclass(frozen=True)
class ErrorDetectionMetrics:
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float | None
    recall: float | None
    missing_gold: tuple[str, ...] = ()

    @property
    def total(self) -> int:
        return self.true_positives + self.false_positives + self.false_negatives + self.true_negatives


def predict_success(report: FitnessReport, threshold: float = 1.0) -> list[SuccessPrediction]:
    """Predict success when fitness reaches ``threshold`` (default: exact fit)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    return [
        SuccessPrediction(t.conversation_id, t.fitness >= threshold and not t.empty, t.fitness)
        for t in report.traces
    ]


def score_error_detection(
    preds: list[SuccessPrediction], gold: Mapping[str, bool]
) -> ErrorDetectionMetrics:
    tp = fp = fn = tn = 0
    missing = []
    for p in preds:
        if p.conversation_id not in gold:
            missing.append(p.conversation_id)
            continue
        predicted_fail = not p.predicted_success
        actual_fail = not gold[p.conversation_id]
        if predicted_fail and actual_fail:
            tp += 1
        elif predicted_fail:
            fp += 1
        elif actual_fail:
            fn += 1
        else:
            tn += 1
    if missing:
        log.warning("%d predictions have no gold label and were skipped", len(missing))
    if tp + fp + fn + tn == 0:
        raise ValueError("no prediction has a gold label")
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return ErrorDetectionMetrics(tp, fp, fn, tn, precision, recall, tuple(missing))


METRIC_ROWS = (
    ("average_per_case", "Average/case"),
    ("max", "Max."),
    ("min", "Min."),
    ("std_deviation", "Std. Deviation"),
    ("cases_with_value_1", "Cases with value 1"),
)


def dataset_report(
    named_logs: Mapping[str, tuple[EventLog, Mapping[str, bool] | None]],
    models: Mapping[str, ProcessNet],
    cost: CostFunction = DEFAULT_COST,
    threshold: float = 1.0,
    backend: str | None = None,
) -> dict:
    """Fitness and failure-detection blocks for every (model, log) pair."""
    if not named_logs or not models:
        raise ValueError("need at least one log and one model")
    blocks = []
    for mname in sorted(models):
        net = models[mname]
        for lname in sorted(named_logs):
            event_log, gold = named_logs[lname]
            block = {"model": mname, "log": lname, "reconstructed_model": net.reconstructed}
            try:
                report = log_fitness(event_log, net, cost, backend)
            except Exception as exc:  # one bad pair must not sink the others
                block["error"] = f"{type(exc).__name__}: {exc}"
                blocks.append(block)
                continue
            block["traces"] = len(report.traces)
            block["fitness"] = report.aggregates()
            if gold:
                preds = predict_success(report, threshold)
                try:
                    m = score_error_detection(preds, gold)
                except ValueError as exc:
                    block["error_detection"] = {"status": "no gold", "detail": str(exc)}
                else:
                    d = asdict(m)
                    d["missing_gold"] = list(m.missing_gold)
                    d["positive_class"] = "failure"
                    block["error_detection"] = d
            else:
                block["error_detection"] = {"status": "no gold"}
            blocks.append(block)
    return {"threshold": threshold, "blocks": blocks}


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    return f"{v:.2f}"


def report_to_markdown(report: dict) -> str:
    """Metric rows by (log, model) columns."""
    blocks = sorted(report["blocks"], key=lambda b: (b["log"], b["model"]))
    header = ["Metric"] + [f"{b['log']} / {b['model']}" for b in blocks]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for key, title in METRIC_ROWS:
        cells = [title]
        for b in blocks:
            cells.append("error" if "error" in b else _fmt(b["fitness"][key]))
        lines.append("| " + " | ".join(cells) + " |")
    for key, title in (("precision", "Error detection Precision"), ("recall", "Error detection Recall")):
        cells = [title]
        for b in blocks:
            ed = b.get("error_detection")
            if "error" in b:
                cells.append("error")
            elif ed is None or "status" in ed:
                cells.append("no gold")
            else:
                cells.append(_fmt(ed[key]))
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Error detection treats conversation failure as the positive class.")
    recon = sorted({b["model"] for b in blocks if b.get("reconstructed_model")})
    if recon:
        lines.append(f"Reconstructed models (topology read off a diagram): {', '.join(recon)}.")
    for b in blocks:
        if "error" in b:
            lines.append(f"Failed: {b['model']} on {b['log']}: {b['error']}")
    return "\n".join(lines) + "\n"
