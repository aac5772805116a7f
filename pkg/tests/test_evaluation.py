import json
import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from convmine.conformance import FitnessReport, TraceFitness, log_fitness
from convmine.evaluation import (
    SuccessPrediction,
    dataset_report,
    predict_success,
    report_to_json,
    report_to_markdown,
    score_error_detection,
)
from convmine.log import EventLog, Trace
from convmine.model import ProcessNet, Transition, builtin_cor, builtin_qrfa, from_definition

# (predicted success per conversation, gold success per conversation,
#  expected (tp, fp, fn, tn), expected precision, expected recall)
# failure is the positive class: "0" below means failure, "1" success.
FIXTURES = [
    ("1111", "1100", (0, 0, 2, 2), None, 0.0),  # all predicted success, gold failures: recall 0
    ("1111", "1111", (0, 0, 0, 4), None, None),
    ("0000", "0000", (4, 0, 0, 0), 1.0, 1.0),
    ("0000", "1111", (0, 4, 0, 0), 0.0, None),
    ("0001", "0000", (3, 0, 1, 0), 1.0, 0.75),
    ("0", "0", (1, 0, 0, 0), 1.0, 1.0),
    ("1", "0", (0, 0, 1, 0), None, 0.0),
    ("0", "1", (0, 1, 0, 0), 0.0, None),
    ("1", "1", (0, 0, 0, 1), None, None),
    ("0101", "0011", (1, 1, 1, 1), 0.5, 0.5),
    ("00011", "01010", (2, 1, 1, 1), 2 / 3, 2 / 3),
    ("000111", "000000", (3, 0, 3, 0), 1.0, 0.5),
    ("000111", "111111", (0, 3, 0, 3), 0.0, None),
    ("001111", "011111", (1, 1, 0, 4), 0.5, 1.0),
    ("0000000001", "0111111111", (1, 8, 0, 1), 1 / 9, 1.0),
    ("1000000000", "0000000000", (9, 0, 1, 0), 1.0, 0.9),
    ("01", "10", (0, 1, 1, 0), 0.0, 0.0),
    ("0011", "0101", (1, 1, 1, 1), 0.5, 0.5),
    ("111110", "000001", (0, 1, 5, 0), 0.0, 0.0),
    ("0001111", "0010110", (2, 1, 2, 2), 2 / 3, 0.5),
]


def build(pred, gold):
    preds = [SuccessPrediction(f"c{i}", p == "1", 1.0 if p == "1" else 0.5) for i, p in enumerate(pred)]
    return preds, {f"c{i}": g == "1" for i, g in enumerate(gold)}


@pytest.mark.parametrize("pred, gold, cells, precision, recall", FIXTURES)
def test_confusion_fixtures(pred, gold, cells, precision, recall):
    m = score_error_detection(*build(pred, gold))
    assert (m.true_positives, m.false_positives, m.false_negatives, m.true_negatives) == cells
    assert m.total == len(pred)
    if precision is None:
        assert m.precision is None
    else:
        assert m.precision == pytest.approx(precision, abs=1e-12)
    if recall is None:
        assert m.recall is None
    else:
        assert m.recall == pytest.approx(recall, abs=1e-12)


def test_fixture_count():
    assert len(FIXTURES) == 20


def test_missing_gold_is_reported(caplog):
    preds, gold = build("010", "01")
    with caplog.at_level(logging.WARNING):
        m = score_error_detection(preds, gold)
    assert m.missing_gold == ("c2",)
    assert m.total == 2
    assert "no gold" in caplog.text
    with pytest.raises(ValueError):
        score_error_detection(preds, {})


def report_of(values):
    return FitnessReport.build(
        [TraceFitness(f"c{i}", 0 if v == 1 else 1, 1, v) for i, v in enumerate(values)]
    )


def test_predict_success_thresholds():
    rep = report_of([1.0, 0.8])
    assert [p.predicted_success for p in predict_success(rep)] == [True, False]
    assert [p.predicted_success for p in predict_success(rep, 0.8)] == [True, True]
    with pytest.raises(ValueError):
        predict_success(rep, 0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0.01, 1), st.floats(0.01, 1))
def test_threshold_monotone(values, t1, t2):
    lo, hi = sorted((t1, t2))
    rep = report_of(values)
    n_lo = sum(p.predicted_success for p in predict_success(rep, lo))
    n_hi = sum(p.predicted_success for p in predict_success(rep, hi))
    assert n_hi <= n_lo


def test_threshold_one_matches_perfect_fraction():
    net = from_definition(builtin_qrfa())
    log = EventLog([Trace("a", "QA"), Trace("b", "Q"), Trace("c", "QRFA"), Trace("d", "QAX")])
    rep = log_fitness(log, net)
    preds = predict_success(rep)
    assert sum(p.predicted_success for p in preds) / len(preds) == rep.perfect_fraction


def two_logs():
    fit = EventLog([Trace("a", "QA"), Trace("b", "QRFA")], gold={"a": True, "b": False})
    bad = EventLog([Trace("x", "Q"), Trace("y", "QA")])
    return {"synthetic": (fit, fit.gold), "nogold": (bad, None)}


def test_dataset_report_blocks():
    models = {"qrfa": from_definition(builtin_qrfa()), "cor": from_definition(builtin_cor(), "core")}
    rep = dataset_report(two_logs(), models)
    assert [(b["model"], b["log"]) for b in rep["blocks"]] == [
        ("cor", "nogold"), ("cor", "synthetic"), ("qrfa", "nogold"), ("qrfa", "synthetic"),
    ]
    qs = rep["blocks"][3]
    assert qs["fitness"]["average_per_case"] == 1.0
    assert qs["error_detection"]["recall"] == 0.0  # all predicted success, one gold failure
    assert qs["error_detection"]["positive_class"] == "failure"
    assert rep["blocks"][2]["error_detection"] == {"status": "no gold"}
    assert report_to_json(rep) == report_to_json(dataset_report(two_logs(), models))
    md = report_to_markdown(rep)
    assert "no gold" in md and "n/a" in md and "Reconstructed models" in md


def test_dataset_report_isolates_failures():
    broken = ProcessNet(("a", "b"), (Transition("t", "Q", ("b",), ("a",)),), (("a", 1),), (("b", 1),), name="broken")
    rep = dataset_report(two_logs(), {"qrfa": from_definition(builtin_qrfa()), "broken": broken})
    errors = [b for b in rep["blocks"] if "error" in b]
    assert len(errors) == 2 and all(b["model"] == "broken" for b in errors)
    assert len(rep["blocks"]) == 4
    assert "Failed: broken" in report_to_markdown(rep)
    json.loads(report_to_json(rep))
