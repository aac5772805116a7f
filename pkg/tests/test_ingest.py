import json
import warnings

import pytest

from convmine.ingest import (
    BUILTIN_MAPPINGS,
    MappingTable,
    ParseError,
    RawConversation,
    RawUtterance,
    UnmappedLabelError,
    apply_mapping,
    builtin_mapping,
    dumps_transcripts,
    parse_gold,
    parse_mapping,
    parse_transcripts,
    raw_statistics,
    to_raw,
    write_transcripts,
)
from convmine.log import Label, LabelSideWarning


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


def rec(cid, *utts, success=None):
    return {
        "id": cid,
        "success": success,
        "utterances": [{"speaker": s, "text": None, "labels": list(ls)} for s, ls in utts],
    }


def test_parse_jsonl_preserves_order(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [rec("c2", ("user", ["a"])), rec("c1", ("agent", ["b"]), success=True)])
    convs = parse_transcripts(p)
    assert [c.id for c in convs] == ["c2", "c1"]
    assert convs[1].gold_success is True
    assert convs[0].raw_utterances[0] == RawUtterance("user", ("a",), None)


def test_duplicate_id_names_it(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [rec("c1", ("user", ["a"])), rec("c1", ("user", ["b"]))])
    with pytest.raises(ParseError, match="c1"):
        parse_transcripts(p)


def test_empty_conversation_is_a_parse_error(tmp_path):
    p = write_jsonl(tmp_path / "t.jsonl", [rec("c1", ("user", ["a"])), {"id": "c2", "utterances": []}])
    with pytest.raises(ParseError, match="empty conversation") as exc:
        parse_transcripts(p)
    assert exc.value.line == 2


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text(json.dumps(rec("c1", ("user", ["a"]))) + "\n{oops\n")
    with pytest.raises(ParseError) as exc:
        parse_transcripts(p)
    assert exc.value.line == 2


def test_parse_csv_groups_and_sorts(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(
        "conversation_id,turn_index,speaker,labels,text,success\n"
        "c1,1,agent,inform|offer,here,true\n"
        "c1,0,user,inform,hi,true\n"
        "c2,0,user,reqalts,,\n"
    )
    convs = parse_transcripts(p)
    assert [c.id for c in convs] == ["c1", "c2"]
    assert convs[0].raw_utterances[0].labels == ("inform",)
    assert convs[0].raw_utterances[1].labels == ("inform", "offer")
    assert convs[0].gold_success is True
    assert convs[1].gold_success is None
    assert convs[1].raw_utterances[0].text is None


def test_csv_non_contiguous_id_is_duplicate(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(
        "conversation_id,turn_index,speaker,labels,text,success\n"
        "c1,0,user,a,,\nc2,0,user,a,,\nc1,1,user,a,,\n"
    )
    with pytest.raises(ParseError, match="c1"):
        parse_transcripts(p)


def test_parse_mapping_rows(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("source_label,core,sub\ncanthelp,A,Empty\nexpl-conf,R,Understand\nbye,F,\n")
    table = parse_mapping(p)
    assert table.entries["canthelp"] == Label.parse("A:Empty")
    assert table.entries["expl-conf"] == Label.parse("R:Understand")
    assert table.entries["bye"] == Label.parse("F")


@pytest.mark.parametrize(
    "row, needle",
    [("foo,Q,Offer", "Offer is not a sublabel of Q"), ("foo,X,", "unknown core"), ("foo,Q,Nope", "unknown sublabel")],
)
def test_parse_mapping_rejects_bad_rows(tmp_path, row, needle):
    p = tmp_path / "m.csv"
    p.write_text(f"source_label,core,sub\n{row}\n")
    with pytest.raises(ParseError, match=needle) as exc:
        parse_mapping(p)
    assert "foo" in str(exc.value)


def test_parse_mapping_rejects_duplicates(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("source_label,core,sub\nfoo,Q,\nfoo,A,\n")
    with pytest.raises(ParseError, match="duplicate"):
        parse_mapping(p)


@pytest.mark.parametrize("name", BUILTIN_MAPPINGS)
def test_builtin_tables_load(name):
    table = builtin_mapping(name)
    assert table.entries


@pytest.mark.parametrize(
    "name, size", [("cor", 11), ("scs", 13), ("ode", 18), ("dstc1", 32), ("dstc2", 22)]
)
def test_builtin_table_sizes(name, size):
    # one entry per cell of the published alignment table
    assert len(builtin_mapping(name).entries) == size


def test_builtin_table_cells():
    dstc2 = builtin_mapping("dstc2")
    assert dstc2.lookup("reqalts", "user") == Label.parse("Q:Information")
    assert dstc2.lookup("canthelp", "agent") == Label.parse("A:Empty")
    assert dstc2.lookup("expl-conf", "agent") == Label.parse("R:Understand")
    assert dstc2.lookup("inform", "user") == Label.parse("Q:Information")
    assert dstc2.lookup("inform", "agent") == Label.parse("A:Results")
    cor = builtin_mapping("cor")
    assert cor.lookup("accept", "user") == Label.parse("F:Positive")
    assert cor.lookup("withdraw", "agent") == Label.parse("R:Offer")
    assert cor.lookup("reject", "agent") == Label.parse("A:Empty")
    # COR has no Request/Understand cell
    assert not any(str(v) == "R:Understand" for v in cor.entries.values())


def raw(cid, *utts):
    return RawConversation(cid, [RawUtterance(s, tuple(ls)) for s, ls in utts])


def test_apply_mapping_basic():
    convs, reports = apply_mapping([raw("c1", ("user", ["reqalts"]), ("agent", ["offer"]))], builtin_mapping("dstc2"))
    assert reports == []
    assert [str(l) for u in convs[0].utterances for l in u.labels] == ["Q:Information", "A:Results"]


def test_apply_mapping_error_policy():
    with pytest.raises(UnmappedLabelError) as exc:
        apply_mapping([raw("c1", ("user", ["reqalts"]), ("user", ["zzz"]))], builtin_mapping("dstc2"))
    assert exc.value.report.source_label == "zzz"
    assert exc.value.report.position == 1


def test_apply_mapping_drop_event():
    table = builtin_mapping("dstc2").with_policy("drop_event")
    convs, reports = apply_mapping(
        [raw("c1", ("user", ["reqalts", "zzz"]), ("agent", ["offer"]))], table
    )
    assert len(convs[0].utterances) == 2
    assert [(r.source_label, r.conversation_id, r.position) for r in reports] == [("zzz", "c1", 0)]


def test_drop_event_drops_emptied_utterance():
    table = builtin_mapping("dstc2").with_policy("drop_event")
    convs, reports = apply_mapping([raw("c1", ("user", ["zzz"]), ("agent", ["offer"]))], table)
    assert len(convs[0].utterances) == 1
    assert {r.source_label for r in reports} == {"zzz", ""}


def test_apply_mapping_drop_trace():
    table = builtin_mapping("dstc2").with_policy("drop_trace")
    convs, reports = apply_mapping(
        [raw("c1", ("user", ["zzz"])), raw("c2", ("user", ["reqalts"]))], table
    )
    assert [c.id for c in convs] == ["c2"]
    assert reports[0].conversation_id == "c1"


def test_apply_mapping_never_invents_labels():
    table = builtin_mapping("ode").with_policy("drop_event")
    rcs = [raw("c1", ("user", ["set(keywords)", "x"]), ("agent", ["top(keywords)", "confirm()"]))]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelSideWarning)
        convs, _ = apply_mapping(rcs, table)
    allowed = set(table.entries.values())
    assert all(l in allowed for c in convs for u in c.utterances for l in u.labels)


def test_whitespace_trimmed_case_sensitive():
    table = MappingTable("t", {"Ack": Label.parse("F")})
    assert table.lookup("  Ack ") == Label.parse("F")
    assert table.lookup("ack") is None


def test_normalized_round_trip(tmp_path):
    rcs = [
        raw("c1", ("user", ["reqalts"]), ("agent", ["inform", "impl-conf"])),
        RawConversation("c2", [RawUtterance("user", ("thankyou",), "thanks!")], True),
    ]
    convs, _ = apply_mapping(rcs, builtin_mapping("dstc2"))
    path = tmp_path / "norm.jsonl"
    write_transcripts(convs, path)
    back = parse_transcripts(path)
    assert back == to_raw(convs)
    # and mapping the normalized form again is the identity
    again, _ = apply_mapping(back, builtin_mapping("qrfa"))
    assert again == convs
    assert dumps_transcripts(back) == path.read_text()


def test_gold_sidecar(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("conversation_id,success\nc1,true\nc2,0\nc3,\n")
    assert parse_gold(p) == {"c1": True, "c2": False}


def test_raw_statistics():
    rcs = [raw("c1", ("user", ["a", "b"]), ("agent", ["c"])), raw("c2", ("user", ["a"]))]
    assert raw_statistics(rcs) == {"dialogues": 2, "utterances": 3, "distinct_labels": 3}
