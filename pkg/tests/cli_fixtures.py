"""Fixture transcripts and a driver that runs every CLI subcommand once."""

import json
from pathlib import Path

from convmine.cli import main

DSTC2_DIALOGUES = [
    ("d1", True, [("user", ["reqalts"]), ("agent", ["offer", "inform"]), ("user", ["thankyou"]), ("agent", ["reqmore"])]),
    ("d2", False, [("user", ["inform"]), ("agent", ["expl-conf"]), ("user", ["affirm"]), ("agent", ["canthelp"])]),
    ("d3", True, [("user", ["request"]), ("agent", ["inform"])]),
    ("d4", None, [("user", ["ack", "inform"]), ("agent", ["request"]), ("user", ["inform"]), ("agent", ["offer"])]),
]


def write_dstc2(path, dialogues=DSTC2_DIALOGUES) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for cid, success, utts in dialogues:
            rec = {
                "id": cid,
                "success": success,
                "utterances": [{"speaker": s, "text": None, "labels": ls} for s, ls in utts],
            }
            fh.write(json.dumps(rec) + "\n")
    return path


def run_every_subcommand(workdir) -> dict[str, bytes]:
    """Run each subcommand on the fixture inputs; return every output file's bytes."""
    w = Path(workdir)
    w.mkdir(parents=True, exist_ok=True)
    src = write_dstc2(w / "dstc2.jsonl")
    (w / "gold.csv").write_text("conversation_id,success\nd1,true\nd2,false\nd3,true\n")
    (w / "pipeline.cfg").write_text(
        "input = dstc2.jsonl\nmapping = builtin:dstc2\nmodels = qrfa, cor\n"
        "gold = gold.csv\nname = dstc2\nnormalized_out = pipe/norm.jsonl\n"
        "report_out = pipe/report.md\nstats_out = pipe/stats.json\n"
    )
    calls = [
        ["ingest", str(src), "--mapping", "builtin:dstc2", "--layer", "core",
         "-o", str(w / "norm.jsonl"), "--stats", str(w / "stats.json")],
        ["discover", str(w / "norm.jsonl"), "--out-dir", str(w / "disc")],
        ["check", str(w / "norm.jsonl"), "--model", "qrfa", "--alignments", "-o", str(w / "check.json")],
        ["check", str(w / "norm.jsonl"), "--model", "cor", "--report", "md", "-o", str(w / "check.md")],
        ["evaluate", "--log", f"dstc2={w / 'norm.jsonl'}", "--gold", f"dstc2={w / 'gold.csv'}",
         "--model", "qrfa", "--model", "cor", "--report", "json", "-o", str(w / "eval.json")],
        ["generate", "-n", "50", "-o", str(w / "gen.jsonl")],
        ["pipeline", str(w / "pipeline.cfg")],
    ]
    for argv in calls:
        code = main(argv)
        if code != 0:
            raise RuntimeError(f"convmine {' '.join(argv)} exited {code}")
    inputs = {"dstc2.jsonl", "gold.csv", "pipeline.cfg"}
    return {
        str(p.relative_to(w)): p.read_bytes()
        for p in sorted(w.rglob("*"))
        if p.is_file() and p.name not in inputs
    }
