import pathlib

import pytest

import optbench

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def test_ingest_reports_rejects():
    r = optbench.ingest(FIXTURES / "mini_corpus_bad.jsonl")
    assert len(r["submissions"]) == 8
    assert [x["record"] for x in r["rejects"]] == [4, 5]


def test_pair_counts_match_formulas():
    corpus = FIXTURES / "mini_corpus.jsonl"
    assert len(optbench.build_pairs(corpus, "problem")) == 10
    assert len(optbench.build_pairs(corpus, "user")) == 2
    assert optbench.count_formulas(corpus) == {"user_oriented": 3, "problem_oriented": 11}


def test_metrics():
    assert optbench.speedup(110, 100, True) == pytest.approx(1.1)
    assert optbench.speedup(100, 200, True) == 1.0
    assert optbench.speedup(100, 10, False) == 1.0
    assert optbench.is_optimized(110, 100, True)
    assert not optbench.is_optimized(110, 100.01, True)
    s = optbench.summarize(
        [
            {"candidates": [{"correct": False, "old_ms": 100, "new_ms": 5}, {"correct": True, "old_ms": 100, "new_ms": 50}]},
            {"candidates": [{"correct": True, "old_ms": 100, "new_ms": 95}]},
        ]
    )
    assert s["pct_opt"] == 0.5
    assert s["pct_correct"] == 1.0
    assert optbench.pearson([1, 2, 3], [2, 4, 7]) > 0.98


def test_errors_surface_as_exceptions():
    with pytest.raises(optbench.OptbenchError, match="EmptyInput"):
        optbench.summarize([])
    with pytest.raises(optbench.OptbenchError):
        optbench.ingest(FIXTURES / "does_not_exist.jsonl")


def test_cfg_and_ged():
    loop = "int main(){int s=0; for(int i=0;i<3;i++) s+=i; return s;}"
    g = optbench.cfg(loop)
    assert g["nodes"][:2] == ["Entry", "Exit"]
    assert "LoopHead" in g["nodes"]
    assert optbench.ged(loop, loop) == {"distance": 0.0, "exact": True}
    straight = "int main(){return 0;}"
    assert optbench.ged(loop, straight)["distance"] > 0


def test_anchor_verification_case_study(tmp_path):
    cs = FIXTURES / "case_study1"
    o = optbench.verify(
        "anchor",
        (cs / "slow.cpp").read_text(),
        (cs / "candidate.cpp").read_text(),
        cs / "mock.jsonl",
        tmp_path,
    )
    assert o["passed"] is True
    assert o["iterations_used"] == 1


def test_measure_pair(tmp_path):
    q = FIXTURES / "quadlin"
    m = optbench.measure_pair((q / "slow.cpp").read_text(), (q / "fast.cpp").read_text(), q / "tests" / "q", tmp_path, 1)
    assert m["tests"] == 1
    assert m["fast_correct"]
    assert m["speedup"] > 2.0
