import json
import os
import pathlib

import pytest

import topiccards as tc

FIXTURES = pathlib.Path(os.environ.get("TOPICCARDS_FIXTURE_DIR", pathlib.Path(__file__).parents[1] / "fixtures"))


@pytest.fixture(scope="module")
def corpus():
    return tc.load_corpus(FIXTURES / "corpus_1000.jsonl")


@pytest.fixture(scope="module")
def topics():
    raw = (FIXTURES / "parser" / "ok_01_clean.txt").read_text(encoding="utf-8")
    return tc.parse_topic_cards(raw)


def test_tokenize_and_fold():
    assert tc.tokenize("Hello, World! 42") == ["hello", "world", "42"]
    assert tc.fold_case("ÄBC") == "äbc"


def test_quotas_sum_to_total():
    quotas = tc.largest_remainder_quotas([70, 30], 10)
    assert quotas == [7, 3]
    assert sum(tc.largest_remainder_quotas([5, 3, 2], 7)) == 7


def test_entropy_uniform():
    assert tc.entropy([0.25] * 4) == pytest.approx(1.3862943611198906)


def test_corpus_loads(corpus):
    assert len(corpus) == 1000
    assert corpus.ids()[0] == "doc-0000"


def test_sample_is_deterministic(corpus):
    a = tc.draw_sample(corpus, budget_tokens=8000, seed=3, strategy="stratified")
    b = tc.draw_sample(corpus, budget_tokens=8000, seed=3, strategy="stratified")
    assert a == b
    assert a["doc_ids"]
    assert a["estimated_tokens"] <= 8000 - 1500


def test_prompt_is_exposed():
    assert "–" in tc.generation_prompt()


def test_parse_and_fixtures_agree(topics):
    assert len(topics["topics"]) == 3
    for path in sorted((FIXTURES / "parser").glob("ok_*.txt")):
        assert tc.parse_topic_cards(path.read_text(encoding="utf-8"))["topics"] == topics["topics"], path.name
    for path in sorted((FIXTURES / "parser").glob("fail_*.txt")):
        with pytest.raises(tc.ParseFailure):
            tc.parse_topic_cards(path.read_text(encoding="utf-8"))


def test_parse_failure_is_package_error():
    with pytest.raises(tc.Error):
        tc.parse_topic_cards("I'm sorry, I can't help with that.")


def test_judge_scores():
    s = tc.parse_judge_scores('{"coherence": 5, "concise": 4, "informative": 3}')
    assert (s["coherence"], s["concise"], s["informative"]) == (5, 4, 3)
    with pytest.raises(tc.ParseFailure):
        tc.parse_judge_scores('{"coherence": 6, "concise": 4, "informative": 3}')


def test_diversity():
    assert tc.topic_diversity([["a", "b"], ["c", "d"]], top_k=2) == 1.0
    assert tc.topic_diversity([["a", "b"], ["a", "b"]], top_k=2) == 0.5


def test_full_pipeline(tmp_path):
    run_dir, executed = tc.run_pipeline(FIXTURES / "mock_run.json", out_dir=tmp_path / "run")
    assert all(executed.values())
    report = json.loads((pathlib.Path(run_dir) / "report.json").read_text())
    assert 1.0 <= report["judge"]["coherence"] <= 5.0
    assert report["metadata"]["config_digest"] == tc.config_digest(FIXTURES / "mock_run.json")

    _, again = tc.run_pipeline(FIXTURES / "mock_run.json", out_dir=tmp_path / "run")
    assert not any(again.values())
    _, forced = tc.run_pipeline(FIXTURES / "mock_run.json", out_dir=tmp_path / "run", force=["report"])
    assert [s for s, ran in forced.items() if ran] == ["report"]


def test_evaluate_from_python(corpus):
    reply = json.loads((FIXTURES / "mock_generation.json").read_text(encoding="utf-8"))["default"]
    topics = tc.parse_topic_cards(reply)
    assert tc.validate_topic_set(topics, corpus)["ok"]
    links = tc.assign_documents(corpus, topics)
    assert links
    report = tc.evaluate(corpus, topics)
    assert -1.0 <= report["npmi"]["mean"] <= 1.0
    assert report["diversity"]["value"] == pytest.approx(1.0)


def test_errors_map_to_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"corpus": str(tmp_path / "missing.jsonl"), "generation": {"mock_script": "x.json"}}))
    with pytest.raises(tc.ConfigError):
        tc.run_pipeline(bad)
    assert tc.EXIT_CODES["validation_fatal"] == 5
