#!/usr/bin/env python3
"""Generate the bundled 1,000-document fixture corpus and its mock scripts.

Documents are drawn from six planted themes, each with its own vocabulary,
mixed with shared filler words. Output is fully determined by the seed.
"""
import argparse
import json
import random
from pathlib import Path

THEMES = {
    "climate": ["climate change", "emissions", "carbon", "warming", "glacier", "drought",
                "renewable energy", "solar", "wind farm", "sea level"],
    "economy": ["inflation", "interest rates", "central bank", "unemployment", "recession",
                "stock market", "tariffs", "bond yields", "consumer spending", "wages"],
    "health": ["vaccine", "hospital", "pandemic", "public health", "clinical trial",
               "patients", "nurses", "insurance", "obesity", "mental health"],
    "sports": ["championship", "playoffs", "quarterback", "coach", "stadium",
               "world cup", "olympics", "tournament", "injury", "season opener"],
    "technology": ["artificial intelligence", "smartphone", "semiconductor", "cybersecurity",
                   "software", "data privacy", "startup", "cloud computing", "robotics", "chips"],
    "politics": ["election", "senate", "governor", "campaign", "legislation",
                 "supreme court", "voters", "ballot", "congress", "policy debate"],
}

FILLER = ["the", "a", "of", "and", "in", "to", "officials", "said", "on", "week", "new",
          "report", "city", "people", "year", "after", "with", "many", "local", "plans",
          "recent", "however", "while", "state", "group", "time", "national", "around"]

ADJECTIVES = ["Quiet", "Sudden", "Long", "Uneasy", "Bold", "Slow", "Hidden", "Rising",
              "Fading", "New", "Old", "Open"]


def make_document(rng, index, label):
    vocab = THEMES[label]
    words = []
    for _ in range(rng.randint(40, 90)):
        words.append(rng.choice(vocab) if rng.random() < 0.25 else rng.choice(FILLER))
    headline = rng.choice(vocab).title()
    title = f"{rng.choice(ADJECTIVES)} {headline} Story {index:04d}"
    return {"id": f"doc-{index:04d}", "title": title, "text": " ".join(words) + ".", "label": label}


def topics_reply(docs):
    by_label = {}
    for d in docs:
        by_label.setdefault(d["label"], []).append(d["title"])
    topics = []
    for label, vocab in THEMES.items():
        topics.append({
            "topic_summary": f"Coverage of {label} themes such as {vocab[0]} and {vocab[1]}.",
            "keywords": vocab[:8],
            "source_titles": by_label[label][:4],
        })
    return "Here are the topics:\n```json\n" + json.dumps(topics, indent=2) + "\n```\n"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    parser.add_argument("--seed", type=int, default=20240611)
    parser.add_argument("--count", type=int, default=1000)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    labels = list(THEMES)
    docs = [make_document(rng, i, rng.choice(labels)) for i in range(args.count)]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "corpus_1000.jsonl", "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d, ensure_ascii=False) + "\n")

    generation = {"default": topics_reply(docs)}
    with open(args.out_dir / "mock_generation.json", "w", encoding="utf-8") as f:
        json.dump(generation, f, indent=2)
        f.write("\n")

    rules = []
    for i, label in enumerate(labels):
        scores = {"coherence": 3 + i % 3, "conciseness": 4 + i % 2, "informativeness": 2 + i % 4}
        rules.append({"contains": f"Coverage of {label} themes", "response": json.dumps(scores)})
    judge = {"rules": rules, "default": json.dumps({"coherence": 3, "concise": 3, "informative": 3})}
    with open(args.out_dir / "mock_judge.json", "w", encoding="utf-8") as f:
        json.dump(judge, f, indent=2)
        f.write("\n")

    config = {
        "corpus": "corpus_1000.jsonl",
        "out": "run",
        "sampling": {"strategy": "stratified", "seed": 7, "budget_tokens": 32000},
        "generation": {"backend": "mock", "mock_script": "mock_generation.json", "model": "mock-generator"},
        "judge": {"backend": "mock", "mock_script": "mock_judge.json", "model": "mock-judge"},
        "assignment": {"threshold_m": 1},
        "metrics": {"top_n": 10, "top_k": 10, "salience": "reciprocal_rank"},
    }
    with open(args.out_dir / "mock_run.json", "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
