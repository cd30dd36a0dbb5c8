"""Topic cards: LLM topic generation, keyword assignment and evaluation."""

import json
import os

from . import _core
from ._core import (
    EXIT_CODES,
    ConfigError,
    Corpus,
    Error,
    LlmError,
    ParseFailure,
    StageError,
    ValidationFatal,
    entropy,
    estimate_tokens,
    fold_case,
    largest_remainder_quotas,
    tokenize,
    topic_diversity,
)

__all__ = [
    "EXIT_CODES",
    "ConfigError",
    "Corpus",
    "Error",
    "LlmError",
    "ParseFailure",
    "StageError",
    "ValidationFatal",
    "assign_documents",
    "assignment_accuracy",
    "config_digest",
    "draw_sample",
    "entropy",
    "estimate_tokens",
    "evaluate",
    "fold_case",
    "generation_prompt",
    "largest_remainder_quotas",
    "load_corpus",
    "parse_judge_scores",
    "parse_topic_cards",
    "run_pipeline",
    "tokenize",
    "topic_diversity",
    "validate_topic_set",
]


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def load_corpus(path):
    return Corpus.load(os.fspath(path))


def generation_prompt():
    return _core.generation_prompt()


def draw_sample(corpus, budget_tokens, seed=0, strategy="uniform", overhead_tokens=1500, token_ratio=1.3):
    plan = {
        "strategy": strategy,
        "seed": seed,
        "budget_tokens": budget_tokens,
        "overhead_tokens": overhead_tokens,
        "token_ratio": token_ratio,
    }
    return json.loads(_core.draw_sample(corpus, json.dumps(plan)))


def parse_topic_cards(raw):
    return json.loads(_core.parse_topic_cards(raw))


def validate_topic_set(topics, corpus):
    return json.loads(_core.validate_topic_set(_text(topics), corpus))


def assign_documents(corpus, topics, threshold=1):
    lines = _core.assign_documents(corpus, _text(topics), threshold).splitlines()
    return [json.loads(line) for line in lines if line]


def assignment_accuracy(topics, corpus):
    return json.loads(_core.assignment_accuracy(_text(topics), corpus))


def evaluate(corpus, topics, threshold=1, top_n=10, top_k=10, eps=1e-12, salience="reciprocal_rank"):
    return json.loads(_core.evaluate(corpus, _text(topics), threshold, top_n, top_k, eps, salience))


def parse_judge_scores(raw):
    return json.loads(_core.parse_judge_scores(raw))


def config_digest(config_path):
    return _core.config_digest(os.fspath(config_path))


def run_pipeline(config_path, out_dir=None, stages=(), force=()):
    """Runs the pipeline described by a config file; returns (run_dir, {stage: executed})."""
    out = None if out_dir is None else os.fspath(out_dir)
    run_dir, executed = _core.run_pipeline(os.fspath(config_path), out, list(stages), list(force))
    return os.fspath(run_dir), executed
