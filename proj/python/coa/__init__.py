"""Structured-response parsing, verifiable rewards, GRPO terms and evaluation metrics."""

from ._core import (
    FormatError,
    aggregate_report,
    apportion,
    clipped_surrogate_term,
    composite_reward,
    compute_advantages,
    example_prf,
    extract_answer,
    extract_entities,
    grpo_objective,
    kl_penalty,
    lexicon_scan,
    parse_coa,
    render_coa,
    run_cli,
    task_reward,
)

__all__ = [
    "FormatError",
    "aggregate_report",
    "apportion",
    "clipped_surrogate_term",
    "composite_reward",
    "compute_advantages",
    "example_prf",
    "extract_answer",
    "extract_entities",
    "grpo_objective",
    "kl_penalty",
    "lexicon_scan",
    "parse_coa",
    "render_coa",
    "run_cli",
    "task_reward",
]
