"""Prompt-batch consumption and score-file emission.

Reads the job file rendered by the pipeline's ``prompts`` command, expands
each answer token X into the {" X", "X"} variant pair, scores every variant,
and writes one score record per job in job order. Failures are collected
into a manifest instead of aborting the batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .scorers import CausalScorer

__all__ = ["ScoringJob", "BatchManifest", "expand_variants", "read_jobs", "run_batch"]


@dataclass(frozen=True)
class ScoringJob:
    """One prompt with ordered candidate completions per answer key.

    There are deliberately no sampling parameters here: jobs are scored by
    sequence likelihood only.
    """

    kind: str
    category: str
    prompt: str
    variants: Mapping[str, tuple[str, ...]]
    meta: Mapping[str, object]


@dataclass
class BatchManifest:
    records_written: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def expand_variants(token: str) -> tuple[str, ...]:
    """Answer token X scores as both " X" and "X"."""
    return (f" {token}", token)


def read_jobs(path: str | Path) -> list[ScoringJob]:
    """Parse a prompt-batch file (one JSON job per line)."""
    jobs = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"jobs line {line_no}: invalid JSON ({exc.msg})") from None
        kind = obj.get("kind")
        answers = obj.get("answers")
        if kind not in ("ab", "yesno") or not isinstance(answers, dict):
            raise ValueError(f"jobs line {line_no}: need kind ab|yesno and answers")
        expected_keys = ("a", "b") if kind == "ab" else ("yes", "no")
        if set(answers) != set(expected_keys):
            raise ValueError(
                f"jobs line {line_no}: {kind} job must carry answers {expected_keys}"
            )
        if kind == "ab":
            meta = {
                "brand_a": obj["brand_a"],
                "brand_b": obj["brand_b"],
                "template_id": obj["template_id"],
            }
        else:
            meta = {"brand_i": obj["brand_i"], "brand_j": obj["brand_j"]}
        jobs.append(
            ScoringJob(
                kind=kind,
                category=obj["category"],
                prompt=obj["prompt"],
                variants={k: expand_variants(str(v)) for k, v in answers.items()},
                meta=meta,
            )
        )
    return jobs


def _record_for(job: ScoringJob, scorer: CausalScorer) -> dict:
    scored = {
        key: [[v, scorer.sequence_logprob(job.prompt, v)] for v in variants]
        for key, variants in job.variants.items()
    }
    record = {"category": job.category}
    if job.kind == "ab":
        record.update(
            brand_a=job.meta["brand_a"],
            brand_b=job.meta["brand_b"],
            template_id=job.meta["template_id"],
            model_id=scorer.model_id,
            variants_a=scored["a"],
            variants_b=scored["b"],
        )
    else:
        record.update(
            probe_kind="yesno",
            brand_i=job.meta["brand_i"],
            brand_j=job.meta["brand_j"],
            model_id=scorer.model_id,
            variants_yes=scored["yes"],
            variants_no=scored["no"],
        )
    return record


def run_batch(
    jobs: list[ScoringJob],
    scorer: CausalScorer,
    out_path: str | Path,
    header: bool = True,
) -> BatchManifest:
    """Score all jobs and write the score file; emission order is job order.

    Per-job scoring errors are recorded in the returned manifest and the
    remaining jobs still run; callers decide whether a partial batch is
    acceptable (the CLI does not: it exits nonzero).
    """
    manifest = BatchManifest()
    lines = []
    if header:
        add_bos = getattr(scorer, "add_bos", False)
        lines.append(f"# lmscorer model={scorer.model_id} add_bos={add_bos}")
    for index, job in enumerate(jobs):
        try:
            lines.append(json.dumps(_record_for(job, scorer)))
            manifest.records_written += 1
        except Exception as exc:
            manifest.failures.append(
                {"job_index": index, "prompt": job.prompt[:80], "error": str(exc)}
            )
    Path(out_path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return manifest
