"""Command-line front end: score a prompt batch into a score file."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .batch import read_jobs, run_batch
from .errors import ScorerError, UnknownModelSpec
from .scorers import ReferenceScorer, RemoteScorer, TransformersScorer


def build_scorer(spec: str, add_bos: bool):
    """Model selector: ``ref[:seed]``, ``hf:<model_id>``, or ``http(s)://url``."""
    if spec == "ref" or spec.startswith("ref:"):
        seed = int(spec.partition(":")[2]) if ":" in spec else 0
        return ReferenceScorer(seed=seed)
    if spec.startswith("hf:"):
        return TransformersScorer.from_pretrained(spec[3:], add_bos=add_bos)
    if spec.startswith(("http://", "https://")):
        return RemoteScorer(spec)
    raise UnknownModelSpec(
        f"model spec {spec!r} is not ref[:seed], hf:<id>, or an http(s) URL"
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lmscorer",
        description="Deterministic completion scoring for probe batches",
    )
    parser.add_argument("--jobs", required=True, help="prompt batch file (JSONL)")
    parser.add_argument("--out", required=True, help="score file to write")
    parser.add_argument("--model", required=True,
                        help="ref[:seed] | hf:<model_id> | http(s)://endpoint")
    parser.add_argument("--add_bos", action="store_true",
                        help="prepend the tokenizer BOS token (hf models)")
    args = parser.parse_args(argv)

    try:
        scorer = build_scorer(args.model, add_bos=args.add_bos)
        jobs = read_jobs(args.jobs)
        manifest = run_batch(jobs, scorer, args.out)
    except (ScorerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(f"scored {manifest.records_written}/{len(jobs)} jobs into {args.out}")
    if not manifest.ok:
        manifest_path = Path(str(args.out) + ".failures.json")
        manifest_path.write_text(
            json.dumps(manifest.failures, indent=2) + "\n", encoding="utf-8"
        )
        print(
            f"error: {len(manifest.failures)} jobs failed; see {manifest_path}",
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
