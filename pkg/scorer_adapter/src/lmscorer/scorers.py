"""Scoring backends: local causal LMs, a hash-based reference model, and a
thin remote client.

Every backend exposes one method, ``sequence_logprob(prompt, completion)``,
returning the sum of completion-token log-probabilities under the standard
autoregressive factorization. Scoring is likelihood-only: no sampling, no
decoding, and repeated calls return identical values. Backends never
post-process scores (no max-reduction, no softmax); that arithmetic belongs
to the consumer of the score file.
"""

from __future__ import annotations

import hashlib
import math
from typing import Protocol

from .errors import ModelLoadFailure, ScorerError, TokenizationMismatch

__all__ = [
    "CausalScorer",
    "ReferenceScorer",
    "TransformersScorer",
    "RemoteScorer",
]


class CausalScorer(Protocol):
    model_id: str

    def sequence_logprob(self, prompt: str, completion: str) -> float: ...


class ReferenceScorer:
    """Deterministic byte-level language model built from a keyed hash.

    Next-byte logits are derived from blake2b over (seed, recent context,
    candidate byte), so the distribution is a proper softmax over 256
    symbols: scores are always negative, reproducible everywhere, and need
    no model weights. Intended for tests, fixtures, and pipeline dry runs.
    """

    _CONTEXT_BYTES = 12
    _LOGIT_SCALE = 4.0

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.model_id = f"reference-hash-lm:{seed}"
        self._key = seed.to_bytes(8, "little", signed=False)

    def _logits(self, context: bytes) -> list[float]:
        tail = context[-self._CONTEXT_BYTES:]
        out = []
        for byte in range(256):
            digest = hashlib.blake2b(
                tail + bytes([byte]), digest_size=4, key=self._key
            ).digest()
            out.append(int.from_bytes(digest, "big") / 0xFFFFFFFF * self._LOGIT_SCALE)
        return out

    def _log_softmax_at(self, context: bytes, byte: int) -> float:
        logits = self._logits(context)
        m = max(logits)
        log_z = m + math.log(sum(math.exp(x - m) for x in logits))
        return logits[byte] - log_z

    def sequence_logprob(self, prompt: str, completion: str) -> float:
        context = prompt.encode("utf-8")
        total = 0.0
        for byte in completion.encode("utf-8"):
            total += self._log_softmax_at(context, byte)
            context += bytes([byte])
        return total


class TransformersScorer:
    """Scores completions under a local causal LM with one canonical
    tokenization of prompt+completion.

    The prompt is encoded alone and as a prefix of the joint encoding; if
    the joint encoding does not extend the prompt encoding token-for-token,
    the completion cannot be scored and TokenizationMismatch is raised.
    ``add_bos`` is recorded by callers into the score-file header for
    auditability; it defaults to False so the encoding is exactly the
    prompt text.
    """

    def __init__(self, model, tokenizer, model_id: str, add_bos: bool = False):
        self.model = model
        self.tokenizer = tokenizer
        self.model_id = model_id
        self.add_bos = add_bos
        self.model.eval()

    @classmethod
    def from_pretrained(cls, model_id: str, add_bos: bool = False) -> "TransformersScorer":
        try:
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadFailure(f"transformers is not installed: {exc}") from exc
        try:
            tokenizer = AutoTokenizer.from_pretrained(model_id)
            model = AutoModelForCausalLM.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadFailure(f"cannot load {model_id!r}: {exc}") from exc
        return cls(model, tokenizer, model_id=model_id, add_bos=add_bos)

    def _encode(self, text: str) -> list[int]:
        return list(self.tokenizer.encode(text, add_special_tokens=False))

    def sequence_logprob(self, prompt: str, completion: str) -> float:
        if completion == "":
            return 0.0
        import torch

        prompt_ids = self._encode(prompt)
        full_ids = self._encode(prompt + completion)
        if self.add_bos:
            bos = [int(self.tokenizer.bos_token_id)]
            prompt_ids = bos + prompt_ids
            full_ids = bos + full_ids
        if full_ids[: len(prompt_ids)] != prompt_ids:
            raise TokenizationMismatch(
                f"joint encoding does not extend the prompt encoding for "
                f"completion {completion!r}"
            )
        if len(full_ids) == len(prompt_ids):
            raise TokenizationMismatch(
                f"completion {completion!r} contributes no tokens"
            )
        with torch.no_grad():
            ids = torch.tensor([full_ids], dtype=torch.long)
            logits = self.model(input_ids=ids).logits[0]
            logprobs = torch.log_softmax(logits.double(), dim=-1)
        total = 0.0
        for pos in range(len(prompt_ids), len(full_ids)):
            total += float(logprobs[pos - 1, full_ids[pos]])
        return total


class RemoteScorer:
    """Thin client for a scoring endpoint speaking the same record schema.

    POSTs {"prompt", "completion"} to ``base_url`` and expects
    {"logprob": <float>}. Exists as a sensitivity mode for endpoints whose
    weights are not local; determinism is then the endpoint's promise, not
    ours.
    """

    def __init__(self, base_url: str, model_id: str | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id or self.base_url
        self.timeout = timeout

    def sequence_logprob(self, prompt: str, completion: str) -> float:
        try:
            import requests
        except ImportError as exc:
            raise ModelLoadFailure(f"requests is not installed: {exc}") from exc
        response = requests.post(
            self.base_url,
            json={"prompt": prompt, "completion": completion},
            timeout=self.timeout,
        )
        if response.status_code != 200:
            raise ScorerError(
                f"scoring endpoint returned {response.status_code}: {response.text[:200]}"
            )
        payload = response.json()
        if "logprob" not in payload:
            raise ScorerError(f"endpoint reply lacks 'logprob': {payload!r}")
        return float(payload["logprob"])
