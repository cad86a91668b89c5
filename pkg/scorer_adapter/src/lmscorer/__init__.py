"""Deterministic sequence log-probability scoring for probe batches."""

from .batch import BatchManifest, ScoringJob, expand_variants, read_jobs, run_batch
from .errors import ModelLoadFailure, ScorerError, TokenizationMismatch
from .scorers import ReferenceScorer, RemoteScorer, TransformersScorer

__version__ = "0.1.0"
