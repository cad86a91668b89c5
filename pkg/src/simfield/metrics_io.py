"""Fixture registry, score-file parsing, and run-report rendering.

Score files are line-delimited JSON, one record per scored probe. Lines
that are blank or start with ``#`` are ignored, which lets scoring
adapters prepend an audit header. A/B records carry ``brand_a``,
``brand_b`` and ``template_id``; yes/no records carry
``probe_kind: "yesno"`` with the ordered ``brand_i``, ``brand_j``. Both
carry ``category``, ``model_id`` and per-answer variant arrays of
``[completion, logprob]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .btl import GroundTruth, mae_pp, rank_desc, spearman
from .errors import (
    DuplicateRecord,
    SchemaViolation,
    UnknownCategory,
)
from .probes import (
    PairwiseMatrices,
    ScoreRecord,
    YesNoRecord,
    attach_yes_matrix,
    binary_prob,
    fuse_templates,
    reduce_variants,
    yes_prob,
)

__all__ = [
    "CategoryFixture",
    "categories",
    "fixture",
    "load_truth",
    "ParsedScores",
    "parse_scores",
    "AggregateResult",
    "aggregate_scores",
    "BrandRow",
    "RunReport",
    "build_report",
    "emit_report",
    "parse_report",
    "data_text",
]


@dataclass(frozen=True)
class CategoryFixture:
    """Brand list and external shares for one probed category."""

    category: str
    brands: tuple[str, ...]
    truth_pct: Mapping[str, float]
    notes: Mapping[str, str]


_CSD = CategoryFixture(
    category="carbonated soft drink",
    brands=(
        "Coca-Cola",
        "Dr Pepper",
        "Sprite",
        "Pepsi-Cola",
        "Diet Coke",
        "Mountain Dew",
        "Coke Zero Sugar",
        "Diet Pepsi",
        "Fanta",
        "Ginger Ale",
    ),
    truth_pct={
        "Coca-Cola": 19.2,
        "Dr Pepper": 8.7,
        "Sprite": 8.03,
        "Pepsi-Cola": 7.97,
        "Diet Coke": 7.8,
        "Mountain Dew": 6.1,
        "Coke Zero Sugar": 4.2,
        "Diet Pepsi": 3.3,
        "Fanta": 2.9,
        "Ginger Ale": 2.3,
    },
    notes={"Ginger Ale": "share sourced from Canada Dry Ginger Ale"},
)

_ENERGY = CategoryFixture(
    category="energy drink",
    brands=("Red Bull", "Monster", "Celsius", "Alani Nu", "Reign", "Rockstar"),
    truth_pct={
        "Red Bull": 36.6,
        "Monster": 27.7,
        "Celsius": 11.8,
        "Alani Nu": 3.6,
        "Reign": 3.0,
        "Rockstar": 3.41,
    },
    notes={"Reign": "Monster sub-brand"},
)

_REGISTRY: dict[str, CategoryFixture] = {
    _CSD.category: _CSD,
    _ENERGY.category: _ENERGY,
}


def categories() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def fixture(category: str) -> CategoryFixture:
    try:
        return _REGISTRY[category]
    except KeyError:
        raise UnknownCategory(
            f"unknown category {category!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def load_truth(category: str) -> GroundTruth:
    """Ground-truth shares normalized to sum to 100.

    Normalization rescales every share by the same factor, so relative order
    is preserved and repeating it is a no-op.
    """
    fx = fixture(category)
    raw = np.array([fx.truth_pct[b] for b in fx.brands], dtype=float)
    shares = raw / raw.sum() * 100.0
    shares.setflags(write=False)
    return GroundTruth(brands=fx.brands, shares_pct=shares)


def data_text(name: str) -> str:
    """Text of a packaged fixture data file."""
    return resources.files("simfield.data").joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class ParsedScores:
    ab: tuple[ScoreRecord, ...]
    yesno: tuple[YesNoRecord, ...]

    def __len__(self) -> int:
        return len(self.ab) + len(self.yesno)


def _parse_variants(obj, key: str, line_no: int) -> tuple[tuple[str, float], ...]:
    raw = obj.get(key)
    if not isinstance(raw, list) or not raw:
        raise SchemaViolation(f"{key} must be a non-empty array", line_no)
    out = []
    for item in raw:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not isinstance(item[0], str)
            or not isinstance(item[1], (int, float))
            or isinstance(item[1], bool)
        ):
            raise SchemaViolation(
                f"{key} entries must be [completion, logprob] pairs", line_no
            )
        lp = float(item[1])
        if math.isnan(lp) or (math.isinf(lp) and lp > 0):
            raise SchemaViolation(
                f"{key} logprob must be finite or -inf, got {lp!r}", line_no
            )
        out.append((item[0], lp))
    return tuple(out)


def _require_str(obj, key: str, line_no: int) -> str:
    v = obj.get(key)
    if not isinstance(v, str) or not v:
        raise SchemaViolation(f"{key} must be a non-empty string", line_no)
    return v


def parse_scores(stream: Iterable[str]) -> ParsedScores:
    """Parse and validate a score file.

    Duplicate records are rejected: A/B on the (category, unordered pair,
    template, model) key and yes/no on the (category, ordered pair, model)
    key.
    """
    ab: list[ScoreRecord] = []
    yn: list[YesNoRecord] = []
    seen_ab = set()
    seen_yn = set()
    for line_no, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON ({exc.msg})", line_no) from None
        if not isinstance(obj, dict):
            raise SchemaViolation("record must be a JSON object", line_no)

        category = _require_str(obj, "category", line_no)
        model_id = _require_str(obj, "model_id", line_no)
        kind = obj.get("probe_kind", "ab")

        if kind == "yesno":
            brand_i = _require_str(obj, "brand_i", line_no)
            brand_j = _require_str(obj, "brand_j", line_no)
            if brand_i == brand_j:
                raise SchemaViolation("brand_i and brand_j must differ", line_no)
            key = (category, brand_i, brand_j, model_id)
            if key in seen_yn:
                raise DuplicateRecord(
                    f"line {line_no}: duplicate yes/no record for {brand_i!r} vs {brand_j!r}"
                )
            seen_yn.add(key)
            yn.append(
                YesNoRecord(
                    category=category,
                    brand_i=brand_i,
                    brand_j=brand_j,
                    variants_yes=_parse_variants(obj, "variants_yes", line_no),
                    variants_no=_parse_variants(obj, "variants_no", line_no),
                    model_id=model_id,
                )
            )
        elif kind == "ab":
            brand_a = _require_str(obj, "brand_a", line_no)
            brand_b = _require_str(obj, "brand_b", line_no)
            if brand_a == brand_b:
                raise SchemaViolation("brand_a and brand_b must differ", line_no)
            tid = obj.get("template_id")
            if not isinstance(tid, int) or isinstance(tid, bool) or not 0 <= tid <= 10:
                raise SchemaViolation(
                    f"template_id must be an integer in [0, 10], got {tid!r}", line_no
                )
            key = (category, frozenset((brand_a, brand_b)), tid, model_id)
            if key in seen_ab:
                raise DuplicateRecord(
                    f"line {line_no}: duplicate record for pair "
                    f"{brand_a!r}/{brand_b!r} template {tid}"
                )
            seen_ab.add(key)
            ab.append(
                ScoreRecord(
                    category=category,
                    brand_a=brand_a,
                    brand_b=brand_b,
                    template_id=tid,
                    variants_a=_parse_variants(obj, "variants_a", line_no),
                    variants_b=_parse_variants(obj, "variants_b", line_no),
                    model_id=model_id,
                )
            )
        else:
            raise SchemaViolation(f"unknown probe_kind {kind!r}", line_no)
    return ParsedScores(ab=tuple(ab), yesno=tuple(yn))


@dataclass(frozen=True)
class AggregateResult:
    matrices: PairwiseMatrices
    model_id: str
    category: str


def aggregate_scores(parsed: ParsedScores, brands=None) -> AggregateResult:
    """Reduce parsed records to (P, C) and, when yes/no records are present,
    the Y matrix.

    The brand order comes from the fixture registry when the category is
    registered, otherwise from the sorted union of record brands (or an
    explicit ``brands`` argument). Records may appear in either slot
    orientation; a record whose slot-A brand has the higher index
    contributes as the complement.
    """
    if not parsed.ab:
        raise SchemaViolation("no A/B records to aggregate")
    cats = {r.category for r in parsed.ab} | {r.category for r in parsed.yesno}
    if len(cats) != 1:
        raise SchemaViolation(f"score file mixes categories: {sorted(cats)}")
    category = next(iter(cats))
    models = {r.model_id for r in parsed.ab} | {r.model_id for r in parsed.yesno}
    if len(models) != 1:
        raise SchemaViolation(f"score file mixes models: {sorted(models)}")
    model_id = next(iter(models))

    if brands is None:
        if category in _REGISTRY:
            brands = _REGISTRY[category].brands
        else:
            seen = {r.brand_a for r in parsed.ab} | {r.brand_b for r in parsed.ab}
            brands = tuple(sorted(seen))
    brands = tuple(brands)
    index = {b: i for i, b in enumerate(brands)}

    def idx(brand: str) -> int:
        try:
            return index[brand]
        except KeyError:
            raise SchemaViolation(
                f"brand {brand!r} not in the {category!r} brand list"
            ) from None

    pair_probs: dict[tuple[int, int], dict[int, float]] = {}
    for rec in parsed.ab:
        a, b = idx(rec.brand_a), idx(rec.brand_b)
        l_a, l_b = reduce_variants(rec)
        p = binary_prob(l_a, l_b)
        if a < b:
            pair_probs.setdefault((a, b), {})[rec.template_id] = p
        else:
            pair_probs.setdefault((b, a), {})[rec.template_id] = 1.0 - p
    matrices = fuse_templates(brands, pair_probs)

    if parsed.yesno:
        yes_probs = {}
        for rec in parsed.yesno:
            i, j = idx(rec.brand_i), idx(rec.brand_j)
            l_yes = max(lp for _, lp in rec.variants_yes)
            l_no = max(lp for _, lp in rec.variants_no)
            yes_probs[(i, j)] = yes_prob(l_yes, l_no)
        matrices = attach_yes_matrix(matrices, yes_probs)
    return AggregateResult(matrices=matrices, model_id=model_id, category=category)


@dataclass(frozen=True)
class BrandRow:
    brand: str
    pred_pct: float
    true_pct: float
    abs_err: float
    pred_rank: int
    true_rank: int


@dataclass(frozen=True)
class RunReport:
    """Per-brand comparison table plus footer metrics and a config echo."""

    model_id: str
    category: str
    rows: tuple[BrandRow, ...]
    spearman: float
    mae_pp: float
    config: Mapping

    def to_json(self) -> str:
        payload = {
            "model_id": self.model_id,
            "category": self.category,
            "rows": [asdict(r) for r in self.rows],
            "spearman": self.spearman,
            "mae_pp": self.mae_pp,
            "config": dict(self.config),
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def build_report(
    model_id: str,
    category: str,
    pred,
    truth: GroundTruth,
    config: Mapping | None = None,
) -> RunReport:
    """Assemble a run report from a calibrated simplex prediction."""
    pred = np.asarray(pred, dtype=float)
    rho = spearman(pred, truth.shares_pct)
    mae = mae_pp(pred, truth)
    pred_rank = rank_desc(pred)
    true_rank = rank_desc(truth.shares_pct)
    rows = [
        BrandRow(
            brand=truth.brands[i],
            pred_pct=float(100.0 * pred[i]),
            true_pct=float(truth.shares_pct[i]),
            abs_err=abs(float(100.0 * pred[i]) - float(truth.shares_pct[i])),
            pred_rank=int(pred_rank[i]),
            true_rank=int(true_rank[i]),
        )
        for i in range(len(truth.brands))
    ]
    rows.sort(key=lambda r: r.true_rank)
    return RunReport(
        model_id=model_id,
        category=category,
        rows=tuple(rows),
        spearman=rho,
        mae_pp=mae,
        config=dict(config or {}),
    )


_CONFIG_ECHO_ORDER = ("tau", "alpha", "gamma", "iterations", "epsilon", "R", "seed")


def _format_config(config: Mapping) -> str:
    parts = []
    for key in _CONFIG_ECHO_ORDER:
        if key in config and config[key] is not None:
            v = config[key]
            parts.append(f"{key}={v:.6f}" if isinstance(v, float) else f"{key}={v}")
    for key in sorted(config):
        if key not in _CONFIG_ECHO_ORDER and config[key] is not None:
            parts.append(f"{key}={config[key]}")
    return " ".join(parts)


def emit_report(report: RunReport, fmt: str = "table") -> str:
    """Render a report as the paper-style table or as lossless JSON."""
    if fmt == "json":
        return report.to_json()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")

    lines = [f"model: {report.model_id}", f"category: {report.category}"]
    cfg = _format_config(report.config)
    if cfg:
        lines.append(f"config: {cfg}")
    if report.config.get("gamma") == 1.0:
        lines.append("note: uncalibrated shape (gamma = 1)")
    lines.append("")
    header = (
        f"{'Brand':<20}{'Pred. share (%)':>17}{'True share (%)':>17}"
        f"{'Abs. err.':>11}{'Pred. rank':>12}{'True rank':>11}"
    )
    lines.append(header)
    for r in report.rows:
        lines.append(
            f"{r.brand:<20}{r.pred_pct:>17.3f}{r.true_pct:>17.3f}"
            f"{r.abs_err:>11.3f}{r.pred_rank:>12d}{r.true_rank:>11d}"
        )
    if report.rows:
        lines.append("")
        lines.append(f"Spearman = {report.spearman:.3f}, MAE = {report.mae_pp:.3f} pp")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> RunReport:
    """Inverse of the JSON emission; round-trips losslessly."""
    payload = json.loads(text)
    rows = tuple(BrandRow(**r) for r in payload["rows"])
    return RunReport(
        model_id=payload["model_id"],
        category=payload["category"],
        rows=rows,
        spearman=payload["spearman"],
        mae_pp=payload["mae_pp"],
        config=payload["config"],
    )
