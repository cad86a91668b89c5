"""A/B typicality probes and their reduction to pairwise matrices.

Eleven fixed question stems are rendered per unordered brand pair; the
model's answer log-probabilities reduce to a win probability per template,
and templates fuse by averaging into the win-rate matrix P with count
matrix C. Ordered yes/no probes produce the yes-probability matrix Y used
by the lock filter. Scoring itself lives outside this package: here we
only render prompts and consume completion log-probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BothNegInfinite,
    DuplicateBrand,
    EmptyCategory,
    InvalidMatrices,
    NoVariants,
    RaggedTemplates,
    TooFewBrands,
)
from .matrixio import matrix_from_csv, matrix_to_csv

__all__ = [
    "ProbeTemplate",
    "TEMPLATES",
    "YESNO_STEM",
    "PromptJob",
    "ScoreRecord",
    "YesNoRecord",
    "PairwiseMatrices",
    "render_prompts",
    "render_yesno_prompts",
    "reduce_variants",
    "binary_prob",
    "yes_prob",
    "fuse_templates",
    "attach_yes_matrix",
    "make_matrices",
    "matrices_to_csv",
    "matrices_from_csv",
]


@dataclass(frozen=True)
class ProbeTemplate:
    """One question stem; {cat} is substituted verbatim."""

    id: int
    stem: str

    def render(self, category: str, brand_a: str, brand_b: str) -> str:
        stem = self.stem.replace("{cat}", category)
        return f"{stem}\nA: {brand_a}\nB: {brand_b}\nAnswer:"


TEMPLATES: tuple[ProbeTemplate, ...] = tuple(
    ProbeTemplate(i, stem)
    for i, stem in enumerate(
        [
            "Which brand is a more typical example of a {cat}? Reply A or B only.",
            "Which brand is a more iconic example of a {cat}? Reply A or B only.",
            "Which brand is a more marquee example of a {cat}? Reply A or B only.",
            "Which brand is the flagship {cat} brand? Reply A or B only.",
            "Which brand is the more recognizable example of a {cat}? Reply A or B only.",
            "Which brand is the more famous example of a {cat}? Reply A or B only.",
            "Which brand is the more standout example of a {cat}? Reply A or B only.",
            "Which brand is the more influential example of a {cat}? Reply A or B only.",
            "Which brand is the more notable example of a {cat}? Reply A or B only.",
            "Which brand is the more popular example of a {cat}? Reply A or B only.",
            "Which brand is the more widely known example of a {cat}? Reply A or B only.",
        ]
    )
)

YESNO_STEM = "Is {i} more typical of a {cat} than {j}? Reply yes or no only:"

# answer tokens; scorers expand each into the {" X", "X"} variant pair
AB_ANSWERS = {"a": "A", "b": "B"}
YESNO_ANSWERS = {"yes": "yes", "no": "no"}


@dataclass(frozen=True)
class PromptJob:
    """One prompt to score, with its answer-token policy."""

    kind: str  # "ab" or "yesno"
    category: str
    prompt: str
    answers: Mapping[str, str]
    brand_a: str | None = None
    brand_b: str | None = None
    template_id: int | None = None
    brand_i: str | None = None
    brand_j: str | None = None


def _check_brands(category: str, brands: Sequence[str]) -> None:
    if not category or not category.strip():
        raise EmptyCategory("category token must be non-empty")
    if len(brands) < 2:
        raise TooFewBrands(f"need at least 2 brands, got {len(brands)}")
    if len(set(brands)) != len(brands):
        raise DuplicateBrand("brand list contains duplicates")


def render_prompts(
    category: str,
    brands: Sequence[str],
    templates: Sequence[ProbeTemplate] = TEMPLATES,
    swap_positions: bool = False,
) -> list[PromptJob]:
    """One prompt per (unordered pair, template); the lower-index brand takes
    slot A.

    ``swap_positions`` renders the mirrored orientation instead (slot A gets
    the higher-index brand). That mode exists only for position-bias audits
    and is not part of the canonical pipeline.
    """
    _check_brands(category, brands)
    jobs = []
    for i in range(len(brands)):
        for j in range(i + 1, len(brands)):
            a, b = (brands[j], brands[i]) if swap_positions else (brands[i], brands[j])
            for t in templates:
                jobs.append(
                    PromptJob(
                        kind="ab",
                        category=category,
                        prompt=t.render(category, a, b),
                        answers=dict(AB_ANSWERS),
                        brand_a=a,
                        brand_b=b,
                        template_id=t.id,
                    )
                )
    return jobs


def render_yesno_prompts(category: str, brands: Sequence[str]) -> list[PromptJob]:
    """One yes/no probe per ordered pair (i, j), i != j."""
    _check_brands(category, brands)
    jobs = []
    for i, bi in enumerate(brands):
        for j, bj in enumerate(brands):
            if i == j:
                continue
            prompt = (
                YESNO_STEM.replace("{i}", bi).replace("{cat}", category).replace("{j}", bj)
            )
            jobs.append(
                PromptJob(
                    kind="yesno",
                    category=category,
                    prompt=prompt,
                    answers=dict(YESNO_ANSWERS),
                    brand_i=bi,
                    brand_j=bj,
                )
            )
    return jobs


@dataclass(frozen=True)
class ScoreRecord:
    """Scored A/B probe: completion variants with their log-probabilities."""

    category: str
    brand_a: str
    brand_b: str
    template_id: int
    variants_a: tuple[tuple[str, float], ...]
    variants_b: tuple[tuple[str, float], ...]
    model_id: str


@dataclass(frozen=True)
class YesNoRecord:
    """Scored yes/no probe for the ordered pair (brand_i, brand_j)."""

    category: str
    brand_i: str
    brand_j: str
    variants_yes: tuple[tuple[str, float], ...]
    variants_no: tuple[tuple[str, float], ...]
    model_id: str


def reduce_variants(record: ScoreRecord) -> tuple[float, float]:
    """L_A and L_B: the larger log-probability over each answer's variants."""
    if not record.variants_a or not record.variants_b:
        raise NoVariants(
            f"record {record.brand_a!r} vs {record.brand_b!r} has an empty variant list"
        )
    l_a = max(lp for _, lp in record.variants_a)
    l_b = max(lp for _, lp in record.variants_b)
    return l_a, l_b


def binary_prob(l_a: float, l_b: float) -> float:
    """Probability of answer A from two log-likelihoods, max-shifted before
    the softmax so large magnitudes cannot overflow."""
    if math.isinf(l_a) and l_a < 0 and math.isinf(l_b) and l_b < 0:
        raise BothNegInfinite("both completions have probability zero")
    m = max(l_a, l_b)
    ea = math.exp(l_a - m)
    eb = math.exp(l_b - m)
    return ea / (ea + eb)


def yes_prob(l_yes: float, l_no: float) -> float:
    """Yes-probability under the same max-shifted softmax, falling back to
    exactly 0.5 when both inputs are negative infinity (or the denominator
    degenerates)."""
    both_neg_inf = (
        math.isinf(l_yes) and l_yes < 0 and math.isinf(l_no) and l_no < 0
    )
    if both_neg_inf or math.isnan(l_yes) or math.isnan(l_no):
        return 0.5
    m = max(l_yes, l_no)
    ey = math.exp(l_yes - m)
    en = math.exp(l_no - m)
    denom = ey + en
    if denom == 0.0 or math.isnan(denom):
        return 0.5
    return ey / denom


class PairwiseMatrices:
    """Win-rate matrix P, count matrix C, and optional yes-matrix Y over an
    ordered brand list.

    P is antisymmetric around 1 off the diagonal (P[i,j] + P[j,i] = 1) with a
    zero diagonal; C is symmetric with a zero diagonal; Y is an ordered-pair
    matrix, each entry in [0, 1] independently of its transpose.
    """

    __slots__ = ("brands", "P", "C", "Y")

    def __init__(self, brands, P, C, Y=None):
        object.__setattr__(self, "brands", tuple(brands))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Y", Y)

    def __setattr__(self, name, value):
        raise AttributeError("PairwiseMatrices is immutable")

    @property
    def n(self) -> int:
        return len(self.brands)

    def index(self, brand: str) -> int:
        try:
            return self.brands.index(brand)
        except ValueError:
            raise InvalidMatrices(f"unknown brand {brand!r}") from None

    def pairs(self) -> list[tuple[int, int]]:
        """All unordered index pairs in lexicographic order."""
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    def with_counts(self, C: np.ndarray) -> "PairwiseMatrices":
        return make_matrices(self.brands, self.P, C, self.Y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairwiseMatrices):
            return NotImplemented
        same_y = (
            (self.Y is None and other.Y is None)
            or (self.Y is not None and other.Y is not None and np.array_equal(self.Y, other.Y))
        )
        return (
            self.brands == other.brands
            and np.array_equal(self.P, other.P)
            and np.array_equal(self.C, other.C)
            and same_y
        )

    __hash__ = None


def make_matrices(brands, P, C, Y=None) -> PairwiseMatrices:
    """Validate matrix invariants and freeze the arrays."""
    brands = tuple(brands)
    n = len(brands)
    if n < 1 or len(set(brands)) != n or any(not b for b in brands):
        raise InvalidMatrices("brand list must be non-empty and unique")
    P = np.asarray(P, dtype=float)
    C = np.asarray(C, dtype=float)
    if P.shape != (n, n) or C.shape != (n, n):
        raise InvalidMatrices(f"P/C must be {n}x{n}, got {P.shape} and {C.shape}")
    off = ~np.eye(n, dtype=bool)
    if not np.all(np.diagonal(P) == 0.0):
        raise InvalidMatrices("P diagonal must be zero")
    if not (np.isfinite(P).all() and (P >= 0).all() and (P <= 1).all()):
        raise InvalidMatrices("P entries must lie in [0, 1]")
    if n > 1 and np.abs(P + P.T - 1.0)[off].max() > 1e-9:
        raise InvalidMatrices("P must satisfy P[i,j] + P[j,i] = 1 off the diagonal")
    if not np.array_equal(C, C.T):
        raise InvalidMatrices("C must be symmetric")
    if not np.all(np.diagonal(C) == 0.0):
        raise InvalidMatrices("C diagonal must be zero")
    if not (np.isfinite(C).all() and (C >= 0).all()):
        raise InvalidMatrices("C entries must be non-negative")
    if Y is not None:
        Y = np.asarray(Y, dtype=float)
        if Y.shape != (n, n):
            raise InvalidMatrices(f"Y must be {n}x{n}, got {Y.shape}")
        if not (np.isfinite(Y).all() and (Y >= 0).all() and (Y <= 1).all()):
            raise InvalidMatrices("Y entries must lie in [0, 1]")
        Y = Y.copy()
        Y.setflags(write=False)
    P = P.copy()
    P.setflags(write=False)
    C = C.copy()
    C.setflags(write=False)
    return PairwiseMatrices(brands, P, C, Y)


def fuse_templates(
    brands: Sequence[str],
    pair_probs: Mapping[tuple[int, int], Mapping[int, float]],
) -> PairwiseMatrices:
    """Average per-template win probabilities into (P, C).

    ``pair_probs`` maps each unordered index pair (i < j) to its
    {template_id: probability-of-slot-A} readings. Every pair must carry the
    same template set; the mean is taken over template ids in sorted order so
    fusion does not depend on input ordering.
    """
    brands = tuple(brands)
    n = len(brands)
    expected_pairs = {(i, j) for i in range(n) for j in range(i + 1, n)}
    got_pairs = set(pair_probs.keys())
    if got_pairs != expected_pairs:
        missing = sorted(expected_pairs - got_pairs)
        extra = sorted(got_pairs - expected_pairs)
        raise RaggedTemplates(
            f"pair coverage mismatch: missing {missing[:4]}, unexpected {extra[:4]}"
        )
    template_sets = {frozenset(v.keys()) for v in pair_probs.values()}
    if len(template_sets) != 1:
        raise RaggedTemplates("all pairs must be probed with the same template set")
    tids = sorted(next(iter(template_sets)))
    if not tids:
        raise RaggedTemplates("template set is empty")

    P = np.zeros((n, n))
    C = np.zeros((n, n))
    t_count = float(len(tids))
    for (i, j), per_template in pair_probs.items():
        p = sum(per_template[t] for t in tids) / t_count
        P[i, j] = p
        P[j, i] = 1.0 - p
        C[i, j] = C[j, i] = t_count
    return make_matrices(brands, P, C)


def attach_yes_matrix(
    m: PairwiseMatrices, yes_probs: Mapping[tuple[int, int], float]
) -> PairwiseMatrices:
    """Attach Y built from per-ordered-pair yes-probabilities.

    Every ordered pair (i, j), i != j, must be present; the diagonal is 0.
    """
    n = m.n
    expected = {(i, j) for i in range(n) for j in range(n) if i != j}
    if set(yes_probs.keys()) != expected:
        missing = sorted(expected - set(yes_probs.keys()))
        raise RaggedTemplates(f"yes/no coverage incomplete: missing {missing[:4]}")
    Y = np.zeros((n, n))
    for (i, j), y in yes_probs.items():
        Y[i, j] = y
    return make_matrices(m.brands, m.P, m.C, Y)


def matrices_to_csv(m: PairwiseMatrices) -> dict[str, str]:
    """Render P, C (and Y when present) in the labeled-matrix CSV format."""
    out = {
        "P": matrix_to_csv(m.brands, m.P),
        "C": matrix_to_csv(m.brands, m.C),
    }
    if m.Y is not None:
        out["Y"] = matrix_to_csv(m.brands, m.Y)
    return out


def matrices_from_csv(p_text: str, c_text: str, y_text: str | None = None) -> PairwiseMatrices:
    """Parse and validate matrices written by :func:`matrices_to_csv`."""
    brands, P = matrix_from_csv(p_text)
    brands_c, C = matrix_from_csv(c_text)
    if brands_c != brands:
        raise InvalidMatrices("P and C files carry different brand lists")
    Y = None
    if y_text is not None:
        brands_y, Y = matrix_from_csv(y_text)
        if brands_y != brands:
            raise InvalidMatrices("Y file carries a different brand list")
    return make_matrices(brands, P, C, Y)
