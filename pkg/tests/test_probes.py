import math

import numpy as np
import pytest

from simfield.errors import (
    BothNegInfinite,
    DuplicateBrand,
    EmptyCategory,
    InvalidMatrices,
    NoVariants,
    RaggedTemplates,
    TooFewBrands,
)
from simfield.probes import (
    TEMPLATES,
    YESNO_STEM,
    PairwiseMatrices,
    ScoreRecord,
    attach_yes_matrix,
    binary_prob,
    fuse_templates,
    make_matrices,
    matrices_from_csv,
    matrices_to_csv,
    reduce_variants,
    render_prompts,
    render_yesno_prompts,
    yes_prob,
)

from conftest import random_matrices

CSD_BRANDS = (
    "Coca-Cola", "Dr Pepper", "Sprite", "Pepsi-Cola", "Diet Coke",
    "Mountain Dew", "Coke Zero Sugar", "Diet Pepsi", "Fanta", "Ginger Ale",
)


class TestTemplates:
    def test_exactly_eleven_with_sequential_ids(self):
        assert len(TEMPLATES) == 11
        assert [t.id for t in TEMPLATES] == list(range(11))

    def test_first_stem_renders_verbatim(self):
        prompt = TEMPLATES[0].render("carbonated soft drink", "Coca-Cola", "Sprite")
        assert prompt.startswith(
            "Which brand is a more typical example of a carbonated soft drink?"
        )
        assert prompt.splitlines() == [
            "Which brand is a more typical example of a carbonated soft drink? Reply A or B only.",
            "A: Coca-Cola",
            "B: Sprite",
            "Answer:",
        ]

    def test_flagship_stem_has_no_example_phrase(self):
        assert TEMPLATES[3].stem == "Which brand is the flagship {cat} brand? Reply A or B only."

    def test_all_stems_are_questions_about_cat(self):
        for t in TEMPLATES:
            assert "{cat}" in t.stem
            assert t.stem.endswith("Reply A or B only.")


class TestRenderPrompts:
    def test_one_pair_gives_eleven_prompts(self):
        jobs = render_prompts("carbonated soft drink", ["Coca-Cola", "Sprite"])
        assert len(jobs) == 11

    def test_count_formula(self):
        # n(n-1)/2 pairs, one prompt each per template
        for brands, expected in [(CSD_BRANDS, 495), (CSD_BRANDS[:6], 165)]:
            n = len(brands)
            assert n * (n - 1) // 2 * 11 == expected
            jobs = render_prompts("carbonated soft drink", brands)
            assert len(jobs) == expected

    def test_lower_index_brand_takes_slot_a(self):
        jobs = render_prompts("carbonated soft drink", CSD_BRANDS)
        for job in jobs:
            ia = CSD_BRANDS.index(job.brand_a)
            ib = CSD_BRANDS.index(job.brand_b)
            assert ia < ib

    def test_swap_positions_audit_mode(self):
        jobs = render_prompts("carbonated soft drink", CSD_BRANDS, swap_positions=True)
        assert len(jobs) == 495
        for job in jobs:
            assert CSD_BRANDS.index(job.brand_a) > CSD_BRANDS.index(job.brand_b)

    def test_input_validation(self):
        with pytest.raises(DuplicateBrand):
            render_prompts("x", ["a", "a"])
        with pytest.raises(EmptyCategory):
            render_prompts("  ", ["a", "b"])
        with pytest.raises(TooFewBrands):
            render_prompts("x", ["a"])


class TestYesNoPrompts:
    def test_ordered_pairs(self):
        jobs = render_yesno_prompts("carbonated soft drink", CSD_BRANDS)
        assert len(jobs) == 90
        keys = {(j.brand_i, j.brand_j) for j in jobs}
        assert len(keys) == 90

    def test_prompt_text_verbatim(self):
        jobs = render_yesno_prompts("carbonated soft drink", ["Coca-Cola", "Sprite"])
        assert jobs[0].prompt == (
            "Is Coca-Cola more typical of a carbonated soft drink than Sprite? "
            "Reply yes or no only:"
        )
        assert jobs[0].answers == {"yes": "yes", "no": "no"}

    def test_stem_constant(self):
        assert YESNO_STEM == "Is {i} more typical of a {cat} than {j}? Reply yes or no only:"


def record(variants_a, variants_b):
    return ScoreRecord(
        category="c", brand_a="a", brand_b="b", template_id=0,
        variants_a=tuple(variants_a), variants_b=tuple(variants_b), model_id="m",
    )


class TestReduceVariants:
    def test_max_of_two(self):
        rec = record([(" A", -1.2), ("A", -3.4)], [(" B", -0.5), ("B", -0.6)])
        assert reduce_variants(rec) == (-1.2, -0.5)

    def test_single_variant_passthrough(self):
        rec = record([(" A", -2.0)], [(" B", -3.0)])
        assert reduce_variants(rec) == (-2.0, -3.0)

    def test_order_irrelevant(self, rng):
        for _ in range(100):
            vals_a = [(" A", float(x)) for x in rng.normal(size=4)]
            vals_b = [(" B", float(x)) for x in rng.normal(size=3)]
            base = reduce_variants(record(vals_a, vals_b))
            shuffled = reduce_variants(
                record(
                    [vals_a[i] for i in rng.permutation(4)],
                    [vals_b[i] for i in rng.permutation(3)],
                )
            )
            assert base == shuffled

    def test_empty_variants_rejected(self):
        with pytest.raises(NoVariants):
            reduce_variants(record([], [(" B", -1.0)]))


class TestBinaryProb:
    def test_equal_scores_give_half(self):
        assert binary_prob(-2.0, -2.0) == 0.5

    def test_log3_margin(self):
        # closed form: e^{ln 3} / (e^{ln 3} + 1) = 3/4
        assert binary_prob(math.log(3.0), 0.0) == pytest.approx(0.75, abs=1e-15)

    def test_extreme_magnitudes_do_not_overflow(self):
        p = binary_prob(-1000.0, 0.0)
        assert math.isfinite(p) and 0.0 <= p < 1e-300
        assert binary_prob(0.0, -1000.0) == pytest.approx(1.0)
        assert math.isfinite(binary_prob(1e8, 1e8 - math.log(3.0)))

    def test_one_sided_neg_infinity(self):
        assert binary_prob(float("-inf"), -1.0) == 0.0
        assert binary_prob(-1.0, float("-inf")) == 1.0

    def test_both_neg_infinite_rejected(self):
        with pytest.raises(BothNegInfinite):
            binary_prob(float("-inf"), float("-inf"))

    def test_complement_sums_to_one(self, rng):
        for _ in range(500):
            a, b = rng.normal(scale=50, size=2)
            assert binary_prob(a, b) + binary_prob(b, a) == pytest.approx(1.0, abs=1e-15)


class TestYesProb:
    def test_equal_gives_half(self):
        assert yes_prob(-3.0, -3.0) == 0.5

    def test_both_neg_infinity_falls_back(self):
        assert yes_prob(float("-inf"), float("-inf")) == 0.5

    def test_log9_margin(self):
        assert yes_prob(math.log(9.0), 0.0) == pytest.approx(0.9, abs=1e-15)


class TestFuseTemplates:
    def pair_probs(self, n, value=0.5, tids=range(11)):
        return {
            (i, j): {t: value for t in tids}
            for i in range(n)
            for j in range(i + 1, n)
        }

    def test_all_half(self):
        m = fuse_templates(["a", "b", "c"], self.pair_probs(3))
        off = ~np.eye(3, dtype=bool)
        assert np.all(m.P[off] == 0.5)

    def test_count_matrix_matches_template_count(self):
        m = fuse_templates(["a", "b", "c"], self.pair_probs(3))
        off = ~np.eye(3, dtype=bool)
        assert np.all(m.C[off] == 11.0)
        assert np.all(np.diagonal(m.C) == 0.0)

    def test_antisymmetry_for_random_input(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            probs = {
                (i, j): {t: float(rng.uniform(0.01, 0.99)) for t in range(11)}
                for i in range(n)
                for j in range(i + 1, n)
            }
            m = fuse_templates([f"b{k}" for k in range(n)], probs)
            off = ~np.eye(n, dtype=bool)
            assert np.abs(m.P + m.P.T - 1.0)[off].max() <= 1e-15

    def test_fusion_invariant_to_template_order(self, rng):
        probs = {
            (0, 1): {t: float(rng.uniform(0, 1)) for t in range(11)},
        }
        shuffled = {
            (0, 1): {t: probs[(0, 1)][t] for t in rng.permutation(11)},
        }
        a = fuse_templates(["x", "y"], probs)
        b = fuse_templates(["x", "y"], shuffled)
        assert a == b

    def test_ragged_template_sets_rejected(self):
        probs = self.pair_probs(3)
        del probs[(0, 1)][7]
        with pytest.raises(RaggedTemplates):
            fuse_templates(["a", "b", "c"], probs)

    def test_missing_pair_rejected(self):
        probs = self.pair_probs(3)
        del probs[(1, 2)]
        with pytest.raises(RaggedTemplates):
            fuse_templates(["a", "b", "c"], probs)


class TestMatrices:
    def test_invariant_violations(self):
        P = [[0.0, 0.6], [0.3, 0.0]]  # 0.6 + 0.3 != 1
        C = [[0.0, 11.0], [11.0, 0.0]]
        with pytest.raises(InvalidMatrices):
            make_matrices(["a", "b"], P, C)
        with pytest.raises(InvalidMatrices):
            make_matrices(["a", "b"], [[0.1, 0.6], [0.4, 0.0]], C)
        with pytest.raises(InvalidMatrices):
            make_matrices(["a", "b"], [[0.0, 0.6], [0.4, 0.0]], [[0.0, 2.0], [1.0, 0.0]])

    def test_y_attachment_requires_full_coverage(self, rng):
        m = random_matrices(rng, 3)
        with pytest.raises(RaggedTemplates):
            attach_yes_matrix(m, {(0, 1): 0.5})

    def test_csv_round_trip(self, rng):
        m = random_matrices(rng, 4)
        yes = {
            (i, j): float(rng.uniform(0, 1))
            for i in range(4) for j in range(4) if i != j
        }
        m = attach_yes_matrix(m, yes)
        texts = matrices_to_csv(m)
        again = matrices_from_csv(texts["P"], texts["C"], texts["Y"])
        assert np.abs(again.P - m.P).max() <= 5e-10
        assert np.array_equal(again.C, m.C)
        assert np.abs(again.Y - m.Y).max() <= 5e-10

    def test_csv_emission_idempotent(self, rng):
        m = random_matrices(rng, 3)
        texts = matrices_to_csv(m)
        again = matrices_from_csv(texts["P"], texts["C"])
        assert matrices_to_csv(again) == texts
