#!/usr/bin/env python3
"""Regenerate the packaged fixture data files.

Writes the pythia-160m carbonated-soft-drink win-rate and count matrices,
the gemma-270m locked-pair table, and a synthetic score file whose fused
matrix reproduces the pythia win rates at 3 decimals (per-template
probabilities are constant per pair; log-probabilities are chosen so the
max-variant reduction recovers them exactly).
"""

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from simfield.matrixio import matrix_to_csv  # noqa: E402
from simfield.metrics_io import fixture  # noqa: E402
from simfield.probes import TEMPLATES  # noqa: E402

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "simfield" / "data"

PYTHIA_CSD_P = [
    [0.000, 0.770, 0.827, 0.786, 0.693, 0.710, 0.572, 0.728, 0.769, 0.788],
    [0.230, 0.000, 0.789, 0.693, 0.726, 0.674, 0.617, 0.726, 0.683, 0.729],
    [0.173, 0.211, 0.000, 0.775, 0.760, 0.746, 0.677, 0.751, 0.787, 0.828],
    [0.214, 0.307, 0.225, 0.000, 0.629, 0.622, 0.562, 0.621, 0.708, 0.714],
    [0.307, 0.274, 0.240, 0.371, 0.000, 0.626, 0.439, 0.578, 0.701, 0.692],
    [0.290, 0.326, 0.254, 0.378, 0.374, 0.000, 0.529, 0.623, 0.711, 0.679],
    [0.428, 0.383, 0.323, 0.438, 0.561, 0.471, 0.000, 0.626, 0.612, 0.676],
    [0.272, 0.274, 0.249, 0.379, 0.422, 0.377, 0.374, 0.000, 0.682, 0.687],
    [0.231, 0.317, 0.213, 0.292, 0.299, 0.289, 0.388, 0.318, 0.000, 0.694],
    [0.212, 0.271, 0.172, 0.286, 0.308, 0.321, 0.324, 0.313, 0.306, 0.000],
]

GEMMA_CSD_LOCKS = [
    ("Coca-Cola", "Sprite", 0.7247, 0.6784),
    ("Sprite", "Pepsi-Cola", 0.6808, 0.6857),
    ("Coca-Cola", "Coke Zero Sugar", 0.6839, 0.6758),
    ("Coca-Cola", "Ginger Ale", 0.6763, 0.6759),
]

MODEL_ID = "EleutherAI/pythia-160m"


def write_matrices(brands):
    n = len(brands)
    c = [[0.0 if i == j else 11.0 for j in range(n)] for i in range(n)]
    (DATA_DIR / "csd_pythia160m_P.csv").write_text(
        matrix_to_csv(brands, PYTHIA_CSD_P), encoding="utf-8"
    )
    (DATA_DIR / "csd_pythia160m_C.csv").write_text(
        matrix_to_csv(brands, c), encoding="utf-8"
    )


def write_locks():
    lines = ["brand_i,brand_j,y_ij,y_ji"]
    for bi, bj, yij, yji in GEMMA_CSD_LOCKS:
        lines.append(f"{bi},{bj},{yij:.4f},{yji:.4f}")
    (DATA_DIR / "csd_gemma270m_locks.csv").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )


def ab_record(category, brand_a, brand_b, template_id, p):
    l_a, l_b = math.log(p), math.log1p(-p)
    return {
        "category": category,
        "brand_a": brand_a,
        "brand_b": brand_b,
        "template_id": template_id,
        "model_id": MODEL_ID,
        "variants_a": [[" A", l_a], ["A", l_a - math.log(2.0)]],
        "variants_b": [[" B", l_b], ["B", l_b - math.log(2.0)]],
    }


def yesno_record(category, brand_i, brand_j, y):
    l_yes, l_no = math.log(y), math.log1p(-y)
    return {
        "category": category,
        "probe_kind": "yesno",
        "brand_i": brand_i,
        "brand_j": brand_j,
        "model_id": MODEL_ID,
        "variants_yes": [[" yes", l_yes], ["yes", l_yes - math.log(2.0)]],
        "variants_no": [[" no", l_no], ["no", l_no - math.log(2.0)]],
    }


def write_scores(category, brands):
    records = []
    for i in range(len(brands)):
        for j in range(i + 1, len(brands)):
            for t in TEMPLATES:
                records.append(
                    ab_record(category, brands[i], brands[j], t.id, PYTHIA_CSD_P[i][j])
                )
    for i in range(len(brands)):
        for j in range(len(brands)):
            if i == j:
                continue
            y = 0.45 + 0.1 * ((7 * i + 3 * j) % 11) / 11.0
            records.append(yesno_record(category, brands[i], brands[j], y))
    path = DATA_DIR / "csd_pythia160m_scores.jsonl"
    path.write_text(
        "".join(json.dumps(r) + "\n" for r in records), encoding="utf-8"
    )
    return len(records)


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    fx = fixture("carbonated soft drink")
    write_matrices(fx.brands)
    write_locks()
    count = write_scores(fx.category, fx.brands)
    print(f"wrote matrices, locks, and {count} score records to {DATA_DIR}")


if __name__ == "__main__":
    main()
