"""Regenerate the frozen transformer logits used as a regression anchor.

Run from the repository root:  python tools/make_golden.py
Only rerun this when an intentional change to initialization or the forward
pass invalidates the stored values; commit the regenerated file.
"""

import json
from pathlib import Path

import numpy as np

from langlab.models import TransformerConfig, init_model, transformer_forward
from langlab.numcore import Tape

OUT = Path(__file__).parent.parent / "tests" / "data" / "transformer_golden.json"

CONFIG = dict(layers=2, model_dim=16, heads=2, ff_dim=32, max_seq=8,
              vocab=16, seed=1234)
IDS = [[1, 4, 7, 12, 3, 2, 0, 5], [1, 15, 14, 2, 8, 9, 10, 11]]


def main():
    params = init_model(TransformerConfig(**CONFIG))
    logits = transformer_forward(params, np.array(IDS), Tape(record=False))
    payload = {
        "config": CONFIG,
        "ids": IDS,
        "logits": [[[f"{v:.17g}" for v in row] for row in batch]
                   for batch in logits.data.tolist()],
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
