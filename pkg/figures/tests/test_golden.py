"""Golden-image regression: seeded inputs must render pixel-identically.

Regenerate the references after an intentional styling change with:

    python3 tests/make_golden.py
"""

import numpy as np
import pytest
from PIL import Image

from excitonfigures import FigureRecipe, render

GOLDEN_CASES = [
    ("populations", "trajectory.csv", "populations.png"),
    ("fim-heatmap", "matrix.csv", "fim_heatmap.png"),
    ("spectrum", "spectrum.csv", "spectrum.png"),
    ("eigenvalues-vs-lambda", "lambda_sweep.csv", "eigenvalues_vs_lambda.png"),
    ("importance-bars", "importance.csv", "importance_bars.png"),
    ("importance-bars", "ensemble_summary.csv", "ensemble_bars.png"),
    ("sweep-ribbon", "spacing_sweep.csv", "sweep_ribbon.png"),
]


@pytest.mark.parametrize("kind,data_file,golden_file", GOLDEN_CASES)
def test_golden_image(tmp_path, data_dir, golden_dir, kind, data_file, golden_file):
    out = tmp_path / golden_file
    vlines = (0.08,) if kind == "sweep-ribbon" else ()
    render(FigureRecipe(
        kind=kind, inputs=(str(data_dir / data_file),), output=str(out), vlines=vlines,
    ))
    golden = golden_dir / golden_file
    assert golden.exists(), f"golden image {golden_file} missing"
    rendered = np.asarray(Image.open(out).convert("RGBA"))
    reference = np.asarray(Image.open(golden).convert("RGBA"))
    assert rendered.shape == reference.shape
    assert np.array_equal(rendered, reference), f"{golden_file} differs from golden"
