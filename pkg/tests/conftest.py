import numpy as np
import pytest

from looscope import AnalysisConfig, leader_bin, leave_one_out_deltas, score_tree
from looscope.geometry import euclidean_mst
from looscope.synth import make_plot, masking_plot


@pytest.fixture(scope="session")
def masking_case():
    """Masking construction plus everything derived from it once."""
    plot, outlier_masker, outlier = masking_plot()
    binning = leader_bin(plot)
    tree = euclidean_mst(binning.centroids())
    original = score_tree(tree)
    deltas = {d.instance_id: d for d in leave_one_out_deltas(plot, binning, original)}
    return {
        "plot": plot,
        "binning": binning,
        "tree": tree,
        "original": original,
        "deltas": deltas,
        "masker": outlier_masker,
        "outlier": outlier,
    }


@pytest.fixture
def small_config():
    return AnalysisConfig(bin_min=5, bin_max=40, workers=1)


def random_plot(rng: np.random.Generator, n: int):
    return make_plot([tuple(p) for p in rng.uniform(0, 1, size=(n, 2))])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
