import json
from pathlib import Path

import pytest

from framefuse.bayes import CategoryDistribution, ClassifierProfile

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Raw per-frame scores and expected chained posteriors from the traffic run
# (classifier accuracy 0.9893, 4 categories).
TABLE1_FRAMES = [
    {"Empty": 0.0100, "Fluid": 0.7930, "Heavy": 0.1683, "Jam": 0.0286},
    {"Empty": 0.0131, "Fluid": 0.3091, "Heavy": 0.5098, "Jam": 0.1681},
    {"Empty": 0.0131, "Fluid": 0.2754, "Heavy": 0.3399, "Jam": 0.3717},
]
TABLE1_EXPECTED = [
    {"Empty": 0.0100, "Fluid": 0.7930, "Heavy": 0.1683, "Jam": 0.0286},
    {"Empty": 0.0001, "Fluid": 0.1986, "Heavy": 0.0798, "Jam": 0.0048},
    {"Empty": 0.0000, "Fluid": 0.0524, "Heavy": 0.0267, "Jam": 0.0018},
]
TABLE1_RAW_LABELS = ["Fluid", "Heavy", "Jam"]
TABLE1_P_CNN = 0.9893

# Pedestrian run (classifier accuracy 0.7250, 2 categories).
TABLE2_FRAMES = [
    {"No-Obstruction": 0.3270, "Obstruction": 0.6730},
    {"No-Obstruction": 0.5010, "Obstruction": 0.4990},
    {"No-Obstruction": 0.4600, "Obstruction": 0.5400},
]
TABLE2_EXPECTED = [
    {"No-Obstruction": 0.3270, "Obstruction": 0.6730},
    {"No-Obstruction": 0.1843, "Obstruction": 0.3166},
    {"No-Obstruction": 0.1047, "Obstruction": 0.1908},
]
TABLE2_RAW_LABELS = ["Obstruction", "No-Obstruction", "Obstruction"]
TABLE2_P_CNN = 0.7250


def make_frames(score_maps, start_id=1):
    return [
        CategoryDistribution(frame_id=start_id + i, scores=scores)
        for i, scores in enumerate(score_maps)
    ]


def oracle_fold(score_maps, p_cnn):
    """Independent brute-force fold of the update equation, per category.

    Kept free of the library's chaining code on purpose: plain arithmetic
    over dicts, first frame passes through verbatim.
    """
    chain = []
    posterior = None
    for scores in score_maps:
        if posterior is None:
            posterior = dict(scores)
        else:
            posterior = {
                label: (posterior[label] * scores[label])
                / (posterior[label] * scores[label] + p_cnn)
                for label in posterior
            }
        chain.append(dict(posterior))
    return chain


@pytest.fixture
def traffic_profile():
    return ClassifierProfile(model_name="VGG16", p_cnn=TABLE1_P_CNN)


@pytest.fixture
def pedestrian_profile():
    return ClassifierProfile(model_name="ResNet50", p_cnn=TABLE2_P_CNN)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
