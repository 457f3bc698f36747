import logging

import numpy as np
import pytest

from src.bsif import ScaleId, Resolution, synthesize_filter_bank
from src.ensemble import LabeledFeatureSet
from src.svm import ATTACK, BONAFIDE


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def bank_3x3():
    return synthesize_filter_bank(3, 5, seed=3)


@pytest.fixture
def bank_5x5():
    return synthesize_filter_bank(5, 8, seed=5)


@pytest.fixture
def blobs(rng):
    """Two well separated 2-D Gaussian blobs, 10 attack then 10 bona fide rows"""
    attack = rng.normal(loc=(3.0, 3.0), scale=0.3, size=(10, 2))
    bonafide = rng.normal(loc=(0.0, 0.0), scale=0.3, size=(10, 2))
    features = np.vstack([attack, bonafide])
    labels = np.array([ATTACK] * 10 + [BONAFIDE] * 10)
    return features, labels


@pytest.fixture
def two_scales():
    return [ScaleId(3, Resolution.FULL), ScaleId(3, Resolution.HALF)]


@pytest.fixture
def grouped_dataset(rng, two_scales):
    """3 attack groups of 4 images plus 12 bona fide images from 6 subjects"""
    names, labels, groups, subjects = [], [], [], []
    for g in ("brandA", "brandB", "brandC"):
        for k in range(4):
            names.append(f"{g}_{k}.pgm")
            labels.append(ATTACK)
            groups.append(g)
            subjects.append(None)
    for k in range(12):
        names.append(f"live_{k}.pgm")
        labels.append(BONAFIDE)
        groups.append(None)
        subjects.append(f"s{k // 2}")
    labels = np.array(labels)
    centers = np.where(labels[:, None] == ATTACK, 3.0, 0.0)
    features = {s: centers + rng.normal(scale=0.2, size=(len(names), 2)) for s in two_scales}
    return LabeledFeatureSet(names=names, labels=labels, features=features, groups=groups,
                             subjects=subjects)


@pytest.fixture(autouse=True)
def _quiet_otel(monkeypatch):
    monkeypatch.delenv("OTEL_EXPORTER_OTLP_ENDPOINT", raising=False)
    logging.getLogger("opentelemetry").setLevel(logging.ERROR)
