"""Smoke tests for the python bindings."""

import math
import os
import pathlib

import numpy as np
import pytest

import micam

FIXTURES = pathlib.Path(os.environ.get("MICAM_FIXTURES",
                                       pathlib.Path(__file__).parents[1] / "fixtures"))


@pytest.fixture(scope="module")
def model():
    return micam.Model(str(FIXTURES / "tiny_cnn.json"))


@pytest.fixture()
def image(model):
    rng = np.random.default_rng(5)
    return rng.integers(0, 256, size=(model.input_height, model.input_width, 3)).astype(float)


def test_entropy_and_mutual_information():
    assert micam.entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert micam.entropy([1.0, 0.0]) == 0.0

    rng = np.random.default_rng(1)
    a = rng.random((8, 8))
    assert micam.mutual_information(a, a, bins=16) == pytest.approx(
        micam.mutual_information(a, a, bins=16))
    assert micam.mutual_information(np.zeros((4, 4)), rng.random((4, 4)), bins=8) == 0.0


def test_grayscale_and_upsample():
    img = np.zeros((2, 2, 3))
    img[..., 0] = 255.0
    gray = micam.grayscale(img)
    assert gray.shape == (2, 2)
    assert gray[0, 0] == pytest.approx(76.245)

    up = micam.upsample(np.array([[0.0, 2.0], [0.0, 2.0]]), 4, 2)
    assert up.shape == (2, 4)
    np.testing.assert_allclose(up[0], [0.0, 0.5, 1.5, 2.0])


def test_model_introspection(model):
    assert model.name == "tiny_cnn"
    assert model.conv_layer_names() == ["conv1", "conv2"]
    assert model.last_conv_layer() == "conv2"
    assert model.num_classes == 3


def test_forward_and_capture(model, image):
    scores = model.forward(image)
    assert scores.shape == (3,)
    assert scores.sum() == pytest.approx(1.0)  # logit model, softmaxed

    stack = model.capture(image, "conv2")
    assert stack.shape == (6, 8, 8)


def test_explain_shapes_and_range(model, image):
    result = micam.explain(model, image, method="mi-cam", bins=32)
    saliency = result["saliency"]
    assert saliency.shape == (16, 16)
    assert saliency.min() >= 0.0
    assert saliency.max() <= 1.0
    assert result["weights"].shape == (6,)
    assert result["layer"] == "conv2"
    assert (result["weights"] >= 0.0).all()


def test_explain_all_methods_agree_on_shape(model, image):
    for method in ("mi-cam", "score-cam", "eigen-cam"):
        result = micam.explain(model, image, method=method, bins=16)
        assert result["saliency"].shape == (16, 16)
        assert result["method"] == method


def test_metrics_roundtrip(model, image):
    assert micam.average_drop([(0.8, 0.6)]) == pytest.approx(25.0)
    assert micam.average_increase([(0.5, 0.1)]) == pytest.approx(80.0)

    fractions = [0.0, 0.5, 1.0]
    assert micam.auc(fractions, [1.0, 0.5, 0.0]) == pytest.approx(0.5)

    saliency = micam.explain(model, image, bins=16)["saliency"]
    hit = micam.pointing_game(saliency, (0, 0, 16, 16))
    assert hit  # the whole map is the box
    assert micam.ebpg(saliency, (0, 0, 16, 16)) == pytest.approx(100.0)


def test_curves_endpoints(model, image):
    result = micam.explain(model, image, bins=16)
    fractions, scores = micam.deletion_curve(model, image, result["saliency"],
                                             result["class_index"], 0.1, 10)
    assert len(fractions) == 11
    assert scores[0] == pytest.approx(model.forward(image)[result["class_index"]])


def test_counterfactual_and_divergence(model, image):
    report = micam.weight_divergence(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert report["l1"] == pytest.approx(2.0)
    assert report["linf"] == pytest.approx(1.0)

    results = micam.counterfactual_run(model, image, methods=["mi-cam"], fraction=0.0,
                                       bins=16)
    assert results[0]["divergence"]["l1"] == 0.0


def test_render_overlay_blend(model, image):
    saliency = np.zeros((image.shape[0], image.shape[1]))
    overlay = micam.render_overlay(image, saliency, alpha=0.0)
    np.testing.assert_allclose(overlay, image)


def test_randomize_cascade(model, image):
    randomized = model.randomize_cascade(3, seed=9)
    assert not math.isclose(
        float(np.abs(model.forward(image) - randomized.forward(image)).max()), 0.0)
    again = model.randomize_cascade(3, seed=9)
    np.testing.assert_array_equal(randomized.forward(image), again.forward(image))
