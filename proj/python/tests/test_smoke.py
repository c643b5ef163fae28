"""Smoke tests for the python bindings.

Run with the built package on the path, e.g.
    PYTHONPATH=build/python pytest python/tests
"""

import numpy as np
import pytest

import rqmap


@pytest.fixture(scope="module")
def scene():
    spec = rqmap.SceneSpec()
    return rqmap.scene_with_sources(spec, 0, rqmap.AntennaPlacement.corner)


def test_scene_and_depth(scene):
    assert scene.t == 0
    assert scene.n_shelves > 0
    depth = rqmap.project_depth(scene)
    v = depth.values
    assert v.shape == (64, 64)
    assert v.dtype == np.float32
    assert 0.0 <= v.min() and v.max() <= 1.0
    assert v.max() > 0.0  # shelves show up


def test_scene_determinism():
    spec = rqmap.SceneSpec()
    a = rqmap.project_depth(rqmap.build_scene(spec, 3)).values
    b = rqmap.project_depth(rqmap.build_scene(spec, 3)).values
    np.testing.assert_array_equal(a, b)


def test_field_maps(scene):
    depth = rqmap.project_depth(scene)
    spec = rqmap.SceneSpec()
    radio = rqmap.radio_map(depth, rqmap.radio_antenna(spec, rqmap.AntennaPlacement.corner))
    light = rqmap.illumination_map(depth, rqmap.corridor_lights(spec))
    heat = rqmap.temperature_map(depth, rqmap.corridor_heat_sources(spec))
    for field in (radio, light, heat):
        v = field.values
        assert v.shape == (64, 64)
        assert np.isfinite(v).all()
        assert 0.0 <= v.min() and v.max() <= 1.0
    assert radio.modality == rqmap.Modality.radio


def test_generate_labeled_sample(scene):
    depth, field = rqmap.generate_labeled_sample(scene, rqmap.Modality.radio)
    assert depth.values.shape == field.values.shape == (64, 64)


def test_psnr():
    a = np.random.default_rng(0).random((64, 64), dtype=np.float32)
    assert rqmap.psnr(a, a) == 100.0
    noisy = np.clip(a + 0.1, 0.0, 1.0).astype(np.float32)
    assert rqmap.psnr(noisy, a) < 30.0
    with pytest.raises(ValueError):
        rqmap.psnr(a, a[:32])


def test_backbones_forward_and_budget():
    for b in (rqmap.Backbone.vit, rqmap.Backbone.cnn, rqmap.Backbone.mlp):
        model = rqmap.build_backbone(b, in_channels=4, seed=1)
        assert 550_000 <= model.param_count() <= 650_000
        x = np.random.default_rng(1).random((4, 64, 64)).astype(np.float32)
        y = model.forward(x)
        assert y.shape == (1, 64, 64)
        assert np.isfinite(y).all()
        # deterministic forward
        np.testing.assert_array_equal(y, model.forward(x))


def test_checkpoint_roundtrip(tmp_path):
    model = rqmap.build_backbone(rqmap.Backbone.mlp, in_channels=4, seed=7)
    path = str(tmp_path / "m.ckpt")
    rqmap.save_checkpoint(model, path)
    loaded = rqmap.load_checkpoint(path)
    assert loaded.arch == model.arch
    x = np.random.default_rng(2).random((4, 64, 64)).astype(np.float32)
    np.testing.assert_array_equal(model.forward(x), loaded.forward(x))
