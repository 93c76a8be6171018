import math

import numpy as np
import pytest

import graspvae


@pytest.fixture(scope="module")
def dataset():
    return graspvae.generate_primitives(per_pose=20, seed=3)


@pytest.fixture(scope="module")
def model(dataset):
    model, report = graspvae.Model.train(dataset, epochs=30, seed=2)
    assert len(report["total"]) == 30
    assert report["total"][-1] < report["total"][0]
    return model


def test_dataset(dataset, tmp_path):
    assert len(dataset) == 40
    configs = dataset.configurations()
    assert configs.shape == (40, 8)
    np.testing.assert_allclose(np.linalg.norm(configs[:, 3:7], axis=1), 1.0, atol=1e-12)
    assert dataset.planes().shape == (40, 4)
    assert dataset.grasp_types()[:2] == [0, 0]
    normalized = dataset.normalized()
    assert normalized[:, :3].min() == 0.0 and normalized[:, :3].max() == 1.0

    path = tmp_path / "data.jsonl"
    dataset.save(str(path))
    np.testing.assert_array_equal(graspvae.Dataset.load(str(path)).configurations(), configs)


def test_model_roundtrip(model, dataset, tmp_path):
    assert model.latent_dim == 3
    assert 29000 <= model.parameter_count <= 31000
    plane = dataset.planes()[0]
    mean, log_var = model.encode(dataset.configurations()[0], plane)
    assert mean.shape == (3,) and log_var.shape == (3,)
    out = model.decode(mean, plane)
    assert abs(np.linalg.norm(out[3:7]) - 1.0) < 1e-9

    path = tmp_path / "model.json"
    model.save(str(path))
    again = graspvae.Model.load(str(path))
    np.testing.assert_array_equal(again.decode(mean, plane), out)


def test_generation(model, dataset):
    plane = dataset.planes()[-1]
    latents, configs = model.sample(plane, 10, seed=5)
    assert latents.shape == (10, 3) and configs.shape == (10, 8)
    np.testing.assert_array_equal(model.sample(plane, 10, seed=5)[1], configs)

    latents, configs = model.sweep(plane, points=12)
    assert configs.shape == (25, 8)
    np.testing.assert_array_equal(latents[0], np.zeros(3))
    np.testing.assert_allclose(latents[1] + latents[7], 0.0, atol=1e-15)
    with pytest.raises(graspvae.Error, match="usage"):
        model.sweep(plane, axes=(0, 5))


def test_evaluation(model, dataset):
    rows = graspvae.evaluate(model, dataset, samples=50)
    assert [r["pose"] for r in rows] == ["upright", "lying"]
    for r in rows:
        assert 0.0 <= r["success_share"] <= 1.0
        assert math.isfinite(r["mean_position_error"])


def test_oracle(dataset):
    configs, planes = dataset.configurations(), dataset.planes()
    assert graspvae.oracle_success(configs[0], planes[0]) == (True, "none")
    far = configs[0].copy()
    far[:2] *= 10.0
    assert graspvae.oracle_success(far, planes[0]) == (False, "radial")
    with pytest.raises(graspvae.Error):
        graspvae.oracle_success(configs[0], np.array([0.0, 1.0, 0.0, 0.0]))


def test_dimension_and_spearman():
    t = np.linspace(0.0, 1.0, 40)
    line = np.outer(t, np.arange(1.0, 9.0))
    assert graspvae.estimate_dimension(line, kernel="linear")["dimension"] == 1
    assert graspvae.spearman([1, 1, 2], [1, 2, 3]) == pytest.approx(math.sqrt(3) / 2)
    with pytest.raises(graspvae.Error, match="validation"):
        graspvae.spearman([1, 1, 1], [1, 2, 3])
