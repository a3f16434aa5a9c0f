import os
from pathlib import Path

import numpy as np
import pytest

import sharplab as sl


def mnist_dir():
    d = os.environ.get("SHARPLAB_MNIST_DIR") or os.environ.get("SHARPLAB_DATA_DIR")
    if d and any((Path(d) / n).exists() for n in ("train-images-idx3-ubyte", "train-images-idx3-ubyte.gz")):
        return d
    return None


def test_version_and_errors():
    assert sl.__version__
    with pytest.raises(sl.SharplabError):
        sl.pearson(np.array([1.0, 2.0]), np.array([1.0]))
    assert issubclass(sl.SharplabError, ValueError)


def test_pearson_matches_numpy():
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=50), rng.normal(size=50)
    assert sl.pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


def test_pseudoinverse_matches_numpy():
    a = np.random.default_rng(1).normal(size=(12, 5))
    np.testing.assert_allclose(sl.pseudoinverse(a), np.linalg.pinv(a), atol=1e-10)


def test_solve_units_grid_values():
    assert sl.solve_units(4, 8000) == 42
    assert abs(sl.solve_units(1, 14000) - 234) <= 1


def test_gradient_check_all_families():
    combos = [
        (sl.Activation.tanh, sl.Activation.softmax, sl.LossKind.categorical_crossentropy),
        (sl.Activation.relu, sl.Activation.softmax, sl.LossKind.categorical_crossentropy),
        (sl.Activation.relu, sl.Activation.identity, sl.LossKind.squared_error),
    ]
    for hidden, output, loss in combos:
        res = sl.gradient_check(hidden, output, loss, nets=3, seed=5)
        assert res.max_error() <= 1e-5


def test_linear_sharpness_equals_weight_norm():
    net = sl.init_mlp([49, 10], sl.Activation.identity, sl.Activation.identity, seed=9)
    x = np.random.default_rng(2).uniform(size=(20, 49))
    raw, _ = sl.weight_norm(net)
    assert sl.sharpness(net, x) == pytest.approx(raw, abs=1e-12)
    assert raw == pytest.approx(np.linalg.norm(net.weights[0]), abs=1e-12)


def test_jacobian_matches_finite_differences():
    net = sl.init_mlp([49, 8, 10], sl.Activation.tanh, sl.Activation.softmax, seed=4)
    x = np.random.default_rng(8).uniform(size=49)
    jac = sl.jacobian(net, x)
    h = 1e-6
    fd = np.empty_like(jac)
    for i in range(49):
        e = np.zeros(49)
        e[i] = h
        fd[i] = (sl.predict(net, (x + e)[None])[0] - sl.predict(net, (x - e)[None])[0]) / (2 * h)
    np.testing.assert_allclose(jac, fd, atol=1e-8)


def test_anchored_least_squares_properties():
    rng = np.random.default_rng(11)
    phi, y = rng.normal(size=(20, 50)), rng.normal(size=(20, 3))
    anchor = sl.make_anchor(7, 50, 3, 2.5)
    assert np.linalg.norm(anchor) == pytest.approx(2.5, abs=1e-12)
    w = sl.anchored_least_squares(phi, y, anchor)
    np.testing.assert_allclose(phi.T @ (phi @ w - y), 0, atol=1e-8)
    diff = w - anchor
    proj = np.linalg.pinv(phi) @ phi
    np.testing.assert_allclose(diff - proj @ diff, 0, atol=1e-8)


def test_training_reduces_loss():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(64, 49))
    labels = rng.integers(0, 10, size=64)
    y = np.eye(10)[labels]
    net = sl.init_mlp([49, 16, 10], sl.Activation.relu, sl.Activation.softmax, seed=1)
    cfg = sl.TrainConfig()
    cfg.epochs = 50
    cfg.lr_decay = sl.decay_for(50)
    cfg.seed = 2
    trained, losses, accs = sl.train(net, x, y, sl.LossKind.categorical_crossentropy, cfg)
    assert len(losses) == 50 and len(accs) == 50
    assert losses[-1] < losses[0]


def test_runs_csv_roundtrip_and_report(tmp_path):
    recs = []
    for i in range(6):
        r = sl.RunRecord()
        r.family = "relu_linear_sq"
        r.depth = 1 + i % 3
        r.param_target = 1000.0 * (i + 1)
        r.units = 10 + i
        r.raw_norm = 1.0 + i
        r.normalized_norm = 0.5 + 0.1 * i
        r.sharpness = 2.0 + 0.3 * i
        r.sharpness_basis = "train/outputs"
        r.test_acc = 0.9 - 0.01 * i
        r.test_loss = 0.1 + 0.02 * i
        r.status = "ok"
        recs.append(r)
    path = tmp_path / "runs.csv"
    sl.write_runs(recs, str(path))
    back = sl.read_runs(str(path))
    assert [b.sharpness for b in back] == [r.sharpness for r in recs]
    svg = sl.render_figure(back, "sharpness-vs-loss")
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert svg == sl.render_figure(back, "sharpness-vs-loss")
    assert "relu_linear_sq" in sl.correlation_report_json(back)
    assert "sharpness-vs-loss" in sl.figure_names()


def test_model_roundtrip(tmp_path):
    net = sl.init_mlp([49, 5, 10], sl.Activation.relu, sl.Activation.identity, seed=3)
    path = tmp_path / "m.bin"
    sl.save_model(net, str(path))
    back = sl.load_model(str(path))
    for a, b in zip(net.weights, back.weights):
        np.testing.assert_array_equal(a, b)


@pytest.mark.skipif(mnist_dir() is None, reason="MNIST files not available")
def test_prepare_mnist_and_short_sweep(tmp_path):
    data = sl.prepare_mnist(mnist_dir(), 1000, 0)
    assert data.train_x.shape == (1000, 49)
    assert data.test_x.shape == (59000, 49)
    cache = tmp_path / "c.bin"
    sl.save_cache(data, str(cache))
    again = sl.load_cache(str(cache))
    np.testing.assert_array_equal(again.train_x, data.train_x)
    recs = sl.run_family_sweep(data, "relu_linear_sq", "ci", master_seed=0, workers=2, epochs=2)
    assert len(recs) == 9
    assert all(r.family == "relu_linear_sq" for r in recs)
