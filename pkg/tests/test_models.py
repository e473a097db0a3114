import csv

import numpy as np
import pytest

import gradcheck as G
from windcorr.calib import StandardizeStats
from windcorr.engine import AdamState, Tensor, adam_step, huber_loss
from windcorr.errors import FormatError, ShapeError, TrainingDivergedError, ValidationError
from windcorr.evalrun import prepare_samples
from windcorr.models import (
    ModelConfig,
    TrainConfig,
    build_cnn2d3d,
    build_fully3d,
    build_model,
    evaluate_loss,
    load_checkpoint,
    predict,
    predict_samples,
    recalibrate_batchnorm,
    save_checkpoint,
    train,
)
from windcorr.windgrid import SampleWindow


def _closed_form_count(T, S, plan=(8, 16, 32, 32), dense=64):
    conv = lambda ci, co, k: ci * co * k + co  # noqa: E731
    c1, c2, c3, c4 = plan
    total = conv(2, c1, 27) + conv(c1, c2, 27) + conv(c2, c3, 9) + conv(c3, c4, 9)
    total += 2 * (c1 + c2 + c3 + c4)  # batch-norm gamma and beta
    total += c4 * S * S * dense + dense + dense * 2 + 2
    return total


def test_parameter_count_frozen():
    assert _closed_form_count(3, 3) == 36602
    assert build_cnn2d3d(ModelConfig(T=3, S=3)).num_parameters() == 36602
    assert build_cnn2d3d(ModelConfig(T=24, S=13)).num_parameters() == _closed_form_count(24, 13)


@pytest.mark.parametrize("variant,T,S", [
    ("cnn2d3d", 1, 1), ("cnn2d3d", 3, 5), ("cnn2d3d", 24, 3), ("fully3d", 6, 7), ("fully3d", 12, 9),
])
def test_output_shape(variant, T, S):
    model = build_model(ModelConfig(variant, T, S))
    out = model(np.zeros((3, 2, T, S, S)))
    assert out.shape == (3, 2)


def test_config_constraints():
    with pytest.raises(ValidationError):
        build_fully3d(ModelConfig("fully3d", 6, 5))
    with pytest.raises(ValidationError):
        ModelConfig("fully3d", 3, 7)
    with pytest.raises(ValidationError):
        ModelConfig("cnn2d3d", 2, 3)
    with pytest.raises(ValidationError):
        ModelConfig("lstm", 3, 3)
    with pytest.raises(ShapeError):
        build_model(ModelConfig(T=3, S=3))(np.zeros((1, 2, 3, 5, 5)))


@pytest.mark.parametrize("variant", sorted(G.SMALLEST_MODELS))
def test_end_to_end_gradient(variant):
    T, S = G.SMALLEST_MODELS[variant]
    assert G.check_model(variant, T, S, batch=2) < 1e-4


def test_initialization_is_seeded():
    a = build_model(ModelConfig(seed=4)).state()
    b = build_model(ModelConfig(seed=4)).state()
    c = build_model(ModelConfig(seed=5)).state()
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a, b))
    assert a[0].tobytes() != c[0].tobytes()


STATS = StandardizeStats(mu_u=5.0, mu_v=1.0, sigma_u=2.0, sigma_v=1.5)


def test_memorize_then_predict():
    model = build_model(ModelConfig(T=3, S=3, seed=1))
    rng = np.random.default_rng(1)
    raw = rng.normal(size=(2, 3, 3, 3)) * STATS.sigma.reshape(2, 1, 1, 1) + STATS.mu.reshape(2, 1, 1, 1)
    target = (6.4, -0.95)
    x = np.repeat(((raw - STATS.mu.reshape(2, 1, 1, 1)) / STATS.sigma.reshape(2, 1, 1, 1))[None], 10, 0)
    y = np.repeat(((np.array(target) - STATS.mu) / STATS.sigma)[None], 10, 0)
    params, state = model.parameters(), AdamState()
    for step in range(200):
        for p in params:
            p.grad = None
        loss = huber_loss(model(Tensor(x), training=True), y)
        if loss.item() < 1e-6:
            break
        loss.backward()
        adam_step([p.data for p in params], [p.grad for p in params], state)
    assert loss.item() < 1e-6
    recalibrate_batchnorm(model, x)
    assert model.layers[1].momentum == 0.9 and model.layers[1].unbiased
    window = SampleWindow(raw, target, None)
    u, v = predict(model, window, STATS)
    assert abs(u - target[0]) < 1e-2 and abs(v - target[1]) < 1e-2
    assert predict(model, window, STATS) == (u, v)


def test_zeroed_final_layer_predicts_mean():
    model = build_model(ModelConfig(T=1, S=3))
    last = model.layers[-1]
    last.weight.data[...] = 0.0
    last.bias.data[...] = 0.0
    window = SampleWindow(np.random.default_rng(0).normal(size=(2, 1, 3, 3)), (0.0, 0.0), None)
    assert predict(model, window, STATS) == (5.0, 1.0)
    with pytest.raises(ShapeError):
        predict(model, SampleWindow(np.zeros((2, 3, 3, 3)), (0.0, 0.0), None), STATS)


@pytest.fixture(scope="module")
def tiny_sets():
    from windcorr.windgrid import GridSpec, synth_field
    series = synth_field("advective", GridSpec.centered(5), 260, 2)
    return prepare_samples(series, 1, 3)


def test_train_deterministic_and_best_val(tiny_sets, tmp_path):
    raw, std, stats = tiny_sets
    conf = TrainConfig(epochs=4, patience=None, seed=9)
    m1, h1 = train(build_model(ModelConfig(T=1, S=3, seed=3)), std, conf)
    m2, h2 = train(build_model(ModelConfig(T=1, S=3, seed=3)), std, conf)
    h1.to_csv(tmp_path / "a.csv")
    h2.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == ["epoch", "train_loss", "val_loss"] and len(rows) == 5
    assert h1.best_val_loss == min(h1.val_loss)
    # the returned weights are the best-validation ones
    x_va, y_va = std.part("val")
    assert evaluate_loss(m1, x_va, y_va) == pytest.approx(h1.best_val_loss, abs=1e-12)
    pred, truth = predict_samples(m1, raw, stats, "test")
    assert pred.shape == truth.shape == (len(raw.indices("test")), 2)


def test_early_stopping(tiny_sets):
    _, std, _ = tiny_sets
    _, h = train(build_model(ModelConfig(T=1, S=3)), std, TrainConfig(epochs=30, patience=1, lr=0.05))
    assert h.stopped_early and len(h.epochs) < 30


def test_train_input_checks(tiny_sets):
    raw, std, _ = tiny_sets
    model = build_model(ModelConfig(T=1, S=3))
    with pytest.raises(ValidationError, match="standardized"):
        train(model, raw)
    no_val = std.with_arrays(std.inputs, std.targets, True)
    no_val.split = np.where(no_val.split == 1, 2, no_val.split).astype(np.int8)
    with pytest.raises(ValidationError, match="validation"):
        train(model, no_val)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_epoch_and_step(tiny_sets):
    _, std, _ = tiny_sets
    bad = std.with_arrays(std.inputs * np.inf, std.targets, True)
    with pytest.raises(TrainingDivergedError) as info:
        train(build_model(ModelConfig(T=1, S=3)), bad, TrainConfig(epochs=2))
    assert info.value.epoch == 1 and info.value.step == 1


def test_checkpoint_roundtrip(tmp_path):
    model = build_model(ModelConfig("fully3d", 6, 7, seed=2))
    x = np.random.default_rng(0).normal(size=(3, 2, 6, 7, 7))
    model(x, training=True)  # move the running buffers off their defaults
    save_checkpoint(model, tmp_path / "m.wck", STATS, {"note": "x"})
    back, stats, extra = load_checkpoint(tmp_path / "m.wck")
    assert stats == STATS and extra == {"note": "x"}
    assert back.config.variant == "fully3d"
    for a, b in zip(model.state(), back.state()):
        assert np.array_equal(a.astype(np.float32), b)
    assert np.allclose(model.predict_std(x), back.predict_std(x), atol=1e-4)
    (tmp_path / "bad.wck").write_bytes(b"NOTACKPT" + b"\0" * 8)
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "bad.wck")
