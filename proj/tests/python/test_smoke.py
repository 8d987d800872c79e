import math

import numpy as np
import pytest

import predilect


def test_contrastive_loss_closed_forms():
    eye = np.eye(2)
    assert predilect.contrastive_loss(eye, eye, tau=1.0) == pytest.approx(-math.log(math.e / (math.e + 1)), abs=1e-12)
    same = np.tile([0.3, -0.2, 0.9], (3, 1))
    assert predilect.contrastive_loss(same, np.tile([1.0, 2.0, 3.0], (3, 1))) == pytest.approx(math.log(3), abs=1e-12)


def test_total_loss_is_weighted_sum():
    rng = np.random.default_rng(0)
    f, o, t = (rng.uniform(-1, 1, (5, 8)) for _ in range(3))
    hand = 0.4 * predilect.contrastive_loss(f, o) + 0.6 * predilect.contrastive_loss(f, t)
    assert predilect.total_loss(f, o, t) == pytest.approx(hand, abs=1e-12)


def test_cross_attend_identical_keys_return_value_projection():
    q = np.array([[0.2, 0.8], [0.5, 0.1]])
    text = np.array([[1.0, 2.0], [1.0, 2.0]])
    attention, refined = predilect.cross_attend(q, text, np.eye(2), np.eye(2), 2 * np.eye(2))
    assert np.allclose(attention, 0.5)
    assert np.allclose(refined, [[2.0, 4.0], [2.0, 4.0]])


def test_world_and_batches():
    world = predilect.make_world({"num_classes": 3, "n": 2, "d": 4, "seed": 5})
    assert world.num_classes == 3 and world.n == 2 and world.d == 4
    assert len(world.class_names) == 3
    batch = predilect.sample_batch(world, 4, 0.5, 1)
    assert len(batch) == 4
    assert batch[0]["fundus"].shape == (2, 4)
    assert predilect.render_prompt("{NAME} ({ABBR})", "Alpha", "A") == "Alpha (A)"


def test_train_classify_and_checkpoint(tmp_path):
    world = predilect.make_world({"num_classes": 3, "n": 2, "d": 8, "seed": 2})
    config = {"epochs": 6, "warmup_epochs": 1, "samples_per_epoch": 32}
    model, losses = predilect.train(world, config)
    assert len(losses) == 6
    assert all(math.isfinite(v) for v in losses)
    path = tmp_path / "m.ckpt"
    predilect.save_checkpoint(model, world, str(path), config)
    loaded = predilect.load_checkpoint(str(path))
    assert loaded.checksum() == model.checksum()
    p = model.predilection()
    assert p.shape == (2, 8) and np.all((p > 0) & (p < 1))
    classes = [(name, name[:2]) for name in world.class_names]
    class_id, scores = model.classify(classes, predilect.sample_batch(world, 2, 0.5, 9)[0]["fundus"])
    assert 0 <= class_id < 3 and len(scores) == 3
    report = predilect.evaluate_zero_shot(model, world, 60, 1)
    assert 0.0 <= report["accuracy"] <= 1.0


def test_metrics_and_rank_sweep():
    assert predilect.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert predilect.auprc([0.9, 0.1], [1, 0]) == pytest.approx(1.0)
    assert predilect.kendall_tau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)
    rows = predilect.noise_sweep({"trials": 20, "noise_levels": [0.0, 2.0]})
    assert rows[0]["mean_tau"] > rows[1]["mean_tau"]


def test_gradcheck_and_errors():
    max_err, per_tensor = predilect.gradcheck()
    assert max_err < 1e-3 and per_tensor
    assert predilect.gradcheck(inject_fault=True)[0] > 1e-3
    with pytest.raises(predilect.ContractError):
        predilect.contrastive_loss(np.ones((1, 2)), np.ones((1, 2)))
    with pytest.raises(predilect.FormatError):
        predilect.make_world({"bogus": 1})
    with pytest.raises(predilect.Error):
        predilect.load_checkpoint("/nonexistent.ckpt")
