import numpy as np
import pytest

from metapix import dataset as ds
from metapix import surrogate as sg


def _toy_data(n=24, seed=13):
    recs = ds.generate(n, seed=seed)
    return sg.records_to_xy(recs)


def test_default_network_shape():
    mlp = sg.init_mlp(0)
    assert mlp.sizes == (64, 256, 256, 256, 122)
    assert mlp.n_params() == 179_578


def test_init_is_seeded():
    a = sg.init_mlp(7, hidden=(32,))
    b = sg.init_mlp(7, hidden=(32,))
    c = sg.init_mlp(8, hidden=(32,))
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    assert any(not np.array_equal(wa, wc) for wa, wc in zip(a.weights, c.weights))
    for bias in a.biases:
        assert not bias.any()
    # He-uniform bound on the first layer
    assert np.abs(a.weights[0]).max() <= np.sqrt(6.0 / 64)


def test_encode_bits():
    x = sg.encode_bits(np.array([0, (1 << 64) - 1, 1 << 63], dtype=np.uint64))
    np.testing.assert_array_equal(x[0], -np.ones(64))
    np.testing.assert_array_equal(x[1], np.ones(64))
    assert x[2, 0] == 1.0 and (x[2, 1:] == -1.0).all()


def test_target_layout_re_then_im():
    resp = np.arange(244, dtype=float).reshape(2, 122)
    y = sg.targets_from_resp(resp)
    np.testing.assert_array_equal(y[:, :61], resp[:, 0::2])
    np.testing.assert_array_equal(y[:, 61:], resp[:, 1::2])


def test_forward_matches_hand_matmul():
    mlp = sg.init_mlp(3, hidden=(5,), n_in=4, n_out=3)
    x = np.array([[1.0, -1.0, 1.0, 1.0]])
    h = np.maximum(x @ mlp.weights[0] + mlp.biases[0], 0.0)
    out = h @ mlp.weights[1] + mlp.biases[1]
    np.testing.assert_array_equal(mlp.predict(x), out)


def test_loss_is_mean_absolute_error():
    mlp = sg.init_mlp(1, hidden=(8,), n_in=4, n_out=2)
    x = np.array([[1.0, 1.0, -1.0, 1.0], [-1.0, 1.0, 1.0, -1.0]])
    y = np.array([[0.1, -0.2], [0.3, 0.0]])
    loss, _, _ = mlp.loss_and_grads(x, y)
    np.testing.assert_allclose(loss, np.abs(mlp.predict(x) - y).mean(), rtol=1e-15)


def test_gradients_pass_central_difference_audit():
    x, y = _toy_data(8)
    mlp = sg.init_mlp(3, hidden=(32, 32))
    rel, checked, skipped = sg.grad_check(mlp, x, y, n_coords=150, seed=5)
    assert checked >= 100
    assert rel < 1e-4
    assert skipped < 25


def test_grad_check_catches_a_corrupted_gradient():
    x, y = _toy_data(8)
    mlp = sg.init_mlp(3, hidden=(32, 32))

    def off_by_two_percent(m, a, b):
        loss, gws, gbs = m.loss_and_grads(a, b)
        return loss, [g * 1.02 for g in gws], gbs

    rel, checked, _ = sg.grad_check(mlp, x, y, n_coords=150, seed=5, grad_fn=off_by_two_percent)
    assert checked >= 100
    assert rel > 1e-3


def test_training_memorizes_a_small_set():
    x, y = _toy_data(24)
    mlp = sg.init_mlp(1, hidden=(64, 64))
    res = sg.train(mlp, x, y, x, y, seed=2, batch_size=8, max_epochs=200,
                   patience=25, lr0=3e-3)
    assert res.best_val_mae < 0.03
    assert sg.mae(mlp, x, y) <= res.best_val_mae + 1e-12


def test_training_is_deterministic():
    x, y = _toy_data(16)
    runs = []
    for _ in range(2):
        mlp = sg.init_mlp(5, hidden=(16,))
        res = sg.train(mlp, x, y, x, y, seed=9, batch_size=4, max_epochs=5)
        runs.append((mlp, res))
    (m1, r1), (m2, r2) = runs
    assert r1.history == r2.history
    for a, b in zip(m1.weights, m2.weights):
        np.testing.assert_array_equal(a, b)


def test_plateau_drops_lr_twice_then_stops():
    """With a step size too small to ever improve, the scheduler must fire an
    event every `patience` epochs: two rate cuts, then a stop."""
    x, y = _toy_data(8)
    mlp = sg.init_mlp(1, hidden=(8,))
    res = sg.train(mlp, x, y, x, y, seed=3, batch_size=8, lr0=1e-13,
                   max_epochs=50, patience=2, min_delta=1e-4)
    assert res.stop_reason == "plateau"
    assert res.epochs_run == 7  # baseline epoch + 3 stretches of patience 2
    lrs = [row[3] for row in res.history]
    np.testing.assert_allclose(lrs, [1e-13, 1e-13, 1e-13, 1e-14, 1e-14, 1e-15, 1e-15])


def test_training_restores_best_weights():
    x, y = _toy_data(16)
    mlp = sg.init_mlp(4, hidden=(16,))
    res = sg.train(mlp, x, y, x, y, seed=6, batch_size=4, max_epochs=12)
    np.testing.assert_allclose(sg.mae(mlp, x, y), res.best_val_mae, rtol=1e-12)


def test_checkpoint_round_trip(tmp_path):
    mlp = sg.init_mlp(11, hidden=(16, 8), n_in=6, n_out=3)
    path = str(tmp_path / "net.ckpt")
    sg.save_checkpoint(path, mlp, meta={"tag": "unit"})
    back, meta = sg.load_checkpoint(path)
    assert meta == {"tag": "unit"}
    assert back.sizes == mlp.sizes
    for a, b in zip(mlp.weights + mlp.biases, back.weights + back.biases):
        np.testing.assert_array_equal(a, b)


def test_checkpoint_rejects_damage(tmp_path):
    mlp = sg.init_mlp(11, hidden=(8,), n_in=4, n_out=2)
    path = str(tmp_path / "net.ckpt")
    sg.save_checkpoint(path, mlp)
    blob = open(path, "rb").read()

    with open(path, "wb") as fh:
        fh.write(blob[:-8])
    with pytest.raises(ValueError, match="truncated"):
        sg.load_checkpoint(path)

    with open(path, "wb") as fh:
        fh.write(blob + b"\x00" * 8)
    with pytest.raises(ValueError, match="trailing"):
        sg.load_checkpoint(path)

    with open(path, "wb") as fh:
        fh.write(b'{"format": "other"}\n')
    with pytest.raises(ValueError, match="format"):
        sg.load_checkpoint(path)

    with open(path, "wb") as fh:
        fh.write(b"garbage\n")
    with pytest.raises(ValueError, match="not a checkpoint"):
        sg.load_checkpoint(path)


def test_history_csv(tmp_path):
    path = str(tmp_path / "hist.csv")
    sg.save_history(path, [(1, 0.5, 0.6, 1e-3), (2, 0.4, 0.55, 1e-3)])
    lines = open(path).read().splitlines()
    assert lines[0] == "epoch,train_mae,val_mae,lr"
    assert lines[1].startswith("1,0.50000000,0.60000000,")
    assert len(lines) == 3


def test_predict_s22_assembles_complex_rows():
    recs = ds.generate(5, seed=20)
    mlp = sg.init_mlp(2)
    s22 = sg.predict_s22(mlp, recs["genome"])
    out = mlp.predict(sg.encode_bits(recs["genome"]))
    assert s22.shape == (5, 61)
    np.testing.assert_array_equal(s22.real, out[:, :61])
    np.testing.assert_array_equal(s22.imag, out[:, 61:])
