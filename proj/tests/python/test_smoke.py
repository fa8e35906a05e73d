import math

import numpy as np
import pytest

import privkt


def test_gaussian_mechanism_closed_form():
    for m in (0.5, 1.0, 2.0):
        got = privkt.rdp_sgm_step(1.0, m, [2.0, 8.0, 32.0])
        assert got == pytest.approx([a / (2 * m * m) for a in (2, 8, 32)], rel=1e-12)


def test_account_budget_in_range():
    r = privkt.account(0.005, 1.1, 4000, delta=1e-5)
    assert 1.6 <= r["epsilon"] <= 2.3
    assert r["steps"] == 4000
    assert len(r["eps_rdp"]) == 127
    zero = privkt.account(0.005, 1.1, 0)
    assert zero["epsilon"] == pytest.approx(math.log(1e5) / 127)


def test_clip_l2():
    assert privkt.clip_l2([3.0, 4.0], 1.0) == pytest.approx([0.6, 0.8])
    assert privkt.clip_l2([0.3, 0.4], 1.0) == [0.3, 0.4]


def test_temperature_softmax_and_kl():
    p = privkt.temperature_softmax(np.array([[2.0, 0.0]]), 2.0)
    assert p[0, 0] == pytest.approx(math.e / (math.e + 1))
    v = privkt.per_example_vector([1.0, 0.0], [0.5, 0.5])
    assert sum(v) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        privkt.temperature_softmax(np.zeros((1, 2)), 0.0)


def test_gumbel_sample_on_simplex():
    y = privkt.gumbel_sample([0.7, 0.2, 0.1], 0.5, seed=3)
    assert sum(y) == pytest.approx(1.0)
    assert y == privkt.gumbel_sample([0.7, 0.2, 0.1], 0.5, seed=3)


def test_gen_blobs_balanced():
    x, y = privkt.gen_blobs(99, 3, 4, seed=1)
    assert x.shape == (99, 4)
    assert np.bincount(y).tolist() == [33, 33, 33]


def test_experiment_small():
    r = privkt.experiment({
        "data.n": "600", "data.dim": "4", "data.n_pub": "100",
        "teacher.epochs": "10", "train.epochs": "2", "train.batch_size": "20",
    })
    assert r["steps"] == 2 * 5
    assert len(r["metrics"]) == 2
    assert 0.0 <= r["acc_student"] <= 1.0
    assert r["metrics"][-1]["eps"] == r["epsilon"]


def test_run_cli_usage_error():
    code, out, err = privkt.run_cli(["account", "--q", "0.1"])
    assert code == 2
    assert "usage error" in err
