"""Optimizer update rules and the warmup schedule."""

import numpy as np
import pytest

from whymine.nn import AdaGrad, NoamAdam, TrainConfig, noam_lr


def test_adagrad_first_step_closed_form():
    params = {"w": np.array([1.0])}
    opt = AdaGrad(lr=0.1, weight_decay=0.0, eps=1e-10)
    opt.step(params, {"w": np.array([3.0])})
    # acc = 9, update = 0.1 * 3 / (3 + 1e-10) = 0.1
    assert params["w"][0] == pytest.approx(1.0 - 0.1, abs=1e-9)


def test_adagrad_weight_decay_term():
    params = {"w": np.array([2.0])}
    opt = AdaGrad(lr=0.1, weight_decay=0.5, eps=1e-10)
    opt.step(params, {"w": np.array([3.0])})
    # gradient part 0.1, decay part lr * wd * w = 0.1 * 0.5 * 2 = 0.1
    assert params["w"][0] == pytest.approx(2.0 - 0.1 - 0.1, abs=1e-9)


def test_adagrad_accumulates():
    params = {"w": np.array([0.0])}
    opt = AdaGrad(lr=1.0, weight_decay=0.0, eps=0.0)
    opt.step(params, {"w": np.array([4.0])})   # acc 16, step 4/4 = 1
    first = -params["w"][0]
    opt.step(params, {"w": np.array([4.0])})   # acc 32, step 4/sqrt(32)
    second = -params["w"][0] - first
    assert first == pytest.approx(1.0)
    assert second == pytest.approx(4.0 / np.sqrt(32.0))


def test_noam_schedule_continuous_at_warmup():
    warmup, d_model = 400, 512
    left = noam_lr(warmup, d_model, warmup)
    # the two min() branches coincide exactly at step == warmup
    assert left == pytest.approx(d_model ** -0.5 * warmup ** -0.5, rel=1e-12)
    assert noam_lr(warmup - 1, d_model, warmup) < left
    assert noam_lr(warmup + 1, d_model, warmup) < left


def test_noam_warmup_is_linear():
    warmup, d_model = 100, 64
    lrs = [noam_lr(s, d_model, warmup) for s in (10, 20, 40)]
    assert lrs[1] == pytest.approx(2 * lrs[0])
    assert lrs[2] == pytest.approx(4 * lrs[0])


def test_optimizers_descend_convex_quadratic():
    # f(w) = 0.5 * ||w - target||^2, gradient w - target
    target = np.array([1.0, -2.0, 0.5])

    def value(w):
        return 0.5 * float(((w - target) ** 2).sum())

    for make in (lambda: AdaGrad(lr=0.3, weight_decay=0.0),
                 lambda: NoamAdam(d_model=4, warmup=10, factor=1.0)):
        params = {"w": np.zeros(3)}
        opt = make()
        values = []
        for _ in range(50):
            grads = {"w": params["w"] - target}
            opt.step(params, grads)
            values.append(value(params["w"]))
        # monotone decrease after the first few steps
        for prev, cur in zip(values[3:], values[4:]):
            assert cur <= prev + 1e-12
        assert values[-1] < values[0]


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(optimizer="sgd")
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(dropout=1.0)
    with pytest.raises(ValueError):
        TrainConfig(precision="double")
    cfg = TrainConfig()
    assert cfg.optimizer == "adagrad"
    assert cfg.lr == 0.1
    assert cfg.weight_decay == 1e-6
    assert cfg.epochs == 10
