import math

import numpy as np
import pytest

import deepfw as dfw


def margin_spec():
    return dfw.ModelSpec(dfw.ModelKind.linear, input_dim=2, hidden_dims=[], num_classes=2)


def test_losses_and_directions():
    assert dfw.hinge_loss(np.array([0.3, 0.5, -0.2]), 0) == pytest.approx(1.2)
    assert dfw.cross_entropy(np.zeros(2), 0) == pytest.approx(math.log(2.0))
    np.testing.assert_allclose(dfw.augmented_scores(np.array([5.0, 0.0]), 0), [0.0, -4.0])
    np.testing.assert_allclose(dfw.softmax_direction(np.array([math.log(2.0), 0.0])), [2 / 3, 1 / 3])

    s, kept = dfw.get_s(np.array([5.0, 0.0]), 0, dfw.DirectionMode.smoothed)
    assert not kept
    np.testing.assert_array_equal(s, [1.0, 0.0])


def test_step_sizes():
    assert dfw.dual_objective(np.zeros(2), np.array([1.0, 0.0]), 2.0, 1.0) == 1.5
    assert dfw.optimal_step_size(np.zeros(2), np.zeros(2), 0.0, 0.5, np.array([-2.0, 0.0]), 1.0) == 0.125
    assert dfw.single_step_gamma(np.zeros(2), np.array([2.0, 0.0]), 0.2, 0.1) == pytest.approx(0.5)


def test_model_and_gradient():
    spec = dfw.ModelSpec(dfw.ModelKind.mlp, input_dim=4, hidden_dims=[8], num_classes=3)
    assert spec.parameter_count == 67
    w = dfw.init_params(spec, 0)
    x = np.random.default_rng(0).normal(size=(5, 4))
    assert dfw.scores(spec, w, x).shape == (5, 3)
    loss, g = dfw.loss_gradient(spec, w, x, [0, 1, 2, 0, 1], l2=1e-3)
    assert loss > 0 and g.shape == w.shape

    with pytest.raises(ValueError):
        dfw.scores(spec, w[:-1], x)


def test_dfw_step_matches_closed_form():
    spec = margin_spec()
    # f = (w0 x, w1 x) with biases zero; one sample on the first class.
    state = dfw.DFWState(np.zeros(6), eta=1.0, mu=0.0, l2=0.0)
    diag = dfw.dfw_step(state, spec, np.array([[1.0, 0.0]]), [0])
    assert 0.0 <= diag.gamma <= 1.0
    assert state.step_count == 1


def test_proximal_solve_converges():
    spec = margin_spec()
    rng = np.random.default_rng(1)
    x = rng.normal(size=(10, 2))
    y = [int(v > 0) for v in x[:, 0]]
    res = dfw.proximal_fw_solve(spec, np.zeros(6), x, y, eta=1.0, max_iters=2000, gap_tol=1e-6)
    assert all(b >= a - 1e-12 for a, b in zip(res.dual_objectives, res.dual_objectives[1:]))
    assert res.gaps[-1] <= res.gaps[0]


def test_training_and_sweep():
    data = dfw.make_blobs(n_train=200, n_val=50, n_test=50, dim=4, num_classes=3, separation=6.0, seed=3)
    spec = dfw.ModelSpec(dfw.ModelKind.mlp, input_dim=4, hidden_dims=[16], num_classes=3)
    config = dfw.RunConfig(dfw.OptimizerKind.dfw, eta=0.1, model=spec, epochs=5, batch_size=32)
    run = dfw.run_training(config, data)
    assert len(run.epochs) == 5
    assert run.epochs[-1].train_acc > 0.9
    assert run.epochs[-1].mean_gamma is not None

    adam = dfw.run_training(dfw.RunConfig(dfw.OptimizerKind.adam, eta=0.01, model=spec, epochs=2), data)
    assert adam.epochs[-1].mean_gamma is None

    rows = dfw.sensitivity_sweep(config, [0.1, 0.01, 0.1], data)
    assert [r.eta for r in rows] == [0.01, 0.1]

    with pytest.raises(ValueError):
        dfw.RunConfig(dfw.OptimizerKind.dfw, eta=0.1, model=spec, loss=dfw.LossKind.ce)
