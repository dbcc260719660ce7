import numpy as np
import pytest

from modrelu.datagen import RegressionDataset
from modrelu.network import MODIFIED, PLAIN, Architecture, NetworkParams, l2sq_norm
from modrelu.training import (
    PenaltySpec,
    TrainConfig,
    TrainingDiverged,
    gradient,
    gradient_check,
    objective,
    prox_l1_step,
    soft_threshold,
    train,
)


def net(kind, *layers):
    layers = [np.atleast_2d(np.asarray(m, dtype=float)) for m in layers]
    widths = tuple([layers[0].shape[1]] + [m.shape[0] for m in layers])
    return NetworkParams(kind, Architecture(widths), tuple(layers))


def data(n=40, d=1, seed=0):
    rng = np.random.default_rng(seed)
    return RegressionDataset(rng.random((n, d)), rng.standard_normal(n))


def test_objective_examples():
    ds = data()
    z = net(MODIFIED, [[0.0]], [[0.0]])
    assert objective(z, ds, PenaltySpec("none", 0)) == pytest.approx(np.mean(ds.y**2), rel=1e-15)
    g = net(MODIFIED, [[2.0]], [[3.0]])
    perfect = RegressionDataset(ds.X, 3 * ds.X[:, 0])
    assert objective(g, perfect, PenaltySpec("none", 0)) == pytest.approx(0, abs=1e-30)
    assert objective(g, perfect, PenaltySpec("l1", 0.1)) == pytest.approx(0.5)


def test_gradient_hand_example():
    g = net(MODIFIED, [[2.0]], [[1.0]])
    ds = RegressionDataset(np.array([[0.5]]), np.array([0.0]))
    G = gradient(g, ds, PenaltySpec("none", 0))
    assert G[0][0, 0] == pytest.approx(0.5) and G[1][0, 0] == pytest.approx(0.5)


def test_dead_zone_gradient_is_zero():
    rng = np.random.default_rng(1)
    arch = Architecture((2, 5, 5, 1))
    layers = [rng.uniform(-3, 3, s) for s in arch.layer_shapes]
    g = NetworkParams(MODIFIED, arch, tuple(layers))
    G = gradient(g, data(50, 2), PenaltySpec("none", 0))
    for V, GV in zip(layers[:-1], G[:-1]):
        assert np.all(GV[np.abs(V) < 1] == 0)


def test_l2sq_gradient_is_weight_decay():
    rng = np.random.default_rng(2)
    arch = Architecture((1, 4, 1))
    g = NetworkParams(MODIFIED, arch, tuple(rng.uniform(-3, 3, s) for s in arch.layer_shapes))
    ds = data()
    lam = 0.37
    a = gradient(g, ds, PenaltySpec("l2sq", lam))
    b = gradient(g, ds, PenaltySpec("none", 0))
    for ga, gb, V in zip(a, b, g.layers):
        assert np.allclose(ga - gb, 2 * lam * V, rtol=0, atol=1e-12)
    assert PenaltySpec("l2sq", lam).value(g.layers) == pytest.approx(lam * l2sq_norm(g), rel=1e-15)


def test_soft_threshold_examples():
    assert soft_threshold(np.array([1.5]), 0.2)[0] == pytest.approx(1.3)
    assert soft_threshold(np.array([0.1]), 0.2)[0] == 0
    assert soft_threshold(np.array([-0.5]), 0.2)[0] == pytest.approx(-0.3)
    g = net(MODIFIED, [[1.5, -0.1]], [[0.7]])
    assert prox_l1_step(g, 0) == g
    with pytest.raises(ValueError):
        prox_l1_step(g, -1)


def test_penalty_validation():
    with pytest.raises(ValueError):
        PenaltySpec("l3", 1)
    with pytest.raises(ValueError):
        PenaltySpec("l1", -1)


def test_gradient_check_linear_region():
    cfg = TrainConfig(Architecture((2, 4, 1)), PenaltySpec("none", 0), kind=PLAIN)
    assert gradient_check(cfg, data(30, 2), trials=5) <= 1e-7


@pytest.mark.parametrize("kind", [MODIFIED, PLAIN])
@pytest.mark.parametrize("pen", ["none", "l1", "l2sq"])
def test_gradient_check_kinds(kind, pen):
    cfg = TrainConfig(Architecture((2, 6, 6, 1)), PenaltySpec(pen, 0.01), kind=kind, clip_bound=1.0)
    assert gradient_check(cfg, data(30, 2), trials=3, seed=3) <= 1e-5


def test_train_deterministic_and_best_iterate():
    cfg = TrainConfig(Architecture((1, 8, 1)), PenaltySpec("l1", 1e-3), max_epochs=30, batch_size=8, seed=5)
    ds = data(64)
    m1, t1 = train(cfg, ds)
    m2, t2 = train(cfg, ds)
    assert m1 == m2 and t1.to_csv() == t2.to_csv()
    assert t1.best_objective <= t1.initial_objective
    assert t1.to_csv().splitlines()[0] == "epoch,objective,mse,penalty,effective_nonzeros"
    assert len(t1) == 30


def test_train_huge_lambda_zeroes_everything():
    cfg = TrainConfig(Architecture((1, 8, 8, 1)), PenaltySpec("l1", 1e6), max_epochs=3)
    m, t = train(cfg, data())
    assert all(np.all(V == 0) for V in m.layers)
    assert t.records[0].effective_nonzeros == 0


def test_train_divergence_carries_trace():
    cfg = TrainConfig(Architecture((1, 16, 16, 1)), PenaltySpec("none", 0), step_size=50.0, max_epochs=200,
                      init_scale=3.0, kind=PLAIN)
    with pytest.raises(TrainingDiverged) as exc:
        train(cfg, RegressionDataset(np.random.default_rng(0).random((32, 1)), 100 * np.ones(32)))
    assert len(exc.value.trace.records) >= 1


def test_train_dimension_mismatch():
    with pytest.raises(ValueError):
        train(TrainConfig(Architecture((2, 4, 1)), PenaltySpec("none", 0)), data(10, 1))
