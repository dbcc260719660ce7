import numpy as np
import pytest

from modrelu.datagen import (
    NoiseModel,
    RegressionDataset,
    cosine_norm_sum,
    make_target,
    mc_l2_error,
    read_dataset,
    sample_dataset,
    write_dataset,
)


def test_holder_abs_amplitude_certified():
    t = make_target("holder_abs", 1.0, 1.0)
    assert t.amplitude == pytest.approx(1 / 1.5)
    assert t(np.array([[0.5]]))[0] == 0
    with pytest.raises(ValueError):
        make_target("holder_abs", 1.5, 1.0)
    with pytest.raises(ValueError):
        make_target("holder_abs", 1.0, 1.0, amplitude=1.0)


def test_cosine_amplitude_example():
    assert cosine_norm_sum(2) == pytest.approx(294.81, abs=0.01)
    t = make_target("cosine_mix", 2.0, 10.0)
    assert t.amplitude == pytest.approx(0.033920, abs=1e-5)


@pytest.mark.parametrize("seed", range(5))
def test_teacher_bounded_by_F(seed):
    t = make_target("teacher_network", 1.0, 2.0, d=1, seed=seed, depth=2, width=6)
    grid = np.linspace(0, 1, 10**5)[:, None]
    assert np.max(np.abs(t(grid))) <= 2.0


def test_unknown_family_and_noise():
    with pytest.raises(ValueError):
        make_target("sinc", 1, 1)
    with pytest.raises(ValueError):
        NoiseModel("cauchy", 1)


def test_noiseless_dataset_exact():
    t = make_target("holder_abs", 0.5, 1.0)
    ds = sample_dataset(t, NoiseModel("gaussian", 0.0), 200, seed=4)
    assert np.array_equal(ds.y, t(ds.X))


def test_same_seed_identical_and_streams_independent():
    t = make_target("holder_abs", 1.0, 1.0)
    a = sample_dataset(t, NoiseModel("gaussian", 0.2), 100, seed=7)
    b = sample_dataset(t, NoiseModel("gaussian", 0.2), 100, seed=7)
    c = sample_dataset(t, NoiseModel("gaussian", 0.9), 100, seed=7)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    assert np.array_equal(a.X, c.X)


def test_gaussian_noise_moments():
    eps = NoiseModel("gaussian", 1.0).sample(np.random.default_rng(5), 10**6)
    assert abs(eps.mean()) <= 0.004
    assert abs(eps.var() - 1) <= 0.01


def test_bounded_uniform_noise():
    m = NoiseModel("bounded_uniform", 0.5)
    eps = m.sample(np.random.default_rng(6), 10**5)
    assert np.max(np.abs(eps)) <= 0.5 * np.sqrt(3)
    assert eps.std() == pytest.approx(0.5, rel=0.01)
    assert m.subgaussian_proxy == pytest.approx(0.5 * np.sqrt(3))


def test_mc_error_examples():
    t = make_target("holder_abs", 1.0, 1.0)
    assert mc_l2_error(t, t, 1000).mse == 0
    e = mc_l2_error(lambda X: t(X) + 1, t, 1000).mse
    assert e == pytest.approx(1.0, abs=1e-12)
    zero = lambda X: np.zeros(len(X))
    assert mc_l2_error(lambda X: X[:, 0], zero, 10**5, d=1).mse == pytest.approx(1 / 3, abs=0.01)


def test_dataset_validation():
    with pytest.raises(ValueError):
        RegressionDataset(np.array([[1.5]]), np.array([0.0]))
    with pytest.raises(ValueError):
        RegressionDataset(np.zeros((3, 1)), np.zeros(2))


def test_dataset_file_roundtrip(tmp_path):
    t = make_target("cosine_mix", 2.0, 1.0, d=3)
    ds = sample_dataset(t, NoiseModel("gaussian", 0.3), 50, seed=8)
    p = tmp_path / "d.txt"
    write_dataset(ds, p)
    assert p.read_text().splitlines()[0].split()[:4] == ["50", "3", "8", "cosine_mix"]
    back = read_dataset(p)
    assert back.X.tobytes() == ds.X.tobytes() and back.y.tobytes() == ds.y.tobytes()
    assert (back.seed, back.family, back.beta, back.F, back.sigma) == (8, "cosine_mix", 2.0, 1.0, 0.3)


def test_dataset_file_rejects_bad_header(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("3 1 0 x 1 1\n0.1 0\n")
    with pytest.raises(ValueError):
        read_dataset(p)
    p.write_text("3 1 0 x 1 1 1\n0.1 0\n")
    with pytest.raises(ValueError):
        read_dataset(p)
