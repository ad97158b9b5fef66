import numpy as np
import pytest

import sketchmix as sm


@pytest.fixture(scope="module")
def problem():
    truth = sm.gen_synthetic(2, 3, seed=11)
    data = sm.sample(truth, 20000, seed=12)
    return truth, data


def test_mixture_roundtrip():
    mix = sm.Mixture(np.array([[0.0, 1.0], [2.0, -1.0]]), np.array([[1.0, 0.5], [0.3, 2.0]]), np.array([0.25, 0.75]))
    assert mix.K == 2 and mix.dim == 2
    back = sm.Mixture.from_text(mix.to_text())
    np.testing.assert_array_equal(back.means, mix.means)
    np.testing.assert_array_equal(back.variances, mix.variances)
    np.testing.assert_array_equal(back.weights, mix.weights)


def test_invalid_arguments_raise_value_error():
    with pytest.raises(ValueError):
        sm.Mixture(np.zeros((2, 2)), np.ones((3, 2)), np.ones(2))
    with pytest.raises(ValueError):
        sm.sketch_size_gmm(1, eta=2.0)


def test_pipeline_recovers_mixture(problem):
    truth, data = problem
    assert data.shape == (20000, 2)
    fs = sm.design_frequencies(data, 150, seed=13)
    assert fs.freqs.shape == (150, 2) and fs.kind == sm.FreqKind.AdaptedRadius
    z = sm.sketch(data, fs)
    assert z.count == 20000 and z.values.dtype == np.complex128
    est = sm.recover(z, fs, 3, sm.Algorithm.CLOMPR, seed=1)
    assert est.K == 3
    assert abs(est.weights.sum() - 1.0) < 1e-12
    kl, err = sm.kl_sym(truth, est, seed=14, n_mc=50000)
    assert kl < 0.1 and err >= 0.0


def test_sketch_is_thread_invariant_and_mergeable(problem):
    _, data = problem
    fs = sm.draw_freq([np.ones(2)], np.ones(1), 64, seed=3)
    whole = sm.sketch(data, fs, chunk_size=1000, threads=1)
    np.testing.assert_array_equal(whole.values, sm.sketch(data, fs, chunk_size=1000, threads=4).values)
    halves = sm.merge(sm.sketch(data[:7000], fs), sm.sketch(data[7000:], fs))
    np.testing.assert_allclose(halves.values, whole.values, atol=1e-12)
    other = sm.draw_freq([np.ones(2)], np.ones(1), 64, seed=4)
    with pytest.raises(sm.IntegrityError):
        sm.recover(whole, other, 1)


def test_bytes_roundtrip(problem):
    _, data = problem
    fs = sm.draw_freq([np.ones(2)], np.ones(1), 16, seed=5)
    z = sm.sketch(data, fs)
    assert sm.FrequencySet.from_bytes(fs.to_bytes()).fingerprint == fs.fingerprint
    np.testing.assert_array_equal(sm.Sketch.from_bytes(z.to_bytes()).values, z.values)
    with pytest.raises(sm.SketchmixError):
        sm.Sketch.from_bytes(b"garbage")


def test_estimators_and_bounds(problem):
    truth, data = problem
    assert 0.0 < sm.estim_mean_sigma(data, seed=2) < 10.0
    value, err = sm.mmd(truth, truth, seed=1)
    assert value == 0.0 and err == 0.0
    em = sm.em(data, 3, seed=9, n_init=3)
    assert em.K == 3
    assert sm.sketch_size_gmm(1, 1, eta=1.0, rho=2 / np.e)["m"] == 922
    assert sm.sketch_size_single_gauss(1, a=10.0, eta=1.0, rho=2 / np.e)["m"] == 553


def test_file_io(tmp_path, problem):
    truth, data = problem
    sm.write_dataset(str(tmp_path / "x.bin"), data[:100])
    np.testing.assert_array_equal(sm.read_dataset(str(tmp_path / "x.bin")), data[:100])
    sm.write_gmm(str(tmp_path / "t.gmm"), truth)
    np.testing.assert_array_equal(sm.read_gmm(str(tmp_path / "t.gmm")).means, truth.means)
    with pytest.raises(sm.SketchmixError):
        sm.read_sketch(str(tmp_path / "missing.sk"))
